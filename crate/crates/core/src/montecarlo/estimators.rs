use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::rng::RngStream;
use super::sampler::{sample_path_full, SampledPath};
use super::stats::{Accumulator, Estimate};
use crate::asymptotics::{exact_asymptotic_from, level, poisson_tail};
use crate::error::{Error, Result};
use crate::functionals::{
    extremal_path, phi_unchecked, psi_unchecked, Direction, ExtremalPathInfo, PathRealization,
};
use crate::model::{Model, Variant};

/// Runs per shard. Fixed so that results do not depend on the thread count.
const SHARD: u64 = 16_384;

/// Run `draw` `runs` times over the shards of `stream` and merge in order.
pub fn run_sharded<F>(runs: u64, stream: RngStream, draw: F) -> Accumulator
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let shards = runs.div_ceil(SHARD);
    let work = |s: u64| {
        let mut rng = stream.shard(s);
        let count = SHARD.min(runs - s * SHARD);
        let mut acc = Accumulator::default();
        for _ in 0..count {
            acc.push(draw(&mut rng));
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Accumulator> = (0..shards).into_par_iter().map(work).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Accumulator> = (0..shards).map(work).collect();
    parts
        .iter()
        .fold(Accumulator::default(), |acc, p| acc.merge(p))
}

/// `runs` sampled values of the model's functional, in a fixed order.
pub fn sample_values(model: &Model, t: f64, runs: u64, stream: RngStream) -> Vec<f64> {
    let init = model.initial();
    let shards = runs.div_ceil(SHARD);
    let work = |s: u64| {
        let mut rng = stream.shard(s);
        let count = SHARD.min(runs - s * SHARD);
        (0..count)
            .map(|_| evaluate(model, &sample_path_full(model, t, init, &mut rng).path))
            .collect::<Vec<f64>>()
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<f64>> = (0..shards).into_par_iter().map(work).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<f64>> = (0..shards).map(work).collect();
    parts.concat()
}

pub(crate) fn evaluate(model: &Model, path: &PathRealization) -> f64 {
    match model.variant() {
        Variant::ModelI => phi_unchecked(path, model.lambda(), model.mu()),
        Variant::ModelII => psi_unchecked(path, model.lambda(), model.mu()),
    }
}

/// A set of background paths with a prescribed state sequence whose first
/// sojourns fall in given windows and whose last sojourn is long enough to
/// cover the horizon, together with a sampler for the law of the original
/// path conditioned on the set.
///
/// Under the conditioned law the states are fixed, each windowed sojourn
/// is a truncated exponential and the final one a shifted exponential, so
/// the likelihood ratio against the original law is the constant
/// `w(s_1) prod q(s_i, s_{i+1}) / q(s_i) * prod sigma_i` with
/// `sigma_i` the original probability of each sojourn constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    states: Vec<usize>,
    windows: Vec<(f64, f64)>,
    final_min: f64,
    horizon: f64,
    exit: Vec<f64>,
    weight: f64,
}

impl Tube {
    pub fn new(
        model: &Model,
        horizon: f64,
        states: Vec<usize>,
        windows: Vec<(f64, f64)>,
        final_min: f64,
    ) -> Result<Tube> {
        if states.len() != windows.len() + 1 {
            return Err(Error::InvalidWindows(format!(
                "{} states need {} windows",
                states.len(),
                states.len() - 1
            )));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= model.d()) {
            return Err(Error::Dimension(format!("state {s} out of range")));
        }
        for (k, &(lo, hi)) in windows.iter().enumerate() {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidWindows(format!(
                    "window {k} = ({lo}, {hi}) is empty or negative"
                )));
            }
        }
        let lo_sum: f64 = windows.iter().map(|w| w.0).sum();
        let hi_sum: f64 = windows.iter().map(|w| w.1).sum();
        if hi_sum > horizon {
            return Err(Error::InvalidWindows(format!(
                "windows reach {hi_sum}, past the horizon {horizon}"
            )));
        }
        let tol = 1e-12 * horizon.max(1.0);
        if final_min < horizon - lo_sum - tol {
            return Err(Error::InvalidWindows(format!(
                "final sojourn bound {final_min} allows extra jumps before {horizon}"
            )));
        }
        if let Some(w) = states.windows(2).find(|w| model.rate(w[0], w[1]) <= 0.0) {
            return Err(Error::NotRegular(w[0], w[1]));
        }
        let w0 = model.initial_weights()[states[0]];
        if w0 <= 0.0 {
            return Err(Error::InitialLawOffPath(states[0]));
        }
        let exit = model.exit_rates().to_vec();
        let mut weight = w0;
        for (k, w) in states.windows(2).enumerate() {
            let q = exit[w[0]];
            let (lo, hi) = windows[k];
            let sigma = (-q * lo).exp() * -(-q * (hi - lo)).exp_m1();
            weight *= model.rate(w[0], w[1]) / q * sigma;
        }
        weight *= (-exit[*states.last().unwrap()] * final_min).exp();
        Ok(Tube {
            states,
            windows,
            final_min,
            horizon,
            exit,
            weight,
        })
    }

    /// Tube of half-width `delta` around the sojourns of an extremal path:
    /// sojourn `i` in `(u_i - delta, u_i + delta)` for `i <= D` and the last
    /// one at least `t - s_D + D delta`.
    pub fn around(info: &ExtremalPathInfo, model: &Model, delta: f64) -> Result<Tube> {
        if info.jumps == 0 {
            return Err(Error::NoSwitches);
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidWindows(format!(
                "delta = {delta} must be positive"
            )));
        }
        let sojourns = info.sojourns();
        let d = info.jumps;
        if sojourns[0] <= delta {
            return Err(Error::InvalidWindows(format!(
                "first switch {} is within delta = {delta} of zero",
                sojourns[0]
            )));
        }
        if let Some(u) = sojourns[1..d].iter().find(|&&u| u <= 2.0 * delta) {
            return Err(Error::InvalidWindows(format!(
                "switch gap {u} does not exceed 2 delta = {}",
                2.0 * delta
            )));
        }
        let windows = sojourns[..d]
            .iter()
            .map(|&u| (u - delta, u + delta))
            .collect();
        let last_switch = info.switch_epochs[d - 1];
        let final_min = info.horizon - last_switch + d as f64 * delta;
        Tube::new(model, info.horizon, info.states.clone(), windows, final_min)
    }

    /// Likelihood ratio of the original against the conditioned law.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn windows(&self) -> &[(f64, f64)] {
        &self.windows
    }

    pub fn final_min(&self) -> f64 {
        self.final_min
    }

    pub fn contains(&self, sampled: &SampledPath) -> bool {
        let p = &sampled.path;
        let k = self.windows.len();
        if p.states.len() < k + 1 || p.states[..=k] != self.states[..] {
            return false;
        }
        for (i, &(lo, hi)) in self.windows.iter().enumerate() {
            match sampled.sojourn(i) {
                Some(u) if u > lo && u < hi => {}
                _ => return false,
            }
        }
        matches!(sampled.sojourn(k), Some(u) if u >= self.final_min)
    }

    /// Path on `[0, horizon]` drawn from the conditioned law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathRealization {
        let mut epochs = Vec::with_capacity(self.windows.len());
        let mut now = 0.0;
        for (k, &(lo, hi)) in self.windows.iter().enumerate() {
            let q = self.exit[self.states[k]];
            let u: f64 = rng.random();
            let mass = -(-q * (hi - lo)).exp_m1();
            let x = lo - (-u * mass).ln_1p() / q;
            now += x.clamp(lo, hi);
            epochs.push(now);
        }
        PathRealization {
            horizon: self.horizon,
            epochs,
            states: self.states.clone(),
        }
    }
}

/// Default window half-width: a tenth of the shortest leading sojourn, at
/// most 0.45 of half the shortest gap between switches, and small enough
/// that the windows end before the horizon.
pub fn default_delta(info: &ExtremalPathInfo) -> f64 {
    let sojourns = info.sojourns();
    let d = info.jumps;
    if d == 0 {
        return 0.0;
    }
    let mut delta = 0.1 * sojourns[..d].iter().cloned().fold(f64::INFINITY, f64::min);
    if d >= 2 {
        let gap = sojourns[1..d].iter().cloned().fold(f64::INFINITY, f64::min);
        delta = delta.min(0.45 * gap / 2.0);
    }
    delta.min(0.9 * sojourns[d] / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsConfig {
    /// Window half-width; the default of [`default_delta`] when absent.
    pub delta: Option<f64>,
    /// Runs under the original law.
    pub m1: u64,
    /// Runs under the conditioned law.
    pub m2: u64,
}

impl IsConfig {
    pub fn new(runs: u64) -> Self {
        IsConfig {
            delta: None,
            m1: runs,
            m2: runs,
        }
    }
}

fn check_runs(runs: u64) -> Result<()> {
    if runs < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 runs, got {runs}"
        )));
    }
    Ok(())
}

/// `E score(f(J))` by plain sampling of the background path.
pub fn naive_mean<F>(
    model: &Model,
    t: f64,
    runs: u64,
    stream: RngStream,
    score: F,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_runs(runs)?;
    let init = model.initial();
    let acc = run_sharded(runs, stream, |rng| {
        let p = sample_path_full(model, t, init, rng);
        score(evaluate(model, &p.path))
    });
    Ok(Estimate::from_accumulator(&acc))
}

/// `E score(f(J))` split over the tube: the part outside it by plain
/// sampling (`m1` runs), the part inside under the conditioned law
/// (`m2` runs) weighted by the likelihood ratio.
pub fn split_mean<F>(
    model: &Model,
    t: f64,
    tube: &Tube,
    m1: u64,
    m2: u64,
    stream: RngStream,
    score: F,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_runs(m1)?;
    check_runs(m2)?;
    let init = model.initial();
    let outside = run_sharded(m1, stream.child(0), |rng| {
        let p = sample_path_full(model, t, init, rng);
        if tube.contains(&p) {
            0.0
        } else {
            score(evaluate(model, &p.path))
        }
    });
    let weight = tube.weight();
    let inside = run_sharded(m2, stream.child(1), |rng| {
        let p = tube.sample(rng);
        weight * score(evaluate(model, &p))
    });
    let mean = outside.mean + inside.mean;
    let var = outside.mean_variance() + inside.mean_variance();
    let second =
        outside.second_moment() + 2.0 * outside.mean * inside.mean + inside.second_moment();
    Ok(Estimate::from_parts(mean, var, m1 + m2, second))
}

/// Paired form of [`split_mean`]: each run draws one path of each law and
/// scores their sum.
pub fn paired_mean<F>(
    model: &Model,
    t: f64,
    tube: &Tube,
    runs: u64,
    stream: RngStream,
    score: F,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_runs(runs)?;
    let init = model.initial();
    let weight = tube.weight();
    let acc = run_sharded(runs, stream, |rng| {
        let p = sample_path_full(model, t, init, rng);
        let outside = if tube.contains(&p) {
            0.0
        } else {
            score(evaluate(model, &p.path))
        };
        let q = tube.sample(rng);
        outside + weight * score(evaluate(model, &q))
    });
    Ok(Estimate::from_accumulator(&acc))
}

fn check_level(n: f64, a: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale N = {n} must be positive"
        )));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "level a = {a} must be >= 0"
        )));
    }
    Ok(())
}

/// Conditional estimator of `P(M_N(t) >= N a)`: the mean over sampled
/// background paths of the Poisson tail given the path.
pub fn naive_estimator(
    model: &Model,
    n: f64,
    a: f64,
    t: f64,
    runs: u64,
    stream: RngStream,
) -> Result<Estimate> {
    check_level(n, a)?;
    let k = level(n, a);
    naive_mean(model, t, runs, stream, |x| poisson_tail(k, n * x))
}

/// Tube around the maximizing path for the given configuration.
pub fn tube_for(model: &Model, t: f64, cfg: &IsConfig) -> Result<(ExtremalPathInfo, Tube)> {
    let info = extremal_path(model, t, Direction::Max)?;
    let tube = tube_from(&info, model, cfg)?;
    Ok((info, tube))
}

/// Tube around a given maximizing path.
pub fn tube_from(info: &ExtremalPathInfo, model: &Model, cfg: &IsConfig) -> Result<Tube> {
    if info.jumps == 0 {
        return Err(Error::NoSwitches);
    }
    let delta = cfg.delta.unwrap_or_else(|| default_delta(info));
    Tube::around(info, model, delta)
}

/// Importance-sampling estimator of `P(M_N(t) >= N a)` with the tube
/// around the maximizing path sampled under the conditioned law.
pub fn is_estimator(
    model: &Model,
    n: f64,
    a: f64,
    t: f64,
    cfg: &IsConfig,
    stream: RngStream,
) -> Result<Estimate> {
    let (_, tube) = tube_for(model, t, cfg)?;
    is_estimator_on(model, &tube, n, a, t, cfg.m1, cfg.m2, stream)
}

/// [`is_estimator`] on a given tube.
#[allow(clippy::too_many_arguments)]
pub fn is_estimator_on(
    model: &Model,
    tube: &Tube,
    n: f64,
    a: f64,
    t: f64,
    m1: u64,
    m2: u64,
    stream: RngStream,
) -> Result<Estimate> {
    check_level(n, a)?;
    let k = level(n, a);
    split_mean(model, t, tube, m1, m2, stream, |x| poisson_tail(k, n * x))
}

/// Paired variant of [`is_estimator`] with `runs` runs of each law.
pub fn combined_estimator(
    model: &Model,
    n: f64,
    a: f64,
    t: f64,
    delta: Option<f64>,
    runs: u64,
    stream: RngStream,
) -> Result<Estimate> {
    let cfg = IsConfig {
        delta,
        m1: runs,
        m2: runs,
    };
    let (_, tube) = tube_for(model, t, &cfg)?;
    combined_estimator_on(model, &tube, n, a, t, runs, stream)
}

/// [`combined_estimator`] on a given tube.
pub fn combined_estimator_on(
    model: &Model,
    tube: &Tube,
    n: f64,
    a: f64,
    t: f64,
    runs: u64,
    stream: RngStream,
) -> Result<Estimate> {
    check_level(n, a)?;
    let k = level(n, a);
    paired_mean(model, t, tube, runs, stream, |x| poisson_tail(k, n * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub n: f64,
    pub estimate: Estimate,
    pub relative_error: f64,
    /// Estimated `E P(ceil(N a), N f(J))^2`.
    pub second_moment: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub rows: Vec<EfficiencyRow>,
    /// Fitted exponential decay rate of the mean.
    pub rate: f64,
    /// Fitted exponential decay rate of the second moment.
    pub rate2: f64,
    pub log_efficient: bool,
}

/// Least-squares fit of `y = r N + beta ln N + c`; returns `r`.
pub fn fit_decay_rate(ns: &[f64], ys: &[f64]) -> Result<f64> {
    if ns.len() < 3 || ns.len() != ys.len() {
        return Err(Error::InvalidArgument(
            "need at least 3 points to fit".into(),
        ));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&n, &y) in ns.iter().zip(ys) {
        let row = [n, n.ln(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 normal system.
    for col in 0..3 {
        let p = (col..3)
            .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
            .unwrap();
        ata.swap(col, p);
        atb.swap(col, p);
        if ata[col][col].abs() < 1e-300 {
            return Err(Error::Singular);
        }
        for r in col + 1..3 {
            let f = ata[r][col] / ata[col][col];
            for c in col..3 {
                ata[r][c] -= f * ata[col][c];
            }
            atb[r] -= f * atb[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| ata[r][c] * x[c]).sum();
        x[r] = (atb[r] - s) / ata[r][r];
    }
    Ok(x[0])
}

/// Decay rates of the conditional estimator's mean and second moment over
/// `n_list`, both estimated with the tube estimator (plain sampling when
/// the maximizing path never switches). The estimator is logarithmically
/// efficient when the second moment decays at least twice as fast.
pub fn efficiency_diagnostic(
    model: &Model,
    a: f64,
    t: f64,
    n_list: &[f64],
    cfg: &IsConfig,
    stream: RngStream,
) -> Result<EfficiencyReport> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "need at least 3 ascending values of N".into(),
        ));
    }
    let tube = match tube_for(model, t, cfg) {
        Ok((_, tube)) => Some(tube),
        Err(Error::NoSwitches) => None,
        Err(e) => return Err(e),
    };
    let mut rows = Vec::with_capacity(n_list.len());
    for (idx, &n) in n_list.iter().enumerate() {
        check_level(n, a)?;
        let k = level(n, a);
        let s = stream.child(idx as u64);
        let first = |x: f64| poisson_tail(k, n * x);
        let second = |x: f64| poisson_tail(k, n * x).powi(2);
        let (est, est2) = match &tube {
            Some(tube) => (
                split_mean(model, t, tube, cfg.m1, cfg.m2, s.child(0), first)?,
                split_mean(model, t, tube, cfg.m1, cfg.m2, s.child(1), second)?,
            ),
            None => (
                naive_mean(model, t, cfg.m1, s.child(0), first)?,
                naive_mean(model, t, cfg.m1, s.child(1), second)?,
            ),
        };
        rows.push(EfficiencyRow {
            n,
            relative_error: est.relative_error(),
            estimate: est,
            second_moment: est2,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let y1: Vec<f64> = rows.iter().map(|r| -r.estimate.mean.ln()).collect();
    let y2: Vec<f64> = rows.iter().map(|r| -r.second_moment.mean.ln()).collect();
    if y1.iter().chain(&y2).any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument(
            "an estimate is zero; increase the run counts".into(),
        ));
    }
    let rate = fit_decay_rate(&ns, &y1)?;
    let rate2 = fit_decay_rate(&ns, &y2)?;
    Ok(EfficiencyReport {
        rows,
        rate,
        rate2,
        log_efficient: rate2 >= 2.0 * rate - 0.01,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapacityMode {
    /// Tube estimator with common random numbers across levels.
    Simulation(IsConfig),
    /// Exact asymptotic approximation.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Smallest server count `n` with `P(M_N(t) >= n) < epsilon`.
    pub servers: u64,
    /// `n / N`.
    pub level: f64,
    pub probability: f64,
}

/// Smallest level above the attainable maximum whose exceedance
/// probability drops below `epsilon`, searched by bisection over the
/// integer thresholds in `(N a^+, N a_hi]`.
pub fn capacity_search(
    model: &Model,
    n: f64,
    epsilon: f64,
    t: f64,
    a_hi: f64,
    mode: &CapacityMode,
    stream: RngStream,
) -> Result<CapacityResult> {
    let info = extremal_path(model, t, Direction::Max)?;
    capacity_search_from(model, &info, n, epsilon, a_hi, mode, stream)
}

/// [`capacity_search`] with a given maximizing path; the horizon is the
/// path's.
pub fn capacity_search_from(
    model: &Model,
    info: &ExtremalPathInfo,
    n: f64,
    epsilon: f64,
    a_hi: f64,
    mode: &CapacityMode,
    stream: RngStream,
) -> Result<CapacityResult> {
    let t = info.horizon;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must lie in (0, 1)"
        )));
    }
    check_level(n, a_hi)?;
    let bound = info.bound;
    if !(a_hi > bound) {
        return Err(Error::BracketFailure(format!(
            "upper level {a_hi} does not exceed the maximum {bound}"
        )));
    }
    let lo_servers = (n * bound).floor() as u64 + 1;
    let hi_servers = level(n, a_hi);
    if hi_servers < lo_servers {
        return Err(Error::BracketFailure(format!(
            "no integer threshold in ({}, {}]",
            n * bound,
            n * a_hi
        )));
    }
    let tube = match mode {
        CapacityMode::Simulation(cfg) => Some((tube_from(info, model, cfg)?, *cfg)),
        CapacityMode::Asymptotic => None,
    };
    let prob = |servers: u64| -> Result<f64> {
        match &tube {
            Some((tube, cfg)) => Ok(split_mean(model, t, tube, cfg.m1, cfg.m2, stream, |x| {
                poisson_tail(servers, n * x)
            })?
            .mean),
            None => {
                let a = servers as f64 / n;
                let res = exact_asymptotic_from(model, info, a, &[n])?;
                Ok(res.table[0].1)
            }
        }
    };
    let p_lo = prob(lo_servers)?;
    if p_lo < epsilon {
        return Ok(CapacityResult {
            servers: lo_servers,
            level: lo_servers as f64 / n,
            probability: p_lo,
        });
    }
    let p_hi = prob(hi_servers)?;
    if p_hi >= epsilon {
        return Err(Error::BracketFailure(format!(
            "probability {p_hi} at {hi_servers} servers is still above {epsilon}"
        )));
    }
    let (mut lo, mut hi, mut p_best) = (lo_servers, hi_servers, p_hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let p = prob(mid)?;
        if p < epsilon {
            hi = mid;
            p_best = p;
        } else {
            lo = mid;
        }
    }
    Ok(CapacityResult {
        servers: hi,
        level: hi as f64 / n,
        probability: p_best,
    })
}

/// Capacity search using the exact asymptotics only.
pub fn capacity_fast(
    model: &Model,
    n: f64,
    epsilon: f64,
    t: f64,
    a_hi: f64,
) -> Result<CapacityResult> {
    capacity_search(
        model,
        n,
        epsilon,
        t,
        a_hi,
        &CapacityMode::Asymptotic,
        RngStream::new(0, 0),
    )
}

#[cfg(test)]
mod tests {
    use super::super::sampler::exponential;
    use super::*;
    use crate::model::{validate, InitialLaw, ModelSpec};

    fn example3() -> Model {
        validate(ModelSpec {
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
            lambda: vec![1.0, 2.0],
            mu: vec![1.0, 5.0],
            variant: Variant::ModelII,
            initial: InitialLaw::Stationary,
        })
        .unwrap()
    }

    #[test]
    fn tube_weight_and_support() {
        let m = example3();
        let cfg = IsConfig::new(100);
        let (info, tube) = tube_for(&m, 1.0, &cfg).unwrap();
        let delta = default_delta(&info);
        let s1 = info.switch_epochs[0];
        let sigma1 = (-(s1 - delta)).exp() - (-(s1 + delta)).exp();
        let sigma2 = (-(1.0 - s1 + delta)).exp();
        let expected = 0.5 * 1.0 * sigma1 * sigma2;
        assert!((tube.weight() - expected).abs() < 1e-15);
        assert!(tube.weight() > 0.0 && tube.weight() <= 0.5);
        let mut rng = RngStream::new(3, 1).shard(0);
        for _ in 0..10_000 {
            let p = tube.sample(&mut rng);
            let full = SampledPath {
                final_sojourn: tube.final_min() + exponential(1.0, &mut rng),
                path: p.clone(),
            };
            assert!(tube.contains(&full));
            assert!(evaluate(&m, &p) <= info.bound + 1e-12);
        }
    }

    #[test]
    fn degenerate_level_gives_one() {
        let m = example3();
        let e = naive_estimator(&m, 5.0, 0.0, 1.0, 100, RngStream::new(1, 1)).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.half_width_95, 0.0);
    }

    #[test]
    fn reproducible_estimates() {
        let m = example3();
        let cfg = IsConfig::new(20_000);
        let a = is_estimator(&m, 20.0, 1.0, 1.0, &cfg, RngStream::new(9, 2)).unwrap();
        let b = is_estimator(&m, 20.0, 1.0, 1.0, &cfg, RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
        let c = is_estimator(&m, 20.0, 1.0, 1.0, &cfg, RngStream::new(10, 2)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn single_state_has_no_tube() {
        let m = validate(ModelSpec {
            q: vec![vec![0.0]],
            lambda: vec![1.0],
            mu: vec![1.0],
            variant: Variant::ModelII,
            initial: InitialLaw::Fixed(0),
        })
        .unwrap();
        let cfg = IsConfig::new(10);
        assert!(matches!(
            is_estimator(&m, 5.0, 1.0, 1.0, &cfg, RngStream::new(0, 0)),
            Err(Error::NoSwitches)
        ));
    }

    #[test]
    fn invalid_windows_rejected() {
        let m = example3();
        let info = extremal_path(&m, 1.0, Direction::Max).unwrap();
        assert!(matches!(
            Tube::around(&info, &m, 0.9),
            Err(Error::InvalidWindows(_))
        ));
        assert!(matches!(
            Tube::around(&info, &m, -0.1),
            Err(Error::InvalidWindows(_))
        ));
    }

    #[test]
    fn fit_recovers_rate() {
        let ns = [20.0, 50.0, 100.0, 200.0];
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n: &f64| 0.05 * n + 1.5 * n.ln() - 0.3)
            .collect();
        assert!((fit_decay_rate(&ns, &ys).unwrap() - 0.05).abs() < 1e-12);
    }
}
