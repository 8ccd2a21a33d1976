//! Poisson-parameter functionals of background paths and their extremes.
//!
//! For a background path `J` on `[0, t]` the queue length is Poisson with
//! mean `N phi_t(J)` (hazard follows the current state) or `N psi_t(J)`
//! (hazard fixed at arrival). This module evaluates both functionals in
//! closed form, finds the paths attaining their extreme values, and
//! computes the local quantities that govern the parameter distribution
//! near its upper edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, Variant};
use crate::special::gamma;

const TIE_TOL: f64 = 1e-12;

/// Piecewise-constant background trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRealization {
    pub horizon: f64,
    /// Jump times, strictly increasing inside `(0, horizon)`.
    pub epochs: Vec<f64>,
    /// Visited states, one more than `epochs`.
    pub states: Vec<usize>,
}

impl PathRealization {
    pub fn new(horizon: f64, epochs: Vec<f64>, states: Vec<usize>) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must be >= 0"
            )));
        }
        if states.len() != epochs.len() + 1 {
            return Err(Error::Dimension(format!(
                "{} states for {} epochs",
                states.len(),
                epochs.len()
            )));
        }
        let mut prev = 0.0;
        for &e in &epochs {
            if !(e > prev && e < horizon) {
                return Err(Error::InvalidArgument(format!(
                    "epoch {e} out of order or outside (0, {horizon})"
                )));
            }
            prev = e;
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "consecutive states must differ".into(),
            ));
        }
        Ok(PathRealization {
            horizon,
            epochs,
            states,
        })
    }

    pub fn constant(state: usize, horizon: f64) -> Self {
        PathRealization {
            horizon,
            epochs: Vec::new(),
            states: vec![state],
        }
    }

    /// `(state, start, end)` for every segment.
    pub fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.states.iter().enumerate().map(move |(k, &s)| {
            let start = if k == 0 { 0.0 } else { self.epochs[k - 1] };
            let end = self.epochs.get(k).copied().unwrap_or(self.horizon);
            (s, start, end)
        })
    }

    fn check_states(&self, d: usize) -> Result<()> {
        match self.states.iter().find(|&&s| s >= d) {
            Some(s) => Err(Error::Dimension(format!("state {s} out of range"))),
            None => Ok(()),
        }
    }
}

/// `phi_t(J)`: parameter when the hazard follows the current state.
pub fn phi(path: &PathRealization, model: &Model) -> Result<f64> {
    path.check_states(model.d())?;
    Ok(phi_unchecked(path, model.lambda(), model.mu()))
}

/// `psi_t(J)`: parameter when the hazard is fixed at arrival.
pub fn psi(path: &PathRealization, model: &Model) -> Result<f64> {
    path.check_states(model.d())?;
    Ok(psi_unchecked(path, model.lambda(), model.mu()))
}

/// The functional matching the model's variant.
pub fn functional(path: &PathRealization, model: &Model) -> Result<f64> {
    match model.variant() {
        Variant::ModelI => phi(path, model),
        Variant::ModelII => psi(path, model),
    }
}

pub(crate) fn phi_unchecked(path: &PathRealization, lambda: &[f64], mu: &[f64]) -> f64 {
    let mut x = 0.0;
    for (s, start, end) in path.segments() {
        let dt = end - start;
        x = x * (-mu[s] * dt).exp() + lambda[s] / mu[s] * -(-mu[s] * dt).exp_m1();
    }
    x
}

pub(crate) fn psi_unchecked(path: &PathRealization, lambda: &[f64], mu: &[f64]) -> f64 {
    let t = path.horizon;
    path.segments()
        .map(|(s, start, end)| {
            lambda[s] / mu[s] * (-mu[s] * (t - end)).exp() * -(-mu[s] * (end - start)).exp_m1()
        })
        .sum()
}

/// Parameter value of a path that never leaves `state`.
pub fn constant_level(lambda: f64, mu: f64, t: f64) -> f64 {
    lambda / mu * -(-mu * t).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Max,
    Min,
}

/// Extremal path of a functional together with its local geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalPathInfo {
    pub direction: Direction,
    pub variant: Variant,
    pub horizon: f64,
    pub switch_epochs: Vec<f64>,
    pub states: Vec<usize>,
    /// Number of switches.
    pub jumps: usize,
    pub bound: f64,
    /// Curvatures of the bound in the switch epochs (upper edge only).
    pub omegas: Vec<f64>,
    /// Every transition along the path has positive rate.
    pub regular: bool,
    /// Set for quantities derived by carrying the arrival-frozen geometry
    /// over to the state-following model.
    pub extrapolated: bool,
}

impl ExtremalPathInfo {
    pub fn path(&self) -> PathRealization {
        PathRealization {
            horizon: self.horizon,
            epochs: self.switch_epochs.clone(),
            states: self.states.clone(),
        }
    }

    /// Sojourn lengths of the path, the last one ending at the horizon.
    pub fn sojourns(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.states.len());
        let mut prev = 0.0;
        for &s in self
            .switch_epochs
            .iter()
            .chain(std::iter::once(&self.horizon))
        {
            out.push(s - prev);
            prev = s;
        }
        out
    }
}

fn identical(model: &Model, i: usize, j: usize) -> bool {
    let (l, m) = (model.lambda(), model.mu());
    (l[i] - l[j]).abs() <= TIE_TOL * l[i].abs().max(1.0)
        && (m[i] - m[j]).abs() <= TIE_TOL * m[i].abs().max(1.0)
}

/// Among `candidates` (all on the envelope at the same point) pick the one
/// that stays on it just after; `prefer_larger_mu` encodes which slope wins.
fn pick(
    model: &Model,
    candidates: &[usize],
    prefer_larger_mu: bool,
    strict: bool,
) -> Result<usize> {
    let mu = model.mu();
    let mut best = candidates[0];
    for &j in &candidates[1..] {
        let better = if prefer_larger_mu {
            mu[j] > mu[best]
        } else {
            mu[j] < mu[best]
        };
        if better {
            best = j;
        }
    }
    if strict {
        if let Some(&j) = candidates
            .iter()
            .find(|&&j| j != best && identical(model, j, best))
        {
            return Err(Error::TieUnresolved(best.min(j), best.max(j)));
        }
    }
    Ok(best)
}

fn finalize(
    model: &Model,
    t: f64,
    direction: Direction,
    variant: Variant,
    epochs: Vec<f64>,
    states: Vec<usize>,
    bound: f64,
) -> ExtremalPathInfo {
    let regular = states.windows(2).all(|w| model.rate(w[0], w[1]) > 0.0);
    let mut info = ExtremalPathInfo {
        direction,
        variant,
        horizon: t,
        jumps: epochs.len(),
        switch_epochs: epochs,
        states,
        bound,
        omegas: Vec::new(),
        regular,
        extrapolated: variant == Variant::ModelI,
    };
    if direction == Direction::Max {
        info.omegas = omega_coefficients(&info, model);
    }
    info
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "horizon {t} must be positive"
        )))
    }
}

/// Extremal path of `psi_t`: the pointwise upper (or lower) envelope of
/// `s -> lambda_i exp(-mu_i (t - s))`.
pub fn extremal_path_model2(
    model: &Model,
    t: f64,
    direction: Direction,
) -> Result<ExtremalPathInfo> {
    envelope_model2(model, t, direction, true)
}

fn envelope_model2(
    model: &Model,
    t: f64,
    direction: Direction,
    strict: bool,
) -> Result<ExtremalPathInfo> {
    check_horizon(t)?;
    let (lambda, mu) = (model.lambda(), model.mu());
    let d = model.d();
    // Work with lines l_i(u) = ln lambda_i - mu_i u in backward time u = t - s.
    let line = |i: usize, u: f64| {
        if lambda[i] > 0.0 {
            lambda[i].ln() - mu[i] * u
        } else {
            f64::NEG_INFINITY
        }
    };
    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    // Moving forward in s (u decreasing) the steeper line gains on the upper
    // envelope and the flatter one on the lower envelope.
    let prefer_larger_mu = direction == Direction::Max;

    let best_value = (0..d)
        .map(|i| sign * line(i, t))
        .fold(f64::NEG_INFINITY, f64::max);
    if best_value == f64::NEG_INFINITY {
        // Max with every lambda zero: the parameter is identically zero.
        return Ok(finalize(
            model,
            t,
            direction,
            Variant::ModelII,
            vec![],
            vec![0],
            0.0,
        ));
    }
    if sign * best_value == f64::NEG_INFINITY {
        // Min with a silent state: stay there.
        let i = (0..d).find(|&i| lambda[i] == 0.0).unwrap();
        return Ok(finalize(
            model,
            t,
            direction,
            Variant::ModelII,
            vec![],
            vec![i],
            0.0,
        ));
    }
    let on_top: Vec<usize> = (0..d)
        .filter(|&i| {
            let v = sign * line(i, t);
            v.is_finite() && (v - best_value).abs() <= TIE_TOL * best_value.abs().max(1.0)
        })
        .collect();
    let mut current = pick(model, &on_top, prefer_larger_mu, strict)?;
    let mut u = t;
    let mut epochs = Vec::new();
    let mut states = vec![current];
    loop {
        let c = current;
        let mut next_u = f64::NEG_INFINITY;
        let mut movers: Vec<usize> = Vec::new();
        for j in 0..d {
            if j == c || lambda[j] == 0.0 {
                continue;
            }
            let gains = if prefer_larger_mu {
                mu[j] > mu[c]
            } else {
                mu[j] < mu[c]
            };
            if !gains {
                continue;
            }
            let cross = (lambda[j].ln() - lambda[c].ln()) / (mu[j] - mu[c]);
            if !(cross < u && cross > 0.0) {
                continue;
            }
            if movers.is_empty() || cross > next_u + TIE_TOL * next_u.abs().max(1.0) {
                next_u = cross;
                movers.clear();
                movers.push(j);
            } else if (cross - next_u).abs() <= TIE_TOL * next_u.abs().max(1.0) {
                movers.push(j);
            }
        }
        if movers.is_empty() {
            break;
        }
        let j = pick(model, &movers, prefer_larger_mu, strict)?;
        epochs.push(t - next_u);
        states.push(j);
        current = j;
        u = next_u;
    }
    let path = PathRealization {
        horizon: t,
        epochs,
        states,
    };
    let bound = psi_unchecked(&path, lambda, mu);
    Ok(finalize(
        model,
        t,
        direction,
        Variant::ModelII,
        path.epochs,
        path.states,
        bound,
    ))
}

/// Extremal path of `phi_t`, from the feedback dynamics
/// `x' = max_i (lambda_i - mu_i x)` (`min` for the lower edge), `x(0) = 0`.
///
/// Each control is an affine flow, so the trajectory and its switching
/// times are available in closed form: on a segment in state `c` the value
/// relaxes exponentially towards `lambda_c / mu_c`, and the next switch
/// happens when it reaches the crossing of the two active lines.
pub fn extremal_path_model1(
    model: &Model,
    t: f64,
    direction: Direction,
) -> Result<ExtremalPathInfo> {
    envelope_model1(model, t, direction, true)
}

fn envelope_model1(
    model: &Model,
    t: f64,
    direction: Direction,
    strict: bool,
) -> Result<ExtremalPathInfo> {
    check_horizon(t)?;
    let (lambda, mu) = (model.lambda(), model.mu());
    let d = model.d();
    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    // As x grows the flatter line wins the max and the steeper one the min.
    let prefer_larger_mu = direction == Direction::Min;
    let slope = |i: usize, x: f64| lambda[i] - mu[i] * x;

    let mut x = 0.0;
    let mut s = 0.0;
    let best = (0..d)
        .map(|i| sign * slope(i, x))
        .fold(f64::NEG_INFINITY, f64::max);
    let on_top: Vec<usize> = (0..d)
        .filter(|&i| (sign * slope(i, x) - best).abs() <= TIE_TOL * best.abs().max(1.0))
        .collect();
    let mut current = pick(model, &on_top, prefer_larger_mu, strict)?;
    let mut epochs = Vec::new();
    let mut states = vec![current];
    loop {
        let c = current;
        let target = lambda[c] / mu[c];
        let mut next_x = f64::INFINITY;
        let mut movers: Vec<usize> = Vec::new();
        for j in 0..d {
            if j == c {
                continue;
            }
            let gains = if prefer_larger_mu {
                mu[j] > mu[c]
            } else {
                mu[j] < mu[c]
            };
            if !gains {
                continue;
            }
            let cross = (lambda[c] - lambda[j]) / (mu[c] - mu[j]);
            // Reachable only strictly between the current value and the
            // equilibrium of the active flow.
            if !(cross > x && cross < target) {
                continue;
            }
            if movers.is_empty() || cross < next_x - TIE_TOL * next_x.abs().max(1.0) {
                next_x = cross;
                movers.clear();
                movers.push(j);
            } else if (cross - next_x).abs() <= TIE_TOL * next_x.abs().max(1.0) {
                movers.push(j);
            }
        }
        let reach = if movers.is_empty() {
            f64::INFINITY
        } else {
            s + ((target - x) / (target - next_x)).ln() / mu[c]
        };
        if reach >= t {
            break;
        }
        let j = pick(model, &movers, prefer_larger_mu, strict)?;
        x = next_x;
        s = reach;
        epochs.push(s);
        states.push(j);
        current = j;
    }
    let path = PathRealization {
        horizon: t,
        epochs,
        states,
    };
    let bound = phi_unchecked(&path, lambda, mu);
    Ok(finalize(
        model,
        t,
        direction,
        Variant::ModelI,
        path.epochs,
        path.states,
        bound,
    ))
}

/// Extremal path for the model's own variant.
pub fn extremal_path(model: &Model, t: f64, direction: Direction) -> Result<ExtremalPathInfo> {
    match model.variant() {
        Variant::ModelI => extremal_path_model1(model, t, direction),
        Variant::ModelII => extremal_path_model2(model, t, direction),
    }
}

/// Attainable range `[a_t^-, a_t^+]` of the model's functional. Unlike
/// [`extremal_path`] this never fails on tied states, since ties do not
/// change the extreme values.
pub fn attainable_range(model: &Model, t: f64) -> Result<(f64, f64)> {
    let run = match model.variant() {
        Variant::ModelI => envelope_model1,
        Variant::ModelII => envelope_model2,
    };
    let lo = run(model, t, Direction::Min, false)?.bound;
    let hi = run(model, t, Direction::Max, false)?.bound;
    Ok((lo, hi))
}

/// Second-order loss coefficients `omega_i` of the bound when switch `i` is
/// moved: `bound - value ~ sum_i omega_i eps_i^2`.
///
/// For the arrival-frozen model
/// `omega_i = (lambda_{i+1} / 2)(mu_{i+1} - mu_i) exp(-mu_{i+1}(t - s_i))`.
/// For the state-following model the same expansion of the feedback
/// dynamics gives `omega_i = (mu_i - mu_{i+1}) x'(s_i) / 2` discounted by
/// the service rates met after `s_i`.
pub fn omega_coefficients(info: &ExtremalPathInfo, model: &Model) -> Vec<f64> {
    if info.direction != Direction::Max {
        return Vec::new();
    }
    let (lambda, mu) = (model.lambda(), model.mu());
    let t = info.horizon;
    let st = &info.states;
    match info.variant {
        Variant::ModelII => info
            .switch_epochs
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let j = st[k + 1];
                0.5 * lambda[j] * (mu[j] - mu[st[k]]) * (-mu[j] * (t - s)).exp()
            })
            .collect(),
        Variant::ModelI => {
            let sojourns = info.sojourns();
            let mut x = 0.0;
            let mut out = Vec::with_capacity(info.jumps);
            for k in 0..info.jumps {
                let i = st[k];
                let dt = sojourns[k];
                x = x * (-mu[i] * dt).exp() + lambda[i] / mu[i] * -(-mu[i] * dt).exp_m1();
                let rate = lambda[i] - mu[i] * x;
                let discount: f64 = (k + 1..st.len()).map(|m| mu[st[m]] * sojourns[m]).sum();
                out.push(0.5 * (mu[i] - mu[st[k + 1]]) * rate * (-discount).exp());
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPrefactors {
    /// Coefficient of `delta^{D/2}` in `P(parameter >= a^+ - delta)`.
    pub kappa_bar: f64,
    /// Coefficient of `delta^{D/2 - 1}` in the density near `a^+`.
    pub kappa_hat: f64,
}

/// Prefactors of the parameter distribution near its upper edge.
///
/// `weights` is the law of the initial state. The probability of ending
/// within `delta` of the bound is the path density at the extremal switch
/// epochs times the volume of the ellipsoid `sum omega_i v_i^2 <= delta`.
pub fn boundary_prefactors(
    info: &ExtremalPathInfo,
    model: &Model,
    weights: &[f64],
) -> Result<BoundaryPrefactors> {
    if info.direction != Direction::Max {
        return Err(Error::InvalidArgument(
            "prefactors are defined at the upper edge only".into(),
        ));
    }
    if info.jumps == 0 {
        return Err(Error::NoSwitches);
    }
    if weights.len() != model.d() {
        return Err(Error::Dimension(format!(
            "weights need length {}",
            model.d()
        )));
    }
    let st = &info.states;
    if let Some(w) = st.windows(2).find(|w| model.rate(w[0], w[1]) <= 0.0) {
        return Err(Error::NotRegular(w[0], w[1]));
    }
    let w0 = weights[st[0]];
    if w0 <= 0.0 {
        return Err(Error::InitialLawOffPath(st[0]));
    }
    let dim = info.jumps as f64;
    let omega_prod: f64 = info.omegas.iter().product();
    if !(omega_prod > 0.0) {
        return Err(Error::UnsupportedDegeneracy(
            "zero curvature at a switch epoch".into(),
        ));
    }
    let rates: f64 = st.windows(2).map(|w| model.rate(w[0], w[1])).product();
    let holding: f64 = info
        .sojourns()
        .iter()
        .zip(st)
        .map(|(&u, &s)| model.exit_rate(s) * u)
        .sum();
    let volume = std::f64::consts::PI.powf(dim / 2.0) / gamma(dim / 2.0 + 1.0) / omega_prod.sqrt();
    let kappa_bar = w0 * rates * (-holding).exp() * volume;
    Ok(BoundaryPrefactors {
        kappa_bar,
        kappa_hat: dim / 2.0 * kappa_bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Initial state whose no-switch paths produce the atom.
    pub state: usize,
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomCatalog {
    pub atoms: Vec<Atom>,
}

impl AtomCatalog {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass sitting exactly at `location` (relative tolerance `1e-9`).
    pub fn mass_at(&self, location: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.location - location).abs() <= 1e-9 * location.abs().max(1e-300))
            .map(|a| a.mass)
            .sum()
    }
}

/// Probability that a path started in `i` keeps `(lambda, mu)` unchanged up
/// to `t`: no jump at all, or a single jump into the duplicate partner `j`
/// followed by no further jump.
fn stay_probability(model: &Model, i: usize, partner: Option<usize>, t: f64) -> f64 {
    let qi = model.exit_rate(i);
    let base = (-qi * t).exp();
    match partner {
        None => base,
        Some(j) => {
            let qj = model.exit_rate(j);
            let qij = model.rate(i, j);
            let diff = qi - qj;
            let through = if diff.abs() <= 1e-9 * qi.max(qj).max(1e-300) {
                qij * t * (-qi * t).exp()
            } else {
                qij * ((-qj * t).exp() - base) / diff
            };
            base + through
        }
    }
}

/// Point masses of the parameter distribution at time `t`, weighted by the
/// model's initial law. Atoms at the same location are merged.
pub fn atom_catalog(model: &Model, t: f64) -> Result<AtomCatalog> {
    check_horizon(t)?;
    let weights = model.initial_weights();
    let (lambda, mu) = (model.lambda(), model.mu());
    let mut atoms: Vec<Atom> = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let group = model.group_of(i);
        let partner = match group.len() {
            1 => None,
            2 => group.iter().copied().find(|&j| j != i),
            n => {
                return Err(Error::UnsupportedDegeneracy(format!(
                    "{n} states share (lambda, mu) with state {i}"
                )))
            }
        };
        let mass = w * stay_probability(model, i, partner, t);
        if mass <= 0.0 {
            continue;
        }
        let location = constant_level(lambda[i], mu[i], t);
        match atoms
            .iter_mut()
            .find(|a| (a.location - location).abs() <= 1e-12 * location.abs().max(1e-300))
        {
            Some(a) => a.mass += mass,
            None => atoms.push(Atom {
                state: i,
                location,
                mass,
            }),
        }
    }
    Ok(AtomCatalog { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, InitialLaw, ModelSpec};

    fn example3(variant: Variant) -> Model {
        validate(ModelSpec {
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
            lambda: vec![1.0, 2.0],
            mu: vec![1.0, 5.0],
            variant,
            initial: InitialLaw::Stationary,
        })
        .unwrap()
    }

    #[test]
    fn constant_paths() {
        let m = example3(Variant::ModelII);
        for i in 0..2 {
            let p = PathRealization::constant(i, 1.3);
            let expected = m.lambda()[i] / m.mu()[i] * (1.0 - (-m.mu()[i] * 1.3).exp());
            assert!((phi(&p, &m).unwrap() - expected).abs() < 1e-15);
            assert!((psi(&p, &m).unwrap() - expected).abs() < 1e-15);
        }
        let p = PathRealization::constant(1, 0.0);
        assert_eq!(phi(&p, &m).unwrap(), 0.0);
        assert_eq!(psi(&p, &m).unwrap(), 0.0);
    }

    #[test]
    fn path_validation() {
        assert!(PathRealization::new(1.0, vec![0.5, 0.4], vec![0, 1, 0]).is_err());
        assert!(PathRealization::new(1.0, vec![0.5], vec![0, 0]).is_err());
        assert!(PathRealization::new(1.0, vec![1.0], vec![0, 1]).is_err());
        assert!(PathRealization::new(1.0, vec![0.5], vec![0, 1]).is_ok());
    }

    #[test]
    fn example3_extremal_paths() {
        let m = example3(Variant::ModelII);
        let max = extremal_path_model2(&m, 1.0, Direction::Max).unwrap();
        assert_eq!(max.jumps, 1);
        assert_eq!(max.states, vec![0, 1]);
        assert!((max.switch_epochs[0] - (1.0 - 2f64.ln() / 4.0)).abs() < 1e-12);
        assert!((max.bound - 0.704_837_691_031_529_312_83).abs() < 1e-12);
        assert!(max.regular);
        let min = extremal_path_model2(&m, 1.0, Direction::Min).unwrap();
        assert!((min.bound - 0.324_587_688_997_394_178_74).abs() < 1e-12);
    }

    #[test]
    fn example3_omega_and_prefactor() {
        let m = example3(Variant::ModelII);
        let info = extremal_path_model2(&m, 1.0, Direction::Max).unwrap();
        assert!((info.omegas[0] - 4.0 * 2f64.powf(-1.25)).abs() < 1e-12);
        // Equivalent form through the state before the switch.
        let s = info.switch_epochs[0];
        let other = 0.5 * 1.0 * (5.0 - 1.0) * (-(1.0 - s)).exp();
        assert!(((info.omegas[0] - other) / other).abs() < 1e-9);
        let pf = boundary_prefactors(&info, &m, &m.initial_weights()).unwrap();
        // Closed form for one switch in a two-state chain.
        let (l1, l2, m1, m2, q1, q2) = (1.0f64, 2.0f64, 1.0f64, 5.0f64, 1.0f64, 1.0f64);
        let closed = 0.5 * 1.0 * q2 * (-q1 as f64).exp() * 2.0 * 2f64.sqrt()
            / (l2 * (m2 - m1)).sqrt()
            * (l1 / l2).powf((q1 - q2 + m2 / 2.0) / (m1 - m2));
        assert!(((pf.kappa_bar - closed) / closed).abs() < 1e-12);
        assert!((pf.kappa_bar - 0.283_673_828_309_811_035_72).abs() < 1e-12);
        assert_eq!(pf.kappa_hat, 0.5 * pf.kappa_bar);
    }

    #[test]
    fn single_state_extremes() {
        let m = validate(ModelSpec {
            q: vec![vec![0.0]],
            lambda: vec![3.0],
            mu: vec![2.0],
            variant: Variant::ModelI,
            initial: InitialLaw::Fixed(0),
        })
        .unwrap();
        let expected = 1.5 * (1.0 - (-2.0f64).exp());
        for dir in [Direction::Max, Direction::Min] {
            let a = extremal_path_model1(&m, 1.0, dir).unwrap();
            let b = extremal_path_model2(&m, 1.0, dir).unwrap();
            assert_eq!(a.jumps, 0);
            assert_eq!(b.jumps, 0);
            assert!((a.bound - expected).abs() < 1e-15);
            assert!((b.bound - expected).abs() < 1e-15);
        }
        let atoms = atom_catalog(&m, 1.0).unwrap();
        assert_eq!(atoms.atoms.len(), 1);
        assert_eq!(atoms.atoms[0].mass, 1.0);
    }

    #[test]
    fn model1_path_value_matches_dynamics() {
        let m = example3(Variant::ModelI);
        let info = extremal_path_model1(&m, 1.0, Direction::Max).unwrap();
        let value = phi(&info.path(), &m).unwrap();
        assert!((value - info.bound).abs() < 1e-14);
        // Long horizon approaches the best fixed point.
        let long = extremal_path_model1(&m, 50.0, Direction::Max).unwrap();
        assert!((long.bound - 1.0).abs() < 1e-9);
        let low = extremal_path_model1(&m, 50.0, Direction::Min).unwrap();
        assert!((low.bound - 0.4).abs() < 1e-9);
    }

    #[test]
    fn example3_atoms() {
        let m = example3(Variant::ModelII);
        let cat = atom_catalog(&m, 1.0).unwrap();
        assert_eq!(cat.atoms.len(), 2);
        let e = 0.5 * (-1.0f64).exp();
        assert!((cat.atoms[0].location - 0.632_120_558_828_557_678_4).abs() < 1e-14);
        assert!((cat.atoms[1].location - 0.397_304_821_200_365_813_16).abs() < 1e-14);
        for a in &cat.atoms {
            assert!((a.mass - e).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_partner_adjusts_atom() {
        let m = validate(ModelSpec {
            q: vec![
                vec![-1.0, 0.5, 0.5],
                vec![0.0, -2.0, 2.0],
                vec![1.0, 1.0, -2.0],
            ],
            lambda: vec![1.0, 1.0, 2.0],
            mu: vec![1.0, 1.0, 5.0],
            variant: Variant::ModelII,
            initial: InitialLaw::Fixed(0),
        })
        .unwrap();
        let cat = atom_catalog(&m, 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        let expected = e1 + 0.5 * (e2 - e1) / (1.0 - 2.0);
        assert_eq!(cat.atoms.len(), 1);
        assert!((cat.atoms[0].mass - expected).abs() < 1e-15);
        assert!((expected - 0.484_151_520_138_857_15).abs() < 1e-12);
    }

    #[test]
    fn triple_duplicates_unsupported() {
        let m = validate(ModelSpec {
            q: vec![
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
            lambda: vec![1.0; 3],
            mu: vec![1.0; 3],
            variant: Variant::ModelII,
            initial: InitialLaw::Fixed(0),
        })
        .unwrap();
        assert!(matches!(
            atom_catalog(&m, 1.0),
            Err(Error::UnsupportedDegeneracy(_))
        ));
        assert!(matches!(
            extremal_path_model2(&m, 1.0, Direction::Max),
            Err(Error::TieUnresolved(..))
        ));
        let (lo, hi) = attainable_range(&m, 1.0).unwrap();
        assert!((hi - lo).abs() < 1e-15);
    }

    #[test]
    fn non_regular_topology() {
        let m = validate(ModelSpec {
            q: vec![
                vec![-1.0, 0.0, 1.0],
                vec![1.0, -1.0, 0.0],
                vec![0.5, 1.0, -1.5],
            ],
            lambda: vec![1.0, 2.0, 0.5],
            mu: vec![1.0, 5.0, 3.0],
            variant: Variant::ModelII,
            initial: InitialLaw::Stationary,
        })
        .unwrap();
        let info = extremal_path_model2(&m, 1.0, Direction::Max).unwrap();
        assert_eq!(info.states, vec![0, 1]);
        assert!(!info.regular);
        assert!(matches!(
            boundary_prefactors(&info, &m, &m.initial_weights()),
            Err(Error::NotRegular(0, 1))
        ));
    }
}
