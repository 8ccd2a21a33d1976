use rand::Rng;

use crate::functionals::PathRealization;
use crate::model::{InitialLaw, Model};

/// A sampled path plus the full length of its last sojourn, which runs past
/// the horizon. Membership in sojourn-window sets needs the latter.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub path: PathRealization,
    pub final_sojourn: f64,
}

impl SampledPath {
    /// Sojourn `k` (0-based); the last recorded one is the full final sojourn.
    pub fn sojourn(&self, k: usize) -> Option<f64> {
        let e = &self.path.epochs;
        match k.cmp(&e.len()) {
            std::cmp::Ordering::Less => Some(e[k] - if k == 0 { 0.0 } else { e[k - 1] }),
            std::cmp::Ordering::Equal => Some(self.final_sojourn),
            std::cmp::Ordering::Greater => None,
        }
    }
}

pub(crate) fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Draw from a discrete law given by non-negative `weights` summing to `total`.
pub(crate) fn categorical<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

pub fn sample_initial<R: Rng + ?Sized>(model: &Model, law: InitialLaw, rng: &mut R) -> usize {
    match law {
        InitialLaw::Fixed(i) => i,
        InitialLaw::Stationary => categorical(&model.stationary().pi, 1.0, rng),
    }
}

/// Continue a background path from `state` at time `start` up to `t`.
pub(crate) fn extend_path<R: Rng + ?Sized>(
    model: &Model,
    t: f64,
    start: f64,
    mut state: usize,
    epochs: &mut Vec<f64>,
    states: &mut Vec<usize>,
    rng: &mut R,
) -> f64 {
    let mut now = start;
    loop {
        let q = model.exit_rate(state);
        let stay = exponential(q, rng);
        if now + stay >= t {
            return stay;
        }
        now += stay;
        let row = model.generator().row(state);
        let next = {
            let target = rng.random::<f64>() * q;
            let mut acc = 0.0;
            let mut pick = state;
            for (j, &r) in row.iter().enumerate() {
                if j == state || r <= 0.0 {
                    continue;
                }
                acc += r;
                pick = j;
                if target < acc {
                    break;
                }
            }
            pick
        };
        epochs.push(now);
        states.push(next);
        state = next;
    }
}

/// Background path on `[0, t]` with the full final sojourn recorded.
pub fn sample_path_full<R: Rng + ?Sized>(
    model: &Model,
    t: f64,
    initial: InitialLaw,
    rng: &mut R,
) -> SampledPath {
    let s0 = sample_initial(model, initial, rng);
    let mut epochs = Vec::new();
    let mut states = vec![s0];
    let last = extend_path(model, t, 0.0, s0, &mut epochs, &mut states, rng);
    SampledPath {
        path: PathRealization {
            horizon: t,
            epochs,
            states,
        },
        final_sojourn: last,
    }
}

pub fn sample_path<R: Rng + ?Sized>(
    model: &Model,
    t: f64,
    initial: InitialLaw,
    rng: &mut R,
) -> PathRealization {
    sample_path_full(model, t, initial, rng).path
}
