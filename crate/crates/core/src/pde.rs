//! Transport equations for the distribution of the Poisson parameter.
//!
//! State-following model: `p_i(a, t) = P(phi_t >= a, J(t) = i)` solves
//! `d_t p_i + (lambda_i - mu_i a) d_a p_i = sum_j q_ji p_j`.
//!
//! Arrival-frozen model: `p_i(a, t) = P(psi_t >= a | J(0) = i)` solves
//! `d_t p_i + lambda_i e^{-mu_i t} d_a p_i = sum_j q_ij p_j`.
//!
//! Both solutions carry a moving jump from paths that never switch. That
//! jump is known in closed form (a step of height `e^{-q_i t}` at
//! `(lambda_i / mu_i)(1 - e^{-mu_i t})`), so the solvers split it off and
//! only discretize the continuous remainder, whose equation gains the
//! steps of the other states as source terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{attainable_range, constant_level, Atom, AtomCatalog};
use crate::model::{Model, Variant};

const MAX_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// First-order upwind differences with explicit Euler steps.
    Upwind,
    /// Per-state grids moving with the characteristic speed, coupled by
    /// linear interpolation, midpoint steps in time. Arrival-frozen model
    /// only; avoids the numerical diffusion of upwinding at the edges of
    /// the support.
    Characteristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a_min: f64,
    pub a_max: f64,
    /// Number of cells; the grid has `n_a + 1` nodes.
    pub n_a: usize,
    pub t_end: f64,
    /// Number of time steps; derived from the CFL bound when absent.
    pub n_t: Option<usize>,
}

impl Grid {
    pub fn new(a_min: f64, a_max: f64, n_a: usize, t_end: f64, n_t: Option<usize>) -> Result<Grid> {
        if !(a_min < a_max) || !a_min.is_finite() || !a_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid range [{a_min}, {a_max}] is empty"
            )));
        }
        if a_min > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid must start at or below 0, got {a_min}"
            )));
        }
        if n_a < 16 {
            return Err(Error::InvalidArgument(format!("n_a = {n_a} must be >= 16")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon {t_end} must be positive"
            )));
        }
        if n_t == Some(0) {
            return Err(Error::InvalidArgument("n_t must be positive".into()));
        }
        Ok(Grid {
            a_min,
            a_max,
            n_a,
            t_end,
            n_t,
        })
    }

    /// `[0, 1.05 a^+]` with 2048 cells.
    pub fn default_for(model: &Model, t_end: f64) -> Result<Grid> {
        let (_, hi) = attainable_range(model, t_end)?;
        let a_max = if hi > 0.0 { 1.05 * hi } else { 1.0 };
        Grid::new(0.0, a_max, 2048, t_end, None)
    }

    pub fn da(&self) -> f64 {
        (self.a_max - self.a_min) / self.n_a as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.a_min + k as f64 * self.da()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// `None` picks characteristics for the arrival-frozen model and upwind
    /// otherwise.
    pub scheme: Option<Scheme>,
    /// Number of stored time slices, including `t = 0` and `t = t_end`.
    pub snapshots: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            scheme: None,
            snapshots: 33,
        }
    }
}

/// What `p_i` means in a [`GridSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpretation {
    /// `P(parameter >= a, J(t) = i)` under the model's initial law.
    JointFinalState,
    /// `P(parameter >= a | J(0) = i)`.
    ConditionalInitialState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSolution {
    pub variant: Variant,
    pub scheme: Scheme,
    pub interpretation: Interpretation,
    pub grid: Grid,
    pub n_steps: usize,
    pub cfl: f64,
    times: Vec<f64>,
    d: usize,
    /// Continuous part, indexed `[slice][state][node]`.
    remainder: Vec<f64>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    exit: Vec<f64>,
    /// Height factor of the moving step per state.
    step_weight: Vec<f64>,
}

impl GridSolution {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.grid.n_a).map(|k| self.grid.node(k)).collect()
    }

    fn idx(&self, slice: usize, state: usize, node: usize) -> usize {
        (slice * self.d + state) * (self.grid.n_a + 1) + node
    }

    fn step_height(&self, state: usize, t: f64) -> f64 {
        self.step_weight[state] * (-self.exit[state] * t).exp()
    }

    fn step_location(&self, state: usize, t: f64) -> f64 {
        constant_level(self.lambda[state], self.mu[state], t)
    }

    /// `p_i` at grid node `node` of stored slice `slice`.
    pub fn value(&self, slice: usize, state: usize, node: usize) -> f64 {
        let t = self.times[slice];
        let a = self.grid.node(node);
        let step = if self.step_location(state, t) >= a {
            self.step_height(state, t)
        } else {
            0.0
        };
        self.remainder[self.idx(slice, state, node)] + step
    }

    pub fn state_slice(&self, slice: usize, state: usize) -> Vec<f64> {
        (0..=self.grid.n_a)
            .map(|k| self.value(slice, state, k))
            .collect()
    }

    /// Point masses carried by each `p_i` at stored slice `slice`.
    pub fn atoms_at(&self, slice: usize) -> AtomCatalog {
        let t = self.times[slice];
        AtomCatalog {
            atoms: (0..self.d)
                .map(|i| Atom {
                    state: i,
                    location: self.step_location(i, t),
                    mass: self.step_height(i, t),
                })
                .filter(|a| a.mass > 0.0)
                .collect(),
        }
    }
}

fn check_domain(model: &Model, grid: &Grid) -> Result<()> {
    let (_, hi) = attainable_range(model, grid.t_end)?;
    if grid.a_max < hi {
        return Err(Error::DomainTooSmall {
            a_max: grid.a_max,
            bound: hi,
        });
    }
    Ok(())
}

/// Time step count honouring the CFL bound and resolving the coupling.
fn step_count(grid: &Grid, max_speed: f64, max_exit: f64) -> Result<(usize, f64)> {
    let da = grid.da();
    let n_t = match grid.n_t {
        Some(n) => n,
        None => {
            let mut dt = grid.t_end;
            if max_speed > 0.0 {
                dt = dt.min(MAX_CFL * da / max_speed);
            }
            if max_exit > 0.0 {
                dt = dt.min(0.1 / max_exit);
            }
            (grid.t_end / dt).ceil() as usize
        }
    };
    let dt = grid.t_end / n_t as f64;
    let cfl = max_speed * dt / da;
    if cfl > MAX_CFL * (1.0 + 1e-12) {
        return Err(Error::CflViolation(cfl));
    }
    Ok((n_t, cfl))
}

fn slice_steps(n_t: usize, snapshots: usize) -> Vec<usize> {
    let s = snapshots.max(2);
    let mut out: Vec<usize> = (0..s)
        .map(|k| ((k as f64) * n_t as f64 / (s - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Cell average of the unit step `1{a <= x}` over the cell centred at `a`.
fn cell_step(x: f64, a: f64, da: f64) -> f64 {
    ((x - a) / da + 0.5).clamp(0.0, 1.0)
}

struct Setup {
    d: usize,
    n: usize,
    da: f64,
    n_t: usize,
    dt: f64,
    cfl: f64,
    slices: Vec<usize>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    exit: Vec<f64>,
}

fn setup(model: &Model, grid: &Grid, opts: &SolveOptions, max_speed: f64) -> Result<Setup> {
    check_domain(model, grid)?;
    let exit = model.exit_rates().to_vec();
    let max_exit = exit.iter().cloned().fold(0.0, f64::max);
    let (n_t, cfl) = step_count(grid, max_speed, max_exit)?;
    Ok(Setup {
        d: model.d(),
        n: grid.n_a + 1,
        da: grid.da(),
        n_t,
        dt: grid.t_end / n_t as f64,
        cfl,
        slices: slice_steps(n_t, opts.snapshots),
        lambda: model.lambda().to_vec(),
        mu: model.mu().to_vec(),
        exit,
    })
}

/// State-following model. Uses the model's initial law; the result is
/// joint with the final background state.
pub fn solve_model1(model: &Model, grid: &Grid, opts: &SolveOptions) -> Result<GridSolution> {
    if model.variant() != Variant::ModelI {
        return Err(Error::InvalidArgument(
            "solve_model1 needs the state-following model".into(),
        ));
    }
    if opts.scheme == Some(Scheme::Characteristic) {
        return Err(Error::InvalidArgument(
            "characteristic scheme supports the arrival-frozen model only".into(),
        ));
    }
    let lambda = model.lambda();
    let mu = model.mu();
    let max_speed = (0..model.d())
        .map(|i| {
            (lambda[i] - mu[i] * grid.a_min)
                .abs()
                .max((lambda[i] - mu[i] * grid.a_max).abs())
        })
        .fold(0.0, f64::max);
    let s = setup(model, grid, opts, max_speed)?;
    let w = model.initial_weights();
    let (d, n, da, dt) = (s.d, s.n, s.da, s.dt);
    let q = model.generator();
    let step_p = model.transient_matrix(dt)?;
    let nodes: Vec<f64> = (0..n).map(|k| grid.node(k)).collect();

    let mut r = vec![0.0; d * n];
    let mut next = vec![0.0; d * n];
    let mut occupancy = w.clone();
    let mut out = Vec::with_capacity(s.slices.len() * d * n);
    let mut times = Vec::with_capacity(s.slices.len());
    let mut slice_iter = s.slices.iter().peekable();
    let mut heights = vec![0.0; d];
    let mut locations = vec![0.0; d];

    for step in 0..=s.n_t {
        let t = step as f64 * dt;
        if slice_iter.peek() == Some(&&step) {
            slice_iter.next();
            times.push(t);
            out.extend_from_slice(&r);
        }
        if step == s.n_t {
            break;
        }
        for j in 0..d {
            heights[j] = w[j] * (-s.exit[j] * t).exp();
            locations[j] = constant_level(lambda[j], mu[j], t);
        }
        for i in 0..d {
            let row = &r[i * n..(i + 1) * n];
            for k in 1..n {
                let a = nodes[k];
                let c = lambda[i] - mu[i] * a;
                let grad = if c >= 0.0 {
                    (row[k] - row[k - 1]) / da
                } else {
                    let right = if k + 1 < n { row[k + 1] } else { 0.0 };
                    (right - row[k]) / da
                };
                let mut coupling = 0.0;
                for j in 0..d {
                    let qji = q[(j, i)];
                    if qji == 0.0 {
                        continue;
                    }
                    coupling += qji * r[j * n + k];
                    if j != i {
                        coupling += qji * heights[j] * cell_step(locations[j], a, da);
                    }
                }
                next[i * n + k] = row[k] + dt * (coupling - c * grad);
            }
        }
        occupancy = step_p.left_mul(&occupancy);
        let t1 = t + dt;
        for i in 0..d {
            next[i * n] = occupancy[i] - w[i] * (-s.exit[i] * t1).exp();
        }
        std::mem::swap(&mut r, &mut next);
    }

    Ok(GridSolution {
        variant: Variant::ModelI,
        scheme: Scheme::Upwind,
        interpretation: Interpretation::JointFinalState,
        grid: *grid,
        n_steps: s.n_t,
        cfl: s.cfl,
        times,
        d,
        remainder: out,
        lambda: s.lambda,
        mu: s.mu,
        exit: s.exit,
        step_weight: w,
    })
}

/// Arrival-frozen model. The result is conditional on the initial state.
pub fn solve_model2(model: &Model, grid: &Grid, opts: &SolveOptions) -> Result<GridSolution> {
    if model.variant() != Variant::ModelII {
        return Err(Error::InvalidArgument(
            "solve_model2 needs the arrival-frozen model".into(),
        ));
    }
    let max_speed = model.lambda().iter().cloned().fold(0.0, f64::max);
    let s = setup(model, grid, opts, max_speed)?;
    let scheme = opts.scheme.unwrap_or(Scheme::Characteristic);
    let (times, remainder) = match scheme {
        Scheme::Upwind => model2_upwind(model, grid, &s),
        Scheme::Characteristic => model2_characteristic(model, grid, &s),
    };
    Ok(GridSolution {
        variant: Variant::ModelII,
        scheme,
        interpretation: Interpretation::ConditionalInitialState,
        grid: *grid,
        n_steps: s.n_t,
        cfl: s.cfl,
        times,
        d: s.d,
        remainder,
        step_weight: vec![1.0; s.d],
        lambda: s.lambda,
        mu: s.mu,
        exit: s.exit,
    })
}

fn model2_upwind(model: &Model, grid: &Grid, s: &Setup) -> (Vec<f64>, Vec<f64>) {
    let (d, n, da, dt) = (s.d, s.n, s.da, s.dt);
    let q = model.generator();
    let nodes: Vec<f64> = (0..n).map(|k| grid.node(k)).collect();
    let mut r = vec![0.0; d * n];
    let mut next = vec![0.0; d * n];
    let mut out = Vec::with_capacity(s.slices.len() * d * n);
    let mut times = Vec::new();
    let mut slice_iter = s.slices.iter().peekable();
    let mut heights = vec![0.0; d];
    let mut locations = vec![0.0; d];

    for step in 0..=s.n_t {
        let t = step as f64 * dt;
        if slice_iter.peek() == Some(&&step) {
            slice_iter.next();
            times.push(t);
            out.extend_from_slice(&r);
        }
        if step == s.n_t {
            break;
        }
        for j in 0..d {
            heights[j] = (-s.exit[j] * t).exp();
            locations[j] = constant_level(s.lambda[j], s.mu[j], t);
        }
        for i in 0..d {
            let c = s.lambda[i] * (-s.mu[i] * t).exp();
            for k in 1..n {
                let grad = (r[i * n + k] - r[i * n + k - 1]) / da;
                let mut coupling = 0.0;
                for j in 0..d {
                    let qij = q[(i, j)];
                    if qij == 0.0 {
                        continue;
                    }
                    coupling += qij * r[j * n + k];
                    if j != i {
                        coupling += qij * heights[j] * cell_step(locations[j], nodes[k], da);
                    }
                }
                next[i * n + k] = r[i * n + k] + dt * (coupling - c * grad);
            }
        }
        let t1 = t + dt;
        for i in 0..d {
            let bc = -(-s.exit[i] * t1).exp_m1();
            for k in 0..n {
                if nodes[k] > 0.0 {
                    break;
                }
                next[i * n + k] = bc;
            }
        }
        std::mem::swap(&mut r, &mut next);
    }
    (times, out)
}

/// Moving-grid solver for the arrival-frozen model.
///
/// Node `k` of state `i` sits at `a_min + k da - (X_i(T) - X_i(t))`, where
/// `X_i` is the characteristic through the origin, so every node follows
/// its characteristic exactly and lands on the output grid at `T`. Along a
/// characteristic the remainder obeys an ODE whose right side reads the
/// other states by interpolation on their own (uniformly spaced) grids.
fn model2_characteristic(model: &Model, grid: &Grid, s: &Setup) -> (Vec<f64>, Vec<f64>) {
    let (d, n, da, dt) = (s.d, s.n, s.da, s.dt);
    let q = model.generator();
    let a_min = grid.a_min;
    let t_end = grid.t_end;
    let x = |i: usize, t: f64| constant_level(s.lambda[i], s.mu[i], t);
    let x_end: Vec<f64> = (0..d).map(|i| x(i, t_end)).collect();
    let shift = |i: usize, t: f64| x_end[i] - x(i, t);
    let speed = |i: usize, t: f64| s.lambda[i] * (-s.mu[i] * t).exp();
    let boundary = |i: usize, t: f64| -(-s.exit[i] * t).exp_m1();

    let sample = |r: &[f64], j: usize, pos: f64, t: f64, sh_j: f64| -> f64 {
        let u = (pos - a_min + sh_j) / da;
        if u < 0.0 {
            return boundary(j, t);
        }
        let k = u.floor() as usize;
        if k >= n - 1 {
            return if k == n - 1 && u == (n - 1) as f64 {
                r[j * n + k]
            } else {
                0.0
            };
        }
        let f = u - k as f64;
        r[j * n + k] * (1.0 - f) + r[j * n + k + 1] * f
    };

    // Right side of the characteristic ODEs; `smooth` selects the
    // time-averaged source steps used in the midpoint stage.
    let rhs = |r: &[f64], t: f64, smooth: bool, outv: &mut [f64]| {
        let sh: Vec<f64> = (0..d).map(|i| shift(i, t)).collect();
        let xs: Vec<f64> = (0..d).map(|i| x(i, t)).collect();
        let heights: Vec<f64> = (0..d).map(|j| (-s.exit[j] * t).exp()).collect();
        let speeds: Vec<f64> = (0..d).map(|j| speed(j, t)).collect();
        for i in 0..d {
            for k in 0..n {
                let pos = a_min + k as f64 * da - sh[i];
                let mut acc = q[(i, i)] * r[i * n + k];
                for j in 0..d {
                    let qij = q[(i, j)];
                    if j == i || qij == 0.0 {
                        continue;
                    }
                    acc += qij * sample(r, j, pos, t, sh[j]);
                    let gap = xs[j] - pos;
                    let h = if smooth {
                        let width = (speeds[j] - speeds[i]).abs() * dt;
                        if width > 0.0 {
                            (gap / width + 0.5).clamp(0.0, 1.0)
                        } else if gap >= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else if gap >= 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    acc += qij * heights[j] * h;
                }
                outv[i * n + k] = acc;
            }
        }
    };
    let pin_boundary = |r: &mut [f64], t: f64| {
        for i in 0..d {
            let sh = shift(i, t);
            let bc = boundary(i, t);
            for k in 0..n {
                if a_min + k as f64 * da - sh > 0.0 {
                    break;
                }
                r[i * n + k] = bc;
            }
        }
    };

    let mut r = vec![0.0; d * n];
    let mut mid = vec![0.0; d * n];
    let mut k1 = vec![0.0; d * n];
    let mut out = Vec::with_capacity(s.slices.len() * d * n);
    let mut times = Vec::new();
    let mut slice_iter = s.slices.iter().peekable();

    for step in 0..=s.n_t {
        let t = step as f64 * dt;
        if slice_iter.peek() == Some(&&step) {
            slice_iter.next();
            times.push(t);
            // Resample onto the fixed output grid.
            for i in 0..d {
                let sh = shift(i, t);
                for k in 0..n {
                    let pos = a_min + k as f64 * da;
                    out.push(if pos <= 0.0 {
                        boundary(i, t)
                    } else {
                        sample(&r, i, pos, t, sh)
                    });
                }
            }
        }
        if step == s.n_t {
            break;
        }
        rhs(&r, t, false, &mut k1);
        for (m, (&v, &g)) in mid.iter_mut().zip(r.iter().zip(&k1)) {
            *m = v + 0.5 * dt * g;
        }
        let tm = t + 0.5 * dt;
        pin_boundary(&mut mid, tm);
        rhs(&mid, tm, true, &mut k1);
        for (v, &g) in r.iter_mut().zip(&k1) {
            *v += dt * g;
        }
        pin_boundary(&mut r, t + dt);
    }
    (times, out)
}

/// Solve with the equation matching the model's variant.
pub fn solve(model: &Model, grid: &Grid, opts: &SolveOptions) -> Result<GridSolution> {
    match model.variant() {
        Variant::ModelI => solve_model1(model, grid, opts),
        Variant::ModelII => solve_model2(model, grid, opts),
    }
}

/// Weighted survival `sum_i weights_i p_i(a, t)`.
///
/// For the arrival-frozen model `weights` is the initial law; for the
/// state-following model it multiplies the joint probabilities per final
/// state (all ones gives the total). The continuous part is interpolated
/// bilinearly between stored slices and nodes; the moving step is added
/// exactly.
pub fn survival_at(solution: &GridSolution, a: f64, t: f64, weights: &[f64]) -> Result<f64> {
    let g = &solution.grid;
    let eps = 1e-12 * g.a_max.abs().max(1.0);
    if !(a >= g.a_min - eps && a <= g.a_max + eps && t >= 0.0 && t <= g.t_end * (1.0 + 1e-12)) {
        return Err(Error::OutOfGrid { a, t });
    }
    if weights.len() != solution.d {
        return Err(Error::Dimension(format!(
            "weights need length {}",
            solution.d
        )));
    }
    let times = &solution.times;
    let s1 = times.partition_point(|&x| x < t).clamp(1, times.len() - 1);
    let (ta, tb) = (times[s1 - 1], times[s1]);
    let ft = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
    let u = ((a - g.a_min) / g.da()).clamp(0.0, g.n_a as f64);
    let k = (u.floor() as usize).min(g.n_a - 1);
    let fa = u - k as f64;
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let at = |slice: usize| {
            let base = solution.idx(slice, i, 0);
            let rem = &solution.remainder[base..base + g.n_a + 1];
            rem[k] * (1.0 - fa) + rem[k + 1] * fa
        };
        let r = at(s1 - 1) * (1.0 - ft) + at(s1) * ft;
        let step = if solution.step_location(i, t) >= a {
            solution.step_height(i, t)
        } else {
            0.0
        };
        total += w * (r + step);
    }
    Ok(total)
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
    fn single_state_is_a_moving_step() {
        for variant in [Variant::ModelI, Variant::ModelII] {
            let m = validate(ModelSpec {
                q: vec![vec![0.0]],
                lambda: vec![2.0],
                mu: vec![3.0],
                variant,
                initial: InitialLaw::Fixed(0),
            })
            .unwrap();
            let grid = Grid::default_for(&m, 1.0).unwrap();
            let sol = solve(&m, &grid, &SolveOptions::default()).unwrap();
            let star = 2.0 / 3.0 * (1.0 - (-3.0f64).exp());
            assert_eq!(survival_at(&sol, star * 0.99, 1.0, &[1.0]).unwrap(), 1.0);
            assert_eq!(survival_at(&sol, star * 1.01, 1.0, &[1.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn grid_checks() {
        let m = example3(Variant::ModelII);
        assert!(Grid::new(0.1, 1.0, 64, 1.0, None).is_err());
        assert!(Grid::new(0.0, 1.0, 8, 1.0, None).is_err());
        let small = Grid::new(0.0, 0.5, 64, 1.0, None).unwrap();
        assert!(matches!(
            solve(&m, &small, &SolveOptions::default()),
            Err(Error::DomainTooSmall { .. })
        ));
        let coarse_time = Grid::new(0.0, 0.8, 256, 1.0, Some(10)).unwrap();
        assert!(matches!(
            solve(&m, &coarse_time, &SolveOptions::default()),
            Err(Error::CflViolation(_))
        ));
    }

    #[test]
    fn model2_trivial_edges() {
        let m = example3(Variant::ModelII);
        let grid = Grid::default_for(&m, 1.0).unwrap();
        let sol = solve(&m, &grid, &SolveOptions::default()).unwrap();
        let w = m.initial_weights();
        assert!((survival_at(&sol, 0.0, 1.0, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((survival_at(&sol, 0.3, 1.0, &w).unwrap() - 1.0).abs() < 1e-6);
        assert!(survival_at(&sol, 0.71, 1.0, &w).unwrap().abs() < 1e-6);
        assert!(matches!(
            survival_at(&sol, 2.0, 1.0, &w),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn model1_inflow_conserves_mass() {
        let m = example3(Variant::ModelI)
            .with_initial(InitialLaw::Fixed(0))
            .unwrap();
        let grid = Grid::default_for(&m, 1.0).unwrap();
        let sol = solve(&m, &grid, &SolveOptions::default()).unwrap();
        for slice in 0..sol.times().len() {
            let total: f64 = (0..2).map(|i| sol.value(slice, i, 0)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn values_bounded_and_monotone() {
        for variant in [Variant::ModelI, Variant::ModelII] {
            let m = example3(variant);
            let grid = Grid::default_for(&m, 1.0).unwrap();
            let sol = solve(&m, &grid, &SolveOptions::default()).unwrap();
            for slice in 0..sol.times().len() {
                for i in 0..2 {
                    let v = sol.state_slice(slice, i);
                    for (k, &x) in v.iter().enumerate() {
                        assert!((-1e-8..=1.0 + 1e-8).contains(&x));
                        if k > 0 {
                            assert!(x <= v[k - 1] + 1e-6);
                        }
                    }
                }
            }
        }
    }
}
