//! Poisson tail machinery and exact asymptotics of the exceedance
//! probability `P(M_N(t) >= N a)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    atom_catalog, boundary_prefactors, extremal_path, Direction, ExtremalPathInfo,
};
use crate::model::{Model, Variant};
use crate::pde::{survival_at, GridSolution};
use crate::special::{bd0, gamma};

pub use crate::special::{ln_poisson_tail, poisson_tail};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const RARE_MARGIN: f64 = 1e-9;

/// Rate function and saddle-point quantities at `(a, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub a: f64,
    pub alpha: f64,
    /// `I(a | alpha) = a ln(a / alpha) + alpha - a`.
    pub rate: f64,
    /// Optimizing tilt `ln(a / alpha)`.
    pub theta: f64,
    /// `sqrt(a) (1 - alpha / a)`.
    pub xi: f64,
    /// `1 / (sqrt(2 pi) xi)`.
    pub eta: f64,
}

pub fn rate(a: f64, alpha: f64) -> Result<RatePoint> {
    if !(a > 0.0 && alpha > 0.0) || !a.is_finite() || !alpha.is_finite() {
        return Err(Error::NonpositiveInput(format!("a = {a}, alpha = {alpha}")));
    }
    let xi = a.sqrt() * (1.0 - alpha / a);
    Ok(RatePoint {
        a,
        alpha,
        rate: bd0(a, alpha),
        theta: (a / alpha).ln(),
        xi,
        eta: 1.0 / (SQRT_2PI * xi),
    })
}

/// Integer threshold `ceil(N a)`, ignoring rounding noise in the product.
pub fn level(n: f64, a: f64) -> u64 {
    let x = n * a;
    if x <= 0.0 {
        return 0;
    }
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as u64
}

/// Chernoff bound `exp(-N I(a | alpha))`; equal to 1 for `a <= alpha`.
pub fn chernoff(n: f64, a: f64, alpha: f64) -> f64 {
    if a <= alpha {
        return 1.0;
    }
    if alpha <= 0.0 {
        return 0.0;
    }
    (-n * bd0(a, alpha)).exp()
}

/// Lattice saddle-point approximation
/// `exp(-N I) / (sqrt(2 pi N) xi(a | alpha))`.
pub fn bahadur_rao(n: f64, a: f64, alpha: f64) -> Result<f64> {
    if !(a > alpha) {
        return Err(Error::InvalidArgument(format!(
            "bahadur_rao needs a > alpha, got a = {a}, alpha = {alpha}"
        )));
    }
    let rp = rate(a, alpha)?;
    Ok(rp.eta * n.powf(-0.5) * (-n * rp.rate).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    NonRare,
    /// No atom at the upper edge of the parameter range.
    RareNoAtom,
    /// An atom sits at the upper edge.
    RareAtom,
}

/// `p(N) ~ constant * N^-power * exp(-N rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub regime: Regime,
    pub a: f64,
    pub bound: f64,
    pub rate: f64,
    pub power: f64,
    pub constant: f64,
    pub jumps: usize,
    pub kappa_hat: Option<f64>,
    /// `a / a^+ - 1`.
    pub b: f64,
    pub atom_mass: Option<f64>,
    /// The constant rests on geometry derived for the arrival-frozen model.
    pub extrapolated: bool,
    pub table: Vec<(f64, f64)>,
}

impl AsymptoticResult {
    pub fn approx(&self, n: f64) -> f64 {
        self.constant * n.powf(-self.power) * (-n * self.rate).exp()
    }
}

/// Exact asymptotics of the exceedance probability for `a` above the
/// attainable maximum, evaluated at each of `n_values`.
pub fn exact_asymptotic(
    model: &Model,
    t: f64,
    a: f64,
    n_values: &[f64],
) -> Result<AsymptoticResult> {
    let info = extremal_path(model, t, Direction::Max)?;
    exact_asymptotic_from(model, &info, a, n_values)
}

/// [`exact_asymptotic`] with a given maximizing path; the horizon is the
/// path's.
pub fn exact_asymptotic_from(
    model: &Model,
    info: &ExtremalPathInfo,
    a: f64,
    n_values: &[f64],
) -> Result<AsymptoticResult> {
    if info.direction != Direction::Max {
        return Err(Error::InvalidArgument("need the maximizing path".into()));
    }
    let t = info.horizon;
    let bound = info.bound;
    if !(a > bound * (1.0 + RARE_MARGIN)) {
        return Err(Error::NotRareRange { a, bound });
    }
    let rp = rate(a, bound)?;
    let b = a / bound - 1.0;
    let catalog = atom_catalog(model, t)?;
    let edge_mass = catalog.mass_at(bound);
    let extrapolated = model.variant() == Variant::ModelI;

    let mut result = if edge_mass > 0.0 {
        AsymptoticResult {
            regime: Regime::RareAtom,
            a,
            bound,
            rate: rp.rate,
            power: 0.5,
            constant: edge_mass * rp.eta,
            jumps: info.jumps,
            kappa_hat: None,
            b,
            atom_mass: Some(edge_mass),
            extrapolated: false,
            table: Vec::new(),
        }
    } else if info.jumps == 0 {
        // The edge is reached by a constant path that the initial law
        // never starts.
        return Err(Error::InitialLawOffPath(info.states[0]));
    } else {
        let pf = boundary_prefactors(info, model, &model.initial_weights())?;
        let half = info.jumps as f64 / 2.0;
        AsymptoticResult {
            regime: Regime::RareNoAtom,
            a,
            bound,
            rate: rp.rate,
            power: (info.jumps as f64 + 1.0) / 2.0,
            constant: pf.kappa_hat * gamma(half) * b.powf(-half) * rp.eta,
            jumps: info.jumps,
            kappa_hat: Some(pf.kappa_hat),
            b,
            atom_mass: None,
            extrapolated,
            table: Vec::new(),
        }
    };
    result.table = n_values.iter().map(|&n| (n, result.approx(n))).collect();
    Ok(result)
}

/// Limit of the exceedance probability for `a` inside the attainable
/// range: `P(parameter >= a)`, read from a PDE solution.
pub fn nonrare_limit(model: &Model, t: f64, a: f64, solution: &GridSolution) -> Result<f64> {
    let (lo, hi) = crate::functionals::attainable_range(model, t)?;
    let tol = 1e-9 * hi.abs().max(1.0);
    if !(a >= lo - tol && a <= hi + tol) {
        return Err(Error::OutOfRange {
            a,
            lower: lo,
            upper: hi,
        });
    }
    if a <= lo {
        return Ok(1.0);
    }
    if a >= hi - tol {
        return Ok(atom_catalog(model, t)?.mass_at(hi));
    }
    let weights = match model.variant() {
        Variant::ModelI => vec![1.0; model.d()],
        Variant::ModelII => model.initial_weights(),
    };
    Ok(survival_at(solution, a, t, &weights)?.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, InitialLaw, ModelSpec};

    const A_PLUS: f64 = 0.704_837_691_031_529_312_83;

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
    fn rate_values() {
        let r = rate(1.0, A_PLUS).unwrap();
        assert!((r.rate - 0.054_625_419_194_545_961_759).abs() < 1e-15);
        let r = rate(0.3, 0.3).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.theta, 0.0);
        let r = rate(1.0, 0.5).unwrap();
        assert!((r.rate - 0.193_147_180_559_945_309_42).abs() < 1e-15);
        assert!((r.theta - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(rate(0.0, 1.0), Err(Error::NonpositiveInput(_))));
    }

    #[test]
    fn chernoff_values() {
        assert!((chernoff(1.0, 1.0, 0.5) - 0.824_360_635_350_064_073_42).abs() < 1e-15);
        assert_eq!(chernoff(3.0, 0.4, 0.4), 1.0);
        let c = chernoff(100.0, 1.0, 0.704838);
        assert!((c - 0.004_242_812_174_429_577_941_9).abs() < 1e-15);
        assert!(c >= poisson_tail(100, 70.4838));
    }

    #[test]
    fn bahadur_rao_ratios() {
        let exact = ln_poisson_tail(10_000, 7048.38);
        let br = bahadur_rao(1e4, 1.0, 0.704838).unwrap().ln();
        let ratio = (br - exact).exp();
        assert!((ratio - 1.000_815_801_100_2).abs() < 1e-9);
        let ratio = bahadur_rao(100.0, 1.0, 0.704838).unwrap() / poisson_tail(100, 70.4838);
        assert!((ratio - 1.070_437_201_499_57).abs() < 1e-9);
        assert!(bahadur_rao(10.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn level_rounding() {
        assert_eq!(level(80.0, 0.925), 74);
        assert_eq!(level(80.0, 0.92), 74);
        assert_eq!(level(100.0, 1.0), 100);
        assert_eq!(level(3.0, 0.0), 0);
    }

    #[test]
    fn example3_theorem_constant() {
        let m = example3();
        let res = exact_asymptotic(&m, 1.0, 1.0, &[20.0, 100.0]).unwrap();
        assert_eq!(res.regime, Regime::RareNoAtom);
        assert_eq!(res.power, 1.0);
        assert!((res.constant - 0.525_082_431_386_477_809_63).abs() < 1e-12);
        for &(n, p) in &res.table {
            let scaled = p * n * (n * res.rate).exp();
            assert!((scaled - res.constant).abs() < 1e-12);
        }
        assert!(matches!(
            exact_asymptotic(&m, 1.0, 0.7, &[]),
            Err(Error::NotRareRange { .. })
        ));
    }

    #[test]
    fn single_state_reduces_to_bahadur_rao() {
        let m = validate(ModelSpec {
            q: vec![vec![0.0]],
            lambda: vec![1.0],
            mu: vec![1.0],
            variant: Variant::ModelII,
            initial: InitialLaw::Fixed(0),
        })
        .unwrap();
        let res = exact_asymptotic(&m, 1.0, 1.0, &[10.0, 50.0]).unwrap();
        assert_eq!(res.regime, Regime::RareAtom);
        assert_eq!(res.atom_mass, Some(1.0));
        let alpha = 1.0 - (-1.0f64).exp();
        assert!((res.bound - alpha).abs() < 1e-15);
        for &(n, p) in &res.table {
            assert_eq!(p, bahadur_rao(n, 1.0, res.bound).unwrap());
        }
    }
}
