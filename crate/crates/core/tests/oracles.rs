//! Checks against independent computations: quadrature and ODE stepping
//! for the functionals and their extremes, finite differences for the
//! curvature coefficients, and sampling for the prefactors, atom masses and
//! the tube likelihood ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmisq_core::functionals::{
    atom_catalog, boundary_prefactors, extremal_path, phi, psi, Direction, PathRealization,
};
use mmisq_core::model::{validate, InitialLaw, Model, ModelSpec, Variant};
use mmisq_core::montecarlo::{
    naive_mean, run_sharded, sample_path_full, split_mean, tube_for, IsConfig, RngStream, Tube,
};
use mmisq_core::pde::{solve, survival_at, Grid, Scheme, SolveOptions};

fn model(q: Vec<Vec<f64>>, lambda: Vec<f64>, mu: Vec<f64>, variant: Variant) -> Model {
    validate(ModelSpec {
        q,
        lambda,
        mu,
        variant,
        initial: InitialLaw::Stationary,
    })
    .unwrap()
}

fn example3(variant: Variant) -> Model {
    model(
        vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        vec![1.0, 2.0],
        vec![1.0, 5.0],
        variant,
    )
}

fn two_switch(variant: Variant) -> Model {
    model(
        vec![
            vec![-2.0, 1.0, 1.0],
            vec![0.5, -1.0, 0.5],
            vec![1.0, 2.0, -3.0],
        ],
        vec![1.0, 2.0, 4.0],
        vec![1.0, 3.0, 8.0],
        variant,
    )
}

fn random_model(rng: &mut ChaCha8Rng, variant: Variant) -> Model {
    let d = rng.random_range(2..=4);
    let mut q = vec![vec![0.0; d]; d];
    for (i, row) in q.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x = rng.random_range(0.2..2.0);
            }
        }
        row[i] = -row.iter().sum::<f64>();
    }
    model(
        q,
        (0..d).map(|_| rng.random_range(0.1..4.0)).collect(),
        (0..d).map(|_| rng.random_range(0.3..6.0)).collect(),
        variant,
    )
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Classical RK4 for the scalar ODE `x' = f(s, x)` from `x(0) = 0`.
fn rk4(f: impl Fn(f64, f64) -> f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let mut x = 0.0;
    for k in 0..steps {
        let s = k as f64 * h;
        let k1 = f(s, x);
        let k2 = f(s + h / 2.0, x + h / 2.0 * k1);
        let k3 = f(s + h / 2.0, x + h / 2.0 * k2);
        let k4 = f(s + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

#[test]
fn functionals_match_quadrature_and_ode() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let m = random_model(&mut rng, Variant::ModelII);
        let t = rng.random_range(0.5..2.0);
        let p = sample_path_full(&m, t, InitialLaw::Stationary, &mut rng).path;
        let (lam, mu) = (m.lambda(), m.mu());
        // Integrate piece by piece so the quadrature never crosses a jump.
        let mut want_psi = 0.0;
        let mut bounds = vec![0.0];
        bounds.extend(&p.epochs);
        bounds.push(t);
        for (k, w) in bounds.windows(2).enumerate() {
            let s = p.states[k];
            want_psi += simpson(|u| lam[s] * (-mu[s] * (t - u)).exp(), w[0], w[1], 2000);
        }
        let got = psi(&p, &m).unwrap();
        assert!((got - want_psi).abs() < 1e-9, "psi {got} vs {want_psi}");

        let mut x = 0.0;
        for (k, w) in bounds.windows(2).enumerate() {
            let s = p.states[k];
            let x0 = x;
            x = x0 + rk4(|_, y| lam[s] - mu[s] * (x0 + y), w[1] - w[0], 2000);
        }
        let got = phi(&p, &m).unwrap();
        assert!((got - x).abs() < 1e-9, "phi {got} vs {x}");
    }
}

#[test]
fn bounds_match_envelope_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..60 {
        let variant = if k % 2 == 0 {
            Variant::ModelII
        } else {
            Variant::ModelI
        };
        let m = random_model(&mut rng, variant);
        let t = rng.random_range(0.3..3.0);
        let (lam, mu) = (m.lambda().to_vec(), m.mu().to_vec());
        let pick = |v: f64, w: f64, dir: Direction| match dir {
            Direction::Max => v.max(w),
            Direction::Min => v.min(w),
        };
        for dir in [Direction::Max, Direction::Min] {
            let start = match dir {
                Direction::Max => f64::NEG_INFINITY,
                Direction::Min => f64::INFINITY,
            };
            let want = match variant {
                Variant::ModelII => simpson(
                    |u| {
                        (0..lam.len())
                            .map(|i| lam[i] * (-mu[i] * (t - u)).exp())
                            .fold(start, |a, b| pick(a, b, dir))
                    },
                    0.0,
                    t,
                    20_000,
                ),
                Variant::ModelI => rk4(
                    |_, x| {
                        (0..lam.len())
                            .map(|i| lam[i] - mu[i] * x)
                            .fold(start, |a, b| pick(a, b, dir))
                    },
                    t,
                    20_000,
                ),
            };
            let info = extremal_path(&m, t, dir).unwrap();
            assert!(
                (info.bound - want).abs() < 1e-7,
                "{variant:?} {dir:?}: {} vs {want}",
                info.bound
            );
            let f = match variant {
                Variant::ModelI => phi(&info.path(), &m).unwrap(),
                Variant::ModelII => psi(&info.path(), &m).unwrap(),
            };
            assert!((f - info.bound).abs() < 1e-12);
        }
    }
}

fn omega_by_differences(m: &Model, variant: Variant) -> Vec<(f64, f64)> {
    let info = extremal_path(m, 1.0, Direction::Max).unwrap();
    let eps = 1e-4;
    let mut out = Vec::new();
    for (i, &w) in info.omegas.iter().enumerate() {
        let mut drop = 0.0;
        for sign in [-1.0, 1.0] {
            let mut epochs = info.switch_epochs.clone();
            epochs[i] += sign * eps;
            let p = PathRealization::new(1.0, epochs, info.states.clone()).unwrap();
            let f = match variant {
                Variant::ModelI => phi(&p, m).unwrap(),
                Variant::ModelII => psi(&p, m).unwrap(),
            };
            drop += (info.bound - f) / 2.0;
        }
        out.push((w, drop / (eps * eps)));
    }
    out
}

#[test]
fn omegas_match_finite_differences() {
    for variant in [Variant::ModelI, Variant::ModelII] {
        for m in [example3(variant), two_switch(variant)] {
            let pairs = omega_by_differences(&m, variant);
            assert!(!pairs.is_empty());
            for (w, fd) in pairs {
                assert!(
                    (fd / w - 1.0).abs() < 1e-3,
                    "{variant:?}: omega {w} vs {fd}"
                );
            }
        }
    }
}

#[test]
fn tube_weight_is_probability_of_the_tube() {
    let m = two_switch(Variant::ModelII);
    let cfg = IsConfig::new(10);
    let (_, tube) = tube_for(&m, 1.0, &cfg).unwrap();
    let acc = run_sharded(4_000_000, RngStream::new(31, 0), |rng| {
        let p = sample_path_full(&m, 1.0, InitialLaw::Stationary, rng);
        if tube.contains(&p) {
            1.0
        } else {
            0.0
        }
    });
    let se = acc.mean_variance().sqrt();
    assert!(
        (acc.mean - tube.weight()).abs() < 4.0 * se,
        "P(tube) = {} +- {se}, weight {}",
        acc.mean,
        tube.weight()
    );
}

/// `P(psi >= a+ - delta) / (kappa_bar sqrt(delta))` for Example 3 geometry
/// with the exit rate of the final state changed to 3.
#[test]
fn kappa_bar_matches_sampled_edge_mass() {
    let m = model(
        vec![vec![-1.0, 1.0], vec![3.0, -3.0]],
        vec![1.0, 2.0],
        vec![1.0, 5.0],
        Variant::ModelII,
    );
    let info = extremal_path(&m, 1.0, Direction::Max).unwrap();
    let kappa = boundary_prefactors(&info, &m, &m.initial_weights())
        .unwrap()
        .kappa_bar;
    let delta = 1e-4;
    let tube = Tube::around(&info, &m, 0.015).unwrap();
    let hi = info.bound;
    let est = split_mean(
        &m,
        1.0,
        &tube,
        2_000_000,
        1_000_000,
        RngStream::new(32, 0),
        |x| {
            if x >= hi - delta {
                1.0
            } else {
                0.0
            }
        },
    )
    .unwrap();
    let ratio = est.mean / (kappa * delta.sqrt());
    assert!(
        (ratio - 1.0).abs() < 0.05,
        "ratio {ratio} (estimate {} +- {})",
        est.mean,
        est.half_width_95
    );
}

#[test]
fn duplicate_partner_mass_matches_sampling() {
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
    let mass = atom_catalog(&m, 1.0).unwrap().atoms[0].mass;
    let acc = run_sharded(1_000_000, RngStream::new(33, 0), |rng| {
        let p = sample_path_full(&m, 1.0, InitialLaw::Fixed(0), rng);
        if p.path.states.iter().all(|&s| s < 2) {
            1.0
        } else {
            0.0
        }
    });
    let se = acc.mean_variance().sqrt();
    assert!((acc.mean - mass).abs() < 3.0 * se, "{} vs {mass}", acc.mean);
}

#[test]
fn pde_matches_sampled_distribution_model1() {
    let m = example3(Variant::ModelI)
        .with_initial(InitialLaw::Fixed(0))
        .unwrap();
    let grid = Grid::new(0.0, 1.2, 1024, 1.0, None).unwrap();
    let sol = solve(&m, &grid, &SolveOptions::default()).unwrap();
    let w = vec![1.0; 2];
    for a in [0.3, 0.5, 0.7, 0.9] {
        let want = naive_mean(&m, 1.0, 400_000, RngStream::new(34, 0), |x| {
            if x >= a {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let got = survival_at(&sol, a, 1.0, &w).unwrap();
        assert!(
            (got - want.mean).abs() < 0.01,
            "a = {a}: {got} vs {}",
            want.mean
        );
    }
}

#[test]
fn characteristic_scheme_self_converges() {
    let m = example3(Variant::ModelII);
    let w = m.initial_weights();
    let levels: Vec<f64> = (1..80).map(|k| 0.33 + 0.37 * k as f64 / 80.0).collect();
    let curve = |n_a: usize| -> Vec<f64> {
        let grid = Grid::new(0.0, 0.75, n_a, 1.0, None).unwrap();
        let opts = SolveOptions {
            scheme: Some(Scheme::Characteristic),
            snapshots: 2,
        };
        let sol = solve(&m, &grid, &opts).unwrap();
        levels
            .iter()
            .map(|&a| survival_at(&sol, a, 1.0, &w).unwrap())
            .collect()
    };
    let c: Vec<Vec<f64>> = [256, 512, 1024, 2048].iter().map(|&n| curve(n)).collect();
    let diff = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let e1 = diff(&c[0], &c[1]);
    let e2 = diff(&c[1], &c[2]);
    let e3 = diff(&c[2], &c[3]);
    // Edge singularities cap the order well below one; require steady decay.
    assert!(e2 < 0.85 * e1 && e3 < 0.85 * e2, "{e1} {e2} {e3}");
    assert!(e3 < 0.01);
}
