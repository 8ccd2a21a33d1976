//! Browser bindings: every export takes a model file as JSON text and
//! returns JSON text. The plain functions are also usable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mmisq_core::asymptotics::exact_asymptotic_from;
use mmisq_core::functionals::{attainable_range, extremal_path, Direction};
use mmisq_core::io::{analyze, parse_model};
use mmisq_core::model::{Model, Variant};
use mmisq_core::montecarlo::{is_estimator_on, sample_values, tube_from, IsConfig, RngStream};
use mmisq_core::pde::{solve, survival_at, Grid, SolveOptions};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

#[derive(Serialize)]
pub struct Distribution {
    pub a: Vec<f64>,
    pub ecdf: Vec<f64>,
    pub pde: Vec<f64>,
}

/// Empirical CDF from `runs` sampled paths next to the PDE solution.
pub fn distribution(
    model: &Model,
    t: f64,
    runs: u32,
    seed: u64,
    points: usize,
) -> Result<Distribution, String> {
    if points < 2 || runs == 0 {
        return Err("need at least 2 points and 1 run".into());
    }
    let (lo, hi) = attainable_range(model, t).map_err(err)?;
    let mut xs = sample_values(model, t, runs as u64, RngStream::new(seed, 0));
    xs.sort_by(f64::total_cmp);
    let grid = Grid::default_for(model, t).map_err(err)?;
    let sol = solve(model, &grid, &SolveOptions::default()).map_err(err)?;
    let weights = match model.variant() {
        Variant::ModelI => vec![1.0; model.d()],
        Variant::ModelII => model.initial_weights(),
    };
    let mut out = Distribution {
        a: vec![],
        ecdf: vec![],
        pde: vec![],
    };
    for k in 0..points {
        let a = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let above = (a + 1e-12 * hi.max(1.0)).min(sol.grid.a_max);
        out.a.push(a);
        out.ecdf
            .push(xs.partition_point(|&x| x <= a) as f64 / xs.len() as f64);
        out.pde
            .push((1.0 - survival_at(&sol, above, t, &weights).map_err(err)?).clamp(0.0, 1.0));
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct TailCurve {
    pub n: Vec<f64>,
    pub asymptotic: Vec<f64>,
    pub simulated: Vec<f64>,
    pub ci95: Vec<f64>,
    pub bound: f64,
}

/// P(M >= ceil(N a)) over N: the exact asymptotic next to the tube estimator.
pub fn tail_curve(
    model: &Model,
    t: f64,
    a: f64,
    n_max: u32,
    runs: u32,
    seed: u64,
) -> Result<TailCurve, String> {
    if n_max < 10 || runs == 0 {
        return Err("need n_max >= 10 and at least 1 run".into());
    }
    let info = extremal_path(model, t, Direction::Max).map_err(err)?;
    let ns: Vec<f64> = (1..=10)
        .map(|k| (n_max as f64 * k as f64 / 10.0).round())
        .collect();
    let res = exact_asymptotic_from(model, &info, a, &ns).map_err(err)?;
    let cfg = IsConfig::new(runs as u64);
    let tube = tube_from(&info, model, &cfg).map_err(err)?;
    let mut out = TailCurve {
        n: ns.clone(),
        asymptotic: ns.iter().map(|&n| res.approx(n)).collect(),
        simulated: vec![],
        ci95: vec![],
        bound: info.bound,
    };
    for (k, &n) in ns.iter().enumerate() {
        let est = is_estimator_on(
            model,
            &tube,
            n,
            a,
            t,
            cfg.m1,
            cfg.m2,
            RngStream::new(seed, k as u64),
        )
        .map_err(err)?;
        out.simulated.push(est.mean);
        out.ci95.push(est.half_width_95);
    }
    Ok(out)
}

/// Full analysis report for horizon `t`.
#[wasm_bindgen(js_name = analyze)]
pub fn analyze_js(model_json: &str, t: f64) -> Result<String, JsValue> {
    let run = || {
        let m = parse_model(model_json).map_err(err)?;
        json(&analyze(&m, t).map_err(err)?)
    };
    run().map_err(|e: String| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = distribution)]
pub fn distribution_js(
    model_json: &str,
    t: f64,
    runs: u32,
    seed: u32,
    points: u32,
) -> Result<String, JsValue> {
    let run = || {
        let m = parse_model(model_json).map_err(err)?;
        json(&distribution(&m, t, runs, seed as u64, points as usize)?)
    };
    run().map_err(|e: String| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = tailCurve)]
pub fn tail_curve_js(
    model_json: &str,
    t: f64,
    a: f64,
    n_max: u32,
    runs: u32,
    seed: u32,
) -> Result<String, JsValue> {
    let run = || {
        let m = parse_model(model_json).map_err(err)?;
        json(&tail_curve(&m, t, a, n_max, runs, seed as u64)?)
    };
    run().map_err(|e: String| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"d":2,"Q":[[-1,1],[1,-1]],"lambda":[1,2],"mu":[1,5],"variant":"II","initial":"stationary"}"#;

    #[test]
    fn distribution_matches_pde() {
        let m = parse_model(EXAMPLE).unwrap();
        let d = distribution(&m, 1.0, 100_000, 3, 11).unwrap();
        assert_eq!(d.a.len(), 11);
        for (e, p) in d.ecdf.iter().zip(&d.pde) {
            assert!((e - p).abs() < 0.015, "{e} vs {p}");
        }
    }

    #[test]
    fn tail_curve_agrees_at_large_n() {
        let m = parse_model(EXAMPLE).unwrap();
        let c = tail_curve(&m, 1.0, 1.0, 200, 20_000, 1).unwrap();
        let (x, y) = (c.asymptotic[9], c.simulated[9]);
        assert!((x / y - 1.0).abs() < 0.25, "{x} vs {y}");
        assert!(c.simulated.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_input() {
        let m = parse_model(EXAMPLE).unwrap();
        assert!(distribution(&m, 1.0, 0, 1, 11).is_err());
        assert!(tail_curve(&m, 1.0, 0.5, 100, 100, 1).is_err());
    }
}
