use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use mmisq_core::asymptotics::{exact_asymptotic_from, nonrare_limit, AsymptoticResult};
use mmisq_core::functionals::{attainable_range, extremal_path, Direction, ExtremalPathInfo};
use mmisq_core::io::{analyze, parse_model, AnalysisReport, ModelFile, SCHEMA_VERSION};
use mmisq_core::model::{Model, Variant};
use mmisq_core::montecarlo::{
    capacity_search_from, combined_estimator_on, is_estimator_on, naive_estimator, sample_values,
    tube_from, CapacityMode, CapacityResult, Estimate, IsConfig, RngStream, Tube,
};
use mmisq_core::pde::{solve, survival_at, Grid, Interpretation, Scheme, SolveOptions};

use crate::{
    AnalyzeArgs, AsymptoticsArgs, CapacityArgs, CapacityModeArg, Command, DistArgs, Method,
    ModelArgs, PdeArgs, SchemeArg, SimArgs, SimulateArgs, Source, SweepArgs,
};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<mmisq_core::Error> for CliError {
    fn from(e: mmisq_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model> {
    Ok(parse_model(&read(path)?)?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&PathBuf>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialize: {e}")))?;
    text.push('\n');
    emit(out, &text)
}

/// Model plus maximizing path, from a model file or a saved report.
struct Loaded {
    model: Model,
    upper: ExtremalPathInfo,
}

impl Loaded {
    fn t(&self) -> f64 {
        self.upper.horizon
    }
}

fn load(src: &Source) -> Result<Loaded> {
    if let Some(p) = &src.precomputed {
        let report: AnalysisReport =
            serde_json::from_str(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display())))?;
        let model = report.model()?;
        let upper = report.upper_info()?;
        return Ok(Loaded { model, upper });
    }
    let (Some(path), Some(t)) = (&src.model, src.t) else {
        return Err(input("need --model and --t, or --precomputed"));
    };
    let model = load_model(path)?;
    let upper = extremal_path(&model, t, Direction::Max)?;
    Ok(Loaded { model, upper })
}

/// `20,40,60` or `20:300:20` (inclusive).
pub fn parse_n_list(spec: &str) -> Result<Vec<f64>> {
    let bad = || input(format!("bad N list '{spec}'"));
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(bad());
    }
    Ok(values)
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate(args) => validate(args),
        Command::Analyze(args) => analyze_cmd(args),
        Command::Pde(args) => pde(args),
        Command::Asymptotics(args) => asymptotics(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Dist(args) => dist(args),
        Command::Capacity(args) => capacity(args),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    schema_version: u32,
    valid: bool,
    model: ModelFile,
    stationary: Vec<f64>,
    duplicate_groups: Vec<Vec<usize>>,
}

fn validate(args: ModelArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        valid: true,
        model: ModelFile::from_model(&model),
        stationary: model.stationary().pi.clone(),
        duplicate_groups: model
            .duplicate_groups()
            .iter()
            .map(|g| g.iter().map(|s| s + 1).collect())
            .collect(),
    };
    emit_json(args.out.as_ref(), &report)
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<()> {
    let model = load_model(&args.io.model)?;
    emit_json(args.io.out.as_ref(), &analyze(&model, args.t)?)
}

#[derive(Serialize)]
struct PdeSidecar {
    schema_version: u32,
    variant: Variant,
    scheme: Scheme,
    interpretation: Interpretation,
    grid: Grid,
    n_steps: usize,
    cfl: f64,
    times: Vec<f64>,
    /// Moving point masses carried by each state's column at the final time.
    atoms: Vec<SidecarAtom>,
    csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct SidecarAtom {
    state: usize,
    location: f64,
    mass: f64,
}

fn pde(args: PdeArgs) -> Result<()> {
    let model = load_model(&args.io.model)?;
    let a_max = match args.a_max {
        Some(x) => x,
        None => {
            let (_, hi) = attainable_range(&model, args.t)?;
            if hi > 0.0 {
                1.05 * hi
            } else {
                1.0
            }
        }
    };
    let grid = Grid::new(args.a_min, a_max, args.n_a, args.t, args.n_t)?;
    let opts = SolveOptions {
        scheme: args.scheme.map(|s| match s {
            SchemeArg::Upwind => Scheme::Upwind,
            SchemeArg::Characteristic => Scheme::Characteristic,
        }),
        snapshots: args.snapshots,
    };
    let sol = solve(&model, &grid, &opts)?;
    let nodes = sol.nodes();
    let mut csv = String::from("t,a,state,value\n");
    for (slice, &t) in sol.times().iter().enumerate() {
        for state in 0..sol.d() {
            for (k, a) in nodes.iter().enumerate() {
                let v = sol.value(slice, state, k);
                writeln!(csv, "{t},{a},{},{v}", state + 1).unwrap();
            }
        }
    }
    emit(args.io.out.as_ref(), &csv)?;
    let last = sol.times().len() - 1;
    let sidecar = PdeSidecar {
        schema_version: SCHEMA_VERSION,
        variant: sol.variant,
        scheme: sol.scheme,
        interpretation: sol.interpretation,
        grid: sol.grid,
        n_steps: sol.n_steps,
        cfl: sol.cfl,
        times: sol.times().to_vec(),
        atoms: sol
            .atoms_at(last)
            .atoms
            .iter()
            .map(|a| SidecarAtom {
                state: a.state + 1,
                location: a.location,
                mass: a.mass,
            })
            .collect(),
        csv: args.io.out.clone(),
    };
    let path = match (&args.sidecar, &args.io.out) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(out)) => {
            let mut s = out.clone().into_os_string();
            s.push(".json");
            Some(PathBuf::from(s))
        }
        (None, None) => None,
    };
    match path {
        Some(p) => emit_json(Some(&p), &sidecar),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct AsymptoticsReport {
    schema_version: u32,
    t: f64,
    #[serde(flatten)]
    result: AsymptoticOutput,
}

#[derive(Serialize)]
#[serde(untagged)]
enum AsymptoticOutput {
    Rare(AsymptoticResult),
    NonRare {
        regime: &'static str,
        a: f64,
        bound: f64,
        limit: f64,
    },
}

fn asymptotics(args: AsymptoticsArgs) -> Result<()> {
    let loaded = load(&args.src)?;
    let ns = parse_n_list(&args.n)?;
    let result = match exact_asymptotic_from(&loaded.model, &loaded.upper, args.a, &ns) {
        Ok(r) => AsymptoticOutput::Rare(r),
        Err(mmisq_core::Error::NotRareRange { a, bound }) => {
            let grid = Grid::default_for(&loaded.model, loaded.t())?;
            let sol = solve(&loaded.model, &grid, &SolveOptions::default())?;
            AsymptoticOutput::NonRare {
                regime: "NonRare",
                a,
                bound,
                limit: nonrare_limit(&loaded.model, loaded.t(), a, &sol)?,
            }
        }
        Err(e) => return Err(e.into()),
    };
    let report = AsymptoticsReport {
        schema_version: SCHEMA_VERSION,
        t: loaded.t(),
        result,
    };
    emit_json(args.src.out.as_ref(), &report)
}

fn is_config(sim: &SimArgs) -> IsConfig {
    IsConfig {
        delta: sim.delta,
        m1: sim.runs,
        m2: sim.runs,
    }
}

/// One estimate by the chosen method; the tube is built once by the caller.
fn estimate(
    loaded: &Loaded,
    tube: Option<&Tube>,
    method: Method,
    sim: &SimArgs,
    n: f64,
    a: f64,
    stream: RngStream,
) -> Result<Estimate> {
    let (m, t) = (&loaded.model, loaded.t());
    let need = || {
        tube.ok_or_else(|| CliError::Numeric("the tube estimators need a switching path".into()))
    };
    Ok(match method {
        Method::Naive => naive_estimator(m, n, a, t, sim.runs, stream)?,
        Method::Is => is_estimator_on(m, need()?, n, a, t, sim.runs, sim.runs, stream)?,
        Method::Combined => combined_estimator_on(m, need()?, n, a, t, sim.runs, stream)?,
    })
}

fn tube_if_needed(loaded: &Loaded, method: Method, sim: &SimArgs) -> Result<Option<Tube>> {
    match method {
        Method::Naive => Ok(None),
        _ => Ok(Some(tube_from(
            &loaded.upper,
            &loaded.model,
            &is_config(sim),
        )?)),
    }
}

#[derive(Serialize)]
struct SimulateReport {
    schema_version: u32,
    method: &'static str,
    estimate: f64,
    ci95: f64,
    n: u64,
    seconds: f64,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Naive => "naive",
        Method::Is => "is",
        Method::Combined => "combined",
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let loaded = load(&args.src)?;
    let tube = tube_if_needed(&loaded, args.method, &args.sim)?;
    let stream = RngStream::new(args.sim.seed, 0);
    let est = estimate(
        &loaded,
        tube.as_ref(),
        args.method,
        &args.sim,
        args.n,
        args.a,
        stream,
    )?;
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        method: method_name(args.method),
        estimate: est.mean,
        ci95: est.half_width_95,
        n: est.n_samples,
        seconds: start.elapsed().as_secs_f64(),
    };
    emit_json(args.src.out.as_ref(), &report)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let loaded = load(&args.src)?;
    let ns = parse_n_list(&args.n)?;
    let tube = tube_if_needed(&loaded, args.method, &args.sim)?;
    // Scale by the theorem's prefactor when the level is rare.
    let (rate, power) = match exact_asymptotic_from(&loaded.model, &loaded.upper, args.a, &[]) {
        Ok(r) => (r.rate, r.power),
        Err(_) => (0.0, 0.0),
    };
    let mut csv = String::from("N,estimate,ci95,scaled\n");
    for (k, &n) in ns.iter().enumerate() {
        let stream = RngStream::new(args.sim.seed, k as u64);
        let est = estimate(
            &loaded,
            tube.as_ref(),
            args.method,
            &args.sim,
            n,
            args.a,
            stream,
        )?;
        let scaled = est.mean * n.powf(power) * (n * rate).exp();
        writeln!(csv, "{n},{},{},{scaled}", est.mean, est.half_width_95).unwrap();
    }
    emit(args.src.out.as_ref(), &csv)
}

fn dist(args: DistArgs) -> Result<()> {
    if args.points < 2 {
        return Err(input("--points must be at least 2"));
    }
    if args.runs < 1 {
        return Err(input("--runs must be positive"));
    }
    let model = load_model(&args.io.model)?;
    let (lo, hi) = attainable_range(&model, args.t)?;
    let mut xs = sample_values(&model, args.t, args.runs, RngStream::new(args.seed, 0));
    xs.sort_by(f64::total_cmp);
    let pde = if args.pde {
        let grid = Grid::default_for(&model, args.t)?;
        Some(solve(&model, &grid, &SolveOptions::default())?)
    } else {
        None
    };
    let weights = match model.variant() {
        Variant::ModelI => vec![1.0; model.d()],
        Variant::ModelII => model.initial_weights(),
    };
    let mut csv = String::from(if pde.is_some() {
        "a,ecdf,pde\n"
    } else {
        "a,ecdf\n"
    });
    let n = xs.len() as f64;
    for k in 0..args.points {
        let a = lo + (hi - lo) * k as f64 / (args.points - 1) as f64;
        let ecdf = xs.partition_point(|&x| x <= a) as f64 / n;
        write!(csv, "{a},{ecdf}").unwrap();
        if let Some(sol) = &pde {
            // CDF just above a, so that an atom at a is included.
            let above = (a + 1e-12 * hi.max(1.0)).min(sol.grid.a_max);
            let cdf = 1.0 - survival_at(sol, above, args.t, &weights)?;
            write!(csv, ",{}", cdf.clamp(0.0, 1.0)).unwrap();
        }
        csv.push('\n');
    }
    emit(args.io.out.as_ref(), &csv)
}

#[derive(Serialize)]
struct CapacityReport {
    schema_version: u32,
    #[serde(rename = "N")]
    n: f64,
    eps: f64,
    mode: &'static str,
    #[serde(flatten)]
    result: CapacityResult,
}

fn capacity(args: CapacityArgs) -> Result<()> {
    let loaded = load(&args.src)?;
    let a_hi = args.a_hi.unwrap_or(2.0 * loaded.upper.bound);
    let (mode, name) = match args.mode {
        CapacityModeArg::Simulation => {
            (CapacityMode::Simulation(is_config(&args.sim)), "simulation")
        }
        CapacityModeArg::Asymptotic => (CapacityMode::Asymptotic, "asymptotic"),
    };
    let stream = RngStream::new(args.sim.seed, 0);
    let result = capacity_search_from(
        &loaded.model,
        &loaded.upper,
        args.n,
        args.eps,
        a_hi,
        &mode,
        stream,
    )?;
    let report = CapacityReport {
        schema_version: SCHEMA_VERSION,
        n: args.n,
        eps: args.eps,
        mode: name,
        result,
    };
    emit_json(args.src.out.as_ref(), &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_lists() {
        assert_eq!(
            parse_n_list("20:100:20").unwrap(),
            vec![20.0, 40.0, 60.0, 80.0, 100.0]
        );
        assert_eq!(parse_n_list("5, 7").unwrap(), vec![5.0, 7.0]);
        assert!(parse_n_list("1:2").is_err());
        assert!(parse_n_list("0,3").is_err());
        assert!(parse_n_list("9:1:1").is_err());
        assert!(parse_n_list("x").is_err());
    }
}
