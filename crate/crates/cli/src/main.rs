use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use splitrange::experiments::{self, ExperimentContext, ExperimentReport, ParamMap, SCHEMA_VERSION};
use splitrange::geometry::{self, affine_hull, near_equal, AFFINE_REL_TOL, DEFAULT_SET_TOL};
use splitrange::linalg::{seeded_rng, Vector};
use splitrange::ranges::{build_pair_sets, estimate_displacement_vector_with, sample_displacement_range, sample_t_range, solve_perturbed, ESTIMATE_TOL};
use splitrange::{io, spec, Error, OperatorPair, PointCloud, Window};

const OUT_ENV: &str = "SPLITRANGE_OUT";

#[derive(Parser, Debug)]
#[command(name = "splitrange", version, about = "Douglas–Rachford ranges, displacement vectors and set comparison")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV and JSON artifacts; SPLITRANGE_OUT takes precedence.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Leave runtimes out of reports so that output is byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Half-width of the cube used for sampling and comparison.
    #[arg(long, global = true)]
    window: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one registered experiment, or all of them.
    Experiment(ExperimentArgs),
    /// Sample ran(Id − T) or ran T for a pair.
    Range(RangeArgs),
    /// Estimate the infimal displacement vector of a pair.
    Displacement(DisplacementArgs),
    /// Decide whether the w-perturbed problem has a solution.
    Perturbed(PerturbedArgs),
    /// Near-equality of two point clouds given as CSV.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Registered experiment name.
    #[arg(required_unless_present_any = ["all", "list"])]
    name: Option<String>,
    /// Run the whole registry.
    #[arg(long, conflicts_with = "name")]
    all: bool,
    /// List registered experiments.
    #[arg(long, conflicts_with_all = ["name", "all"])]
    list: bool,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RangeOf {
    Displacement,
    #[value(name = "T", alias = "t")]
    T,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct RangeArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, value_enum, default_value = "displacement")]
    of: RangeOf,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// JSON summary, or the sampled cloud as CSV.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct DisplacementArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    /// Starting point, comma-separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, default_value_t = ESTIMATE_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct PerturbedArgs {
    #[arg(long)]
    pair: PathBuf,
    /// Perturbation, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    iterations: usize,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    cloud_a: PathBuf,
    #[arg(long)]
    cloud_b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SET_TOL)]
    tol: f64,
    /// Random directions in addition to the signed axes.
    #[arg(long)]
    directions: Option<usize>,
}

/// Exit status 2: the invocation itself is wrong.
struct Usage(String);

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec { .. }
            | Error::UnknownBuiltin(_)
            | Error::UnknownExperiment(_)
            | Error::BadParam { .. }
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::NonMonotone { .. }
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_)
            | Error::EmptyCloud => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

struct Config {
    seed: u64,
    output_dir: Option<PathBuf>,
    timestamp: bool,
    window: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = Config {
        seed: cli.seed,
        output_dir: std::env::var_os(OUT_ENV).map(PathBuf::from).or(cli.output_dir),
        timestamp: !cli.no_timestamp,
        window: cli.window,
    };
    let outcome = match &cli.command {
        Command::Experiment(args) => experiment(&config, args),
        Command::Range(args) => range(&config, args),
        Command::Displacement(args) => displacement(&config, args),
        Command::Perturbed(args) => perturbed(&config, args),
        Command::Compare(args) => compare(&config, args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn envelope(command: &str, body: Value) -> Value {
    let mut out = json!({"schema_version": SCHEMA_VERSION, "command": command});
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}

fn parse_vector(flag: &str, text: &str) -> Result<Vector, Usage> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(Vector::from_vec(v)),
        _ => Err(Usage(format!("--{flag}: expected comma-separated finite numbers, got `{text}`"))),
    }
}

fn parse_params(raw: &[String]) -> Result<ParamMap, Usage> {
    let mut map = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Usage(format!("--param expects KEY=VALUE, got `{item}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn window_for(config: &Config, dim: usize) -> Result<Window, Usage> {
    match config.window {
        Some(h) if h > 0.0 && h.is_finite() => Ok(Window::cube(dim, h)),
        Some(h) => Err(Usage(format!("--window must be a positive half-width, got {h}"))),
        None => Ok(geometry::default_window(dim)),
    }
}

fn load_pair(path: &Path) -> Result<OperatorPair, Failure> {
    spec::load_pair(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn start_point(flag: &str, text: Option<&str>, dim: usize) -> Result<Vector, Failure> {
    match text {
        None => Ok(Vector::zeros(dim)),
        Some(t) => {
            let v = parse_vector(flag, t)?;
            if v.len() != dim {
                return Err(Failure::Usage(format!("--{flag} has {} entries, the pair lives in dimension {dim}", v.len())));
            }
            Ok(v)
        }
    }
}

fn experiment(config: &Config, args: &ExperimentArgs) -> Result<bool, Failure> {
    if args.list {
        for entry in experiments::registry() {
            println!("{:<24} {}", entry.name, entry.summary);
        }
        return Ok(true);
    }
    let params = parse_params(&args.params)?;
    let ctx = ExperimentContext {
        seed: config.seed,
        output_dir: config.output_dir.clone(),
        timestamp: config.timestamp,
    };
    let save = |report: &ExperimentReport| -> Result<(), Failure> {
        if let Some(dir) = &config.output_dir {
            io::write_json(&dir.join(format!("{}.json", report.name)), report)?;
        }
        Ok(())
    };
    if args.all {
        if !params.is_empty() {
            return Err(Failure::Usage("--param cannot be combined with --all".into()));
        }
        let mut all_pass = true;
        println!("{:<24} {:<6} {:>7}", "experiment", "result", "checks");
        for name in experiments::experiment_names() {
            let report = experiments::run_experiment(name, &params, &ctx)?;
            save(&report)?;
            let passed = report.checks.iter().filter(|c| c.pass).count();
            println!(
                "{:<24} {:<6} {:>3}/{:<3}",
                name,
                if report.pass { "PASS" } else { "FAIL" },
                passed,
                report.checks.len()
            );
            all_pass &= report.pass;
        }
        return Ok(all_pass);
    }
    let name = args.name.as_deref().expect("clap requires a name");
    let report = experiments::run_experiment(name, &params, &ctx)?;
    save(&report)?;
    print_json(&serde_json::to_value(&report).expect("serializable"));
    Ok(report.pass)
}

fn range(config: &Config, args: &RangeArgs) -> Result<bool, Failure> {
    if args.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let pair = load_pair(&args.pair)?;
    let window = window_for(config, pair.dim())?;
    let mut rng = seeded_rng(config.seed);
    let inputs = PointCloud::from_points(pair.dim(), (0..args.samples).map(|_| window.sample(&mut rng)).collect());
    let (cloud, label) = match args.of {
        RangeOf::Displacement => (sample_displacement_range(&pair, &inputs)?, "displacement"),
        RangeOf::T => (sample_t_range(&pair, &inputs)?, "T"),
    };
    if let Format::Csv = args.format {
        for p in &cloud.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            println!("{}", row.join(","));
        }
        return Ok(true);
    }
    let sets = build_pair_sets(&pair, args.samples.min(300), &window, config.seed)?;
    let target = match args.of {
        RangeOf::Displacement => sets.d_cap_r(),
        RangeOf::T => sets.dual_cap(),
    };
    let outside = cloud.points.iter().filter(|p| !target.contains(p, 1e-6)).count();
    let hull = affine_hull(&cloud, AFFINE_REL_TOL)?;
    let mut artifacts = Vec::new();
    if let Some(dir) = &config.output_dir {
        let path = dir.join(format!("range_{label}.csv"));
        io::write_cloud_csv(&path, &cloud)?;
        artifacts.push(path.display().to_string());
    }
    print_json(&envelope(
        "range",
        json!({
            "of": label,
            "samples": cloud.len(),
            "seed": config.seed,
            "window": window,
            "affine_hull_dim": hull.dim,
            "max_norm": cloud.max_norm(),
            "predicted_set": target.label(),
            "predicted_kind": target.kind(),
            "outside_predicted": outside,
            "artifacts": artifacts,
        }),
    ));
    Ok(true)
}

fn displacement(_config: &Config, args: &DisplacementArgs) -> Result<bool, Failure> {
    let pair = load_pair(&args.pair)?;
    let x0 = start_point("x0", args.x0.as_deref(), pair.dim())?;
    let est = estimate_displacement_vector_with(&pair, &x0, args.iterations, args.tol)?;
    print_json(&envelope(
        "displacement",
        json!({"estimate": est, "norm": est.vector().norm()}),
    ));
    Ok(true)
}

fn perturbed(_config: &Config, args: &PerturbedArgs) -> Result<bool, Failure> {
    let pair = load_pair(&args.pair)?;
    let w = parse_vector("w", &args.w)?;
    if w.len() != pair.dim() {
        return Err(Failure::Usage(format!("--w has {} entries, the pair lives in dimension {}", w.len(), pair.dim())));
    }
    let x0 = start_point("x0", args.x0.as_deref(), pair.dim())?;
    let verdict = solve_perturbed(&pair, &w, &x0, args.tol, args.iterations)?;
    print_json(&envelope(
        "perturbed",
        json!({"w": w.as_slice(), "tol": args.tol, "verdict": verdict, "status": verdict.status}),
    ));
    Ok(true)
}

fn compare(config: &Config, args: &CompareArgs) -> Result<bool, Failure> {
    let a = io::read_cloud_csv(&args.cloud_a)?;
    let b = io::read_cloud_csv(&args.cloud_b)?;
    if a.dim != b.dim {
        return Err(Failure::Usage(format!("clouds have dimensions {} and {}", a.dim, b.dim)));
    }
    let window = window_for(config, a.dim)?;
    let directions = args.directions.unwrap_or_else(|| geometry::default_directions(a.dim));
    let report = near_equal(&a, &b, args.tol, directions, &window)?;
    if let Some(dir) = &config.output_dir {
        let gaps = geometry::support_gaps(&a, &b, directions, &window, geometry::DEFAULT_DIRECTION_SEED)?;
        io::write_support_csv(&dir.join("support_gaps.csv"), &gaps)?;
    }
    print_json(&envelope("compare", json!({"report": report})));
    Ok(report.verdict)
}
