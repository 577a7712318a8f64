//! Command-line front end: exact counts, remainder sweeps with exponent
//! fits, constant-consistency tables, sandwich checks, and the dyadic
//! jump-set experiment. Sweeps run in parallel over lambda samples and are
//! merged in lambda order, so exact-mode output is byte-identical across
//! thread counts. Every run emits a JSON manifest (next to the CSV when
//! `--out` is given, to stderr otherwise).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_envelope_exponent, fit_exponent, ExponentFit, GridSpec};
use crate::exact::{parse_rational, rat_to_f64, Rat};
use crate::jumpset::JumpSet;
use crate::lattice::{main_term, ArithmeticMode, LatticeProblem};
use crate::mollify::{optimal_epsilon, sandwich};
use crate::product_count::{
    count, count_work_estimate, weyl_constant, weyl_constant_exact, ProductManifold,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

const DEFAULT_WORK_CAP: u64 = 200_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "weylcount",
    version,
    about = "Exact spectral counting for sphere and torus products"
)]
struct Cli {
    /// Worker threads for grid sweeps (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Enumeration node budget before a query is refused (exit 3).
    #[arg(long, global = true)]
    work_cap: Option<u64>,
    /// Absolute quadrature tolerance for mollified profiles.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact eigenvalue count of a sphere/circle product at one radius.
    Count(CountArgs),
    /// Remainder sweep over a lambda grid with a fitted exponent.
    Remainder(RemainderArgs),
    /// Main-term constant consistency table for a product.
    Constants(ConstantsArgs),
    /// Mollified sandwich check at one radius.
    Molly(MollyArgs),
    /// Dyadic jump-set experiment: jumps, drops, and normalized ratios.
    Counterexample(CounterexampleArgs),
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Comma-separated factor dimensions, e.g. "2,3,1".
    #[arg(long)]
    dims: String,
    /// Radius as a decimal.
    #[arg(long, conflicts_with = "lambda_sq")]
    lambda: Option<String>,
    /// Squared radius as an exact rational "p/q" or decimal.
    #[arg(long)]
    lambda_sq: Option<String>,
}

#[derive(Args, Debug)]
struct RemainderArgs {
    /// Product dimensions, e.g. "2,2".
    #[arg(long, conflicts_with = "lattice")]
    dims: Option<String>,
    /// Lattice problem "n,k,d_1,...,d_k", e.g. "2,1,2".
    #[arg(long)]
    lattice: Option<String>,
    /// Shift vector for a lattice problem, e.g. "0.37,0.91".
    #[arg(long)]
    shift: Option<String>,
    /// Use floating (compensated) summation instead of exact rationals.
    #[arg(long)]
    float: bool,
    #[arg(long)]
    lambda_min: f64,
    #[arg(long)]
    lambda_max: f64,
    /// Sample count (default: 64 per decade of lambda).
    #[arg(long)]
    samples: Option<usize>,
    /// Fit per-octave envelope maxima instead of raw samples.
    #[arg(long)]
    envelope: bool,
    /// Keep the raw geometric grid instead of snapping lambda^2 to
    /// half-integers.
    #[arg(long)]
    no_snap: bool,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long)]
    dims: String,
}

#[derive(Args, Debug)]
struct MollyArgs {
    #[arg(long)]
    dims: String,
    #[arg(long)]
    lambda: f64,
    /// Width epsilon: a positive decimal, or "auto" for
    /// lambda^(-(n-1)/(n+1)).
    #[arg(long)]
    epsilon: String,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    /// Largest dyadic block; the set is built on [0, 2^kmax).
    #[arg(long)]
    kmax: u32,
    /// Jump half-width delta.
    #[arg(long, default_value_t = 0.125)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Optional config file named by WEYLCOUNT_CONFIG; flags override it.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    threads: Option<usize>,
    work_cap: Option<u64>,
    quad_tol: Option<f64>,
}

#[derive(Clone, Debug)]
struct Config {
    threads: usize,
    work_cap: u64,
    quad_tol: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub tool_version: String,
    pub timestamp_utc: String,
    pub parameters: serde_json::Value,
    pub grid: Option<String>,
    pub arithmetic_mode: String,
    pub quadrature_tol: f64,
    pub threads: usize,
    pub work_cap: u64,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug)]
enum CmdError {
    Usage(String),
    Resource(String),
    Failure(String),
}

impl CmdError {
    fn code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => EXIT_USAGE,
            CmdError::Resource(_) => EXIT_RESOURCE,
            CmdError::Failure(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Resource(m) | CmdError::Failure(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CmdError {
    CmdError::Usage(e.to_string())
}

/// Entry point; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };

    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.code();
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: failed to build thread pool: {e}");
            return EXIT_FAILURE;
        }
    };

    let started = Instant::now();
    let result = pool.install(|| match &cli.command {
        Command::Count(a) => cmd_count(a, &config),
        Command::Remainder(a) => cmd_remainder(a, &config),
        Command::Constants(a) => cmd_constants(a, &config),
        Command::Molly(a) => cmd_molly(a, &config),
        Command::Counterexample(a) => cmd_counterexample(a, &config),
    });

    match result {
        Ok(mut manifest) => {
            manifest.command_line = args.to_vec();
            manifest.wall_time_secs = started.elapsed().as_secs_f64();
            manifest.threads = config.threads;
            manifest.work_cap = config.work_cap;
            manifest.quadrature_tol = config.quad_tol;
            if let Err(e) = emit_manifest(&manifest) {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config, CmdError> {
    let mut config = Config {
        threads: std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
        work_cap: DEFAULT_WORK_CAP,
        quad_tol: crate::mollify::DEFAULT_QUAD_TOL,
    };
    if let Ok(path) = std::env::var("WEYLCOUNT_CONFIG") {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CmdError::Failure(format!("cannot read WEYLCOUNT_CONFIG file {path}: {e}"))
        })?;
        let file: FileConfig = serde_json::from_str(&text)
            .map_err(|e| CmdError::Failure(format!("invalid config {path}: {e}")))?;
        if let Some(t) = file.threads {
            config.threads = t;
        }
        if let Some(w) = file.work_cap {
            config.work_cap = w;
        }
        if let Some(q) = file.quad_tol {
            config.quad_tol = q;
        }
    }
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(w) = cli.work_cap {
        config.work_cap = w;
    }
    if let Some(q) = cli.quad_tol {
        if !(q > 0.0) {
            return Err(CmdError::Usage(format!(
                "--quad-tol must be positive, got {q}"
            )));
        }
        config.quad_tol = q;
    }
    Ok(config)
}

fn manifest_skeleton(parameters: serde_json::Value, mode: &str) -> RunManifest {
    RunManifest {
        command_line: Vec::new(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_utc: chrono::Utc::now().to_rfc3339(),
        parameters,
        grid: None,
        arithmetic_mode: mode.to_string(),
        quadrature_tol: 0.0,
        threads: 0,
        work_cap: 0,
        outputs: Vec::new(),
        wall_time_secs: 0.0,
    }
}

fn emit_manifest(manifest: &RunManifest) -> Result<(), String> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
    match manifest.outputs.first() {
        Some(csv_path) => {
            let path = manifest_path(Path::new(csv_path));
            std::fs::write(&path, json).map_err(|e| format!("cannot write {path:?}: {e}"))
        }
        None => {
            eprintln!("{json}");
            Ok(())
        }
    }
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Floats print with 17 significant digits; exact rationals as `p/q`.
fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn fmt_rat(r: &Rat) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_lambda_sq(args: &CountArgs) -> Result<Rat, CmdError> {
    match (&args.lambda, &args.lambda_sq) {
        (Some(l), None) => {
            let lambda = parse_rational(l).map_err(usage)?;
            Ok(&lambda * &lambda)
        }
        (None, Some(sq)) => parse_rational(sq).map_err(usage),
        _ => Err(CmdError::Usage(
            "exactly one of --lambda or --lambda-sq is required".into(),
        )),
    }
}

fn cmd_count(args: &CountArgs, config: &Config) -> Result<RunManifest, CmdError> {
    let manifold = ProductManifold::parse(&args.dims).map_err(usage)?;
    let lambda_sq = parse_lambda_sq(args)?;
    let estimate = count_work_estimate(&manifold, &lambda_sq);
    if estimate > config.work_cap as u128 {
        return Err(CmdError::Resource(format!(
            "estimated {estimate} enumeration nodes exceed the work cap {}",
            config.work_cap
        )));
    }
    let result = count(&manifold, &lambda_sq);
    let lambda = rat_to_f64(&lambda_sq).max(0.0).sqrt();
    let main = weyl_constant(&manifold) * lambda.powi(manifold.total_dim() as i32);
    println!(
        "N={} main_term={} dims={} lambda_sq={}",
        result.value,
        fmt_f64(main),
        args.dims.trim(),
        fmt_rat(&lambda_sq)
    );
    Ok(manifest_skeleton(
        serde_json::json!({
            "command": "count",
            "dims": manifold.dims(),
            "lambda_sq": fmt_rat(&lambda_sq),
        }),
        "exact",
    ))
}

struct LatticeSpec {
    problem: LatticeProblem,
    description: String,
}

fn parse_lattice(spec: &str, shift: Option<&str>, float: bool) -> Result<LatticeSpec, CmdError> {
    let fields: Vec<&str> = spec.split(',').map(str::trim).collect();
    if fields.len() < 2 {
        return Err(CmdError::Usage(format!(
            "lattice spec `{spec}` must be n,k,d_1,...,d_k"
        )));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| CmdError::Usage(format!("invalid lattice dimension `{}`", fields[0])))?;
    let k: usize = fields[1]
        .parse()
        .map_err(|_| CmdError::Usage(format!("invalid weighted count `{}`", fields[1])))?;
    if n == 0 || k > n || fields.len() != 2 + k {
        return Err(CmdError::Usage(format!(
            "lattice spec `{spec}`: expected {k} weight entries for n={n}, k={k}"
        )));
    }
    let mut dims: Vec<u32> = Vec::with_capacity(n);
    for f in &fields[2..] {
        let d: u32 = f
            .parse()
            .map_err(|_| CmdError::Usage(format!("invalid weight dimension `{f}`")))?;
        if d < 2 {
            return Err(CmdError::Usage(format!(
                "weighted dimensions must be >= 2, got `{f}`"
            )));
        }
        dims.push(d);
    }
    dims.extend(std::iter::repeat_n(1, n - k));
    let shift_vec: Vec<Rat> = match shift {
        None => vec![Rat::new(0.into(), 1.into()); n],
        Some(text) => {
            let parts: Vec<&str> = text.split(',').map(str::trim).collect();
            if parts.len() != n {
                return Err(CmdError::Usage(format!(
                    "shift `{text}` has {} components, expected {n}",
                    parts.len()
                )));
            }
            parts
                .iter()
                .map(|p| parse_rational(p).map_err(usage))
                .collect::<Result<_, _>>()?
        }
    };
    let mode = if float {
        ArithmeticMode::Floating
    } else {
        ArithmeticMode::Exact
    };
    let problem = LatticeProblem::new(dims, shift_vec, mode).map_err(usage)?;
    Ok(LatticeSpec {
        description: format!("lattice {spec} shift {}", shift.unwrap_or("0")),
        problem,
    })
}

fn write_csv(
    out: &Option<PathBuf>,
    rows: &[(f64, String, f64, f64)],
) -> Result<Vec<String>, CmdError> {
    let mut text = String::from("lambda,value,main_term,error\n");
    for (lambda, value, main, error) in rows {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_f64(*lambda),
            value,
            fmt_f64(*main),
            fmt_f64(*error)
        );
    }
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CmdError::Failure(format!("cannot write {path:?}: {e}")))?;
            Ok(vec![path.to_string_lossy().into_owned()])
        }
        None => {
            print!("{text}");
            Ok(Vec::new())
        }
    }
}

fn print_fit(fit: &ExponentFit, envelope: bool) {
    println!(
        "fit: slope={} intercept={} r_squared={} dropped={} used={} envelope={}{}",
        fmt_f64(fit.slope),
        fmt_f64(fit.intercept),
        fmt_f64(fit.r_squared),
        fit.dropped,
        fit.used,
        envelope,
        if fit.drop_flagged() {
            " [flagged: >30% dropped]"
        } else {
            ""
        }
    );
}

fn cmd_remainder(args: &RemainderArgs, config: &Config) -> Result<RunManifest, CmdError> {
    if !(args.lambda_min > 0.0 && args.lambda_max > args.lambda_min) {
        return Err(CmdError::Usage(
            "need 0 < --lambda-min < --lambda-max".into(),
        ));
    }
    let mut spec = match args.samples {
        Some(samples) => {
            if samples < 8 {
                return Err(CmdError::Usage(format!(
                    "--samples must be at least 8, got {samples}"
                )));
            }
            GridSpec::new(args.lambda_min, args.lambda_max, samples)
        }
        None => crate::analysis::geometric_grid(
            args.lambda_min,
            args.lambda_max,
            crate::analysis::DEFAULT_PER_DECADE,
        ),
    };
    spec.snap_half_integer_sq = !args.no_snap;
    let grid = spec.build();
    let grid_desc = format!(
        "geometric {} samples in [{}, {}]{}",
        grid.len(),
        args.lambda_min,
        args.lambda_max,
        if spec.snap_half_integer_sq {
            ", lambda^2 snapped to half-integers"
        } else {
            ""
        }
    );

    let (series, rows, mode, params) = match (&args.dims, &args.lattice) {
        (Some(dims), None) => {
            let manifold = ProductManifold::parse(dims).map_err(usage)?;
            let max_sq = grid.last().unwrap().lambda_sq.clone();
            let estimate =
                count_work_estimate(&manifold, &max_sq).saturating_mul(grid.len() as u128);
            if estimate > config.work_cap as u128 {
                return Err(CmdError::Resource(format!(
                    "estimated {estimate} enumeration nodes exceed the work cap {}",
                    config.work_cap
                )));
            }
            let constant = weyl_constant(&manifold);
            let degree = manifold.total_dim() as i32;
            let samples = crate::product_count::remainder_samples(&manifold, &grid);
            let rows: Vec<(f64, String, f64, f64)> = samples
                .iter()
                .map(|(lambda, n, error)| {
                    (
                        *lambda,
                        n.to_string(),
                        constant * lambda.powi(degree),
                        *error,
                    )
                })
                .collect();
            let series = crate::analysis::RemainderSeries::new(
                samples.iter().map(|&(l, _, e)| (l, e)).collect(),
                degree as f64,
                &format!("dims {dims}"),
            )
            .expect("grid is strictly increasing");
            (
                series,
                rows,
                "exact",
                serde_json::json!({
                    "command": "remainder",
                    "dims": manifold.dims(),
                    "samples": grid.len(),
                    "lambda_min": args.lambda_min,
                    "lambda_max": args.lambda_max,
                    "envelope": args.envelope,
                }),
            )
        }
        (None, Some(lattice)) => {
            let spec = parse_lattice(lattice, args.shift.as_deref(), args.float)?;
            let n = spec.problem.n();
            let per_sample = (2.0 * args.lambda_max + 2.0).powi(n as i32 - 1) as u128;
            let estimate = per_sample.saturating_mul(grid.len() as u128);
            if estimate > config.work_cap as u128 {
                return Err(CmdError::Resource(format!(
                    "estimated {estimate} enumeration nodes exceed the work cap {}",
                    config.work_cap
                )));
            }
            let constant = main_term(&spec.problem);
            let degree = spec.problem.total_degree() as i32;
            let samples = crate::lattice::remainder_samples(&spec.problem, &grid);
            let rows: Vec<(f64, String, f64, f64)> = samples
                .iter()
                .map(|(lambda, count, error)| {
                    let text = match count.value.as_exact() {
                        Some(r) => fmt_rat(r),
                        None => fmt_f64(count.value.to_f64()),
                    };
                    (*lambda, text, constant * lambda.powi(degree), *error)
                })
                .collect();
            let series = crate::analysis::RemainderSeries::new(
                samples.iter().map(|(l, _, e)| (*l, *e)).collect(),
                degree as f64,
                &spec.description,
            )
            .expect("grid is strictly increasing");
            let mode = if args.float { "floating" } else { "exact" };
            (
                series,
                rows,
                mode,
                serde_json::json!({
                    "command": "remainder",
                    "lattice": lattice,
                    "shift": args.shift,
                    "samples": grid.len(),
                    "lambda_min": args.lambda_min,
                    "lambda_max": args.lambda_max,
                    "envelope": args.envelope,
                    "float": args.float,
                }),
            )
        }
        _ => {
            return Err(CmdError::Usage(
                "exactly one of --dims or --lattice is required".into(),
            ))
        }
    };

    let outputs = write_csv(&args.out, &rows)?;
    let fit = if args.envelope {
        fit_envelope_exponent(&series)
    } else {
        fit_exponent(&series)
    }
    .map_err(|e| CmdError::Failure(e.to_string()))?;
    print_fit(&fit, args.envelope);

    let mut manifest = manifest_skeleton(params, mode);
    manifest.grid = Some(grid_desc);
    manifest.outputs = outputs;
    Ok(manifest)
}

fn cmd_constants(args: &ConstantsArgs, _config: &Config) -> Result<RunManifest, CmdError> {
    let manifold = ProductManifold::parse(&args.dims).map_err(usage)?;
    let problem = manifold.lattice_problem();
    let weyl = weyl_constant(&manifold);
    let dirichlet = main_term(&problem);
    let leading = manifold.leading_weight();
    let product = rat_to_f64(&leading) * dirichlet;
    let rel_diff = (product - weyl).abs() / weyl;
    let exact_equal =
        crate::lattice::main_term_exact(&problem).scale(&leading) == weyl_constant_exact(&manifold);
    println!("dims={}", args.dims.trim());
    println!("weyl_constant={}", fmt_f64(weyl));
    println!("main_term={}", fmt_f64(dirichlet));
    println!("leading_product={}", fmt_rat(&leading));
    println!("product_constant={}", fmt_f64(product));
    println!("rel_diff={}", fmt_f64(rel_diff));
    println!("exact_equal={exact_equal}");
    Ok(manifest_skeleton(
        serde_json::json!({
            "command": "constants",
            "dims": manifold.dims(),
        }),
        "exact",
    ))
}

fn cmd_molly(args: &MollyArgs, config: &Config) -> Result<RunManifest, CmdError> {
    let manifold = ProductManifold::parse(&args.dims).map_err(usage)?;
    let n = manifold.factor_count() as u32;
    let epsilon = match args.epsilon.as_str() {
        "auto" => {
            if args.lambda < 1.0 {
                return Err(CmdError::Usage(
                    "--epsilon auto requires lambda >= 1".into(),
                ));
            }
            optimal_epsilon(args.lambda, n)
        }
        text => {
            let value: f64 = text
                .parse()
                .map_err(|_| CmdError::Usage(format!("invalid epsilon `{text}`")))?;
            if !(value > 0.0) {
                return Err(CmdError::Usage(format!(
                    "epsilon must be positive, got {value}"
                )));
            }
            value
        }
    };
    if !(args.lambda > 0.0) {
        return Err(CmdError::Usage(format!(
            "lambda must be positive, got {}",
            args.lambda
        )));
    }
    let per_sample = (2.0 * (args.lambda + epsilon) + 2.0).powi(n as i32 - 1) as u128;
    if per_sample * 3 > config.work_cap as u128 {
        return Err(CmdError::Resource(format!(
            "estimated {} enumeration nodes exceed the work cap {}",
            per_sample * 3,
            config.work_cap
        )));
    }
    let problem = manifold.lattice_problem();
    let report = sandwich(&problem, args.lambda, epsilon, config.quad_tol)
        .map_err(|e| CmdError::Failure(e.to_string()))?;
    println!("epsilon={}", fmt_f64(epsilon));
    println!(
        "N_eps(lambda-eps)={} (quad_error={}, shell_points={})",
        fmt_f64(report.lower.value),
        fmt_f64(report.lower.quad_error),
        report.lower.shell_points
    );
    println!("N(lambda)={}", fmt_f64(report.exact));
    println!(
        "N_eps(lambda+eps)={} (quad_error={}, shell_points={})",
        fmt_f64(report.upper.value),
        fmt_f64(report.upper.quad_error),
        report.upper.shell_points
    );
    println!("sandwich {}", if report.holds { "PASS" } else { "FAIL" });
    Ok(manifest_skeleton(
        serde_json::json!({
            "command": "molly",
            "dims": manifold.dims(),
            "lambda": args.lambda,
            "epsilon": epsilon,
        }),
        "exact",
    ))
}

fn cmd_counterexample(args: &CounterexampleArgs, config: &Config) -> Result<RunManifest, CmdError> {
    if args.kmax == 0 {
        return Err(CmdError::Usage("--kmax must be at least 2".into()));
    }
    if !(args.delta > 0.0 && args.delta <= 0.25) {
        return Err(CmdError::Usage(format!(
            "--delta must be in (0, 1/4], got {}",
            args.delta
        )));
    }
    let points: u128 = 1u128 << args.kmax;
    if points.saturating_mul(2 * args.kmax as u128) > config.work_cap as u128 {
        return Err(CmdError::Resource(format!(
            "jump table needs ~{} point visits, beyond the work cap {}",
            points * 2 * args.kmax as u128,
            config.work_cap
        )));
    }
    let set = JumpSet::build(points as f64).map_err(|e| CmdError::Usage(e.to_string()))?;
    let mut text = String::from("k,jump,threshold,drops,ratio\n");
    let mut max_ratio: f64 = 0.0;
    for k in 1..=args.kmax {
        let jump = set
            .jump(k, args.delta)
            .map_err(|e| CmdError::Failure(e.to_string()))?;
        let drops = set.drops_in_block(k);
        let (_, ratio) = set
            .ratio_at_jumps(k..=k)
            .map_err(|e| CmdError::Failure(e.to_string()))?[0];
        max_ratio = max_ratio.max(ratio);
        let _ = writeln!(
            text,
            "{k},{jump},{},{drops},{}",
            fmt_f64(JumpSet::jump_threshold(k)),
            fmt_f64(ratio)
        );
    }
    let outputs = match &args.out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| CmdError::Failure(format!("cannot write {path:?}: {e}")))?;
            vec![path.to_string_lossy().into_owned()]
        }
        None => {
            print!("{text}");
            Vec::new()
        }
    };
    println!("max_ratio={}", fmt_f64(max_ratio));
    println!("census={}", set.unit_interval_census());
    let mut manifest = manifest_skeleton(
        serde_json::json!({
            "command": "counterexample",
            "kmax": args.kmax,
            "delta": args.delta,
        }),
        "exact",
    );
    manifest.outputs = outputs;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        let full: Vec<String> = std::iter::once("weylcount".to_string())
            .chain(args.iter().map(|s| s.to_string()))
            .collect();
        run(&full)
    }

    #[test]
    fn count_closed_form() {
        assert_eq!(
            run_args(&["count", "--dims", "2", "--lambda", "10"]),
            EXIT_OK
        );
    }

    #[test]
    fn count_rejects_bad_dims() {
        assert_eq!(
            run_args(&["count", "--dims", "2,0", "--lambda", "5"]),
            EXIT_USAGE
        );
        assert_eq!(
            run_args(&["count", "--dims", "2,x", "--lambda", "5"]),
            EXIT_USAGE
        );
        assert_eq!(run_args(&["count", "--dims", "2"]), EXIT_USAGE);
    }

    #[test]
    fn count_respects_work_cap() {
        assert_eq!(
            run_args(&[
                "--work-cap",
                "10",
                "count",
                "--dims",
                "2,2,2",
                "--lambda",
                "1000"
            ]),
            EXIT_RESOURCE
        );
    }

    #[test]
    fn molly_rejects_bad_epsilon() {
        assert_eq!(
            run_args(&[
                "molly",
                "--dims",
                "1,1",
                "--lambda",
                "30",
                "--epsilon",
                "-1"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            run_args(&["molly", "--dims", "1,1", "--lambda", "30", "--epsilon", "0"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn counterexample_rejects_kmax_zero() {
        assert_eq!(run_args(&["counterexample", "--kmax", "0"]), EXIT_USAGE);
    }

    #[test]
    fn lattice_spec_parsing() {
        assert!(parse_lattice("2,1,2", Some("0.37,0.91"), false).is_ok());
        assert!(parse_lattice("2,1,2", Some("0.37"), false).is_err());
        assert!(parse_lattice("2,1", None, false).is_err());
        assert!(parse_lattice("2,1,1", None, false).is_err());
        assert!(parse_lattice("0,0", None, false).is_err());
        let p = parse_lattice("3,2,4,2", None, false).unwrap();
        assert_eq!(p.problem.dims(), &[4, 2, 1]);
    }
}
