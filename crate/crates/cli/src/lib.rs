//! `poa` command-line front end: plot-ready CSV for sweeps, bound curves, geometry and the AR
//! pipeline, plus the validation suites.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use poa_core::ar_simulator::{self, ArConfig, DensityFit};
use poa_core::demand_models::{HalfNormalDemand, PointMassDemand, UniformDemand};
use poa_core::generalized_model::{GeneralizedModel, NewsvendorModel, PiecewiseLogModel, TanhModel};
use poa_core::solver::ChainConfig;
use poa_core::sweep::{self, linspace};
use poa_core::validation::{self, Fault, Suite};
use poa_core::Execution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "poa", version, about = "Price of anarchy in newsvendor supply chains")]
pub struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria, PoA and bounds over a grid of cost ratios r = c/p.
    Sweep(SweepArgs),
    /// Improved upper bound and lower bound as functions of α = Q_c/Q_d.
    BoundCurves(BoundCurveArgs),
    /// Order curve M(Q) with its supporting lines.
    Geometry(GeometryArgs),
    /// Simulate the AR(1)+χ² demand, fit its density and sweep the fitted model.
    Ar(ArArgs),
    /// Run the property and oracle suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// uniform | halfnormal | tanh | piecewise | pointmass | empirical:<fit.json>
    #[arg(long, default_value = "uniform")]
    pub model: String,
    /// Uniform support upper end b.
    #[arg(long, default_value_t = 1.0)]
    pub upper: f64,
    /// Half-normal scale σ.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Point-mass location Q₀.
    #[arg(long, default_value_t = 1.0)]
    pub atom: f64,
    /// Piecewise-log knee Q_v.
    #[arg(long, default_value_t = 1.0)]
    pub knee: f64,
    /// Piecewise-log tail slope v.
    #[arg(long, default_value_t = 0.1)]
    pub tail_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfigArg {
    PushManufacturer,
    PushRetailer,
    PullManufacturer,
    PullRetailer,
}

impl From<ConfigArg> for ChainConfig {
    fn from(c: ConfigArg) -> Self {
        match c {
            ConfigArg::PushManufacturer => ChainConfig::PushManufacturerLeader,
            ConfigArg::PushRetailer => ChainConfig::PushRetailerLeader,
            ConfigArg::PullManufacturer => ChainConfig::PullManufacturerLeader,
            ConfigArg::PullRetailer => ChainConfig::PullRetailerLeader,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "push-manufacturer")]
    pub config: ConfigArg,
    #[arg(long, default_value_t = 0.05)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub r_max: f64,
    #[arg(long, default_value_t = 19)]
    pub r_steps: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundCurveArgs {
    #[arg(long)]
    pub k: f64,
    /// g(Q_c); values within 1e-6 of one use the analytic limit.
    #[arg(long, default_value_t = 1.0 - 1e-9)]
    pub s: f64,
    /// X(Q_d)/X(0); sets r̃ = (1-k)·survival.
    #[arg(long, conflicts_with = "r_tilde")]
    pub survival_at_qd: Option<f64>,
    /// Rescaled cost ratio r̃ = r/X(0).
    #[arg(long)]
    pub r_tilde: Option<f64>,
    /// Defaults to (1-k)^{-1/s}.
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Defaults to twice (1-k)^{-1/k}.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub r: f64,
    #[arg(long, value_enum, default_value = "push-manufacturer")]
    pub config: ConfigArg,
    #[arg(long)]
    pub q_max: f64,
    #[arg(long, default_value_t = 201)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes `key,value` rows with touch points and intercepts.
    #[arg(long)]
    pub intercepts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ArArgs {
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub n_bins: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6])]
    pub degrees: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub chains: usize,
    #[arg(long, value_enum, default_value = "push-manufacturer")]
    pub config: ConfigArg,
    #[arg(long, default_value_t = 0.05)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub r_max: f64,
    #[arg(long, default_value_t = 19)]
    pub r_steps: usize,
    /// Also write every pooled sample to samples.csv.
    #[arg(long)]
    pub dump_samples: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Invariants,
    Oracle,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    InflateLowerBound,
    DeflateUpperBound,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Corrupt the bound computation to check that the suite notices.
    #[arg(long, value_enum)]
    pub inject: Vec<FaultArg>,
    /// Machine-readable CSV of every check.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Error that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Twelve significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn build_model(args: &ModelArgs) -> anyhow::Result<Box<dyn GeneralizedModel>> {
    let bad = |e: poa_core::PoaError| usage(format!("invalid model parameters: {e}"));
    let model: Box<dyn GeneralizedModel> = match args.model.as_str() {
        "uniform" => Box::new(NewsvendorModel::new(UniformDemand::new(args.upper).map_err(bad)?)),
        "halfnormal" => Box::new(NewsvendorModel::new(HalfNormalDemand::new(args.scale).map_err(bad)?)),
        "tanh" => Box::new(TanhModel),
        "piecewise" => Box::new(PiecewiseLogModel::new(args.knee, args.tail_slope).map_err(bad)?),
        "pointmass" => Box::new(NewsvendorModel::new(PointMassDemand::new(args.atom).map_err(bad)?)),
        other => {
            let Some(path) = other.strip_prefix("empirical:") else {
                return Err(usage(format!("unknown model `{other}`")));
            };
            let fit = read_fit(Path::new(path))?;
            Box::new(NewsvendorModel::new(ar_simulator::build_empirical_model(&fit).map_err(bad)?))
        }
    };
    Ok(model)
}

fn read_fit(path: &Path) -> anyhow::Result<DensityFit> {
    let file = File::open(path).map_err(|e| usage(format!("cannot open fit file {}: {e}", path.display())))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| usage(format!("malformed fit file {}: {e}", path.display())))
}

fn open_output<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> anyhow::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(stdout),
    })
}

const SWEEP_HEADER: [&str; 14] = [
    "r", "Qc", "Qd", "w_ratio", "profit_c", "profit_d", "poa", "prev_upper", "improved_upper", "lower", "branch", "valid", "igfr", "error",
];

pub fn write_sweep_csv(rows: &[sweep::SweepRow], out: &mut dyn Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record([
            fmt_num(row.r),
            fmt_num(row.q_c),
            fmt_num(row.q_d),
            fmt_num(row.w_ratio),
            fmt_num(row.profit_c),
            fmt_num(row.profit_d),
            fmt_num(row.poa),
            fmt_num(row.prev_upper),
            fmt_num(row.improved_upper),
            fmt_num(row.lower),
            row.branch.clone(),
            row.valid.to_string(),
            row.igfr.to_string(),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn r_grid(model: &dyn GeneralizedModel, r_min: f64, r_max: f64, steps: usize) -> anyhow::Result<Vec<f64>> {
    let x0 = model.marginal_at_zero();
    if !(r_min > 0.0 && r_min < r_max && r_max < x0) {
        return Err(usage(format!("need 0 < r_min < r_max < X(0) = {x0}, got [{r_min}, {r_max}]")));
    }
    if steps < 2 {
        return Err(usage("r_steps must be at least 2"));
    }
    Ok(linspace(r_min, r_max, steps))
}

fn cmd_sweep(args: &SweepArgs, exec: Execution, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let model = build_model(&args.model)?;
    let rs = r_grid(model.as_ref(), args.r_min, args.r_max, args.r_steps)?;
    let rows = sweep::sweep(model.as_ref(), args.config.into(), &rs, exec);
    let mut out = open_output(&args.out, stdout)?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_bound_curves(args: &BoundCurveArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let (k, s) = (args.k, args.s);
    if !(k > 0.0 && k < 1.0) || !(s >= k && s.is_finite()) {
        return Err(usage(format!("need 0 < k < 1 and s ≥ k, got k={k} s={s}")));
    }
    let r_tilde = match (args.survival_at_qd, args.r_tilde) {
        (Some(f), None) if f > 0.0 && f <= 1.0 => sweep::r_tilde_from_survival(k, f),
        (None, Some(r)) => r,
        (None, None) => return Err(usage("one of --survival-at-qd or --r-tilde is required")),
        (Some(f), _) => return Err(usage(format!("survival {f} must lie in (0, 1]"))),
    };
    if !(r_tilde > 0.0 && r_tilde < 1.0) {
        return Err(usage(format!("r̃ = {r_tilde} must lie in (0, 1)")));
    }
    let (lo, hi) = sweep::default_alpha_range(k, s);
    let (lo, hi) = (args.alpha_min.unwrap_or(lo), args.alpha_max.unwrap_or(hi));
    if !(lo >= 1.0 && hi > lo) || args.steps < 2 {
        return Err(usage(format!("need 1 ≤ alpha_min < alpha_max and steps ≥ 2, got [{lo}, {hi}]")));
    }
    let rows = sweep::bound_curves(k, s, r_tilde, &linspace(lo, hi, args.steps)).map_err(|e| usage(e.to_string()))?;
    let mut out = open_output(&args.out, stdout)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["alpha", "improved_upper", "lower"])?;
    for row in &rows {
        w.write_record([fmt_num(row.alpha), fmt_num(row.improved_upper), fmt_num(row.lower)])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_geometry(args: &GeometryArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let model = build_model(&args.model)?;
    let x0 = model.marginal_at_zero();
    if !(args.r > model.marginal_at_infinity() && args.r < x0) {
        return Err(usage(format!("r = {} is not admissible for {}", args.r, model.name())));
    }
    let (rows, summary) =
        sweep::geometry(model.as_ref(), args.r, args.config.into(), args.q_max, args.steps).map_err(|e| usage(e.to_string()))?;
    let mut out = open_output(&args.out, stdout)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["Q", "pM", "y_central", "y_decentralized", "y_follower"])?;
    for row in &rows {
        w.write_record([row.q, row.p_m, row.y_central, row.y_decentralized, row.y_follower].map(fmt_num))?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    if let Some(path) = &args.intercepts {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["key", "value"])?;
        let pairs = [
            ("r", fmt_num(summary.r)),
            ("Qc", fmt_num(summary.q_c)),
            ("Qd", fmt_num(summary.q_d)),
            ("intercept_central", fmt_num(summary.intercept_central)),
            ("intercept_decentralized", fmt_num(summary.intercept_decentralized)),
            ("follower_slope", fmt_num(summary.follower_slope)),
            ("follower_intercept", fmt_num(summary.follower_intercept)),
            ("w_ratio", fmt_num(summary.w_ratio)),
            ("central_slope_matches", summary.central_slope_matches.to_string()),
            ("at_kink", summary.at_kink.to_string()),
        ];
        for (k, v) in pairs {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn cmd_ar(args: &ArArgs, exec: Execution) -> anyhow::Result<i32> {
    let config = ArConfig {
        beta: args.beta,
        sigma2: args.sigma2,
        n_samples: args.n_samples,
        burn_in: args.burn_in,
        seed: args.seed,
        n_bins: args.n_bins,
        fit_degrees: args.degrees.clone(),
        n_chains: args.chains,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = &args.out_dir;

    let samples = ar_simulator::generate_series(&config, exec)?;
    if args.dump_samples {
        let mut w = csv::Writer::from_path(dir.join("samples.csv"))?;
        w.write_record(["xi"])?;
        for x in &samples {
            w.write_record([fmt_num(*x)])?;
        }
        w.flush()?;
    }
    let stats = ar_simulator::series_stats(&samples)?;
    let fit = ar_simulator::fit_log_density(&samples, &config)?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["key", "value"])?;
    for (k, v) in [
        ("n", stats.n as f64),
        ("mean", stats.mean),
        ("mean_se", stats.mean_se),
        ("stationary_mean", config.stationary_mean()),
        ("variance", stats.variance),
        ("variance_se", stats.variance_se),
        ("stationary_variance", config.stationary_variance()),
        ("min", stats.min),
        ("max", stats.max),
        ("chosen_degree", fit.chosen_degree as f64),
        ("loo_cv_error", fit.loo_cv_error),
        ("normalization", fit.normalization),
    ] {
        w.write_record([k.to_string(), fmt_num(v)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("histogram.csv"))?;
    w.write_record(["bin_center", "count", "log_density", "fitted_log_density"])?;
    for row in ar_simulator::histogram_rows(&fit) {
        w.write_record([fmt_num(row.bin_center), row.count.to_string(), fmt_num(row.log_density), fmt_num(row.fitted_log_density)])?;
    }
    w.flush()?;

    let fit_path = dir.join("fit.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&fit_path)?), &fit)?;

    let model = NewsvendorModel::new(ar_simulator::build_empirical_model(&fit)?);
    let rs = r_grid(&model, args.r_min, args.r_max, args.r_steps)?;
    let rows = sweep::sweep(&model, args.config.into(), &rs, exec);
    let mut out = BufWriter::new(File::create(dir.join("sweep.csv"))?);
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs, exec: Execution, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let suite = match args.suite {
        SuiteArg::Invariants => Suite::Invariants,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::All => Suite::All,
    };
    let faults: Vec<Fault> = args
        .inject
        .iter()
        .map(|f| match f {
            FaultArg::InflateLowerBound => Fault::InflateLowerBound,
            FaultArg::DeflateUpperBound => Fault::DeflateUpperBound,
        })
        .collect();
    let outcomes = validation::run_suite(suite, &faults, exec);
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        write!(stdout, "{status} {}/{} checked={} violations={}", o.suite, o.check, o.checked, o.violations)?;
        if !o.passed {
            write!(stdout, " worst={} {}", fmt_num(o.worst), o.detail)?;
        }
        writeln!(stdout)?;
    }
    if let Some(path) = &args.report {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["suite", "check", "passed", "checked", "violations", "worst", "detail"])?;
        for o in &outcomes {
            w.write_record([
                o.suite.to_string(),
                o.check.to_string(),
                o.passed.to_string(),
                o.checked.to_string(),
                o.violations.to_string(),
                fmt_num(o.worst),
                o.detail.clone(),
            ])?;
        }
        w.flush()?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(stdout, "{} checks, {failed} failed", outcomes.len())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PROPERTY_FAILURE })
}

/// Dispatches a parsed command line; returns the exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(a, exec, stdout),
        Command::BoundCurves(a) => cmd_bound_curves(a, stdout),
        Command::Geometry(a) => cmd_geometry(a, stdout),
        Command::Ar(a) => cmd_ar(a, exec),
        Command::Validate(a) => cmd_validate(a, exec, stdout),
    }
}

/// Parses `args`, runs the command and maps every outcome to an exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_PROPERTY_FAILURE
            }
        }
    }
}
