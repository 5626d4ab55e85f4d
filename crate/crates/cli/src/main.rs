use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bitsense_core::io as formats;
use bitsense_core::montecarlo::{
    convergence_experiment, run_validation_suite, ConvergenceConfig, SignConvention, SuiteConfig,
};
use bitsense_core::raic::{raic_certify, RaicCertifyConfig, Regime};
use bitsense_core::rng::streams;
use bitsense_core::theory::{bound_table, constants, sample_complexity};
use bitsense_core::{random_sparse_unit, sign_measure, MeasurementMatrix, SeedSpec};

mod config;

use config::{ConfigLayer, ExperimentConfig, Format};

/// Exit codes: 0 success, 1 validation or assertion failure (and I/O
/// errors), 2 usage or domain error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<bitsense_core::Error> for CliError {
    fn from(e: bitsense_core::Error) -> Self {
        use bitsense_core::Error as E;
        match e {
            E::Io(m) => CliError::Io(m),
            E::Lemma1Violation { .. } => CliError::Failed(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bitsense",
    version,
    about = "1-bit compressed sensing with normalized BIHT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    layer: ConfigLayer,
}

impl Common {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        self.layer.resolve(self.config.as_deref())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run BIHT trials and write per-iteration trajectories
    Run(Common),
    /// Sample the restricted approximate invertibility condition
    Raic {
        #[command(flatten)]
        common: Common,
        /// Number of sampled pairs
        #[arg(long, default_value_t = 500)]
        pairs: usize,
        /// Pairs forced below distance delta/b (default: pairs / 5)
        #[arg(long)]
        small_pairs: Option<usize>,
        /// Largest |J| (default: k)
        #[arg(long)]
        max_j: Option<usize>,
    },
    /// Run the Monte Carlo validator suite
    Validate {
        #[command(flatten)]
        common: Common,
        /// Resolve sgn(0) as -1 (fault injection)
        #[arg(long)]
        break_sgn_zero: bool,
        /// Divide every sample size by 10
        #[arg(long)]
        quick: bool,
    },
    /// Print constants, sample complexity and the error-bound table
    Theory {
        #[command(flatten)]
        common: Common,
        /// Last iteration of the bound table
        #[arg(long, default_value_t = 20)]
        t_max: u32,
    },
    /// Write a Gaussian matrix, a sparse signal and its sign measurements
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
        matrix_format: MatrixFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixFormat {
    Csv,
    Bin,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a ExperimentConfig,
    epsilon_ref: f64,
    final_mean_ds: f64,
    mean_ds: Vec<f64>,
    median_ds: Vec<f64>,
    max_ds: Vec<f64>,
    closed_form: Vec<f64>,
    lemma1_min_slack: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    trial: usize,
    iter: usize,
    d_s: Option<f64>,
    mismatch_l: usize,
    lemma1_rhs: Option<f64>,
}

fn cmd_run(cfg: ExperimentConfig) -> Result<(), CliError> {
    let n = ExperimentConfig::require(cfg.n, "n")?;
    let k = ExperimentConfig::require(cfg.k, "k")?;
    let m = ExperimentConfig::require(cfg.m, "m")?;
    let mut exp = ConvergenceConfig::new(
        n,
        k,
        m,
        cfg.trials,
        cfg.max_iters,
        SeedSpec::from(cfg.base_seed),
    );
    exp.eta = cfg.eta;
    exp.epsilon_ref = cfg.epsilon.unwrap_or(0.1);
    let result = convergence_experiment(&exp)?;

    match cfg.format {
        Format::Csv => {
            let mut w = create(&cfg.output_dir, "trajectory.csv")?;
            formats::write_trajectory_csv(&mut w, &result.trajectories)?;
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<TrajectoryRow> = result
                .trajectories
                .iter()
                .enumerate()
                .flat_map(|(trial, tr)| {
                    tr.records.iter().map(move |r| TrajectoryRow {
                        trial,
                        iter: r.iter,
                        d_s: r.error_ds,
                        mismatch_l: r.mismatch,
                        lemma1_rhs: r.lemma1_rhs,
                    })
                })
                .collect();
            write_json(&cfg.output_dir, "trajectory.json", &rows)?;
        }
    }

    let slack = result
        .trajectories
        .iter()
        .filter_map(|t| t.lemma1_min_slack())
        .fold(f64::INFINITY, f64::min);
    let summary = RunSummary {
        config: &cfg,
        epsilon_ref: exp.epsilon_ref,
        final_mean_ds: result.table.last().map_or(f64::NAN, |r| r.mean_ds),
        mean_ds: result.table.iter().map(|r| r.mean_ds).collect(),
        median_ds: result.table.iter().map(|r| r.median_ds).collect(),
        max_ds: result.table.iter().map(|r| r.max_ds).collect(),
        closed_form: result.table.iter().map(|r| r.closed_form).collect(),
        lemma1_min_slack: slack,
    };
    write_json(&cfg.output_dir, "summary.json", &summary)
}

#[derive(Serialize)]
struct RaicSummary {
    delta: f64,
    tau: f64,
    worst_ratio: f64,
    n_pairs: usize,
    n_violations: usize,
    n_small: usize,
    n_large: usize,
    m: usize,
    n: usize,
    k: usize,
}

fn cmd_raic(
    cfg: ExperimentConfig,
    pairs: usize,
    small_pairs: Option<usize>,
    max_j: Option<usize>,
) -> Result<(), CliError> {
    let n = ExperimentConfig::require(cfg.n, "n")?;
    let k = ExperimentConfig::require(cfg.k, "k")?;
    let m = ExperimentConfig::require(cfg.m, "m")?;
    let delta = ExperimentConfig::require(cfg.delta, "delta")?;
    if pairs == 0 {
        return Err(CliError::Usage("--pairs must be at least 1".into()));
    }
    let seed = SeedSpec::from(cfg.base_seed);
    let a = MeasurementMatrix::gaussian(m, n, seed.with_stream(streams::MATRIX))?;
    let mut rc = RaicCertifyConfig::new(k, delta, pairs, seed.with_stream(streams::PAIRS));
    rc.eta = cfg.eta;
    rc.small_pairs = small_pairs.unwrap_or(pairs / 5);
    rc.max_j = max_j.unwrap_or(k);
    let report = raic_certify(&a, &rc)?;

    match cfg.format {
        Format::Csv => {
            let mut w = create(&cfg.output_dir, "raic_report.csv")?;
            formats::write_raic_csv(&mut w, &report)?;
            w.flush()?;
        }
        Format::Json => write_json(&cfg.output_dir, "raic_report.json", &report.records)?,
    }
    let summary = RaicSummary {
        delta,
        tau: report.tau,
        worst_ratio: report.worst_ratio,
        n_pairs: report.samples,
        n_violations: report.n_violations,
        n_small: report.count(Regime::Small),
        n_large: report.count(Regime::Large),
        m,
        n,
        k,
    };
    write_json(&cfg.output_dir, "raic_summary.json", &summary)?;
    if report.n_violations > 0 {
        return Err(CliError::Failed(format!(
            "{} of {} pairs exceed the bound (worst ratio {})",
            report.n_violations, report.samples, report.worst_ratio
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidationSummary<'a> {
    seed: u64,
    total: usize,
    passed: usize,
    failed: Vec<&'a str>,
    rows: &'a [bitsense_core::montecarlo::Validation],
}

fn cmd_validate(cfg: ExperimentConfig, break_sgn_zero: bool, quick: bool) -> Result<(), CliError> {
    let mut suite = SuiteConfig::new(SeedSpec::from(cfg.base_seed));
    if break_sgn_zero {
        suite.convention = SignConvention::ZeroNegative;
    }
    if quick {
        suite.scale_down = 10;
    }
    let rows = run_validation_suite(&suite)?;

    let mut w = create(&cfg.output_dir, "validation.csv")?;
    formats::write_validation_csv(&mut w, &rows)?;
    w.flush()?;
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    write_json(
        &cfg.output_dir,
        "validation.json",
        &ValidationSummary {
            seed: cfg.base_seed,
            total: rows.len(),
            passed: rows.len() - failed.len(),
            failed: failed.clone(),
            rows: &rows,
        },
    )?;
    if failed.is_empty() {
        return Ok(());
    }
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "FAIL {}: estimate {} theory {} se {} z {}",
            r.name, r.estimate, r.theory, r.se, r.z
        );
    }
    Err(CliError::Failed(format!(
        "{} validator(s) failed",
        failed.len()
    )))
}

fn cmd_theory(cfg: ExperimentConfig, t_max: u32) -> Result<(), CliError> {
    let epsilon = ExperimentConfig::require(cfg.epsilon, "epsilon")?;
    let rho = ExperimentConfig::require(cfg.rho, "rho")?;
    let k = ExperimentConfig::require(cfg.k, "k")?;
    let n = ExperimentConfig::require(cfg.n, "n")?;
    let m = sample_complexity(epsilon, rho, k, n)?;
    let table = bound_table(epsilon, t_max)?;
    let c = constants();

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "a,b,c,c1,c2")?;
    writeln!(out, "{},{},{},{},{}", c.a, c.b, c.c, c.c1, c.c2)?;
    writeln!(out)?;
    writeln!(out, "epsilon,rho,k,n,m")?;
    writeln!(out, "{epsilon},{rho},{k},{n},{m}")?;
    writeln!(out)?;
    writeln!(out, "t,epsilon_t,closed_form")?;
    for r in &table {
        writeln!(out, "{},{},{}", r.t, r.recurrence, r.closed_form)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_generate(cfg: ExperimentConfig, matrix_format: MatrixFormat) -> Result<(), CliError> {
    let n = ExperimentConfig::require(cfg.n, "n")?;
    let k = ExperimentConfig::require(cfg.k, "k")?;
    let m = ExperimentConfig::require(cfg.m, "m")?;
    let seed = SeedSpec::from(cfg.base_seed);
    let a = MeasurementMatrix::gaussian(m, n, seed.with_stream(streams::MATRIX))?;
    let x = random_sparse_unit(n, k, seed.with_stream(streams::SIGNAL))?;
    let b = sign_measure(&a, x.values())?;

    match matrix_format {
        MatrixFormat::Csv => {
            let mut w = create(&cfg.output_dir, "matrix.csv")?;
            formats::write_matrix_csv(&mut w, &a)?;
            w.flush()?;
        }
        MatrixFormat::Bin => {
            let mut w = create(&cfg.output_dir, "matrix.bin")?;
            formats::write_matrix_binary(&mut w, &a)?;
            w.flush()?;
        }
    }
    let mut w = create(&cfg.output_dir, "signal.csv")?;
    formats::write_vector_csv(&mut w, x.values())?;
    w.flush()?;
    let signs: Vec<f64> = b.bits().iter().map(|&s| s as f64).collect();
    let mut w = create(&cfg.output_dir, "signs.csv")?;
    formats::write_vector_csv(&mut w, &signs)?;
    w.flush()?;
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BITSENSE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "BITSENSE_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run(common) => cmd_run(common.resolve()?),
        Command::Raic {
            common,
            pairs,
            small_pairs,
            max_j,
        } => cmd_raic(common.resolve()?, pairs, small_pairs, max_j),
        Command::Validate {
            common,
            break_sgn_zero,
            quick,
        } => cmd_validate(common.resolve()?, break_sgn_zero, quick),
        Command::Theory { common, t_max } => cmd_theory(common.resolve()?, t_max),
        Command::Generate {
            common,
            matrix_format,
        } => cmd_generate(common.resolve()?, matrix_format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bitsense: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
