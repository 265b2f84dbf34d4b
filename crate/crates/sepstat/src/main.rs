use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sepstat::io::{load_panel, load_seasons, write_panel, IoError, PanelFormat};
use sepstat::report;
use sepstat::study::{run_study, thread_count};
use sepstat_core::reduction::{ComponentRule, DEFAULT_MAX_COMPONENTS};
use sepstat_core::{
    ma1_panel, run_test, KernelFamily, KernelSpec, PValueMethod, PanelReduction, StudyConfig,
    TestConfig,
};

#[derive(Parser)]
#[command(name = "sepstat", version, about = "Separability test for panels of functional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a panel for separability of its lag-h covariance.
    Test(TestArgs),
    /// Simulate an MA(1) functional panel and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate rejection rates over simulated replicates.
    Study(StudyArgs),
}

/// Panel-direction component choice.
#[derive(Clone, Copy, Debug)]
enum KChoice {
    Passthrough,
    Cpv,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "passthrough" => Ok(KChoice::Passthrough),
            "cpv" => Ok(KChoice::Cpv),
            _ => s
                .parse()
                .map(KChoice::Fixed)
                .map_err(|_| format!("expected an integer, `passthrough` or `cpv`, got `{s}`")),
        }
    }
}

#[derive(Args)]
struct Reduction {
    /// Lag of the covariance operator.
    #[arg(long, default_value_t = 0)]
    h: usize,
    /// Target cumulative proportion of variance for CPV-selected components.
    #[arg(long)]
    cpv: Option<f64>,
    /// Fixed number of temporal components (default: chosen by CPV).
    #[arg(long = "J", conflicts_with = "cpv")]
    j: Option<usize>,
    /// Panel components: an integer, `passthrough` or `cpv`
    /// (default: passthrough when S < 10, else cpv).
    #[arg(long = "K")]
    k: Option<KChoice>,
    /// Keep all S coordinates; same as `--K passthrough`.
    #[arg(long, conflicts_with = "k")]
    passthrough: bool,
    /// Bartlett bandwidth q (default: 1.1447·(N/4)^(1/3)).
    #[arg(long)]
    bandwidth: Option<usize>,
    /// P-value method: monte-carlo or satterthwaite.
    #[arg(long, default_value = "monte-carlo")]
    pvalue_method: PValueMethod,
    /// Monte Carlo draws for the p-value.
    #[arg(long, default_value_t = 100_000)]
    mc_draws: usize,
}

impl Reduction {
    fn config(&self, s: usize, seed: u64) -> Result<TestConfig, CliError> {
        let k = if self.passthrough { Some(KChoice::Passthrough) } else { self.k };
        if let (Some(_), Some(KChoice::Fixed(_))) = (self.cpv, k) {
            return Err(CliError::Usage("--cpv cannot be combined with a fixed --K".into()));
        }
        let target = self.cpv.unwrap_or(sepstat_core::reduction::DEFAULT_CPV);
        let cpv = ComponentRule::Cpv { target, max: DEFAULT_MAX_COMPONENTS };
        let k = k.unwrap_or(if s < 10 { KChoice::Passthrough } else { KChoice::Cpv });
        Ok(TestConfig {
            h: self.h,
            temporal: self.j.map_or(cpv, ComponentRule::Fixed),
            panel: match k {
                KChoice::Passthrough => PanelReduction::Passthrough,
                KChoice::Cpv => PanelReduction::Reduce(cpv),
                KChoice::Fixed(k) => PanelReduction::Reduce(ComponentRule::Fixed(k)),
            },
            bandwidth: self.bandwidth,
            method: self.pvalue_method,
            mc_draws: self.mc_draws,
            seed,
        })
    }
}

#[derive(Args)]
struct TestArgs {
    /// Panel CSV.
    #[arg(long)]
    input: PathBuf,
    /// Panel layout: long or wide.
    #[arg(long, default_value = "long")]
    format: PanelFormat,
    /// Optional `n,season` CSV; means are then removed per season.
    #[arg(long)]
    seasons: Option<PathBuf>,
    #[command(flatten)]
    reduction: Reduction,
    /// Seed for the Monte Carlo p-value.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Result JSON path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write diagnostics JSON here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    /// Covariance family: cov1, cov2 or covh1.
    #[arg(long)]
    family: KernelFamily,
    #[arg(long, default_value_t = 3.0)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Separability parameter of cov1/cov2 (0 = separable).
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Separability parameter of covh1 (0 = separable).
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Number of panel coordinates.
    #[arg(long = "S")]
    s: usize,
    /// Grid points per curve.
    #[arg(long = "T", default_value_t = 50)]
    t: usize,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec, CliError> {
        let spec = KernelSpec {
            family: self.family,
            a: self.a,
            b: self.b,
            sigma2: self.sigma2,
            c: self.c,
            beta: self.beta,
            s: self.s,
            t: self.t,
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Number of observations.
    #[arg(long = "N")]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Panel CSV path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Panel layout: long or wide.
    #[arg(long, default_value = "long")]
    format: PanelFormat,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Observations per replicate.
    #[arg(long = "N")]
    n: usize,
    #[command(flatten)]
    reduction: Reduction,
    /// Number of replicates.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Nominal level; a replicate rejects when p < alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Master seed; replicate seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker cap (default: SEPSTAT_THREADS, else one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Per-replicate CSV path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Print only a table cell like `6.4 (87.2)`.
    #[arg(long)]
    paper_format: bool,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sepstat_core::Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use sepstat_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_) | E::Kernel(_)) => 2,
            _ => 1,
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| write_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_err(path: &Path, source: io::Error) -> CliError {
    CliError::Write { path: path.display().to_string(), source }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let label = path.unwrap_or(Path::new("<stdout>"));
    let mut w = sink(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| write_err(label, e))
}

fn cmd_test(args: &TestArgs) -> Result<(), CliError> {
    let mut panel = load_panel(&args.input, args.format)?;
    if let Some(path) = &args.seasons {
        panel = panel.deseasonalize(&load_seasons(path)?)?;
    }
    let config = args.reduction.config(panel.s(), args.seed)?;
    let outcome = run_test(&panel, &config)?;
    for w in &outcome.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    emit(args.output.as_deref(), &report::result_json(&outcome.result))?;
    if let Some(path) = &args.diagnostics {
        emit(Some(path), &report::diagnostics_json(&outcome.diagnostics))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let spec = args.kernel.spec()?;
    if args.n == 0 {
        return Err(CliError::Usage("--N must be at least 1".into()));
    }
    #[derive(serde::Serialize)]
    struct Echo<'a> {
        kernel: &'a KernelSpec,
        #[serde(rename = "N")]
        n: usize,
        seed: u64,
    }
    eprint!("{}", report::to_json(&Echo { kernel: &spec, n: args.n, seed: args.seed }));
    let panel = ma1_panel(&spec, args.n, args.seed)?;
    let label = args.output.as_deref().unwrap_or(Path::new("<stdout>"));
    let mut w = sink(args.output.as_deref())?;
    write_panel(&mut w, &panel, args.format)?;
    w.flush().map_err(|e| write_err(label, e))
}

fn cmd_study(args: &StudyArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let cfg = StudyConfig {
        kernel: args.kernel.spec()?,
        n: args.n,
        replications: args.reps,
        alpha: args.alpha,
        master_seed: args.seed,
        test: args.reduction.config(args.kernel.s, 0)?,
    };
    cfg.validate()?;
    let summary = run_study(&cfg, thread_count(args.threads))?;
    if let Some(path) = &args.output {
        let mut w = sink(Some(path))?;
        report::write_study_csv(&mut w, &summary).map_err(IoError::from)?;
    }
    if let Some(path) = &args.summary {
        emit(Some(path), &report::study_summary_json(&cfg, &summary))?;
    }
    if args.paper_format {
        println!("{}", report::table_cell(&summary));
    } else {
        println!(
            "rejection rate {:.1}% (mean CPV {:.1}%) over {} replicates, seed {}",
            100.0 * summary.rejection_rate,
            100.0 * summary.mean_cpv,
            summary.replicates.len(),
            cfg.master_seed
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Study(a) => cmd_study(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
