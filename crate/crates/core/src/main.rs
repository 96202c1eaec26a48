use budgetsvm::data::{parse_dataset, serialize_dataset, SparseDataset};
use budgetsvm::diagnostics::EpochRecord;
use budgetsvm::plot::render_training_curves;
use budgetsvm::solver::{train, Algorithm, TrainConfig};
use budgetsvm::synth::two_gaussians;
use budgetsvm::verify::run_suite;
use budgetsvm::KernelSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "budgetsvm", about = "Kernel SVM training on a budget", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and log per-epoch diagnostics to CSV.
    Train(TrainArgs),
    /// Train once per budget value, writing one CSV per budget.
    Sweep(SweepArgs),
    /// Run an oracle-backed verification suite.
    Verify(VerifyArgs),
    /// Generate a synthetic two-blob dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Bsca,
    Bsgd,
    Sca,
    Sgd,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Bsca => Algorithm::Bsca,
            AlgoArg::Bsgd => Algorithm::Bsgd,
            AlgoArg::Sca => Algorithm::Sca,
            AlgoArg::Sgd => Algorithm::Sgd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Training set in sparse text format.
    #[arg(long)]
    data: PathBuf,
    /// Test set used for the accuracy column.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Budget B (ignored by the exact solvers).
    #[arg(long, default_value_t = 500)]
    budget: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Gaussian kernel bandwidth, as a decimal.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Epochs between CSV rows.
    #[arg(long = "log-every", default_value_t = 1)]
    log_every: usize,
    /// Diagnostics CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Fold repeated updates of an untouched point into one entry.
    #[arg(long, value_enum, default_value = "on")]
    coalesce: Switch,
    /// Save the trained model here.
    #[arg(long = "model-out")]
    model_out: Option<PathBuf>,
    /// Render objective and accuracy curves to this SVG file.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Record wall-clock time in the CSV (breaks byte-identical reruns).
    #[arg(long, default_value_t = false)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated budget values, e.g. 200,500,1000.
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<usize>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lemma1,
    Lemma2,
    Theorem1,
    MergeOracle,
    QpOracle,
}

impl SuiteArg {
    fn name(self) -> &'static str {
        match self {
            SuiteArg::Lemma1 => "lemma1",
            SuiteArg::Lemma2 => "lemma2",
            SuiteArg::Theorem1 => "theorem1",
            SuiteArg::MergeOracle => "merge-oracle",
            SuiteArg::QpOracle => "qp-oracle",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Instance size override for the statistical suites.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(&args, None),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> budgetsvm::Result<SparseDataset> {
    let file = File::open(path).map_err(|e| {
        budgetsvm::Error::Format(format!("cannot open {}: {e}", path.display()))
    })?;
    parse_dataset(BufReader::new(file))
}

fn config_from(args: &TrainArgs, budget: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(
        args.algo.into(),
        args.c,
        KernelSpec::gaussian(args.gamma),
        budget,
        args.epochs,
    );
    cfg.seed = args.seed;
    cfg.coalesce = matches!(args.coalesce, Switch::On);
    cfg.log_every = args.log_every;
    cfg.timing = args.timing;
    cfg
}

fn write_csv(path: &Path, records: &[EpochRecord]) -> budgetsvm::Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "{}", EpochRecord::CSV_HEADER)?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs, budget_override: Option<usize>) -> budgetsvm::Result<ExitCode> {
    let train_ds = load(&args.data)?;
    let test_ds = load(&args.test)?;
    let budget = budget_override.unwrap_or(args.budget);
    let cfg = config_from(args, budget);
    let (model, records) = train(&cfg, &train_ds, &test_ds)?;
    let out = match budget_override {
        Some(b) => suffixed(&args.out, b),
        None => args.out.clone(),
    };
    write_csv(&out, &records)?;
    if let Some(path) = &args.model_out {
        std::fs::write(path, model.save())?;
    }
    if let Some(path) = &args.plot {
        let title = format!("{} B={budget}", out.display());
        std::fs::write(path, render_training_curves(&title, &records))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// `run.csv` -> `run_B500.csv`
fn suffixed(out: &Path, budget: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match out.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}_B{budget}.{ext}"),
        None => format!("{stem}_B{budget}"),
    };
    out.with_file_name(name)
}

fn cmd_sweep(args: &SweepArgs) -> budgetsvm::Result<ExitCode> {
    let cap = std::env::var("BUDGETSVM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
    let mut failures = Vec::new();
    for chunk in args.budgets.chunks(cap) {
        let results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&b| scope.spawn(move || (b, cmd_train(&args.train, Some(b)))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("run panicked")).collect()
        });
        for (b, r) in results {
            if let Err(e) = r {
                failures.push(format!("budget {b}: {e}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failures {
            eprintln!("error: {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_verify(args: &VerifyArgs) -> budgetsvm::Result<ExitCode> {
    let report = run_suite(args.suite.name(), args.seed, args.n)
        .expect("value-enum suites are always known");
    println!(
        "{}: {} -- {}",
        report.name,
        if report.passed { "pass" } else { "FAIL" },
        report.details
    );
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_synth(args: &SynthArgs) -> budgetsvm::Result<ExitCode> {
    let ds = two_gaussians(args.n, args.d, args.seed);
    std::fs::write(&args.out, serialize_dataset(&ds))?;
    Ok(ExitCode::SUCCESS)
}
