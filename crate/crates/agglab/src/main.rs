use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use agglab::harness::{self, ExperimentConfig, OutputFormat, VerifySuite};

#[derive(Parser)]
#[command(
    name = "agglab",
    version,
    about = "Forecast aggregation under partial information: exact query rules, \
             minimax budget frontiers, and incentive checks",
    after_help = "Runs are reproducible: the same seed, config, and AGGLAB_THREADS \
                  produce byte-identical output."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Constructions,
    Minimax,
    Incentives,
    All,
}

impl From<SuiteArg> for VerifySuite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Constructions => VerifySuite::Constructions,
            SuiteArg::Minimax => VerifySuite::Minimax,
            SuiteArg::Incentives => VerifySuite::Incentives,
            SuiteArg::All => VerifySuite::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Shared-signal walkthrough: one extra cross-prediction makes the
    /// aggregate exact, where every fixed linear rule has positive error.
    CommonSignal {
        /// Number of agents (2..=16).
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Squared-error frontier over (n, d): closed-form sandwich bounds,
    /// exact grid optima where tractable, Monte Carlo spot checks.
    Curves {
        /// Grid size; repeat for several (defaults: 100, 400, 1600, 6400).
        #[arg(long)]
        n: Vec<usize>,
        /// Explicit budget list; repeat for several.
        #[arg(long, conflicts_with = "d_max")]
        d: Vec<usize>,
        /// Sweep budgets 1..=d-max (default per n: 1..=ceil(2 sqrt n)).
        #[arg(long)]
        d_max: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Worst-case error of the randomized d-query difference rule against
    /// the analytic line 1 - d/n, with a mixture Monte Carlo estimate.
    QueryBudget {
        /// Number of agents (2..=16).
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Budget list; repeat for several (default: 1..n).
        #[arg(long)]
        d: Vec<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Exact minimax polynomial on the integer grid with its alternation
    /// certificate and sandwich bounds.
    Minimax {
        /// Grid size (2..=2000).
        #[arg(long)]
        n: usize,
        /// Polynomial budget (1..=30, d < n).
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Invariant suites; exit code 0 only if every check passes.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
}

fn init_threads() {
    if let Ok(text) = std::env::var("AGGLAB_THREADS") {
        match text.trim().parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("agglab: ignoring AGGLAB_THREADS={text:?} (want a positive integer)"),
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn run(cli: Cli) -> agglab::Result<ExitCode> {
    match cli.command {
        Command::CommonSignal { n, samples, seed, out, format } => {
            let report = harness::run_common_signal(n, samples, seed)?;
            emit(&harness::render_common_signal(&report, format.into()), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Curves { n, d, d_max, samples, seed, out, format } => {
            let d_values = if !d.is_empty() {
                Some(d)
            } else {
                d_max.map(|cap| (1..=cap.max(1)).collect())
            };
            let config = ExperimentConfig {
                name: "curves".into(),
                n_values: if n.is_empty() { harness::DEFAULT_CURVE_N.to_vec() } else { n },
                d_values,
                samples,
                seed,
                out: out.clone(),
                format: format.into(),
            };
            let points = harness::run_curves(&config)?;
            emit(&harness::render_curves(&points, format.into()), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::QueryBudget { n, d, samples, seed, out, format } => {
            let d_values: Vec<usize> = if d.is_empty() { (1..n.max(2)).collect() } else { d };
            let rows = harness::run_query_budget(n, &d_values, samples, seed)?;
            emit(&harness::render_budget(&rows, format.into()), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Minimax { n, d, out, format } => {
            let row = harness::run_minimax(n, d)?;
            emit(&harness::render_minimax(&row, format.into()), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, samples, seed, out, format } => {
            let report = harness::run_verify(suite.into(), samples, seed);
            emit(&harness::render_verify(&report, format.into()), out.as_ref())?;
            if report.all_pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "agglab: verify {}: {} of {} checks failed",
                    report.suite,
                    report.failed,
                    report.checks.len()
                );
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("agglab: {e}");
            ExitCode::FAILURE
        }
    }
}
