//! `ktrr` experiment runner.

mod selfcheck;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ktrr::experiment::{corrupt_curve_as, emit_report, run_experiment_as, ExperimentConfig, Mode, Outcome, CONFIG_KEYS};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn keys_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (TOML; override any with --set key=value):\n");
    for (k, d) in CONFIG_KEYS {
        let _ = writeln!(out, "  {k:width$}  {d}");
    }
    out.push_str(
        "\nExit codes: 0 success, 1 pipeline error, 2 bad config or usage, \
         3 report written but some grid points failed.",
    );
    out
}

#[derive(Parser)]
#[command(name = "ktrr", version, about = "Kernel truncated regression representation subspace clustering")]
#[command(after_long_help = keys_help())]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "KTRR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated trials at the configured parameters. Any sweep section is ignored.
    #[command(after_long_help = keys_help())]
    Run(ExperimentArgs),
    /// Cartesian grid over the sweep.* keys.
    #[command(after_long_help = keys_help())]
    Sweep(ExperimentArgs),
    /// Accuracy against corruption strength (defaults to SNR 10..50 dB).
    #[command(after_long_help = keys_help())]
    CorruptCurve(ExperimentArgs),
    /// Check library invariants on synthetic data.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    config: PathBuf,
    /// Override a config key, e.g. `--set kernel.sigma=auto`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Report directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write coefficients.csv, affinity.csv and embedding.csv.
    #[arg(long)]
    dump_matrices: bool,
    #[arg(long, value_enum, default_value_t)]
    precision: Precision,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match cli.command {
        Command::Run(a) => experiment(a, Mode::Run),
        Command::Sweep(a) => experiment(a, Mode::Sweep),
        Command::CorruptCurve(a) => experiment(a, Mode::CorruptCurve),
        Command::Selfcheck { seed } => {
            if selfcheck::run(seed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}

fn experiment(args: ExperimentArgs, mode: Mode) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&args.config, &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    cfg.output.dump_matrices |= args.dump_matrices;
    match mode {
        Mode::Run if !cfg.sweep.is_empty() => {
            eprintln!("warning: run ignores the sweep section; use `ktrr sweep`");
            cfg.sweep = Default::default();
        }
        Mode::Sweep if cfg.sweep.is_empty() => {
            eprintln!("error: sweep needs at least one sweep.* grid");
            return ExitCode::from(EXIT_CONFIG);
        }
        _ => {}
    }
    let result = match (mode, args.precision) {
        (Mode::CorruptCurve, Precision::F64) => corrupt_curve_as::<f64>(&cfg),
        (Mode::CorruptCurve, Precision::F32) => corrupt_curve_as::<f32>(&cfg),
        (_, Precision::F64) => run_experiment_as::<f64>(&cfg, mode),
        (_, Precision::F32) => run_experiment_as::<f32>(&cfg, mode),
    };
    let Outcome { report, artifacts } = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    match emit_report(&report, artifacts.as_ref(), &cfg.output.dir) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing report: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    print_summary(&report);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.complete {
        ExitCode::SUCCESS
    } else {
        for p in report.points.iter().filter(|p| p.error.is_some()) {
            eprintln!("error: grid point {}: {}", p.index, p.error.as_deref().unwrap_or_default());
        }
        ExitCode::from(EXIT_PARTIAL)
    }
}

fn print_summary(report: &ktrr::experiment::RunReport) {
    println!(
        "{:>5} {:>12} {:>5} {:>12} {:>8} {:>8} {:>17} {:>17}",
        "point", "kernel", "eta", "lambda", "snr_db", "ratio", "AC", "NMI"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
    for p in &report.points {
        let (ac, nmi) = match (p.mean, p.std) {
            (Some(m), Some(s)) => (
                format!("{:.4} ± {:.4}", m.ac, s.ac),
                format!("{:.4} ± {:.4}", m.nmi, s.nmi),
            ),
            _ => ("failed".into(), "failed".into()),
        };
        println!(
            "{:>5} {:>12} {:>5} {:>12} {:>8} {:>8} {:>17} {:>17}",
            p.index,
            p.kernel.name(),
            p.eta,
            p.lambda,
            opt(p.snr_db),
            opt(p.ratio),
            ac,
            nmi
        );
    }
}
