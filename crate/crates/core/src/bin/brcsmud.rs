use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use brcsmud::harness::{
    self, parse_list, DetectorId, ExperimentConfig, HarnessError, Overrides, RocFilter,
};

/// Bayes-risk compressed-sensing multi-user detection experiments.
#[derive(Debug, Parser)]
#[command(name = "brcsmud", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write the sweep CSV.
    Run {
        /// key=value configuration file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated SNR list in dB (`inf` disables noise).
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
        /// Comma-separated Bayes factors.
        #[arg(long)]
        omega: Option<String>,
        /// Comma-separated spreading gains.
        #[arg(long)]
        gain: Option<String>,
        /// Comma-separated subset of {brcsmud, bpdn}.
        #[arg(long)]
        detectors: Option<String>,
    },
    /// Regroup a sweep CSV into per-Ω ROC traces.
    Roc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "brcsmud")]
        detector: String,
        /// Spreading gain to keep when the sweep holds several.
        #[arg(long)]
        gain: Option<usize>,
    },
    /// Check the sphere detector against exhaustive search.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            snr,
            omega,
            gain,
            detectors,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            let overrides = Overrides {
                output_path: out,
                base_seed: seed,
                trials_per_point: trials,
                snr_db_list: snr.map(|s| parse_list("--snr", &s)).transpose()?,
                omega_list: omega.map(|s| parse_list("--omega", &s)).transpose()?,
                spreading_gain_list: gain.map(|s| parse_list("--gain", &s)).transpose()?,
                detectors: detectors
                    .map(|s| {
                        parse_list::<String>("--detectors", &s)?
                            .iter()
                            .map(|d| d.parse())
                            .collect::<Result<Vec<DetectorId>, _>>()
                    })
                    .transpose()?,
            };
            cfg.apply(&overrides)?;
            let rows = harness::run_sweep(&cfg)?;
            eprintln!("wrote {rows} rows to {}", cfg.output_path.display());
        }
        Command::Roc {
            input,
            out,
            detector,
            gain,
        } => {
            let filter = RocFilter {
                detector: detector.parse()?,
                spreading_gain: gain,
            };
            let table = harness::emit_roc(&input, &out, &filter)?;
            if table.dropped > 0 {
                eprintln!("warning: dropped {} rows with undefined rates", table.dropped);
            }
            eprintln!("wrote {} ROC points to {}", table.rows, out.display());
        }
        Command::Selftest { instances, seed } => {
            let report = harness::selftest(instances, seed)?;
            println!(
                "selftest: {} instances, {} objective mismatches, {} argmin mismatches, max gap {:e}",
                report.instances,
                report.objective_mismatches,
                report.argmin_mismatches,
                report.max_objective_gap
            );
            if !report.passed() {
                return Err(HarnessError::Internal("sphere detector disagrees with exhaustive search".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("brcsmud: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
