use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcoke::cli::{self, ConfigOverrides};
use mcoke::{EngineConfig, Error};

#[derive(Parser)]
#[command(name = "mcoke", version, about = "Associate customers with garments over annotation streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Engine config file (key = value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seconds per frame
    #[arg(long, global = true)]
    frame_duration: Option<f64>,
    /// Re-clustering displacement threshold in pixels
    #[arg(long, global = true)]
    mindist: Option<f64>,
    #[arg(long, global = true)]
    garment_weight: Option<f64>,
    #[arg(long, global = true)]
    customer_weight: Option<f64>,
    /// Record wall-clock timestamps in manifest.json
    #[arg(long, global = true)]
    timestamps: bool,
}

impl Shared {
    fn engine_config(&self) -> Result<EngineConfig, Error> {
        cli::load_config(
            self.config.as_deref(),
            &ConfigOverrides {
                frame_duration: self.frame_duration,
                mindist: self.mindist,
                garment_weight: self.garment_weight,
                customer_weight: self.customer_weight,
            },
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track a JSONL annotation stream and write the interval log
    Track {
        input: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Build reports from an interval log and its stream
    Analyze {
        /// Interval log CSV written by `track`
        #[arg(long)]
        intervals: PathBuf,
        /// The annotation stream the log was computed from
        #[arg(long)]
        stream: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Generate a synthetic scenario from a JSON scenario file
    Synth {
        scenario: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Check a stream against the annotation schema
    Validate {
        input: PathBuf,
    },
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Track { input, shared } => {
            let cfg = shared.engine_config()?;
            let s = cli::cmd_track(&input, &cfg, &shared.out, shared.timestamps)?;
            println!(
                "{} frames, {} clusterings, {} intervals -> {}",
                s.frames,
                s.clusterings,
                s.intervals,
                s.output.display()
            );
        }
        Command::Analyze {
            intervals,
            stream,
            shared,
        } => {
            let cfg = shared.engine_config()?;
            let files = cli::cmd_analyze(&intervals, &stream, &cfg, &shared.out, shared.timestamps)?;
            println!("{} report files -> {}", files.len(), shared.out.display());
        }
        Command::Synth { scenario, shared } => {
            let n = cli::cmd_synth(&scenario, &shared.out, shared.timestamps)?;
            println!("{n} frames -> {}", shared.out.display());
        }
        Command::Validate { input } => {
            let report = cli::cmd_validate(&input)?;
            println!("{}", cli::format_validation(&report, 20));
            if !report.is_ok() {
                return Err(Error::Validation(format!(
                    "{} violation(s)",
                    report.violations.len()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(parsed.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
