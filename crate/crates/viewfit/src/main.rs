use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use viewfit::harness::{self, HarnessError, Mode, SolveOptions};
use viewfit::run_config::RunConfig;

#[derive(Parser)]
#[command(name = "viewfit", version, about = "3D localization from 2D boxes with viewpoint-reduced constraint search")]
struct Cli {
    /// Flat key=value run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `face_band` from the configuration.
    #[arg(long, global = true)]
    face_band: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Viewpoint,
}

#[derive(Subcommand)]
enum Command {
    /// Fill in object locations from boxes, dimensions, and yaw.
    Solve {
        #[arg(long)]
        calib_dir: PathBuf,
        #[arg(long)]
        label_dir: PathBuf,
        /// Per-frame viewpoint classes; without it the labelled pose is classified.
        #[arg(long)]
        viewpoint_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ModeArg,
        /// Viewpoint table file; defaults to the bundled table.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Diagnostics file; defaults to stderr.
        #[arg(long)]
        diag: Option<PathBuf>,
    },
    /// Score detections against ground truth.
    Eval {
        #[arg(long)]
        label_dir: PathBuf,
        #[arg(long)]
        det_dir: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic frames with labels, calibration, and viewpoints.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of frames.
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Sample the forward model and write a viewpoint table.
    DeriveTable {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Number of samples.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Output file; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare exhaustive and reduced search cost.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of objects.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), HarnessError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| HarnessError::Io { path: p.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    let mut config: RunConfig = harness::load_config(cli.config.as_deref())?;
    if let Some(band) = cli.face_band {
        config.face_band = band;
        config.validate()?;
    }
    match cli.command {
        Command::Solve { calib_dir, label_dir, viewpoint_dir, out, mode, table, diag } => {
            let mode = match mode {
                ModeArg::Exhaustive => Mode::Exhaustive,
                ModeArg::Viewpoint => Mode::Viewpoint,
            };
            let opts = SolveOptions {
                calib_dir: &calib_dir,
                label_dir: &label_dir,
                viewpoint_dir: viewpoint_dir.as_deref(),
                out_dir: &out,
                mode,
                table: table.as_deref(),
                diag: diag.as_deref(),
                config,
            };
            let summary = harness::cmd_solve(&opts)?;
            if diag.is_none() {
                eprint!("{}", summary.diagnostics);
            }
            if summary.failed > 0 {
                eprintln!("{} of {} objects unsolved", summary.failed, summary.objects);
                return Ok(3);
            }
        }
        Command::Eval { label_dir, det_dir, out } => {
            let (_, text) = harness::cmd_eval(&label_dir, &det_dir, &config)?;
            print!("{text}");
            if let Some(p) = out {
                emit(&text, Some(&p))?;
            }
        }
        Command::Synth { out, seed, n } => {
            print!("{}", harness::cmd_synth(&out, seed, n, &config)?.render());
        }
        Command::DeriveTable { seed, n, out } => {
            emit(&harness::cmd_derive_table(seed, n, &config)?, out.as_ref())?;
        }
        Command::Bench { seed, n, table, repetitions, out } => {
            let table = harness::load_table(table.as_deref())?;
            emit(&harness::cmd_bench(seed, n, &table, repetitions, &config)?.render(), out.as_ref())?;
        }
    }
    Ok(0)
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
