//! `mmsounder` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmsounder::runner::{
    self, emit, Experiment, HornGrid, RunOutput, RunnerError, ScenarioConfig, SingleConfig,
};
use mmsounder::scan::{total_time, ScanMode, TimingModel};

#[derive(Parser)]
#[command(name = "mmsounder", version, about = "28 GHz channel sounder simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunOpts {
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out/<scenario name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and write its artifacts.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Write the scan schedules of a scenario as CSV and print step counts and timing.
    Schedule {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full horn scan of the scenario's scene followed by MPC extraction.
    Extract {
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Summarize the report.json in a previous run's output directory.
    Report { dir: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, RunnerError> {
    let mut cfg = ScenarioConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn out_dir(opt: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    opt.unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn run_and_emit(cfg: &ScenarioConfig, opts: RunOpts) -> Result<(), RunnerError> {
    let output = runner::run(cfg, opts.jobs)?;
    let dir = out_dir(opts.out, cfg);
    let files = emit(&output, &dir, &cfg.outputs)?;
    for line in output.summary() {
        println!("{line}");
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), RunnerError> {
    match cli.command {
        Command::Run { scenario, opts } => {
            let cfg = load(&scenario, opts.seed)?;
            run_and_emit(&cfg, opts)
        }
        Command::Extract { scenario, opts } => {
            let mut cfg = load(&scenario, opts.seed)?;
            let horn = match &cfg.experiment {
                Experiment::HallComparison(h) => h.horn.clone(),
                Experiment::Single(s) => s.horn.clone(),
                _ => HornGrid::default(),
            };
            cfg.experiment = Experiment::Single(SingleConfig {
                horn,
                horn_pattern: None,
            });
            run_and_emit(&cfg, opts)
        }
        Command::Schedule { scenario, out } => {
            let cfg = load(&scenario, None)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir).map_err(|source| RunnerError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            let timing = match &cfg.experiment {
                Experiment::HallComparison(h) => h.timing.clone(),
                _ => TimingModel::default(),
            };
            for (name, sched) in cfg.schedules()? {
                let path = dir.join(format!("{name}_schedule.csv"));
                let file = std::fs::File::create(&path).map_err(|source| RunnerError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                sched.write_csv(file)?;
                let t = total_time(&sched, &timing);
                match sched.mode {
                    ScanMode::HornGimbal => println!(
                        "{name}: {} steps, {:.1} s",
                        sched.len(),
                        sched.steps.iter().map(|s| s.dwell_s).sum::<f64>()
                    ),
                    ScanMode::PhasedArrayHybrid => println!(
                        "{name}: {} steps over {} gimbal pairs, {:.3} s switching, {:.0} s repositioning",
                        sched.len(),
                        sched.gimbal_positions.len(),
                        t.measurement_s,
                        t.repositioning_s
                    ),
                }
            }
            Ok(())
        }
        Command::Report { dir } => {
            let path = dir.join("report.json");
            let text = std::fs::read_to_string(&path).map_err(|source| RunnerError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let output: RunOutput = serde_json::from_str(&text).map_err(|source| RunnerError::Parse {
                path: path.display().to_string(),
                source,
            })?;
            for line in output.summary() {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
