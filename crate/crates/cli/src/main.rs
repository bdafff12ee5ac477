use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stinecurve::metrics::DiamondOptions;
use stinecurve::smooth::SmoothOptions;
use stinecurve_cli::artifact::{load_choi, load_kraus_curve, load_schedule, save_schedule, write_json, write_report};
use stinecurve_cli::commands::{self, status, Outputs};
use stinecurve_cli::config::RunConfig;
use stinecurve_cli::{CliError, CliResult};

/// Exit codes: 0 success, 1 I/O failure, 2 configuration error,
/// 3 certification failure, 4 numerical non-convergence.
#[derive(Parser)]
#[command(name = "stinecurve", version, about = "Hamiltonian dilations of quantum channel curves")]
struct Cli {
    /// Worker threads for grid sweeps (STINECURVE_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a piecewise-constant schedule for the configured curve.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Measure a schedule's diamond error against the configured curve.
    Verify {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Points per schedule step; defaults to the config's grid_factor.
        #[arg(long)]
        grid_factor: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Replace a piecewise schedule by polynomial Hamiltonians.
    Smooth {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SmoothOptions::default().degree_cap)]
        degree_cap: usize,
        #[arg(long, default_value_t = 1)]
        grid_factor: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Turn a sampled Kraus curve into a unitary curve.
    Convert {
        #[arg(long)]
        kraus_curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Allowed diamond error of the round trip back to Kraus form.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Diamond norm of the difference of two Choi matrices.
    Diamond {
        #[arg(long)]
        choi_a: PathBuf,
        #[arg(long)]
        choi_b: PathBuf,
        #[arg(long, default_value_t = DiamondOptions::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = DiamondOptions::default().seed)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    match std::env::var("STINECURVE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("STINECURVE_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(flag),
    }
}

fn print(report: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(report).expect("serializable"));
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synthesize { config, out, report, csv } => {
            let cfg = RunConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.outputs.schedule.clone())
                .ok_or_else(|| CliError::Config("no schedule output path (--out or outputs.schedule)".into()))?;
            let run = commands::run_synthesize(&cfg)?;
            save_schedule(&run.schedule, &out)?;
            let outputs = Outputs { report: report.or(cfg.outputs.report.clone()), csv: csv.or(cfg.outputs.csv.clone()) };
            outputs.write(&run.report, &run.series)?;
            print(&run.report);
            status(run.report.pass, run.report.all_converged, "synthesize")
        }
        Command::Verify { schedule, config, grid_factor, report, csv } => {
            let cfg = RunConfig::load(&config)?;
            let s = load_schedule(&schedule)?;
            let run = commands::run_verify(&s, &cfg, grid_factor.unwrap_or(cfg.grid_factor))?;
            let outputs = Outputs { report: report.or(cfg.outputs.report.clone()), csv: csv.or(cfg.outputs.csv.clone()) };
            outputs.write(&run.report, &run.series)?;
            print(&run.report);
            status(run.report.pass, run.report.all_converged, "verify")
        }
        Command::Smooth { schedule, epsilon, out, degree_cap, grid_factor, report, csv } => {
            let s = load_schedule(&schedule)?;
            let opts = SmoothOptions { degree_cap, ..SmoothOptions::default() };
            let run = commands::run_smooth(&s, epsilon, &opts, grid_factor)?;
            save_schedule(&run.schedule, &out)?;
            Outputs { report, csv }.write(&run.report, &run.series)?;
            print(&run.report);
            status(run.report.pass, true, "smooth")
        }
        Command::Convert { kraus_curve, out, tolerance, report, csv } => {
            let doc = load_kraus_curve(&kraus_curve)?;
            let run = commands::run_convert(&doc, tolerance)?;
            write_json(&out, &run.curve)?;
            Outputs { report, csv }.write(&run.report, &run.series)?;
            print(&run.report);
            status(run.report.pass, true, "convert")
        }
        Command::Diamond { choi_a, choi_b, restarts, seed, report } => {
            let (a, b) = (load_choi(&choi_a)?, load_choi(&choi_b)?);
            let opts = DiamondOptions::default().with_restarts(restarts).with_seed(seed);
            let r = commands::run_diamond(&a, &b, &opts)?;
            if let Some(p) = report {
                write_report(&p, &r)?;
            }
            print(&r);
            status(true, r.converged, "diamond")
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stinecurve: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
