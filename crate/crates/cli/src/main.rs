use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use clutterdp::harness::{
    parse_csv, parse_methods, read_report, run_monte_carlo, sidecar_path, simulate_run, simulate_truth,
    write_report, MseReport, RunConfig,
};

#[derive(Parser)]
#[command(name = "clutterdp", version, about = "Clutter-robust single-target tracking benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo benchmark and write the MSE report.
    Run {
        /// Config file (TOML, flat keys). Built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of metric_bayes,naive_bayes,nn,pda.
        #[arg(long)]
        methods: Option<String>,
        /// CSV path; the JSON sidecar goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store wall time in the JSON sidecar (makes it differ between runs).
        #[arg(long)]
        record_wall_time: bool,
    },
    /// Dump one ground-truth trajectory and its scans in the replay format.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Which run's scans to draw.
        #[arg(long, default_value_t = 0)]
        run: u64,
    },
    /// Print a summary table of a report CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::reference_scenario()),
    }
}

fn print_summary(report: &MseReport) {
    println!("{:<14} {:>14} {:>14}", "method", "mean_mse", "final_mse");
    for (m, series) in report.methods.iter().zip(&report.mse) {
        let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
        let last = series.last().copied().unwrap_or(f64::NAN);
        println!("{:<14} {:>14.6e} {:>14.6e}", m.name(), mean, last);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            runs,
            seed,
            methods,
            out,
            record_wall_time,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(n) = runs {
                cfg.n_runs = n;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(m) = methods {
                cfg.methods = parse_methods(&m)?;
            }
            let out = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("mse_report.csv"));
            cfg.validate()?;
            let start = Instant::now();
            let mut report = run_monte_carlo(&cfg)?;
            let secs = start.elapsed().as_secs_f64();
            if record_wall_time {
                report.metadata.wall_time_secs = Some(secs);
            }
            write_report(&report, &out)?;
            print_summary(&report);
            if report.metadata.failed_runs > 0 {
                eprintln!("{} of {} runs failed and were excluded", report.metadata.failed_runs, cfg.n_runs);
            }
            eprintln!(
                "wrote {} and {} in {secs:.2} s",
                out.display(),
                sidecar_path(&out).display()
            );
        }
        Command::Simulate { config, out, seed, run } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let (states, alive) = simulate_truth(&cfg.scenario, cfg.master_seed)?;
            let gt = simulate_run(&cfg.scenario, cfg.master_seed, &states, &alive, run)?;
            gt.save(&out)?;
            eprintln!("wrote {} steps to {}", gt.horizon(), out.display());
        }
        Command::Report { input } => {
            // the sidecar is optional here
            match read_report(&input) {
                Ok(report) => {
                    print_summary(&report);
                    let md = &report.metadata;
                    println!(
                        "seed {}  runs {} ({} failed)  scr {:.4}  config {}",
                        md.master_seed, md.n_runs, md.failed_runs, md.scr, md.config_hash
                    );
                }
                Err(_) if !sidecar_path(&input).exists() => {
                    let text = std::fs::read_to_string(&input)
                        .with_context(|| format!("reading {}", input.display()))?;
                    let (methods, mse) = parse_csv(&text).with_context(|| format!("parsing {}", input.display()))?;
                    println!("{:<14} {:>14} {:>14}", "method", "mean_mse", "final_mse");
                    for (m, s) in methods.iter().zip(&mse) {
                        let mean = s.iter().sum::<f64>() / s.len().max(1) as f64;
                        println!("{:<14} {:>14.6e} {:>14.6e}", m.name(), mean, s.last().copied().unwrap_or(f64::NAN));
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
