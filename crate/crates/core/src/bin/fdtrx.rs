use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fdtrx::harness::{self, Algorithm, Scenario, Sweep, SweepValue};
use fdtrx::params::{lin_to_db, sample_realization};

#[derive(Parser)]
#[command(
    name = "fdtrx",
    version,
    about = "Full-duplex multi-user transceiver design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single channel realization and write the design as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "ao")]
        algorithm: String,
        #[arg(long)]
        out: PathBuf,
        /// Sweep point to use (defaults to the first one in the config).
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Run the Monte-Carlo sweep and write the CSV summary.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated sweep override, e.g. `0,2,4` or `2x2,4x4`.
        #[arg(long)]
        sweep: Option<String>,
    },
}

#[derive(Serialize)]
struct SolveReport {
    algorithm: String,
    sweep: String,
    seed: u64,
    feasible: bool,
    message: Option<String>,
    total_power_mw: Option<f64>,
    total_power_dbm: Option<f64>,
    dl_powers_mw: Vec<f64>,
    ul_powers_mw: Vec<f64>,
    w: Vec<Vec<[f64; 2]>>,
    v: Vec<Vec<[f64; 2]>>,
    dl_sinr: Vec<f64>,
    ul_sinr: Vec<f64>,
    adc_power_mw: Vec<f64>,
    iterations: usize,
}

fn solve(
    config: PathBuf,
    seed: u64,
    algorithm: &str,
    out: PathBuf,
    sweep: Option<String>,
) -> Result<bool, Box<dyn std::error::Error>> {
    let scenario = Scenario::load(&config)?;
    let algorithm: Algorithm = algorithm.parse()?;
    let value: SweepValue = match sweep {
        Some(s) => s.parse()?,
        None => scenario.sweep.values()[0],
    };
    let params = scenario.params_for(value)?;
    params.validate()?;
    let corr = harness::error_correlation(&scenario.correlation, &params)?;
    let ch = sample_realization(&params, seed);
    let mut report = SolveReport {
        algorithm: algorithm.to_string(),
        sweep: value.to_string(),
        seed,
        feasible: false,
        message: None,
        total_power_mw: None,
        total_power_dbm: None,
        dl_powers_mw: vec![],
        ul_powers_mw: vec![],
        w: vec![],
        v: vec![],
        dl_sinr: vec![],
        ul_sinr: vec![],
        adc_power_mw: vec![],
        iterations: 0,
    };
    match harness::run_algorithm(algorithm, &ch, &corr, &params) {
        Ok(o) => {
            let total = o.total_power();
            report.feasible = true;
            report.total_power_mw = Some(total);
            report.total_power_dbm = Some(lin_to_db(total));
            report.dl_powers_mw = o.solution.w.iter().map(|w| w.norm_squared()).collect();
            report.ul_powers_mw = o.solution.p_u.clone();
            report.w = o.solution.w.iter().map(harness::complex_pairs).collect();
            report.v = o.solution.v.iter().map(harness::complex_pairs).collect();
            report.dl_sinr = o.dl_sinr;
            report.ul_sinr = o.ul_sinr;
            report.adc_power_mw = o.adc_power;
            report.iterations = o.iterations;
        }
        Err(e) if e.is_infeasible() => report.message = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&out, text + "\n").map_err(|e| format!("{}: {e}", out.display()))?;
    Ok(report.feasible)
}

fn montecarlo(
    config: PathBuf,
    out: PathBuf,
    trials: Option<usize>,
    sweep: Option<String>,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut scenario = Scenario::load(&config)?;
    if let Some(t) = trials {
        scenario.trials = t;
    }
    if let Some(s) = sweep {
        scenario.sweep = Sweep::parse_list(&s)?;
    }
    let rows = harness::run_montecarlo(&scenario)?;
    harness::emit_csv(&rows, &out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            config,
            seed,
            algorithm,
            out,
            sweep,
        } => solve(config, seed, &algorithm, out, sweep).map(|feasible| {
            if feasible {
                ExitCode::SUCCESS
            } else {
                eprintln!("infeasible");
                ExitCode::from(2)
            }
        }),
        Command::Montecarlo {
            config,
            out,
            trials,
            sweep,
        } => montecarlo(config, out, trials, sweep).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
