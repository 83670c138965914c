//! Seeded Monte-Carlo experiments over SINR targets or user counts.
//!
//! Every `(sweep value, trial)` cell derives its own channel seed from the
//! master seed, so results do not depend on how cells are scheduled across
//! threads. Mean powers are averaged in linear scale over the trials where
//! every requested algorithm was feasible, then converted to dBm.

pub mod csv;
pub mod scenario;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::ao;
use crate::bisection::{self, P1Mode};
use crate::error::{ParamError, SolveError};
use crate::hd::{self, DlContext, UlGain};
use crate::linalg::{self, CMat, CVec};
use crate::metrics::{self, TransceiverSolution};
use crate::params::{
    build_si_correlation, lin_to_db, lmmse_error_correlation, sample_realization,
    ChannelRealization, SiCorrelation, SystemParams,
};

pub use csv::{emit_csv, format_csv, format_sig, parse_csv, CsvRow};
pub use scenario::{Algorithm, CorrelationMode, Scenario, Sweep, SweepValue, SystemConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FDTRX_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Target a half-duplex user needs to match the full-duplex rate in half the time.
pub fn hd_target(gamma: f64) -> f64 {
    (1.0 + gamma).powi(2) - 1.0
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel seed of one Monte-Carlo cell.
pub fn trial_seed(master_seed: u64, value: SweepValue, trial_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ value.seed_key()) ^ trial_index as u64)
}

/// SI estimation-error statistics for the scenario's correlation mode.
pub fn error_correlation(
    mode: &CorrelationMode,
    params: &SystemParams,
) -> Result<SiCorrelation, ParamError> {
    let r_h0 = match mode {
        CorrelationMode::Structured => build_si_correlation(params),
        CorrelationMode::Iid { sigma_h0_sq_db } => {
            let n2 = params.n_t * params.n_t;
            CMat::identity(n2, n2) * linalg::c(crate::params::db_to_lin(*sigma_h0_sq_db), 0.0)
        }
    };
    lmmse_error_correlation(&r_h0, params)
}

/// A solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub solution: TransceiverSolution,
    pub iterations: usize,
    pub adc_power: Vec<f64>,
    pub dl_sinr: Vec<f64>,
    pub ul_sinr: Vec<f64>,
}

impl Outcome {
    pub fn total_power(&self) -> f64 {
        self.solution.total_power()
    }

    pub fn max_adc_power(&self) -> f64 {
        self.adc_power
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn fd_outcome(
    solution: TransceiverSolution,
    iterations: usize,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Outcome {
    Outcome {
        adc_power: metrics::adc_power(&solution, ch, corr, params),
        dl_sinr: metrics::dl_sinrs(&solution, ch, params),
        ul_sinr: metrics::ul_sinrs(&solution, ch, corr, params),
        solution,
        iterations,
    }
}

fn hd_outcome(ch: &ChannelRealization, params: &SystemParams) -> Result<Outcome, SolveError> {
    let mut hp = params.clone();
    hp.gamma_d = params.gamma_d.iter().map(|&g| hd_target(g)).collect();
    hp.gamma_u = params.gamma_u.iter().map(|&g| hd_target(g)).collect();
    let dl = hd::solve_hd_dl(
        &ch.h,
        &hp.gamma_d,
        &hp.sigma_d_sq,
        &hp,
        &DlContext::default(),
    )?;
    let ul = hd::solve_hd_ul(&ch.g, &hp.gamma_u, hp.sigma_z_sq, UlGain::Plain, &hp)?;
    let dl_only = TransceiverSolution {
        w: dl.w.clone(),
        v: vec![],
        p_u: vec![0.0; params.l],
    };
    let ul_sinr = (0..params.l)
        .map(|l| {
            let v = &ul.v[l];
            let interference: f64 =
                ch.g.iter()
                    .zip(&ul.p)
                    .enumerate()
                    .filter(|(j, _)| *j != l)
                    .map(|(_, (g, p))| p * linalg::inner_abs2(v, g))
                    .sum();
            ul.p[l] * linalg::inner_abs2(v, &ch.g[l]) / (interference + hp.sigma_z_sq)
        })
        .collect();
    let adc_power = (0..params.n_t)
        .map(|n| {
            ch.g.iter()
                .zip(&ul.p)
                .map(|(g, p)| p * g[n].norm_sqr())
                .sum::<f64>()
                + hp.sigma_z_sq
        })
        .collect();
    Ok(Outcome {
        dl_sinr: metrics::dl_sinrs(&dl_only, ch, &hp),
        ul_sinr,
        adc_power,
        iterations: dl.iterations + ul.iterations,
        solution: TransceiverSolution {
            w: dl.w,
            v: ul.v,
            p_u: ul.p,
        },
    })
}

/// Runs one algorithm on one realization.
///
/// The half-duplex baseline serves each link in its own slot at the
/// rate-equivalent target, without SI or co-channel interference; its ADC
/// power is the uplink slot's and the ADC cap is not applied to it.
pub fn run_algorithm(
    algorithm: Algorithm,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Result<Outcome, SolveError> {
    match algorithm {
        Algorithm::Ao => {
            let s = ao::solve_ao(ch, corr, params)?;
            Ok(fd_outcome(
                s.solution,
                s.trace.iterations(),
                ch,
                corr,
                params,
            ))
        }
        Algorithm::ZfOneshot => {
            let s = ao::solve_zf_oneshot(ch, corr, params)?;
            Ok(fd_outcome(s.solution, 1, ch, corr, params))
        }
        Algorithm::Bisection => {
            let mode = if corr.iid_variance.is_some() {
                P1Mode::IidOnly
            } else {
                P1Mode::WorstCase
            };
            let s = bisection::solve_p1(ch, corr, params, mode)?;
            Ok(fd_outcome(s.solution, s.iterations, ch, corr, params))
        }
        Algorithm::Hd => hd_outcome(ch, params),
    }
}

/// Result of one algorithm on one Monte-Carlo cell.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub algorithm: Algorithm,
    pub feasible: bool,
    /// Total transmit power (mW) when feasible.
    pub total_power: Option<f64>,
    /// Largest per-antenna ADC input power (mW) when feasible.
    pub max_adc_power: Option<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
    /// Solver message for infeasible or failed runs.
    pub diagnostic: Option<String>,
}

/// Equality of everything except `wall_time`.
impl PartialEq for TrialResult {
    fn eq(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm
            && self.feasible == other.feasible
            && self.total_power == other.total_power
            && self.max_adc_power == other.max_adc_power
            && self.iterations == other.iterations
            && self.diagnostic == other.diagnostic
    }
}

fn algorithms_in_order(scenario: &Scenario) -> Vec<Algorithm> {
    let mut algs = scenario.algorithms.clone();
    algs.sort();
    algs.dedup();
    algs
}

fn trial_on(
    algorithms: &[Algorithm],
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Vec<TrialResult> {
    algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let out = run_algorithm(algorithm, ch, corr, params);
            let wall_time = start.elapsed();
            match out {
                Ok(o) => TrialResult {
                    algorithm,
                    feasible: true,
                    total_power: Some(o.total_power()),
                    max_adc_power: Some(o.max_adc_power()),
                    iterations: o.iterations,
                    wall_time,
                    diagnostic: None,
                },
                Err(e) => {
                    if !e.is_infeasible() {
                        log::warn!("{algorithm} failed on seed {}: {e}", ch.seed);
                    }
                    TrialResult {
                        algorithm,
                        feasible: false,
                        total_power: None,
                        max_adc_power: None,
                        iterations: 0,
                        wall_time,
                        diagnostic: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

/// Runs every requested algorithm on the realization of one cell.
pub fn run_trial(
    scenario: &Scenario,
    value: SweepValue,
    trial_index: usize,
) -> Result<Vec<TrialResult>, HarnessError> {
    let params = scenario.params_for(value)?;
    let corr = error_correlation(&scenario.correlation, &params)?;
    let ch = sample_realization(
        &params,
        trial_seed(scenario.master_seed, value, trial_index),
    );
    Ok(trial_on(
        &algorithms_in_order(scenario),
        &ch,
        &corr,
        &params,
    ))
}

/// All trials of one sweep point; `results[t]` follows the sorted algorithm list.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrials {
    pub value: SweepValue,
    pub algorithms: Vec<Algorithm>,
    pub results: Vec<Vec<TrialResult>>,
}

fn thread_count_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
}

/// Runs every cell of the scenario on `threads` workers (all cores when `None`).
pub fn run_trials(
    scenario: &Scenario,
    threads: Option<usize>,
) -> Result<Vec<SweepTrials>, HarnessError> {
    scenario.validate()?;
    let algorithms = algorithms_in_order(scenario);
    let mut values = scenario.sweep.values();
    values.sort_by(|a, b| {
        a.sort_key()
            .partial_cmp(&b.sort_key())
            .expect("finite sweep")
    });
    let setups = values
        .iter()
        .map(|&v| {
            let params = scenario.params_for(v)?;
            let corr = error_correlation(&scenario.correlation, &params)?;
            Ok((v, params, corr))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let cells: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|i| (0..scenario.trials).map(move |t| (i, t)))
        .collect();
    let work = || -> Vec<Vec<TrialResult>> {
        cells
            .par_iter()
            .map(|&(i, t)| {
                let (v, params, corr) = &setups[i];
                let ch = sample_realization(params, trial_seed(scenario.master_seed, *v, t));
                trial_on(&algorithms, &ch, corr, params)
            })
            .collect()
    };
    let mut flat = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    }
    .into_iter();
    Ok(setups
        .iter()
        .map(|(v, _, _)| SweepTrials {
            value: *v,
            algorithms: algorithms.clone(),
            results: flat.by_ref().take(scenario.trials).collect(),
        })
        .collect())
}

/// Per-sweep-point, per-algorithm summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep: SweepValue,
    pub algorithm: Algorithm,
    /// `feasible_trials / trials`.
    pub feasibility_rate: f64,
    /// Mean total power over the mutually feasible trials (`nan` if none).
    pub mean_sum_power_dbm: f64,
    /// Mean of the largest per-antenna ADC power over the same trials.
    pub mean_adc_power_dbm: f64,
    pub trials: usize,
    pub feasible_trials: usize,
    /// Trials where every algorithm was feasible.
    pub mutual_trials: usize,
}

pub fn aggregate(sweeps: &[SweepTrials]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for s in sweeps {
        let mutual: Vec<&Vec<TrialResult>> = s
            .results
            .iter()
            .filter(|trial| trial.iter().all(|r| r.feasible))
            .collect();
        for (a, &algorithm) in s.algorithms.iter().enumerate() {
            let trials = s.results.len();
            let feasible_trials = s.results.iter().filter(|t| t[a].feasible).count();
            let mean_db = |f: &dyn Fn(&TrialResult) -> Option<f64>| {
                if mutual.is_empty() {
                    return f64::NAN;
                }
                let sum: f64 = mutual.iter().map(|t| f(&t[a]).expect("feasible")).sum();
                lin_to_db(sum / mutual.len() as f64)
            };
            rows.push(AggregateRow {
                sweep: s.value,
                algorithm,
                feasibility_rate: feasible_trials as f64 / trials as f64,
                mean_sum_power_dbm: mean_db(&|r| r.total_power),
                mean_adc_power_dbm: mean_db(&|r| r.max_adc_power),
                trials,
                feasible_trials,
                mutual_trials: mutual.len(),
            });
        }
    }
    rows
}

/// Runs the whole experiment; worker count from `FDTRX_THREADS` if set.
pub fn run_montecarlo(scenario: &Scenario) -> Result<Vec<AggregateRow>, HarnessError> {
    run_montecarlo_with_threads(scenario, thread_count_from_env())
}

pub fn run_montecarlo_with_threads(
    scenario: &Scenario,
    threads: Option<usize>,
) -> Result<Vec<AggregateRow>, HarnessError> {
    Ok(aggregate(&run_trials(scenario, threads)?))
}

/// `[re, im]` pairs of a complex vector.
pub fn complex_pairs(x: &CVec) -> Vec<[f64; 2]> {
    x.iter().map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hd_target_values() {
        assert_eq!(hd_target(1.0), 3.0);
        assert_eq!(hd_target(0.0), 0.0);
        let g = 10f64.powf(0.5);
        assert!((hd_target(g) - 16.3246).abs() < 1e-4);
    }

    #[test]
    fn seeds_differ_across_cells() {
        let a = trial_seed(1, SweepValue::GammaDb(1.0), 0);
        assert_ne!(a, trial_seed(1, SweepValue::GammaDb(1.0), 1));
        assert_ne!(a, trial_seed(1, SweepValue::GammaDb(2.0), 0));
        assert_ne!(a, trial_seed(2, SweepValue::GammaDb(1.0), 0));
        assert_eq!(a, trial_seed(1, SweepValue::GammaDb(1.0), 0));
    }
}
