use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::params::{db_to_lin, SystemParams};

/// System constants as configured: powers in dBm, gains in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub k: usize,
    pub l: usize,
    pub dl_noise_dbm: f64,
    pub bs_noise_dbm: f64,
    pub beta1_db: f64,
    pub beta2_db: f64,
    pub delta1_db: f64,
    pub delta2_db: f64,
    pub pathloss_bs_mu_db: f64,
    pub pathloss_umu_dmu_db: f64,
    pub pathloss_si_db: f64,
    pub crosstalk_base_db: f64,
    pub crosstalk_step_db: f64,
    pub antenna_corr: f64,
    pub train_energy: f64,
    pub p_max_dbm: f64,
    pub tol_bisect: f64,
    pub tol_fp: f64,
    pub tol_ao: f64,
    pub tol_subgrad: f64,
    pub subgrad_step: f64,
    pub max_iter_fp: usize,
    pub max_iter_ao: usize,
    pub max_iter_subgrad: usize,
    pub divergence_cap: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let d = SystemParams::with_defaults(10, 8, 8, 1.0);
        SystemConfig {
            n_t: d.n_t,
            k: d.k,
            l: d.l,
            dl_noise_dbm: -85.0,
            bs_noise_dbm: -85.0,
            beta1_db: -30.0,
            beta2_db: -30.0,
            delta1_db: -50.0,
            delta2_db: -20.0,
            pathloss_bs_mu_db: d.pathloss_bs_mu_db,
            pathloss_umu_dmu_db: d.pathloss_umu_dmu_db,
            pathloss_si_db: d.pathloss_si_db,
            crosstalk_base_db: d.crosstalk_base_db,
            crosstalk_step_db: d.crosstalk_step_db,
            antenna_corr: d.antenna_corr,
            train_energy: d.train_energy,
            p_max_dbm: 40.0,
            tol_bisect: d.tol_bisect,
            tol_fp: d.tol_fp,
            tol_ao: d.tol_ao,
            tol_subgrad: d.tol_subgrad,
            subgrad_step: d.subgrad_step,
            max_iter_fp: d.max_iter_fp,
            max_iter_ao: d.max_iter_ao,
            max_iter_subgrad: d.max_iter_subgrad,
            divergence_cap: d.divergence_cap,
        }
    }
}

/// Swept quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Common SINR target of every user, in dB.
    GammaDb(Vec<f64>),
    /// `(K, L)` pairs.
    Users(Vec<(usize, usize)>),
}

impl Sweep {
    pub fn values(&self) -> Vec<SweepValue> {
        match self {
            Sweep::GammaDb(g) => g.iter().map(|&x| SweepValue::GammaDb(x)).collect(),
            Sweep::Users(u) => u.iter().map(|&(k, l)| SweepValue::Users(k, l)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Sweep::GammaDb(g) => g.is_empty(),
            Sweep::Users(u) => u.is_empty(),
        }
    }

    /// Comma-separated list: `1,2.5,3` for targets or `2x2,4x3` for user counts.
    pub fn parse_list(s: &str) -> Result<Self, HarnessError> {
        let values = s
            .split(',')
            .map(|t| t.trim().parse::<SweepValue>())
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().all(|v| matches!(v, SweepValue::GammaDb(_))) {
            Ok(Sweep::GammaDb(
                values
                    .iter()
                    .map(|v| match v {
                        SweepValue::GammaDb(g) => *g,
                        SweepValue::Users(..) => unreachable!(),
                    })
                    .collect(),
            ))
        } else if values.iter().all(|v| matches!(v, SweepValue::Users(..))) {
            Ok(Sweep::Users(
                values
                    .iter()
                    .map(|v| match v {
                        SweepValue::Users(k, l) => (*k, *l),
                        SweepValue::GammaDb(_) => unreachable!(),
                    })
                    .collect(),
            ))
        } else {
            Err(HarnessError::Invalid(format!("mixed sweep list `{s}`")))
        }
    }
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    GammaDb(f64),
    Users(usize, usize),
}

impl SweepValue {
    pub(crate) fn seed_key(&self) -> u64 {
        match *self {
            SweepValue::GammaDb(g) => g.to_bits(),
            SweepValue::Users(k, l) => (1 << 63) ^ ((k as u64) << 32) ^ l as u64,
        }
    }

    pub(crate) fn sort_key(&self) -> (f64, usize, usize) {
        match *self {
            SweepValue::GammaDb(g) => (g, 0, 0),
            SweepValue::Users(k, l) => (0.0, k, l),
        }
    }
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::GammaDb(g) => f.write_str(&super::csv::format_sig(*g)),
            SweepValue::Users(k, l) => write!(f, "{k}x{l}"),
        }
    }
}

impl FromStr for SweepValue {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Invalid(format!("bad sweep value `{s}`"));
        if let Some((k, l)) = s.split_once('x') {
            Ok(SweepValue::Users(
                k.parse().map_err(|_| bad())?,
                l.parse().map_err(|_| bad())?,
            ))
        } else {
            s.parse().map(SweepValue::GammaDb).map_err(|_| bad())
        }
    }
}

/// Statistics of the SI channel used to derive the estimation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Path-loss, cross-talk and antenna-correlation model.
    Structured,
    /// I.i.d. SI channel entries with the given variance.
    Iid { sigma_h0_sq_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Alternating optimization to convergence.
    Ao,
    /// One transmit-side solve at the zero-forcing receivers.
    ZfOneshot,
    /// Bisection on the downlink budget (worst-case bound for correlated error).
    Bisection,
    /// Half-duplex baseline at the rate-equivalent target.
    Hd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ao,
        Algorithm::ZfOneshot,
        Algorithm::Bisection,
        Algorithm::Hd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ao => "ao",
            Algorithm::ZfOneshot => "zf_oneshot",
            Algorithm::Bisection => "bisection",
            Algorithm::Hd => "hd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::Invalid(format!("unknown algorithm `{s}`")))
    }
}

fn default_gamma_db() -> f64 {
    5.0
}

fn default_trials() -> usize {
    500
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Ao, Algorithm::ZfOneshot]
}

fn default_correlation() -> CorrelationMode {
    CorrelationMode::Structured
}

/// A Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub system: SystemConfig,
    pub sweep: Sweep,
    /// SINR target when the sweep is over user counts.
    #[serde(default = "default_gamma_db")]
    pub gamma_db: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Per-antenna ADC input cap in dBm.
    #[serde(default)]
    pub adc_cap_dbm: Option<f64>,
    #[serde(default = "default_correlation")]
    pub correlation: CorrelationMode,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sweep.is_empty() {
            return Err(HarnessError::Invalid("sweep is empty".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Invalid("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::Invalid("no algorithms selected".into()));
        }
        for v in self.sweep.values() {
            self.params_for(v)?.validate()?;
        }
        Ok(())
    }

    /// Linear-unit parameters at one sweep point.
    pub fn params_for(&self, value: SweepValue) -> Result<SystemParams, HarnessError> {
        let s = &self.system;
        let (k, l, gamma_db) = match value {
            SweepValue::GammaDb(g) => (s.k, s.l, g),
            SweepValue::Users(k, l) => (k, l, self.gamma_db),
        };
        let mut p = SystemParams::with_defaults(s.n_t, k, l, db_to_lin(gamma_db));
        p.sigma_d_sq = vec![db_to_lin(s.dl_noise_dbm); k];
        p.sigma_z_sq = db_to_lin(s.bs_noise_dbm);
        p.beta1 = db_to_lin(s.beta1_db);
        p.beta2 = db_to_lin(s.beta2_db);
        p.delta1 = db_to_lin(s.delta1_db);
        p.delta2 = db_to_lin(s.delta2_db);
        p.pathloss_bs_mu_db = s.pathloss_bs_mu_db;
        p.pathloss_umu_dmu_db = s.pathloss_umu_dmu_db;
        p.pathloss_si_db = s.pathloss_si_db;
        p.crosstalk_base_db = s.crosstalk_base_db;
        p.crosstalk_step_db = s.crosstalk_step_db;
        p.antenna_corr = s.antenna_corr;
        p.train_energy = s.train_energy;
        p.p_max = db_to_lin(s.p_max_dbm);
        p.tol_bisect = s.tol_bisect;
        p.tol_fp = s.tol_fp;
        p.tol_ao = s.tol_ao;
        p.tol_subgrad = s.tol_subgrad;
        p.subgrad_step = s.subgrad_step;
        p.max_iter_fp = s.max_iter_fp;
        p.max_iter_ao = s.max_iter_ao;
        p.max_iter_subgrad = s.max_iter_subgrad;
        p.divergence_cap = s.divergence_cap;
        p.gamma_adc = self.adc_cap_dbm.map(db_to_lin);
        Ok(p)
    }
}
