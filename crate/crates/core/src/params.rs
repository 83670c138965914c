//! System constants, the self-interference channel statistics and random
//! channel draws.
//!
//! All internal quantities are linear. Powers are expressed in milliwatts so
//! that a configured `x dBm` maps to `10^(x/10)`; gains and impairment factors
//! are dimensionless.
//!
//! `vec(.)` stacks columns: entry `(row, col)` of an `N x N` matrix sits at
//! position `col * N + row` of its vectorization. Every block-index formula in
//! this crate follows from that convention.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::ParamError;
use crate::fixed_point::FixedPointConfig;
use crate::linalg::{self, c, CMat, CVec, C64};

/// Power ratio from decibels.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Amplitude ratio from decibels.
pub fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Every scalar constant of the full-duplex system, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Number of base-station antennas.
    pub n_t: usize,
    /// Number of downlink users.
    pub k: usize,
    /// Number of uplink users.
    pub l: usize,
    pub gamma_d: Vec<f64>,
    pub gamma_u: Vec<f64>,
    /// Per-antenna ADC input power cap; `None` disables the constraint.
    pub gamma_adc: Option<f64>,
    /// Downlink receiver noise powers.
    pub sigma_d_sq: Vec<f64>,
    /// Base-station receiver noise power.
    pub sigma_z_sq: f64,
    /// Transmitter-chain noise factor.
    pub beta1: f64,
    /// Receiver-chain noise factor.
    pub beta2: f64,
    /// Residual factor of the linear SI component after digital cancellation.
    pub delta1: f64,
    /// Residual factor of the non-linear SI component after digital cancellation.
    pub delta2: f64,
    pub pathloss_bs_mu_db: f64,
    pub pathloss_umu_dmu_db: f64,
    pub pathloss_si_db: f64,
    /// Extra loss between neighbouring antennas of the SI channel.
    pub crosstalk_base_db: f64,
    /// Additional loss per further antenna step (negative, e.g. `-6`).
    pub crosstalk_step_db: f64,
    /// Decay of the antenna correlation Toeplitz matrix.
    pub antenna_corr: f64,
    /// Pilot energy of the SI channel estimator.
    pub train_energy: f64,
    /// Upper end of the bisection interval for the downlink power.
    pub p_max: f64,
    /// Relative bracket width at which the bisection stops.
    pub tol_bisect: f64,
    /// Relative change at which a fixed-point iteration is converged.
    pub tol_fp: f64,
    /// Relative objective improvement at which alternating optimization stops.
    pub tol_ao: f64,
    /// Relative dual-variable change at which the subgradient loop stops.
    pub tol_subgrad: f64,
    /// Subgradient step size in normalized dual units.
    pub subgrad_step: f64,
    pub max_iter_fp: usize,
    pub max_iter_ao: usize,
    pub max_iter_subgrad: usize,
    /// An iterate larger than this multiple of the noise-only iterate counts as divergence.
    pub divergence_cap: f64,
}

impl SystemParams {
    /// Field-measured defaults: -85 dBm noise, -30 dB RF impairments,
    /// -50/-20 dB digital SIC residuals, -80/-83/-10 dB path losses, a 40 dBm
    /// bisection cap and `E = 1e-3`; all users share the SINR target `gamma`.
    pub fn with_defaults(n_t: usize, k: usize, l: usize, gamma: f64) -> Self {
        SystemParams {
            n_t,
            k,
            l,
            gamma_d: vec![gamma; k],
            gamma_u: vec![gamma; l],
            gamma_adc: None,
            sigma_d_sq: vec![db_to_lin(-85.0); k],
            sigma_z_sq: db_to_lin(-85.0),
            beta1: db_to_lin(-30.0),
            beta2: db_to_lin(-30.0),
            delta1: db_to_lin(-50.0),
            delta2: db_to_lin(-20.0),
            pathloss_bs_mu_db: -80.0,
            pathloss_umu_dmu_db: -83.0,
            pathloss_si_db: -10.0,
            crosstalk_base_db: -24.0,
            crosstalk_step_db: -6.0,
            antenna_corr: 0.9,
            train_energy: 1e-3,
            p_max: db_to_lin(40.0),
            tol_bisect: 1e-3,
            tol_fp: 1e-9,
            tol_ao: 1e-6,
            tol_subgrad: 1e-3,
            subgrad_step: 1.0,
            max_iter_fp: 20_000,
            max_iter_ao: 500,
            max_iter_subgrad: 300,
            divergence_cap: 1e12,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn positive(field: &'static str, value: f64) -> Result<(), ParamError> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::Range {
                    field,
                    requirement: "positive and finite",
                    value,
                })
            }
        }
        fn nonneg(field: &'static str, value: f64) -> Result<(), ParamError> {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::Range {
                    field,
                    requirement: "nonnegative and finite",
                    value,
                })
            }
        }
        fn len(field: &'static str, expected: usize, got: usize) -> Result<(), ParamError> {
            if expected == got {
                Ok(())
            } else {
                Err(ParamError::Length {
                    field,
                    expected,
                    got,
                })
            }
        }

        if self.n_t == 0 {
            return Err(ParamError::Range {
                field: "n_t",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        len("gamma_d", self.k, self.gamma_d.len())?;
        len("gamma_u", self.l, self.gamma_u.len())?;
        len("sigma_d_sq", self.k, self.sigma_d_sq.len())?;
        for &g in &self.gamma_d {
            positive("gamma_d", g)?;
        }
        for &g in &self.gamma_u {
            positive("gamma_u", g)?;
        }
        for &s in &self.sigma_d_sq {
            positive("sigma_d_sq", s)?;
        }
        if let Some(cap) = self.gamma_adc {
            positive("gamma_adc", cap)?;
        }
        positive("sigma_z_sq", self.sigma_z_sq)?;
        nonneg("beta1", self.beta1)?;
        nonneg("beta2", self.beta2)?;
        nonneg("delta1", self.delta1)?;
        nonneg("delta2", self.delta2)?;
        for (field, v) in [
            ("pathloss_bs_mu_db", self.pathloss_bs_mu_db),
            ("pathloss_umu_dmu_db", self.pathloss_umu_dmu_db),
            ("pathloss_si_db", self.pathloss_si_db),
            ("crosstalk_base_db", self.crosstalk_base_db),
            ("crosstalk_step_db", self.crosstalk_step_db),
        ] {
            if !v.is_finite() {
                return Err(ParamError::Range {
                    field,
                    requirement: "finite",
                    value: v,
                });
            }
        }
        if !(self.antenna_corr > 0.0 && self.antenna_corr <= 1.0) {
            return Err(ParamError::Range {
                field: "antenna_corr",
                requirement: "in (0, 1]",
                value: self.antenna_corr,
            });
        }
        positive("train_energy", self.train_energy)?;
        positive("p_max", self.p_max)?;
        positive("tol_bisect", self.tol_bisect)?;
        positive("tol_fp", self.tol_fp)?;
        positive("tol_ao", self.tol_ao)?;
        positive("tol_subgrad", self.tol_subgrad)?;
        positive("subgrad_step", self.subgrad_step)?;
        positive("divergence_cap", self.divergence_cap)?;
        for (field, v) in [
            ("max_iter_fp", self.max_iter_fp),
            ("max_iter_ao", self.max_iter_ao),
            ("max_iter_subgrad", self.max_iter_subgrad),
        ] {
            if v == 0 {
                return Err(ParamError::Range {
                    field,
                    requirement: "at least 1",
                    value: 0.0,
                });
            }
        }
        let d2b2 = self.delta2 * self.beta2;
        for (index, &g) in self.gamma_u.iter().enumerate() {
            if g * d2b2 >= 1.0 {
                return Err(ParamError::UnreachableUplinkTarget {
                    index,
                    product: g * d2b2,
                });
            }
        }
        Ok(())
    }

    /// `gamma / (1 + gamma)` for downlink user `i`.
    pub fn rho_d(&self, i: usize) -> f64 {
        let g = self.gamma_d[i];
        g / (1.0 + g)
    }

    pub fn rho_u(&self, l: usize) -> f64 {
        let g = self.gamma_u[l];
        g / (1.0 + g)
    }

    /// Receiver noise inflated by the receiver-chain residual, `(1 + delta2*beta2) sigma_z^2`.
    pub fn sigma_z_tilde_sq(&self) -> f64 {
        (1.0 + self.delta2 * self.beta2) * self.sigma_z_sq
    }

    pub(crate) fn fp_config(&self, reference: f64) -> FixedPointConfig {
        FixedPointConfig {
            tol: self.tol_fp,
            max_iter: self.max_iter_fp,
            divergence_cap: self.divergence_cap * reference.max(f64::MIN_POSITIVE),
        }
    }
}

/// Second-order statistics of the SI channel estimation error `Phi0`.
#[derive(Debug, Clone)]
pub struct SiCorrelation {
    pub n_t: usize,
    /// `E[vec(Phi0) vec(Phi0)^H]`, size `n_t^2`.
    pub r_phi0: CMat,
    /// `E[Phi0 e_n e_n^T Phi0^H]`: covariance of column `n`.
    pub blocks_r: Vec<CMat>,
    /// `E[Phi0^H e_n e_n^T Phi0]`: covariance of row `n` (conjugate ordering).
    pub blocks_rbar: Vec<CMat>,
    /// `blocks_r[n] + beta2 * diag(blocks_r[n])`.
    pub blocks_rtilde: Vec<CMat>,
    /// Set when `r_phi0` is exactly a scalar multiple of the identity.
    pub iid_variance: Option<f64>,
}

/// Per-antenna blocks of an error correlation matrix.
#[derive(Debug, Clone)]
pub struct CorrelationBlocks {
    pub r: Vec<CMat>,
    pub rbar: Vec<CMat>,
    pub rtilde: Vec<CMat>,
}

fn side_length(r: &CMat) -> Result<usize, ParamError> {
    if r.nrows() != r.ncols() {
        return Err(ParamError::Dimension(format!(
            "correlation matrix is {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let n = (r.nrows() as f64).sqrt().round() as usize;
    if n * n != r.nrows() || n == 0 {
        return Err(ParamError::Dimension(format!(
            "correlation size {} is not a positive square",
            r.nrows()
        )));
    }
    Ok(n)
}

/// Splits `r_phi0` into the per-antenna column and row covariances.
pub fn extract_blocks(r_phi0: &CMat, beta2: f64) -> Result<CorrelationBlocks, ParamError> {
    let n = side_length(r_phi0)?;
    let mut r = Vec::with_capacity(n);
    let mut rbar = Vec::with_capacity(n);
    let mut rtilde = Vec::with_capacity(n);
    for a in 0..n {
        let col_block = r_phi0.view((a * n, a * n), (n, n)).into_owned();
        let row_block = CMat::from_fn(n, n, |i, j| r_phi0[(j * n + a, i * n + a)]);
        let tilde = &col_block + linalg::diag_part(&col_block) * c(beta2, 0.0);
        r.push(col_block);
        rbar.push(row_block);
        rtilde.push(tilde);
    }
    Ok(CorrelationBlocks { r, rbar, rtilde })
}

fn scalar_identity_value(r: &CMat) -> Option<f64> {
    let d = r[(0, 0)];
    if d.im != 0.0 {
        return None;
    }
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            let expected = if i == j { d } else { C64::new(0.0, 0.0) };
            if r[(i, j)] != expected {
                return None;
            }
        }
    }
    Some(d.re)
}

impl SiCorrelation {
    /// Wraps a correlation matrix and derives its blocks.
    pub fn from_matrix(r_phi0: CMat, beta2: f64) -> Result<Self, ParamError> {
        let n_t = side_length(&r_phi0)?;
        let blocks = extract_blocks(&r_phi0, beta2)?;
        let iid_variance = scalar_identity_value(&r_phi0);
        Ok(SiCorrelation {
            n_t,
            r_phi0,
            blocks_r: blocks.r,
            blocks_rbar: blocks.rbar,
            blocks_rtilde: blocks.rtilde,
            iid_variance,
        })
    }

    /// I.i.d. error entries with variance `sigma2`.
    pub fn iid(n_t: usize, sigma2: f64, beta2: f64) -> Self {
        let r = CMat::identity(n_t * n_t, n_t * n_t) * c(sigma2, 0.0);
        SiCorrelation::from_matrix(r, beta2).expect("square by construction")
    }

    pub fn lambda_max(&self) -> f64 {
        match self.iid_variance {
            Some(s) => s,
            None => linalg::lambda_max(&self.r_phi0),
        }
    }

    /// Sampler producing error matrices with this correlation.
    pub fn sampler(&self) -> SiErrorSampler {
        SiErrorSampler {
            n_t: self.n_t,
            factor: linalg::psd_factor(&self.r_phi0),
        }
    }
}

/// Draws `Phi0` with `vec(Phi0) = U w`, `U U^H = R_Phi0`, `w` standard complex Gaussian.
#[derive(Debug, Clone)]
pub struct SiErrorSampler {
    n_t: usize,
    factor: CMat,
}

impl SiErrorSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let m = self.factor.ncols();
        let w = CVec::from_fn(m, |_, _| complex_gaussian(rng, 1.0));
        let v = &self.factor * w;
        CMat::from_column_slice(self.n_t, self.n_t, v.as_slice())
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(s * re, s * im)
}

fn toeplitz(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    DMatrix::from_fn(n, n, |i, j| first_row[i.abs_diff(j)])
}

/// Correlation `E[vec(H0) vec(H0)^T]` of the SI channel: a Toeplitz path-loss
/// profile with neighbour cross-talk, times a Toeplitz antenna correlation.
pub fn build_si_correlation(params: &SystemParams) -> CMat {
    let n = params.n_t;
    let mut t_row = vec![1.0; n];
    for (d, t) in t_row.iter_mut().enumerate().skip(1) {
        *t = db_to_amp(params.crosstalk_base_db + params.crosstalk_step_db * (d - 1) as f64);
    }
    let t = toeplitz(&t_row);
    let c_row: Vec<f64> = (0..n).map(|d| params.antenna_corr.powi(d as i32)).collect();
    let cm = toeplitz(&c_row);
    let scale = db_to_lin(params.pathloss_si_db);
    let vec_t: Vec<f64> = t.iter().copied().collect();
    CMat::from_fn(n * n, n * n, |a, b| {
        c(scale * vec_t[a] * vec_t[b] * cm[(a % n, b % n)], 0.0)
    })
}

/// Error correlation left by pilot-aided LMMSE estimation of the SI channel:
/// `R - R (R + (sigma_z^2/E) I)^{-1} R`.
pub fn lmmse_error_correlation(
    r_h0: &CMat,
    params: &SystemParams,
) -> Result<SiCorrelation, ParamError> {
    let n2 = r_h0.nrows();
    side_length(r_h0)?;
    let noise = params.sigma_z_sq / params.train_energy;
    if noise == 0.0 {
        return SiCorrelation::from_matrix(CMat::zeros(n2, n2), params.beta2);
    }
    let is_diagonal = (0..n2).all(|i| (0..n2).all(|j| i == j || r_h0[(i, j)] == c(0.0, 0.0)));
    let r_phi0 = if is_diagonal {
        CMat::from_fn(n2, n2, |i, j| {
            if i == j {
                let lam = r_h0[(i, i)].re.max(0.0);
                c(lam * noise / (lam + noise), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    } else {
        // Same eigenvectors as R; each eigenvalue maps to lam*s/(lam+s).
        let (vals, vecs) = linalg::eigh(r_h0);
        let shrunk: Vec<f64> = vals
            .iter()
            .map(|&lam| {
                let lam = lam.max(0.0);
                lam * noise / (lam + noise)
            })
            .collect();
        let mut out = &vecs * linalg::real_diag(&shrunk) * vecs.adjoint();
        linalg::hermitize(&mut out);
        out
    };
    SiCorrelation::from_matrix(r_phi0, params.beta2)
}

/// One draw of every channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Downlink channels `h_i`.
    pub h: Vec<CVec>,
    /// Uplink channels `g_l`.
    pub g: Vec<CVec>,
    /// `f[(j, i)]`: uplink user `j` to downlink user `i`.
    pub f: CMat,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn check_dims(&self, params: &SystemParams) -> Result<(), ParamError> {
        let bad = self.h.len() != params.k
            || self.g.len() != params.l
            || self
                .h
                .iter()
                .chain(self.g.iter())
                .any(|x| x.len() != params.n_t)
            || self.f.nrows() != params.l
            || self.f.ncols() != params.k;
        if bad {
            return Err(ParamError::Dimension(format!(
                "channel realization does not match n_t={}, K={}, L={}",
                params.n_t, params.k, params.l
            )));
        }
        Ok(())
    }
}

const STREAM_DL: u64 = 1;
const STREAM_UL: u64 = 2;
const STREAM_CROSS: u64 = 3;

fn substream(seed: u64, kind: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | index);
    rng
}

/// Rayleigh-faded channels with the configured large-scale path losses.
///
/// Each entity draws from its own ChaCha20 stream keyed by `(seed, kind, index)`,
/// so growing `K` or `L` leaves the existing users' channels untouched.
pub fn sample_realization(params: &SystemParams, seed: u64) -> ChannelRealization {
    let n = params.n_t;
    let var_bs = db_to_lin(params.pathloss_bs_mu_db);
    let var_cross = db_to_lin(params.pathloss_umu_dmu_db);
    let draw_vec = |kind: u64, idx: usize| {
        let mut rng = substream(seed, kind, idx as u64);
        CVec::from_fn(n, |_, _| complex_gaussian(&mut rng, var_bs))
    };
    let h = (0..params.k).map(|i| draw_vec(STREAM_DL, i)).collect();
    let g = (0..params.l).map(|j| draw_vec(STREAM_UL, j)).collect();
    let f = CMat::from_fn(params.l, params.k, |j, i| {
        let mut rng = substream(seed, STREAM_CROSS, ((j as u64) << 24) | i as u64);
        complex_gaussian(&mut rng, var_cross)
    });
    ChannelRealization { h, g, f, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn params(n_t: usize) -> SystemParams {
        SystemParams::with_defaults(n_t, 2, 2, db_to_lin(5.0))
    }

    #[test]
    fn si_correlation_diagonal_taps_carry_path_loss() {
        let r = build_si_correlation(&params(2));
        // H0[0,0] at index 0, H0[1,1] at index 3.
        assert!((r[(0, 0)].re - 0.1).abs() < 1e-15);
        assert!((r[(3, 3)].re - 0.1).abs() < 1e-15);
        // H0[0,1] sits at index 2 (column 1, row 0).
        assert!((r[(2, 2)].re - 10f64.powf(-3.4)).abs() < 1e-15);
        assert!((r[(1, 1)].re - 10f64.powf(-3.4)).abs() < 1e-15);
    }

    #[test]
    fn si_correlation_unit_factors_is_all_ones() {
        let mut p = params(3);
        p.antenna_corr = 1.0;
        p.crosstalk_base_db = 0.0;
        p.crosstalk_step_db = 0.0;
        p.pathloss_si_db = 0.0;
        let r = build_si_correlation(&p);
        assert!(r.iter().all(|z| (z.re - 1.0).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn lmmse_scalar_case() {
        let mut p = params(1);
        p.sigma_z_sq = 0.1;
        p.train_energy = 1.0;
        let corr = lmmse_error_correlation(&CMat::from_element(1, 1, c(0.1, 0.0)), &p).unwrap();
        assert!((corr.r_phi0[(0, 0)].re - 0.05).abs() < 1e-15);
        assert_eq!(corr.iid_variance, Some(corr.r_phi0[(0, 0)].re));
    }

    #[test]
    fn lmmse_perfect_estimation_gives_zero() {
        let mut p = params(2);
        p.train_energy = f64::INFINITY;
        let r = build_si_correlation(&p);
        let corr = lmmse_error_correlation(&r, &p).unwrap();
        assert!(corr.r_phi0.iter().all(|z| *z == c(0.0, 0.0)));
        assert_eq!(corr.iid_variance, Some(0.0));
    }

    #[test]
    fn lmmse_iid_input_stays_iid() {
        let p = params(3);
        let s2 = 0.1;
        let r = CMat::identity(9, 9) * c(s2, 0.0);
        let corr = lmmse_error_correlation(&r, &p).unwrap();
        let noise = p.sigma_z_sq / p.train_energy;
        let expected = s2 - s2 * s2 / (s2 + noise);
        let got = corr.iid_variance.expect("iid detected");
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn blocks_of_diagonal_correlation() {
        let r = linalg::real_diag(&[1.0, 2.0, 3.0, 4.0]);
        let b = extract_blocks(&r, 0.5).unwrap();
        assert_eq!(b.r[0], linalg::real_diag(&[1.0, 2.0]));
        assert_eq!(b.r[1], linalg::real_diag(&[3.0, 4.0]));
        // Row 0 of Phi0 holds entries (0,0) and (0,1): indices 0 and 2.
        assert_eq!(b.rbar[0], linalg::real_diag(&[1.0, 3.0]));
        assert_eq!(b.rbar[1], linalg::real_diag(&[2.0, 4.0]));
        assert_eq!(b.rtilde[1], linalg::real_diag(&[4.5, 6.0]));
    }

    #[test]
    fn blocks_reject_non_square_size() {
        assert!(extract_blocks(&CMat::zeros(3, 3), 0.0).is_err());
        assert!(extract_blocks(&CMat::zeros(4, 3), 0.0).is_err());
    }

    #[test]
    fn iid_blocks_are_scaled_identity() {
        let corr = SiCorrelation::iid(3, 2.0, 0.0);
        for n in 0..3 {
            assert_eq!(corr.blocks_r[n], CMat::identity(3, 3) * c(2.0, 0.0));
            assert_eq!(corr.blocks_rbar[n], CMat::identity(3, 3) * c(2.0, 0.0));
        }
    }

    #[test]
    fn realization_is_deterministic_and_stable_under_growth() {
        let p = params(4);
        let a = sample_realization(&p, 7);
        let b = sample_realization(&p, 7);
        assert_eq!(a, b);
        let mut bigger = p.clone();
        bigger.k = 3;
        bigger.l = 3;
        let c3 = sample_realization(&bigger, 7);
        assert_eq!(a.h[..], c3.h[..2]);
        assert_eq!(a.g[..], c3.g[..2]);
        assert_eq!(a.f[(1, 1)], c3.f[(1, 1)]);
    }

    #[test]
    fn empty_user_sets_are_accepted() {
        let p = SystemParams::with_defaults(3, 0, 0, 1.0);
        p.validate().unwrap();
        let ch = sample_realization(&p, 1);
        assert!(ch.h.is_empty() && ch.g.is_empty());
        assert_eq!((ch.f.nrows(), ch.f.ncols()), (0, 0));
        ch.check_dims(&p).unwrap();
    }

    #[test]
    fn unreachable_uplink_target_rejected() {
        let mut p = params(2);
        p.delta2 = 0.5;
        p.beta2 = 0.5;
        p.gamma_u = vec![4.0, 1.0];
        assert!(matches!(
            p.validate(),
            Err(ParamError::UnreachableUplinkTarget { index: 0, .. })
        ));
    }

    #[test]
    fn sampler_reproduces_iid_variance() {
        let corr = SiCorrelation::iid(2, 3.0, 0.0);
        let s = corr.sampler();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = 20_000;
        let mut acc = 0.0;
        for _ in 0..m {
            acc += s.sample(&mut rng)[(1, 0)].norm_sqr();
        }
        assert!((acc / m as f64 - 3.0).abs() < 0.1);
    }
}
