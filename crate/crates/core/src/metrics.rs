//! SINRs, residual self-interference statistics, ADC input powers and the
//! feasibility check for the joint transceiver design problem.

use crate::error::ParamError;
use crate::linalg::{self, c, CMat, CVec};
use crate::params::{ChannelRealization, SiCorrelation, SystemParams};

/// Downlink beamformers (power included), unit-norm uplink receive
/// beamformers and uplink powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverSolution {
    pub w: Vec<CVec>,
    pub v: Vec<CVec>,
    pub p_u: Vec<f64>,
}

impl TransceiverSolution {
    /// `sum_k |w_k|^2`.
    pub fn dl_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn ul_power(&self) -> f64 {
        self.p_u.iter().sum()
    }

    /// Objective of the design problem: downlink plus uplink transmit power.
    pub fn total_power(&self) -> f64 {
        self.dl_power() + self.ul_power()
    }

    /// Largest `| |v_l| - 1 |`.
    pub fn unit_norm_defect(&self) -> f64 {
        self.v
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `h h^H + beta1 diag(|h|^2)`.
pub fn h_tilde(h: &CVec, beta1: f64) -> CMat {
    linalg::outer(h) + linalg::diag_abs2(h) * c(beta1, 0.0)
}

/// `g g^H + delta2 beta2 diag(|g|^2)`.
pub fn g_tilde(g: &CVec, d2b2: f64) -> CMat {
    linalg::outer(g) + linalg::diag_abs2(g) * c(d2b2, 0.0)
}

fn check_square(a: &CMat, n: usize, what: &str) -> Result<(), ParamError> {
    if a.nrows() != n || a.ncols() != n {
        return Err(ParamError::Dimension(format!(
            "{what} is {}x{}, expected {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `E[Phi0 A Phi0^H]`.
pub fn expected_sandwich(a: &CMat, corr: &SiCorrelation) -> Result<CMat, ParamError> {
    let n = corr.n_t;
    check_square(a, n, "sandwiched matrix")?;
    if let Some(s2) = corr.iid_variance {
        return Ok(CMat::identity(n, n) * (a.trace() * s2));
    }
    let r = &corr.r_phi0;
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == c(0.0, 0.0) {
                continue;
            }
            for m in 0..n {
                for q in 0..n {
                    out[(m, q)] += aij * r[(i * n + m, j * n + q)];
                }
            }
        }
    }
    Ok(out)
}

/// `E[Phi0^H B Phi0]`.
pub fn expected_adjoint_sandwich(b: &CMat, corr: &SiCorrelation) -> Result<CMat, ParamError> {
    let n = corr.n_t;
    check_square(b, n, "sandwiched matrix")?;
    if let Some(s2) = corr.iid_variance {
        return Ok(CMat::identity(n, n) * (b.trace() * s2));
    }
    let r = &corr.r_phi0;
    let mut out = CMat::zeros(n, n);
    for m in 0..n {
        for q in 0..n {
            let bmq = b[(m, q)];
            if bmq == c(0.0, 0.0) {
                continue;
            }
            for x in 0..n {
                for y in 0..n {
                    out[(x, y)] += bmq * r[(y * n + q, x * n + m)];
                }
            }
        }
    }
    Ok(out)
}

fn transmit_covariance(w: &[CVec], n: usize) -> CMat {
    let mut cov = CMat::zeros(n, n);
    for wk in w {
        cov += linalg::outer(wk);
    }
    cov
}

/// Residual-SI covariance seen by the uplink receiver, without the
/// receiver-noise share (that share lives in `sigma_z_tilde_sq`):
///
/// `d1 E[P W W^H P^H] + d2 b1 E[P D P^H] + d2 b2 diag(E[P W W^H P^H] + b1 E[P D P^H])`
/// with `D = diag(W W^H)`.
pub fn omega(w: &[CVec], corr: &SiCorrelation, params: &SystemParams) -> CMat {
    let n = corr.n_t;
    let cov = transmit_covariance(w, n);
    let total: f64 = w.iter().map(|x| x.norm_squared()).sum();
    if let Some(s2) = corr.iid_variance {
        let xi = (params.delta1
            + params.delta2 * params.beta1
            + params.delta2 * params.beta2 * (1.0 + params.beta1))
            * s2;
        return CMat::identity(n, n) * c(xi * total, 0.0);
    }
    let s1 = expected_sandwich(&cov, corr).expect("dimensions match");
    let s2 = expected_sandwich(&linalg::diag_part(&cov), corr).expect("dimensions match");
    let d2 = params.delta2;
    let mut out = &s1 * c(params.delta1, 0.0) + &s2 * c(d2 * params.beta1, 0.0);
    out += linalg::diag_part(&(&s1 + &s2 * c(params.beta1, 0.0))) * c(d2 * params.beta2, 0.0);
    linalg::hermitize(&mut out);
    out
}

/// Transmit-side residual-SI matrix for receive beamformer `v`, satisfying
/// `v^H omega(W) v = sum_k w_k^H lambda_mat(v) w_k`.
pub fn lambda_mat(v: &CVec, corr: &SiCorrelation, params: &SystemParams) -> CMat {
    let n = corr.n_t;
    let d2 = params.delta2;
    if let Some(s2) = corr.iid_variance {
        let nv = v.norm_squared();
        let coeff = (params.delta1 + d2 * params.beta2 + d2 * params.beta1 * (1.0 + params.beta2))
            * s2
            * nv;
        return CMat::identity(n, n) * c(coeff, 0.0);
    }
    let mut out = expected_adjoint_sandwich(&linalg::outer(v), corr).expect("dimensions match")
        * c(params.delta1, 0.0);
    for (a, rbar) in corr.blocks_rbar.iter().enumerate() {
        let weight = v[a].norm_sqr();
        if weight != 0.0 {
            out += rbar * c(d2 * params.beta2 * weight, 0.0);
        }
    }
    let diag: Vec<f64> = corr
        .blocks_rtilde
        .iter()
        .map(|rt| d2 * params.beta1 * linalg::quad(rt, v))
        .collect();
    out += linalg::real_diag(&diag);
    linalg::hermitize(&mut out);
    out
}

/// Quadratic-form matrix of the ADC input power at antenna `n`.
pub fn upsilon(n: usize, corr: &SiCorrelation, params: &SystemParams) -> Result<CMat, ParamError> {
    if n >= corr.n_t {
        return Err(ParamError::Index {
            index: n,
            len: corr.n_t,
        });
    }
    let diag: Vec<f64> = corr
        .blocks_r
        .iter()
        .map(|rm| params.beta1 * rm[(n, n)].re)
        .collect();
    let mut out = &corr.blocks_rbar[n] + linalg::real_diag(&diag);
    linalg::hermitize(&mut out);
    Ok(out)
}

/// All `upsilon(n)` matrices.
pub fn upsilons(corr: &SiCorrelation, params: &SystemParams) -> Vec<CMat> {
    (0..corr.n_t)
        .map(|n| upsilon(n, corr, params).expect("index in range"))
        .collect()
}

/// Downlink SINR of user `i`.
pub fn dl_sinr(
    i: usize,
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> f64 {
    let h = &ch.h[i];
    let signal = linalg::inner_abs2(h, &sol.w[i]);
    if signal == 0.0 {
        return 0.0;
    }
    let mut interference = 0.0;
    let mut tx_noise = 0.0;
    for (k, wk) in sol.w.iter().enumerate() {
        if k != i {
            interference += linalg::inner_abs2(h, wk);
        }
        tx_noise += h
            .iter()
            .zip(wk.iter())
            .map(|(hn, wn)| hn.norm_sqr() * wn.norm_sqr())
            .sum::<f64>();
    }
    let cci: f64 = sol
        .p_u
        .iter()
        .enumerate()
        .map(|(j, p)| p * ch.f[(j, i)].norm_sqr())
        .sum();
    signal / (interference + params.beta1 * tx_noise + cci + params.sigma_d_sq[i])
}

pub fn dl_sinrs(
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    params: &SystemParams,
) -> Vec<f64> {
    (0..sol.w.len())
        .map(|i| dl_sinr(i, sol, ch, params))
        .collect()
}

fn ul_sinr_with_omega(
    l: usize,
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    omega_mat: &CMat,
    params: &SystemParams,
) -> f64 {
    let v = &sol.v[l];
    let p = sol.p_u[l];
    if p == 0.0 {
        return 0.0;
    }
    let signal = p * linalg::inner_abs2(v, &ch.g[l]);
    let d2b2 = params.delta2 * params.beta2;
    let mut denom = linalg::quad(omega_mat, v) + params.sigma_z_tilde_sq() * v.norm_squared();
    for (j, gj) in ch.g.iter().enumerate() {
        let pj = sol.p_u[j];
        if j != l {
            denom += pj * linalg::inner_abs2(v, gj);
        }
        denom += d2b2
            * pj
            * v.iter()
                .zip(gj.iter())
                .map(|(vn, gn)| vn.norm_sqr() * gn.norm_sqr())
                .sum::<f64>();
    }
    signal / denom
}

/// Uplink SINR of user `l` after receive beamforming and digital cancellation.
pub fn ul_sinr(
    l: usize,
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> f64 {
    let om = omega(&sol.w, corr, params);
    ul_sinr_with_omega(l, sol, ch, &om, params)
}

pub fn ul_sinrs(
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Vec<f64> {
    let om = omega(&sol.w, corr, params);
    (0..sol.v.len())
        .map(|l| ul_sinr_with_omega(l, sol, ch, &om, params))
        .collect()
}

/// Per-antenna signal power at the ADC input.
pub fn adc_power(
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Vec<f64> {
    adc_power_with(sol, ch, &upsilons(corr, params), params)
}

pub(crate) fn adc_power_with(
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    ups: &[CMat],
    params: &SystemParams,
) -> Vec<f64> {
    ups.iter()
        .enumerate()
        .map(|(n, u)| {
            let si: f64 = sol.w.iter().map(|w| linalg::quad(u, w)).sum();
            let ul: f64 =
                ch.g.iter()
                    .zip(&sol.p_u)
                    .map(|(g, p)| p * g[n].norm_sqr())
                    .sum();
            si + ul + params.sigma_z_sq
        })
        .collect()
}

/// Relative slack of every constraint of the design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `(SINR - target)/target` per downlink user.
    pub dl_slack: Vec<f64>,
    /// `(SINR - target)/target` per uplink user.
    pub ul_slack: Vec<f64>,
    /// `(cap - power)/cap` per antenna; `+inf` when the cap is disabled.
    pub adc_slack: Vec<f64>,
    /// Largest deviation of a receive beamformer from unit norm.
    pub unit_norm_defect: f64,
    pub feasible: bool,
    /// Most negative slack (0 when every slack is nonnegative).
    pub worst_violation: f64,
}

pub fn check_feasible(
    sol: &TransceiverSolution,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
    tol: f64,
) -> FeasibilityReport {
    let dl_slack: Vec<f64> = dl_sinrs(sol, ch, params)
        .iter()
        .zip(&params.gamma_d)
        .map(|(s, g)| (s - g) / g)
        .collect();
    let ul_slack: Vec<f64> = ul_sinrs(sol, ch, corr, params)
        .iter()
        .zip(&params.gamma_u)
        .map(|(s, g)| (s - g) / g)
        .collect();
    let adc_slack: Vec<f64> = match params.gamma_adc {
        Some(cap) => adc_power(sol, ch, corr, params)
            .iter()
            .map(|p| (cap - p) / cap)
            .collect(),
        None => vec![f64::INFINITY; params.n_t],
    };
    let unit_norm_defect = sol.unit_norm_defect();
    let worst = dl_slack
        .iter()
        .chain(&ul_slack)
        .chain(&adc_slack)
        .copied()
        .chain(std::iter::once(-unit_norm_defect))
        .fold(0.0, f64::min);
    FeasibilityReport {
        dl_slack,
        ul_slack,
        adc_slack,
        unit_norm_defect,
        feasible: worst >= -tol,
        worst_violation: worst,
    }
}
