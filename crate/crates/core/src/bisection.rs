//! Globally optimal design when the SI estimation error is i.i.d.
//!
//! With `E[Phi0 A Phi0^H] = sigma^2 tr(A) I` the residual SI seen by every
//! uplink receiver depends on the downlink only through `eta = sum_k |w_k|^2`.
//! Fixing `eta` splits the problem into an uplink solve (noise `xi eta`
//! inflated) followed by a downlink solve whose noise carries the uplink
//! co-channel interference. The optimum is the crossing `dl_power(eta) = eta`,
//! found by bisection.
//!
//! A correlated error can still be handled by bounding it with its largest
//! eigenvalue ([`P1Mode::WorstCase`]); the result is then feasible but
//! conservative.

use crate::error::{ParamError, SolveError};
use crate::hd::{DlContext, DlProblem, UlGain, UlProblem};
use crate::linalg::CVec;
use crate::metrics::TransceiverSolution;
use crate::params::{ChannelRealization, SiCorrelation, SystemParams};

/// Iteration cap of the bisection; a relative bracket of `1e-3` needs about 10.
const MAX_BISECT_STEPS: usize = 200;
const MAX_REFINE_STEPS: usize = 100;

/// Scalar residual-SI factors of the i.i.d. model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiCoefficients {
    /// Uplink residual SI per unit of downlink power.
    pub xi: f64,
    /// ADC input power per unit of downlink power.
    pub adc_coeff: f64,
}

impl SiCoefficients {
    pub fn from_variance(variance: f64, params: &SystemParams) -> Self {
        let (d1, d2, b1, b2) = (params.delta1, params.delta2, params.beta1, params.beta2);
        SiCoefficients {
            xi: (d1 + d2 * b1 + d2 * b2 * (1.0 + b1)) * variance,
            adc_coeff: variance * (1.0 + b1),
        }
    }

    /// Exact coefficients for i.i.d. error, otherwise the `lambda_max` bound.
    pub fn for_correlation(corr: &SiCorrelation, params: &SystemParams) -> Self {
        Self::from_variance(corr.lambda_max(), params)
    }
}

/// `xi` of [`SiCoefficients::for_correlation`].
pub fn effective_xi(corr: &SiCorrelation, params: &SystemParams) -> f64 {
    SiCoefficients::for_correlation(corr, params).xi
}

/// Outcome of the two-stage solve at a fixed downlink power budget `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PEtaSolution {
    pub eta: f64,
    pub v: Vec<CVec>,
    pub p_u: Vec<f64>,
    pub w: Vec<CVec>,
    /// `sum_k |w_k|^2`; `+inf` when a stage failed.
    pub dl_power: f64,
    pub feasible_stage1: bool,
    pub feasible_stage2: bool,
}

impl PEtaSolution {
    pub fn feasible(&self) -> bool {
        self.feasible_stage1 && self.feasible_stage2
    }

    pub fn to_solution(&self) -> TransceiverSolution {
        TransceiverSolution {
            w: self.w.clone(),
            v: self.v.clone(),
            p_u: self.p_u.clone(),
        }
    }
}

/// Two-stage solve with explicit SI coefficients.
pub fn solve_p_eta_with(
    eta: f64,
    ch: &ChannelRealization,
    coeffs: SiCoefficients,
    params: &SystemParams,
) -> Result<PEtaSolution, SolveError> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(ParamError::Range {
            field: "eta",
            requirement: "nonnegative and finite",
            value: eta,
        }
        .into());
    }
    let mut out = PEtaSolution {
        eta,
        v: vec![],
        p_u: vec![],
        w: vec![],
        dl_power: f64::INFINITY,
        feasible_stage1: false,
        feasible_stage2: false,
    };
    let noise = coeffs.xi * eta + params.sigma_z_tilde_sq();
    let ul = match UlProblem::new(&ch.g, &params.gamma_u, noise, UlGain::Impaired, params)?
        .solve(params)
    {
        Ok(s) => s,
        Err(e) if e.is_infeasible() => return Ok(out),
        Err(e) => return Err(e),
    };
    out.feasible_stage1 = true;
    let dl_noise: Vec<f64> = (0..params.k)
        .map(|i| {
            params.sigma_d_sq[i]
                + ul.p
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p * ch.f[(j, i)].norm_sqr())
                    .sum::<f64>()
        })
        .collect();
    out.v = ul.v;
    out.p_u = ul.p;
    let dl = match DlProblem::new(
        &ch.h,
        &params.gamma_d,
        &dl_noise,
        params,
        &DlContext::default(),
    )?
    .solve(params)
    {
        Ok(s) => s,
        Err(e) if e.is_infeasible() => return Ok(out),
        Err(e) => return Err(e),
    };
    let dl_power = dl.total_power();
    out.w = dl.w;
    out.dl_power = dl_power;
    out.feasible_stage2 = match params.gamma_adc {
        None => true,
        Some(cap) => (0..params.n_t).all(|n| {
            let ul_in: f64 =
                ch.g.iter()
                    .zip(&out.p_u)
                    .map(|(g, p)| p * g[n].norm_sqr())
                    .sum();
            let headroom = cap - ul_in - params.sigma_z_sq;
            headroom >= 0.0 && coeffs.adc_coeff * dl_power <= headroom
        }),
    };
    Ok(out)
}

/// Two-stage solve at `eta` using the (possibly worst-case) coefficients of `corr`.
pub fn solve_p_eta(
    eta: f64,
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Result<PEtaSolution, SolveError> {
    solve_p_eta_with(
        eta,
        ch,
        SiCoefficients::for_correlation(corr, params),
        params,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P1Mode {
    /// Reject correlations that are not a scaled identity.
    IidOnly,
    /// Bound a correlated error by `lambda_max(R_Phi0)`.
    WorstCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1Solution {
    pub solution: TransceiverSolution,
    /// Budget at which the returned beamformers were solved.
    pub eta: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Iterates `eta <- dl_power(eta)` from a budget above the crossing.
///
/// `dl_power` is concave and increasing, so the iterates decrease
/// monotonically to the crossing and every one stays feasible.
fn refine_crossing(
    mut sol: PEtaSolution,
    ch: &ChannelRealization,
    coeffs: SiCoefficients,
    params: &SystemParams,
) -> Result<PEtaSolution, SolveError> {
    for _ in 0..MAX_REFINE_STEPS {
        let eta = sol.dl_power;
        if eta.is_nan() || eta <= 0.0 || sol.eta - eta <= params.tol_fp * sol.eta {
            break;
        }
        let next = solve_p_eta_with(eta, ch, coeffs, params)?;
        if !(next.feasible() && next.dl_power <= eta) {
            break;
        }
        sol = next;
    }
    Ok(sol)
}

/// Bisection on the downlink power budget, followed by a fixed-point
/// refinement that makes every SINR constraint tight.
pub fn solve_p1(
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
    mode: P1Mode,
) -> Result<P1Solution, SolveError> {
    params.validate()?;
    ch.check_dims(params)?;
    if mode == P1Mode::IidOnly && corr.iid_variance.is_none() {
        return Err(ParamError::Range {
            field: "r_phi0",
            requirement: "a scaled identity in i.i.d. mode",
            value: corr.lambda_max(),
        }
        .into());
    }
    let coeffs = SiCoefficients::for_correlation(corr, params);
    let p_max = params.p_max;
    let tol = params.tol_bisect;
    let (mut lb, mut ub) = (0.0f64, p_max);
    let mut best: Option<PEtaSolution> = None;
    let mut iterations = 0;
    while ub - lb > tol * ub && iterations < MAX_BISECT_STEPS {
        iterations += 1;
        let mid = 0.5 * (lb + ub);
        let s = solve_p_eta_with(mid, ch, coeffs, params)?;
        if !s.feasible() || s.dl_power <= mid {
            ub = mid;
            if s.feasible() {
                best = Some(s);
            }
        } else {
            lb = mid;
        }
    }
    if (ub - p_max).abs() <= tol * p_max {
        return Err(SolveError::infeasible(
            "bisection",
            format!("no crossing below P_max = {p_max:.4e}"),
        ));
    }
    let best = match best {
        Some(s) if s.eta == ub => s,
        _ => {
            let s = solve_p_eta_with(ub, ch, coeffs, params)?;
            if !(s.feasible() && s.dl_power <= ub) {
                return Err(SolveError::infeasible(
                    "bisection",
                    "ADC cap or SINR targets unattainable at the crossing",
                ));
            }
            s
        }
    };
    let best = refine_crossing(best, ch, coeffs, params)?;
    Ok(P1Solution {
        solution: best.to_solution(),
        eta: best.eta,
        bracket: (lb, ub),
        iterations,
    })
}
