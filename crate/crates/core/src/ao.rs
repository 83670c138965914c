//! Alternating optimization for a general SI error correlation.
//!
//! The outer loop alternates between the transmit side (downlink beamformers
//! and uplink powers for fixed receive beamformers) and the MMSE receive
//! beamformers. The transmit side is a convex problem solved through its
//! full-duplex uplink-downlink duality: a joint fixed point in the virtual
//! powers `(lambda, mu)` gives the beamforming directions, and one linear
//! system gives the powers. The per-antenna ADC cap enters through dual
//! variables `nu` updated by projected subgradient steps.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;
use crate::fixed_point::{self, FixedPointResult, FixedPointStatus};
use crate::linalg::{self, c, CMat, CVec};
use crate::metrics::{self, g_tilde, h_tilde, TransceiverSolution};
use crate::params::{ChannelRealization, SiCorrelation, SystemParams};

/// Largest relative ADC overshoot accepted as feasible.
pub const ADC_FEASIBILITY_TOL: f64 = 1e-4;

/// Gram-matrix conditioning below which zero-forcing falls back to matched filters.
const ZF_RANK_TOL: f64 = 1e-12;

/// Channel-dependent matrices shared by every inner solve of one instance.
#[derive(Debug, Clone)]
pub struct AoContext<'a> {
    pub ch: &'a ChannelRealization,
    pub corr: &'a SiCorrelation,
    pub params: &'a SystemParams,
    h_tilde: Vec<CMat>,
    g_tilde: Vec<CMat>,
    upsilons: Vec<CMat>,
}

impl<'a> AoContext<'a> {
    pub fn new(
        ch: &'a ChannelRealization,
        corr: &'a SiCorrelation,
        params: &'a SystemParams,
    ) -> Result<Self, SolveError> {
        params.validate()?;
        ch.check_dims(params)?;
        if corr.n_t != params.n_t {
            return Err(crate::error::ParamError::Dimension(format!(
                "correlation is for {} antennas, system has {}",
                corr.n_t, params.n_t
            ))
            .into());
        }
        let d2b2 = params.delta2 * params.beta2;
        Ok(AoContext {
            ch,
            corr,
            params,
            h_tilde: ch.h.iter().map(|h| h_tilde(h, params.beta1)).collect(),
            g_tilde: ch.g.iter().map(|g| g_tilde(g, d2b2)).collect(),
            upsilons: metrics::upsilons(corr, params),
        })
    }

    pub fn upsilons(&self) -> &[CMat] {
        &self.upsilons
    }
}

/// Dual variables of the transmit-side problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// ADC multipliers, one per antenna.
    pub nu: Vec<f64>,
    /// Downlink virtual powers.
    pub lambda: Vec<f64>,
    /// Uplink virtual powers.
    pub mu: Vec<f64>,
    /// `1 + sum_n nu_n |g_l[n]|^2`.
    pub b_coeffs: Vec<f64>,
    /// `I + sum_n nu_n Upsilon_n`.
    pub b_matrix: CMat,
}

impl DualState {
    /// Weights induced by `nu`; `lambda` and `mu` start empty.
    pub fn from_nu(nu: Vec<f64>, ctx: &AoContext) -> Self {
        let n = ctx.params.n_t;
        let mut b_matrix = CMat::identity(n, n);
        for (x, u) in nu.iter().zip(&ctx.upsilons) {
            if *x != 0.0 {
                b_matrix += u * c(*x, 0.0);
            }
        }
        linalg::hermitize(&mut b_matrix);
        let b_coeffs = ctx
            .ch
            .g
            .iter()
            .map(|g| {
                1.0 + nu
                    .iter()
                    .zip(g.iter())
                    .map(|(x, gn)| x * gn.norm_sqr())
                    .sum::<f64>()
            })
            .collect();
        DualState {
            nu,
            lambda: vec![],
            mu: vec![],
            b_coeffs,
            b_matrix,
        }
    }

    pub fn zero(ctx: &AoContext) -> Self {
        Self::from_nu(vec![0.0; ctx.params.n_t], ctx)
    }
}

/// Zero-forcing receivers: `v_l^H g_j = 0` for `j != l`.
///
/// Falls back to matched filters when there are more users than antennas or
/// the channels are linearly dependent.
pub fn zf_init(g: &[CVec]) -> Vec<CVec> {
    let l = g.len();
    if l == 0 {
        return vec![];
    }
    let n = g[0].len();
    let matched = || {
        g.iter()
            .map(|x| linalg::normalized(x).unwrap_or_else(|| x.clone()))
            .collect()
    };
    if l > n {
        log::warn!("zero-forcing needs L <= N_t (L={l}, N_t={n}); using matched filters");
        return matched();
    }
    let gm = CMat::from_columns(g);
    let gram = gm.adjoint() * &gm;
    let (vals, _) = linalg::eigh(&gram);
    if vals[0] <= ZF_RANK_TOL * vals[l - 1] {
        log::warn!("uplink channels are rank deficient; using matched filters");
        return matched();
    }
    let Some(chol) = linalg::cholesky(&gram) else {
        return matched();
    };
    let v = &gm * chol.inverse();
    (0..l)
        .map(|j| linalg::normalized(&v.column(j).into_owned()).expect("full column rank"))
        .collect()
}

/// MMSE receivers `M^{-1} g_l` with `M = sum_j p_j Gt_j + Omega(W) + sigma_z_tilde^2 I`.
pub fn mmse_receive(
    w: &[CVec],
    p_u: &[f64],
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Result<Vec<CVec>, SolveError> {
    let d2b2 = params.delta2 * params.beta2;
    let n = params.n_t;
    let mut m =
        metrics::omega(w, corr, params) + CMat::identity(n, n) * c(params.sigma_z_tilde_sq(), 0.0);
    for (g, p) in ch.g.iter().zip(p_u) {
        m += g_tilde(g, d2b2) * c(*p, 0.0);
    }
    receive_from_covariance(&m, &ch.g)
}

fn receive_from_covariance(m: &CMat, g: &[CVec]) -> Result<Vec<CVec>, SolveError> {
    let chol = linalg::cholesky(m)
        .ok_or_else(|| SolveError::Numerical("receive covariance not positive definite".into()))?;
    g.iter()
        .map(|gl| {
            linalg::normalized(&chol.solve(gl))
                .ok_or_else(|| SolveError::Numerical("zero uplink channel".into()))
        })
        .collect()
}

/// Transmit-side problem for fixed receivers `v` and ADC weights `dual`.
#[derive(Debug, Clone)]
pub struct P2Problem<'c, 'a> {
    ctx: &'c AoContext<'a>,
    v: Vec<CVec>,
    lambda_mats: Vec<CMat>,
    /// `vgv[l][j] = v_l^H Gt_j v_l`.
    vgv: Vec<Vec<f64>>,
    /// `|v_l^H g_l|^2`.
    vg2: Vec<f64>,
    rho_d: Vec<f64>,
    rho_u: Vec<f64>,
    dual: DualState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P2Solution {
    pub w: Vec<CVec>,
    pub directions: Vec<CVec>,
    pub p_d: Vec<f64>,
    pub p_u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub iterations: usize,
    /// `sum_k lambda_k sigma_k^2 + sigma_z_tilde^2 sum_l mu_l`.
    pub dual_objective: f64,
    /// `sum_k w_k^H B w_k + sum_l p_l b_l`.
    pub primal_objective: f64,
}

impl P2Solution {
    pub fn total_power(&self) -> f64 {
        self.p_d.iter().sum::<f64>() + self.p_u.iter().sum::<f64>()
    }
}

impl<'c, 'a> P2Problem<'c, 'a> {
    pub fn new(v: &[CVec], dual: DualState, ctx: &'c AoContext<'a>) -> Result<Self, SolveError> {
        let params = ctx.params;
        if v.len() != params.l || v.iter().any(|x| x.len() != params.n_t) {
            return Err(crate::error::ParamError::Dimension("receive beamformers".into()).into());
        }
        let vg2: Vec<f64> = v
            .iter()
            .zip(&ctx.ch.g)
            .map(|(vl, gl)| linalg::inner_abs2(vl, gl))
            .collect();
        if let Some(l) = vg2.iter().position(|x| x.is_nan() || *x <= 0.0) {
            return Err(SolveError::Numerical(format!(
                "receive beamformer {l} is orthogonal to its channel"
            )));
        }
        let vgv = v
            .iter()
            .map(|vl| ctx.g_tilde.iter().map(|gt| linalg::quad(gt, vl)).collect())
            .collect();
        Ok(P2Problem {
            ctx,
            v: v.to_vec(),
            lambda_mats: v
                .iter()
                .map(|vl| metrics::lambda_mat(vl, ctx.corr, params))
                .collect(),
            vgv,
            vg2,
            rho_d: (0..params.k).map(|i| params.rho_d(i)).collect(),
            rho_u: (0..params.l).map(|i| params.rho_u(i)).collect(),
            dual,
        })
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    fn q(&self, lambda: &[f64], mu: &[f64]) -> CMat {
        let mut q = self.dual.b_matrix.clone();
        for (x, ht) in lambda.iter().zip(&self.ctx.h_tilde) {
            if *x != 0.0 {
                q += ht * c(*x, 0.0);
            }
        }
        for (x, lm) in mu.iter().zip(&self.lambda_mats) {
            if *x != 0.0 {
                q += lm * c(*x, 0.0);
            }
        }
        q
    }

    /// One application of the joint virtual-power map on `[lambda; mu]`.
    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let k = self.ctx.params.k;
        let (lambda, mu) = x.split_at(k);
        let mut out = Vec::with_capacity(x.len());
        if k > 0 {
            let chol = linalg::cholesky(&self.q(lambda, mu)).expect("B keeps Q positive definite");
            for (h, r) in self.ctx.ch.h.iter().zip(&self.rho_d) {
                let q = h.dotc(&chol.solve(h)).re;
                out.push(if q > 0.0 { r / q } else { f64::INFINITY });
            }
        }
        let f = &self.ctx.ch.f;
        for j in 0..self.ctx.params.l {
            let from_ul: f64 = mu.iter().zip(&self.vgv).map(|(m, row)| m * row[j]).sum();
            let from_dl: f64 = lambda
                .iter()
                .enumerate()
                .map(|(i, l)| l * f[(j, i)].norm_sqr())
                .sum();
            out.push(self.rho_u[j] * (from_ul + from_dl + self.dual.b_coeffs[j]) / self.vg2[j]);
        }
        out
    }

    pub fn run_from(&self, x0: &[f64]) -> Result<FixedPointResult, SolveError> {
        let reference = self
            .map(&vec![0.0; x0.len()])
            .into_iter()
            .fold(0.0, f64::max);
        Ok(fixed_point::iterate(
            |x| self.map(x),
            x0,
            &self.ctx.params.fp_config(reference),
        )?)
    }

    /// Downlink directions `Q^{-1} h_k`, normalized and phase aligned.
    pub fn directions(&self, lambda: &[f64], mu: &[f64]) -> Result<Vec<CVec>, SolveError> {
        if self.ctx.params.k == 0 {
            return Ok(vec![]);
        }
        let chol = linalg::cholesky(&self.q(lambda, mu))
            .ok_or_else(|| SolveError::Numerical("dual covariance not positive definite".into()))?;
        self.ctx
            .ch
            .h
            .iter()
            .map(|h| {
                linalg::normalized(&chol.solve(h))
                    .map(|w| linalg::align_phase(&w, h))
                    .ok_or_else(|| SolveError::Numerical("zero downlink channel".into()))
            })
            .collect()
    }

    /// Powers that make every SINR constraint tight for the given directions.
    pub fn allocate_powers(&self, dirs: &[CVec]) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
        let params = self.ctx.params;
        let (k, l) = (params.k, params.l);
        let f = &self.ctx.ch.f;
        let mut s = DMatrix::<f64>::zeros(k + l, k + l);
        for row in 0..k {
            for (col, w) in dirs.iter().enumerate() {
                s[(row, col)] = -linalg::quad(&self.ctx.h_tilde[row], w);
            }
            s[(row, row)] += linalg::inner_abs2(&self.ctx.ch.h[row], &dirs[row]) / self.rho_d[row];
            for j in 0..l {
                s[(row, k + j)] = -f[(j, row)].norm_sqr();
            }
        }
        for row in 0..l {
            for (col, w) in dirs.iter().enumerate() {
                s[(k + row, col)] = -linalg::quad(&self.lambda_mats[row], w);
            }
            for j in 0..l {
                s[(k + row, k + j)] = -self.vgv[row][j];
            }
            s[(k + row, k + row)] += self.vg2[row] / self.rho_u[row];
        }
        let mut rhs = DVector::<f64>::zeros(k + l);
        for i in 0..k {
            rhs[i] = params.sigma_d_sq[i];
        }
        for j in 0..l {
            rhs[k + j] = params.sigma_z_tilde_sq();
        }
        let p = linalg::solve_real(&s, &rhs)
            .ok_or_else(|| SolveError::Numerical("singular power allocation system".into()))?;
        if let Some(i) = p.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(SolveError::Numerical(format!(
                "power allocation returned {} for stream {i}",
                p[i]
            )));
        }
        Ok((
            p.rows(0, k).iter().copied().collect(),
            p.rows(k, l).iter().copied().collect(),
        ))
    }

    pub fn solve(&self) -> Result<P2Solution, SolveError> {
        let params = self.ctx.params;
        let (k, l) = (params.k, params.l);
        let r = self.run_from(&vec![0.0; k + l])?;
        match r.status {
            FixedPointStatus::Converged => {}
            FixedPointStatus::Diverged => {
                return Err(SolveError::infeasible(
                    "transmit-side duality",
                    format!("fixed point diverged after {} iterations", r.iterations),
                ))
            }
            FixedPointStatus::MaxIter => {
                log::warn!(
                    "transmit-side fixed point hit {} iterations (residual {:.3e})",
                    r.iterations,
                    r.final_residual
                );
                return Err(SolveError::infeasible(
                    "transmit-side duality",
                    "no convergence within the iteration cap",
                ));
            }
        }
        let (lambda, mu) = r.x.split_at(k);
        let directions = self.directions(lambda, mu)?;
        let (p_d, p_u) = self.allocate_powers(&directions)?;
        let w: Vec<CVec> = directions
            .iter()
            .zip(&p_d)
            .map(|(d, p)| d * c(p.sqrt(), 0.0))
            .collect();
        let dual_objective = lambda
            .iter()
            .zip(&params.sigma_d_sq)
            .map(|(x, s)| x * s)
            .sum::<f64>()
            + params.sigma_z_tilde_sq() * mu.iter().sum::<f64>();
        let primal_objective = w
            .iter()
            .map(|wk| linalg::quad(&self.dual.b_matrix, wk))
            .sum::<f64>()
            + p_u
                .iter()
                .zip(&self.dual.b_coeffs)
                .map(|(p, b)| p * b)
                .sum::<f64>();
        Ok(P2Solution {
            w,
            directions,
            p_d,
            p_u,
            lambda: lambda.to_vec(),
            mu: mu.to_vec(),
            iterations: r.iterations,
            dual_objective,
            primal_objective,
        })
    }

    pub fn receivers(&self) -> &[CVec] {
        &self.v
    }
}

/// `(lambda', mu')` of the joint virtual-power map.
pub fn fd_udd_map(
    lambda: &[f64],
    mu: &[f64],
    v: &[CVec],
    ctx: &AoContext,
    dual: &DualState,
) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    let prob = P2Problem::new(v, dual.clone(), ctx)?;
    let x: Vec<f64> = lambda.iter().chain(mu).copied().collect();
    let mut out = prob.map(&x);
    let mu_out = out.split_off(ctx.params.k);
    Ok((out, mu_out))
}

/// Transmit-side solution for fixed `v` and `nu`.
pub fn solve_p2(v: &[CVec], dual: &DualState, ctx: &AoContext) -> Result<P2Solution, SolveError> {
    P2Problem::new(v, dual.clone(), ctx)?.solve()
}

/// Transmit side with the ADC cap handled by the subgradient loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub w: Vec<CVec>,
    pub p_u: Vec<f64>,
    /// Multipliers at the returned iterate.
    pub nu: Vec<f64>,
    pub adc_power: Vec<f64>,
    /// Number of transmit-side solves.
    pub rounds: usize,
    pub p2: P2Solution,
}

impl InnerSolution {
    pub fn total_power(&self) -> f64 {
        self.p2.total_power()
    }
}

fn adc_violation(adc: &[f64], cap: Option<f64>) -> f64 {
    match cap {
        None => 0.0,
        Some(cap) => adc
            .iter()
            .map(|a| (a - cap) / cap)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0),
    }
}

/// Transmit-side problem including the ADC cap.
///
/// The multipliers follow `nu <- max(0, nu + s (P0 / cap^2) (adc - cap))`,
/// where `P0` is the power at `nu = 0`. The step is halved whenever the dual
/// value drops. The lowest-power iterate meeting the cap within
/// [`ADC_FEASIBILITY_TOL`] is returned.
pub fn solve_inner(v: &[CVec], ctx: &AoContext) -> Result<InnerSolution, SolveError> {
    let params = ctx.params;
    let adc_of = |s: &P2Solution| {
        let sol = TransceiverSolution {
            w: s.w.clone(),
            v: v.to_vec(),
            p_u: s.p_u.clone(),
        };
        metrics::adc_power_with(&sol, ctx.ch, &ctx.upsilons, params)
    };
    let mut nu = vec![0.0; params.n_t];
    let first = solve_p2(v, &DualState::from_nu(nu.clone(), ctx), ctx)?;
    let adc = adc_of(&first);
    let Some(cap) = params.gamma_adc else {
        return Ok(InnerSolution {
            w: first.w.clone(),
            p_u: first.p_u.clone(),
            nu,
            adc_power: adc,
            rounds: 1,
            p2: first,
        });
    };
    let mut scale = params.subgrad_step * first.total_power() / (cap * cap);
    let dual_value = |s: &P2Solution, nu: &[f64]| {
        s.primal_objective + nu.iter().sum::<f64>() * (params.sigma_z_sq - cap)
    };
    let mut last_dual = dual_value(&first, &nu);
    let mut best: Option<InnerSolution> = None;
    let mut current = (first, adc);
    let mut rounds = 1;
    loop {
        let (sol, adc) = &current;
        if adc_violation(adc, Some(cap)) <= ADC_FEASIBILITY_TOL
            && best
                .as_ref()
                .is_none_or(|b| sol.total_power() < b.total_power())
        {
            best = Some(InnerSolution {
                w: sol.w.clone(),
                p_u: sol.p_u.clone(),
                nu: nu.clone(),
                adc_power: adc.clone(),
                rounds,
                p2: sol.clone(),
            });
        }
        let next: Vec<f64> = nu
            .iter()
            .zip(adc)
            .map(|(x, a)| (x + scale * (a - cap)).max(0.0))
            .collect();
        let change = next
            .iter()
            .zip(&nu)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let size = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        let settled = change <= params.tol_subgrad * size || change == 0.0;
        if (settled && best.is_some()) || rounds >= params.max_iter_subgrad {
            break;
        }
        nu = next;
        let sol = solve_p2(v, &DualState::from_nu(nu.clone(), ctx), ctx)?;
        let d = dual_value(&sol, &nu);
        if d < last_dual {
            scale *= 0.5;
        }
        last_dual = d;
        let adc = adc_of(&sol);
        current = (sol, adc);
        rounds += 1;
    }
    match best {
        Some(mut b) => {
            b.rounds = rounds;
            Ok(b)
        }
        None => Err(SolveError::infeasible(
            "ADC subgradient",
            format!("no iterate met the ADC cap within {rounds} rounds"),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoStatus {
    /// Relative improvement fell below `tol_ao`.
    Converged,
    MaxIter,
    /// A candidate iterate would have increased the objective; it was discarded.
    ObjectiveIncrease,
    /// A later inner solve failed; the previous iterate was kept.
    InnerFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoTrace {
    /// Objective of every accepted iterate.
    pub objectives: Vec<f64>,
    /// Most negative constraint slack of every accepted iterate.
    pub worst_slack: Vec<f64>,
    /// Transmit-side solves per accepted iterate.
    pub inner_rounds: Vec<usize>,
    pub status: AoStatus,
    /// Objective of the discarded candidate when `status` is `ObjectiveIncrease`.
    pub rejected_objective: Option<f64>,
}

impl AoTrace {
    pub fn iterations(&self) -> usize {
        self.objectives.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoSolution {
    pub solution: TransceiverSolution,
    pub trace: AoTrace,
    pub inner: InnerSolution,
}

/// Alternating optimization from the zero-forcing receivers.
pub fn solve_ao(
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Result<AoSolution, SolveError> {
    solve_ao_limited(ch, corr, params, params.max_iter_ao)
}

/// Single transmit-side solve at the zero-forcing receivers.
pub fn solve_zf_oneshot(
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
) -> Result<AoSolution, SolveError> {
    solve_ao_limited(ch, corr, params, 1)
}

/// Alternating optimization with at most `max_iter` transmit-side solves.
pub fn solve_ao_limited(
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
    max_iter: usize,
) -> Result<AoSolution, SolveError> {
    let ctx = AoContext::new(ch, corr, params)?;
    let slack_of = |sol: &TransceiverSolution| {
        metrics::check_feasible(sol, ch, corr, params, 0.0).worst_violation
    };
    let mut v = zf_init(&ch.g);
    let mut inner = solve_inner(&v, &ctx)?;
    let mut solution = TransceiverSolution {
        w: inner.w.clone(),
        v: v.clone(),
        p_u: inner.p_u.clone(),
    };
    let mut trace = AoTrace {
        objectives: vec![solution.total_power()],
        worst_slack: vec![slack_of(&solution)],
        inner_rounds: vec![inner.rounds],
        status: AoStatus::MaxIter,
        rejected_objective: None,
    };
    while trace.iterations() < max_iter {
        let prev = solution.total_power();
        v = mmse_receive(&solution.w, &solution.p_u, ch, corr, params)?;
        let next = match solve_inner(&v, &ctx) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("alternating optimization stopped: {e}");
                trace.status = AoStatus::InnerFailure;
                break;
            }
        };
        let candidate = TransceiverSolution {
            w: next.w.clone(),
            v: v.clone(),
            p_u: next.p_u.clone(),
        };
        let obj = candidate.total_power();
        if obj > prev {
            trace.status = AoStatus::ObjectiveIncrease;
            trace.rejected_objective = Some(obj);
            break;
        }
        trace.objectives.push(obj);
        trace.worst_slack.push(slack_of(&candidate));
        trace.inner_rounds.push(next.rounds);
        solution = candidate;
        inner = next;
        if (prev - obj) <= params.tol_ao * prev {
            trace.status = AoStatus::Converged;
            break;
        }
    }
    Ok(AoSolution {
        solution,
        trace,
        inner,
    })
}
