//! Half-duplex building blocks: the uplink power/receive-beamformer fixed
//! point and the downlink solver through its virtual uplink.
//!
//! Both are also the inner stages of the bisection solver, which calls them
//! with inflated noise levels and impaired uplink gain matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;
use crate::fixed_point::{self, FixedPointResult, FixedPointStatus};
use crate::linalg::{self, c, CMat, CVec};
use crate::metrics::{g_tilde, h_tilde};
use crate::params::SystemParams;

/// Gain matrix each uplink user contributes to the receive covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlGain {
    /// `g g^H`.
    Plain,
    /// `g g^H + delta2 beta2 diag(|g|^2)`.
    Impaired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlSolution {
    pub p: Vec<f64>,
    /// Unit-norm receive beamformers.
    pub v: Vec<CVec>,
    pub iterations: usize,
}

fn rho(gamma: f64) -> f64 {
    gamma / (1.0 + gamma)
}

fn status_error(stage: &'static str, r: &FixedPointResult) -> SolveError {
    match r.status {
        FixedPointStatus::Diverged => SolveError::infeasible(
            stage,
            format!("fixed point diverged after {} iterations", r.iterations),
        ),
        _ => {
            log::warn!(
                "{stage}: no convergence within {} iterations (residual {:.3e})",
                r.iterations,
                r.final_residual
            );
            SolveError::infeasible(
                stage,
                format!("no convergence within {} iterations", r.iterations),
            )
        }
    }
}

/// Uplink power-control problem `p_l <- rho_l / (g_l^H M(p)^{-1} g_l)` with
/// `M(p) = sum_j p_j A_j + noise I`.
#[derive(Debug, Clone)]
pub struct UlProblem {
    g: Vec<CVec>,
    gains: Vec<CMat>,
    rho: Vec<f64>,
    noise: f64,
    n_t: usize,
}

impl UlProblem {
    pub fn new(
        g: &[CVec],
        gamma_u: &[f64],
        noise: f64,
        mode: UlGain,
        params: &SystemParams,
    ) -> Result<Self, SolveError> {
        if g.len() != gamma_u.len() {
            return Err(crate::error::ParamError::Length {
                field: "gamma_u",
                expected: g.len(),
                got: gamma_u.len(),
            }
            .into());
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(crate::error::ParamError::Range {
                field: "noise",
                requirement: "positive and finite",
                value: noise,
            }
            .into());
        }
        let d2b2 = params.delta2 * params.beta2;
        let gains = g
            .iter()
            .map(|gj| match mode {
                UlGain::Plain => linalg::outer(gj),
                UlGain::Impaired => g_tilde(gj, d2b2),
            })
            .collect();
        Ok(UlProblem {
            g: g.to_vec(),
            gains,
            rho: gamma_u.iter().map(|&x| rho(x)).collect(),
            noise,
            n_t: params.n_t,
        })
    }

    fn covariance(&self, p: &[f64]) -> CMat {
        let mut m = CMat::identity(self.n_t, self.n_t) * c(self.noise, 0.0);
        for (pj, a) in p.iter().zip(&self.gains) {
            if *pj != 0.0 {
                m += a * c(*pj, 0.0);
            }
        }
        m
    }

    /// One application of the interference map.
    pub fn map(&self, p: &[f64]) -> Vec<f64> {
        let chol = linalg::cholesky(&self.covariance(p)).expect("noise keeps M positive definite");
        self.g
            .iter()
            .zip(&self.rho)
            .map(|(g, r)| {
                let q = g.dotc(&chol.solve(g)).re;
                if q > 0.0 {
                    r / q
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    /// Receive beamformers `M(p)^{-1} g_l`, normalized.
    pub fn beamformers(&self, p: &[f64]) -> Result<Vec<CVec>, SolveError> {
        let chol = linalg::cholesky(&self.covariance(p)).ok_or_else(|| {
            SolveError::Numerical("uplink covariance not positive definite".into())
        })?;
        self.g
            .iter()
            .map(|g| {
                linalg::normalized(&chol.solve(g))
                    .ok_or_else(|| SolveError::Numerical("zero uplink channel".into()))
            })
            .collect()
    }

    pub fn run_from(
        &self,
        x0: &[f64],
        params: &SystemParams,
    ) -> Result<FixedPointResult, SolveError> {
        let reference = self
            .map(&vec![0.0; self.g.len()])
            .into_iter()
            .fold(0.0, f64::max);
        Ok(fixed_point::iterate(
            |p| self.map(p),
            x0,
            &params.fp_config(reference),
        )?)
    }

    /// Powers making every constraint hold with equality for fixed `v`.
    fn tight_powers(&self, v: &[CVec]) -> Option<Vec<f64>> {
        let l = self.g.len();
        let mut a = DMatrix::<f64>::zeros(l, l);
        for (i, vi) in v.iter().enumerate() {
            for (j, gj) in self.gains.iter().enumerate() {
                a[(i, j)] = -linalg::quad(gj, vi);
            }
            a[(i, i)] += linalg::inner_abs2(vi, &self.g[i]) / self.rho[i];
        }
        let rhs = DVector::from_element(l, self.noise);
        let p = linalg::solve_real(&a, &rhs)?;
        p.iter()
            .all(|x| *x > 0.0 && x.is_finite())
            .then(|| p.iter().copied().collect())
    }

    pub fn solve(&self, params: &SystemParams) -> Result<UlSolution, SolveError> {
        let l = self.g.len();
        if l == 0 {
            return Ok(UlSolution {
                p: vec![],
                v: vec![],
                iterations: 0,
            });
        }
        let r = self.run_from(&vec![0.0; l], params)?;
        if !r.converged() {
            return Err(status_error("uplink power control", &r));
        }
        let v = self.beamformers(&r.x)?;
        let p = self.tight_powers(&v).unwrap_or(r.x);
        Ok(UlSolution {
            p,
            v,
            iterations: r.iterations,
        })
    }
}

/// Minimum-power uplink powers and MMSE receivers meeting `gamma_u` with
/// white receiver noise `noise`.
pub fn solve_hd_ul(
    g: &[CVec],
    gamma_u: &[f64],
    noise: f64,
    mode: UlGain,
    params: &SystemParams,
) -> Result<UlSolution, SolveError> {
    UlProblem::new(g, gamma_u, noise, mode, params)?.solve(params)
}

/// Optional replacement of the identity noise covariance in the virtual uplink.
#[derive(Debug, Clone, Default)]
pub struct DlContext {
    /// Weighting matrix of the downlink power; `None` means `I`.
    pub base: Option<CMat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlSolution {
    /// Beamformers including power.
    pub w: Vec<CVec>,
    /// Unit-norm directions.
    pub directions: Vec<CVec>,
    /// Virtual-uplink powers.
    pub lambda: Vec<f64>,
    pub powers: Vec<f64>,
    pub iterations: usize,
}

impl DlSolution {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Virtual uplink of the downlink problem:
/// `lambda_i <- rho_i / (h_i^H (sum_k lambda_k Ht_k + B)^{-1} h_i)`.
#[derive(Debug, Clone)]
pub struct DlProblem {
    h: Vec<CVec>,
    h_tilde: Vec<CMat>,
    rho: Vec<f64>,
    noise: Vec<f64>,
    base: CMat,
}

impl DlProblem {
    pub fn new(
        h: &[CVec],
        gamma_d: &[f64],
        noise: &[f64],
        params: &SystemParams,
        ctx: &DlContext,
    ) -> Result<Self, SolveError> {
        use crate::error::ParamError;
        if gamma_d.len() != h.len() {
            return Err(ParamError::Length {
                field: "gamma_d",
                expected: h.len(),
                got: gamma_d.len(),
            }
            .into());
        }
        if noise.len() != h.len() {
            return Err(ParamError::Length {
                field: "noise",
                expected: h.len(),
                got: noise.len(),
            }
            .into());
        }
        if let Some(&bad) = noise.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(ParamError::Range {
                field: "noise",
                requirement: "positive and finite",
                value: bad,
            }
            .into());
        }
        let n = params.n_t;
        let base = ctx.base.clone().unwrap_or_else(|| CMat::identity(n, n));
        if base.nrows() != n || base.ncols() != n {
            return Err(ParamError::Dimension("downlink base matrix".into()).into());
        }
        Ok(DlProblem {
            h: h.to_vec(),
            h_tilde: h.iter().map(|hk| h_tilde(hk, params.beta1)).collect(),
            rho: gamma_d.iter().map(|&x| rho(x)).collect(),
            noise: noise.to_vec(),
            base,
        })
    }

    fn q(&self, lambda: &[f64]) -> CMat {
        let mut q = self.base.clone();
        for (l, ht) in lambda.iter().zip(&self.h_tilde) {
            if *l != 0.0 {
                q += ht * c(*l, 0.0);
            }
        }
        q
    }

    pub fn map(&self, lambda: &[f64]) -> Vec<f64> {
        let chol = linalg::cholesky(&self.q(lambda)).expect("base keeps Q positive definite");
        self.h
            .iter()
            .zip(&self.rho)
            .map(|(h, r)| {
                let q = h.dotc(&chol.solve(h)).re;
                if q > 0.0 {
                    r / q
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    pub fn run_from(
        &self,
        x0: &[f64],
        params: &SystemParams,
    ) -> Result<FixedPointResult, SolveError> {
        let reference = self
            .map(&vec![0.0; self.h.len()])
            .into_iter()
            .fold(0.0, f64::max);
        Ok(fixed_point::iterate(
            |x| self.map(x),
            x0,
            &params.fp_config(reference),
        )?)
    }

    /// Directions `Q^{-1} h_k`, normalized with `h_k^H w_k` real positive.
    pub fn directions(&self, lambda: &[f64]) -> Result<Vec<CVec>, SolveError> {
        let chol = linalg::cholesky(&self.q(lambda)).ok_or_else(|| {
            SolveError::Numerical("virtual uplink covariance not positive definite".into())
        })?;
        self.h
            .iter()
            .map(|h| {
                linalg::normalized(&chol.solve(h))
                    .map(|w| linalg::align_phase(&w, h))
                    .ok_or_else(|| SolveError::Numerical("zero downlink channel".into()))
            })
            .collect()
    }

    /// Downlink powers making every SINR constraint tight along `dirs`.
    pub fn powers(&self, dirs: &[CVec]) -> Result<Vec<f64>, SolveError> {
        let k = self.h.len();
        let mut s = DMatrix::<f64>::zeros(k, k);
        for (row, ht) in self.h_tilde.iter().enumerate() {
            for (col, w) in dirs.iter().enumerate() {
                s[(row, col)] = -linalg::quad(ht, w);
            }
            s[(row, row)] += linalg::inner_abs2(&self.h[row], &dirs[row]) / self.rho[row];
        }
        let rhs = DVector::from_column_slice(&self.noise);
        let p = linalg::solve_real(&s, &rhs).ok_or_else(|| {
            SolveError::infeasible("downlink power allocation", "singular power system")
        })?;
        if p.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(SolveError::infeasible(
                "downlink power allocation",
                "nonpositive power",
            ));
        }
        Ok(p.iter().copied().collect())
    }

    pub fn solve(&self, params: &SystemParams) -> Result<DlSolution, SolveError> {
        let k = self.h.len();
        if k == 0 {
            return Ok(DlSolution {
                w: vec![],
                directions: vec![],
                lambda: vec![],
                powers: vec![],
                iterations: 0,
            });
        }
        let r = self.run_from(&vec![0.0; k], params)?;
        if !r.converged() {
            return Err(status_error("downlink virtual uplink", &r));
        }
        let directions = self.directions(&r.x)?;
        let powers = self.powers(&directions)?;
        let w = directions
            .iter()
            .zip(&powers)
            .map(|(d, p)| d * c(p.sqrt(), 0.0))
            .collect();
        Ok(DlSolution {
            w,
            directions,
            lambda: r.x,
            powers,
            iterations: r.iterations,
        })
    }
}

/// Minimum-power downlink beamformers meeting `gamma_d` with per-user noise
/// `noise` (transmit-chain noise through `params.beta1`).
pub fn solve_hd_dl(
    h: &[CVec],
    gamma_d: &[f64],
    noise: &[f64],
    params: &SystemParams,
    ctx: &DlContext,
) -> Result<DlSolution, SolveError> {
    DlProblem::new(h, gamma_d, noise, params, ctx)?.solve(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{db_to_lin, sample_realization};

    fn cv(v: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&(a, b)| c(a, b)))
    }

    #[test]
    fn single_uplink_user_closed_form() {
        let p = SystemParams::with_defaults(3, 0, 1, 2.0);
        let g = cv(&[(1.0, 0.5), (-0.3, 0.2), (0.0, 0.7)]);
        let sol = solve_hd_ul(std::slice::from_ref(&g), &[2.0], 0.3, UlGain::Plain, &p).unwrap();
        let expected = 2.0 * 0.3 / g.norm_squared();
        assert!((sol.p[0] - expected).abs() <= 1e-10 * expected);
        let mf = g.unscale(g.norm());
        assert!((sol.v[0].dotc(&mf).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_uplink_users_decouple() {
        let p = SystemParams::with_defaults(2, 0, 2, 1.0);
        let g = vec![cv(&[(2.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (0.0, 0.5)])];
        let sol = solve_hd_ul(&g, &[1.0, 3.0], 0.1, UlGain::Plain, &p).unwrap();
        assert!((sol.p[0] - 1.0 * 0.1 / 4.0).abs() < 1e-12);
        assert!((sol.p[1] - 3.0 * 0.1 / 0.25).abs() < 1e-10);
    }

    #[test]
    fn identical_uplink_channels_beyond_antenna_count_are_infeasible() {
        let p = SystemParams::with_defaults(1, 0, 2, 1.0);
        let g = vec![cv(&[(1.0, 0.0)]); 2];
        let err = solve_hd_ul(&g, &[1.0, 1.0], 1.0, UlGain::Plain, &p).unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn single_downlink_user_is_mrt() {
        let mut p = SystemParams::with_defaults(2, 1, 0, 3.0);
        p.beta1 = 0.0;
        let h = cv(&[(0.4, -0.1), (0.9, 0.3)]);
        let sol = solve_hd_dl(
            std::slice::from_ref(&h),
            &[3.0],
            &[0.2],
            &p,
            &DlContext::default(),
        )
        .unwrap();
        let expected = 3.0 * 0.2 / h.norm_squared();
        assert!((sol.powers[0] - expected).abs() <= 1e-10 * expected);
        let ip = h.dotc(&sol.directions[0]);
        assert!(ip.im.abs() < 1e-12 && (ip.re - h.norm()).abs() < 1e-12);
    }

    #[test]
    fn downlink_duality_holds() {
        let p = SystemParams::with_defaults(4, 3, 0, db_to_lin(5.0));
        let ch = sample_realization(&p, 21);
        let noise = p.sigma_d_sq.clone();
        let sol = solve_hd_dl(&ch.h, &p.gamma_d, &noise, &p, &DlContext::default()).unwrap();
        let dual: f64 = sol.lambda.iter().zip(&noise).map(|(l, s)| l * s).sum();
        assert!((dual - sol.total_power()).abs() <= 1e-6 * dual);
    }

    #[test]
    fn empty_problems_are_trivial() {
        let p = SystemParams::with_defaults(2, 0, 0, 1.0);
        assert!(solve_hd_ul(&[], &[], 1.0, UlGain::Impaired, &p)
            .unwrap()
            .p
            .is_empty());
        assert!(solve_hd_dl(&[], &[], &[], &p, &DlContext::default())
            .unwrap()
            .w
            .is_empty());
    }

    #[test]
    fn bad_noise_rejected() {
        let p = SystemParams::with_defaults(1, 1, 1, 1.0);
        let g = vec![cv(&[(1.0, 0.0)])];
        assert!(matches!(
            solve_hd_ul(&g, &[1.0], 0.0, UlGain::Plain, &p),
            Err(SolveError::Params(_))
        ));
        assert!(matches!(
            solve_hd_dl(&g, &[1.0], &[-1.0], &p, &DlContext::default()),
            Err(SolveError::Params(_))
        ));
    }
}
