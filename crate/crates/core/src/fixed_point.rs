//! Picard iteration for standard interference functions.
//!
//! A map `F` on the nonnegative orthant is a standard interference function
//! when it is positive, monotone (`x >= y => F(x) >= F(y)`) and scalable
//! (`a F(x) > F(a x)` for `a > 1`). If it has a fixed point, that point is
//! unique and `x <- F(x)` reaches it from any start; started at zero the
//! iterates increase monotonically. If it has none, the iterates blow up,
//! which is how the solvers in this crate detect infeasible SINR targets.

use thiserror::Error;

/// Floor of the denominator in the relative-change test.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Stop once `|x_{t+1} - x_t| / max(|x_t|, floor) <= tol` and the
    /// distance to the limit, extrapolated from the ratio of the last two
    /// steps, is below the same bound.
    pub tol: f64,
    pub max_iter: usize,
    /// Any component above this is treated as divergence.
    pub divergence_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointStatus {
    Converged,
    Diverged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub status: FixedPointStatus,
    /// Last iterate.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative change of the final step.
    pub final_residual: f64,
}

impl FixedPointResult {
    pub fn converged(&self) -> bool {
        self.status == FixedPointStatus::Converged
    }
}

/// A map that returned something no interference function can produce.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("map returned {value} at component {index} (iteration {iteration})")]
    InvalidValue {
        index: usize,
        value: f64,
        iteration: usize,
    },
    #[error("map changed the dimension from {expected} to {got}")]
    Dimension { expected: usize, got: usize },
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Iterates `x <- f(x)` from `x0`.
pub fn iterate<F>(
    mut f: F,
    x0: &[f64],
    cfg: &FixedPointConfig,
) -> Result<FixedPointResult, FixedPointError>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    if n == 0 {
        return Ok(FixedPointResult {
            status: FixedPointStatus::Converged,
            x,
            iterations: 0,
            final_residual: 0.0,
        });
    }
    let mut residual = f64::INFINITY;
    let mut last_step = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = f(&x);
        if next.len() != n {
            return Err(FixedPointError::Dimension {
                expected: n,
                got: next.len(),
            });
        }
        if let Some((index, &value)) = next
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v < 0.0)
        {
            return Err(FixedPointError::InvalidValue {
                index,
                value,
                iteration: it,
            });
        }
        let diff: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step = norm(&diff);
        let ratio = step / last_step;
        last_step = step;
        residual = step / norm(&x).max(RESIDUAL_FLOOR);
        let blown = next
            .iter()
            .any(|v| *v > cfg.divergence_cap || v.is_infinite());
        x = next;
        if blown {
            return Ok(FixedPointResult {
                status: FixedPointStatus::Diverged,
                x,
                iterations: it,
                final_residual: residual,
            });
        }
        let settled =
            residual == 0.0 || (ratio < 1.0 && residual * ratio / (1.0 - ratio) <= cfg.tol);
        if residual <= cfg.tol && settled {
            return Ok(FixedPointResult {
                status: FixedPointStatus::Converged,
                x,
                iterations: it,
                final_residual: residual,
            });
        }
    }
    Ok(FixedPointResult {
        status: FixedPointStatus::MaxIter,
        x,
        iterations: cfg.max_iter,
        final_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FixedPointConfig {
        FixedPointConfig {
            tol: 1e-12,
            max_iter: 10_000,
            divergence_cap: 1e6,
        }
    }

    #[test]
    fn affine_contraction_converges() {
        let r = iterate(|x| vec![0.5 * x[0] + 1.0], &[0.0], &cfg()).unwrap();
        assert!(r.converged());
        assert!((r.x[0] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn expansive_map_diverges() {
        let r = iterate(|x| vec![2.0 * x[0] + 1.0], &[1.0], &cfg()).unwrap();
        assert_eq!(r.status, FixedPointStatus::Diverged);
        assert!(r.x[0] > 1e6);
    }

    #[test]
    fn slow_map_hits_iteration_cap() {
        let mut c = cfg();
        c.max_iter = 5;
        let r = iterate(|x| vec![0.999 * x[0] + 1.0], &[0.0], &c).unwrap();
        assert_eq!(r.status, FixedPointStatus::MaxIter);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn negative_output_is_an_error() {
        let err = iterate(|x| vec![x[0] - 1.0], &[0.0], &cfg()).unwrap_err();
        assert!(matches!(
            err,
            FixedPointError::InvalidValue { index: 0, .. }
        ));
        let err = iterate(|_| vec![f64::NAN], &[0.0], &cfg()).unwrap_err();
        assert!(matches!(err, FixedPointError::InvalidValue { .. }));
    }

    #[test]
    fn empty_vector_is_trivially_converged() {
        let r = iterate(|_| Vec::new(), &[], &cfg()).unwrap();
        assert!(r.converged());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn single_user_uplink_map_reaches_closed_form() {
        // p <- rho / (g^H (p g g^H + s I)^{-1} g) with |g|^2 = a reduces to
        // rho (s + p a) / a, whose fixed point is gamma s / a.
        let (gamma, s, a) = (3.0, 0.2, 1.7);
        let rho = gamma / (1.0 + gamma);
        let r = iterate(|p| vec![rho * (s + p[0] * a) / a], &[0.0], &cfg()).unwrap();
        assert!(r.converged());
        assert!((r.x[0] - gamma * s / a).abs() < 1e-10);
    }
}
