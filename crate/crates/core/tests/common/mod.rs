#![allow(dead_code)]

use fdtrx::linalg::{c, CMat, CVec};
use fdtrx::params::{
    build_si_correlation, complex_gaussian, lmmse_error_correlation, sample_realization,
};
use fdtrx::{ChannelRealization, SiCorrelation, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Monte-Carlo draws of every sampling oracle.
pub const DRAWS: usize = 100_000;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn cvec<R: Rng>(rng: &mut R, n: usize, var: f64) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng, var))
}

pub fn cmat<R: Rng>(rng: &mut R, r: usize, cols: usize, var: f64) -> CMat {
    CMat::from_fn(r, cols, |_, _| complex_gaussian(rng, var))
}

/// Random Hermitian PSD matrix `B B^H / m` scaled to unit mean diagonal times `scale`.
pub fn random_psd<R: Rng>(rng: &mut R, m: usize, scale: f64) -> CMat {
    let b = cmat(rng, m, m, 1.0);
    let mut a = &b * b.adjoint() * c(scale / m as f64, 0.0);
    fdtrx::linalg::hermitize(&mut a);
    a
}

/// Correlated SI error statistics of size `n^2`.
pub fn random_corr<R: Rng>(rng: &mut R, n: usize, scale: f64, beta2: f64) -> SiCorrelation {
    SiCorrelation::from_matrix(random_psd(rng, n * n, scale), beta2).unwrap()
}

/// The same statistics with the i.i.d. shortcut disabled.
pub fn without_shortcut(corr: &SiCorrelation) -> SiCorrelation {
    let mut out = corr.clone();
    out.iid_variance = None;
    out
}

/// Default system with every user at `gamma_db`.
pub fn system(n_t: usize, k: usize, l: usize, gamma_db: f64) -> SystemParams {
    SystemParams::with_defaults(n_t, k, l, fdtrx::params::db_to_lin(gamma_db))
}

/// Structured LMMSE error correlation of the default SI channel.
pub fn structured(params: &SystemParams) -> SiCorrelation {
    lmmse_error_correlation(&build_si_correlation(params), params).unwrap()
}

/// I.i.d. error at the diagonal level of the structured model.
pub fn iid_like(params: &SystemParams) -> SiCorrelation {
    let s = structured(params);
    let n2 = s.r_phi0.nrows();
    let mean = (0..n2).map(|i| s.r_phi0[(i, i)].re).sum::<f64>() / n2 as f64;
    SiCorrelation::iid(params.n_t, mean, params.beta2)
}

pub fn realization(params: &SystemParams, seed: u64) -> ChannelRealization {
    sample_realization(params, seed)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn vec_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    num / den
}

pub fn frob_rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Unit-norm transmit directions on a `(theta, phi)` grid of `C^2`.
pub fn direction_grid(steps: usize) -> impl Iterator<Item = CVec> {
    (0..=steps).flat_map(move |a| {
        let th = std::f64::consts::FRAC_PI_2 * a as f64 / steps as f64;
        (0..steps).map(move |b| {
            let ph = std::f64::consts::TAU * b as f64 / steps as f64;
            CVec::from_vec(vec![c(th.cos(), 0.0), c(ph.cos(), ph.sin()) * th.sin()])
        })
    })
}

/// Smallest index in `0..=steps` where `ok` holds, assuming `ok` is monotone.
fn first_true(steps: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    if !ok(steps) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, steps);
    if ok(0) {
        return Some(0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Downlink power meeting the target along `d` for interference-plus-noise
/// `base` at the user, or `None` if the direction cannot reach it.
fn dl_power_along(h: &CVec, d: &CVec, gamma: f64, beta1: f64, base: f64) -> Option<f64> {
    let gain = fdtrx::linalg::inner_abs2(h, d);
    let txn: f64 = (0..h.len())
        .map(|m| h[m].norm_sqr() * d[m].norm_sqr())
        .sum();
    let denom = gain - gamma * beta1 * txn;
    (denom > 0.0).then(|| gamma * base / denom)
}

/// Exhaustive search for one downlink and one uplink user over transmit
/// directions and a geometric uplink power grid (relative pitch `pitch`),
/// with the receive beamformer fixed to `v`. Returns the lowest total power.
pub fn grid_fixed_receiver(
    ch: &ChannelRealization,
    corr: &SiCorrelation,
    params: &SystemParams,
    v: &CVec,
    pitch: f64,
    dir_steps: usize,
) -> f64 {
    let (h, g, f2) = (&ch.h[0], &ch.g[0], ch.f[(0, 0)].norm_sqr());
    let (gd, gu) = (params.gamma_d[0], params.gamma_u[0]);
    let d2b2 = params.delta2 * params.beta2;
    let lm = fdtrx::metrics::lambda_mat(v, corr, params);
    let own = fdtrx::linalg::inner_abs2(v, g);
    let own_imp: f64 = (0..v.len())
        .map(|m| v[m].norm_sqr() * g[m].norm_sqr())
        .sum::<f64>()
        * d2b2;
    let noise = params.sigma_z_tilde_sq() * v.norm_squared();
    let p_lb = gu * noise / own;
    let steps = ((1e4f64).ln() / (1.0 + pitch).ln()).ceil() as usize;
    let mut best = f64::INFINITY;
    for d in direction_grid(dir_steps) {
        let Some(unit) = dl_power_along(h, &d, gd, params.beta1, 1.0) else {
            continue;
        };
        let si = fdtrx::linalg::quad(&lm, &d);
        let p_at = |i: usize| p_lb * (1.0 + pitch).powi(i as i32);
        let q_at = |p: f64| unit * (p * f2 + params.sigma_d_sq[0]);
        let ok = |i: usize| {
            let p = p_at(i);
            p * own >= gu * (p * own_imp + q_at(p) * si + noise)
        };
        if let Some(i) = first_true(steps, ok) {
            let p = p_at(i);
            best = best.min(p + q_at(p));
        }
    }
    best
}

/// Exhaustive search for one downlink and one uplink user with i.i.d. SI
/// error and the MMSE receiver, over transmit directions and a geometric
/// uplink power grid. Returns the lowest total power.
pub fn grid_iid(
    ch: &ChannelRealization,
    sigma2: f64,
    params: &SystemParams,
    pitch: f64,
    dir_steps: usize,
) -> f64 {
    let (h, g, f2) = (&ch.h[0], &ch.g[0], ch.f[(0, 0)].norm_sqr());
    let (gd, gu) = (params.gamma_d[0], params.gamma_u[0]);
    let (d1, d2, b1, b2) = (params.delta1, params.delta2, params.beta1, params.beta2);
    let xi = (d1 + d2 * b1 + d2 * b2 * (1.0 + b1)) * sigma2;
    // The best direction does not depend on the uplink power.
    let unit = direction_grid(dir_steps)
        .filter_map(|d| dl_power_along(h, &d, gd, b1, 1.0))
        .fold(f64::INFINITY, f64::min);
    let q_at = |p: f64| unit * (p * f2 + params.sigma_d_sq[0]);
    let sinr = |p: f64| -> f64 {
        let floor = xi * q_at(p) + params.sigma_z_tilde_sq();
        (0..g.len())
            .map(|m| p * g[m].norm_sqr() / (p * d2 * b2 * g[m].norm_sqr() + floor))
            .sum()
    };
    let p_lb = gu * params.sigma_z_tilde_sq() / g.norm_squared();
    let steps = ((1e4f64).ln() / (1.0 + pitch).ln()).ceil() as usize;
    let p_at = |i: usize| p_lb * (1.0 + pitch).powi(i as i32);
    match first_true(steps, |i| sinr(p_at(i)) >= gu) {
        Some(i) => p_at(i) + q_at(p_at(i)),
        None => f64::INFINITY,
    }
}

/// Impairment levels large enough for every term to matter.
pub fn loud_params(n_t: usize, k: usize, l: usize) -> SystemParams {
    let mut p = system(n_t, k, l, 3.0);
    p.delta1 = 0.3;
    p.delta2 = 0.5;
    p.beta1 = 0.2;
    p.beta2 = 0.1;
    p.sigma_z_sq = 0.3;
    p.sigma_d_sq = vec![0.2; k];
    p
}

/// Correlation with a known square-root factor, so sampling does not go
/// through the library.
pub struct Factored {
    pub n: usize,
    factor: CMat,
    pub corr: SiCorrelation,
}

impl Factored {
    pub fn new<R: Rng>(rng: &mut R, n: usize, beta2: f64) -> Self {
        let m = n * n;
        let factor = cmat(rng, m, m, 1.0) * c(1.0 / (m as f64).sqrt(), 0.0);
        let r = &factor * factor.adjoint();
        let corr = SiCorrelation::from_matrix(r, beta2).unwrap();
        Factored { n, factor, corr }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> CMat {
        let m = self.n * self.n;
        let v = &self.factor * cvec(rng, m, 1.0);
        // vec() stacks columns.
        CMat::from_fn(self.n, self.n, |i, j| v[j * self.n + i])
    }
}

/// Residual SI power after receive beamforming, averaged over the error and
/// conditioned on everything else: linear leakage, transmit-chain noise
/// through the SI channel, and receive-chain noise driven by the ADC input.
pub fn sampled_residual_si<R: Rng>(
    f: &Factored,
    w: &[CVec],
    v: &CVec,
    p: &SystemParams,
    rng: &mut R,
) -> f64 {
    let n = f.n;
    let d: Vec<f64> = (0..n)
        .map(|m| w.iter().map(|x| x[m].norm_sqr()).sum())
        .collect();
    let (mut lin, mut txn) = (0.0, 0.0);
    let mut adc = vec![0.0; n];
    for _ in 0..DRAWS {
        let phi = f.draw(rng);
        let a = v.adjoint() * &phi;
        lin += w.iter().map(|x| (&a * x)[(0, 0)].norm_sqr()).sum::<f64>();
        txn += (0..n).map(|m| a[(0, m)].norm_sqr() * d[m]).sum::<f64>();
        for (row, slot) in adc.iter_mut().enumerate() {
            *slot += w
                .iter()
                .map(|x| (phi.row(row) * x)[(0, 0)].norm_sqr())
                .sum::<f64>()
                + p.beta1 * (0..n).map(|m| phi[(row, m)].norm_sqr() * d[m]).sum::<f64>();
        }
    }
    let k = DRAWS as f64;
    let rx: f64 = (0..n).map(|m| v[m].norm_sqr() * adc[m] / k).sum();
    p.delta1 * lin / k + p.delta2 * p.beta1 * txn / k + p.delta2 * p.beta2 * rx
}

/// Per-antenna ADC input power and its SI share, averaged over full draws of
/// the received signal: uplink symbols, downlink symbols, transmit-chain
/// noise, the SI error and receiver noise.
pub fn sampled_adc<R: Rng>(
    f: &Factored,
    sol: &fdtrx::TransceiverSolution,
    ch: &ChannelRealization,
    p: &SystemParams,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let n = f.n;
    let d: Vec<f64> = (0..n)
        .map(|m| sol.w.iter().map(|x| x[m].norm_sqr()).sum())
        .collect();
    let mut total = vec![0.0; n];
    let mut si_only = vec![0.0; n];
    for _ in 0..DRAWS {
        let phi = f.draw(rng);
        let mut x = CVec::zeros(n);
        for w in &sol.w {
            x += w * complex_gaussian(rng, 1.0);
        }
        let u_tx = CVec::from_fn(n, |m, _| complex_gaussian(rng, p.beta1 * d[m]));
        let si = &phi * (x + u_tx);
        let mut y = si.clone();
        for (g, pu) in ch.g.iter().zip(&sol.p_u) {
            y += g * (complex_gaussian(rng, 1.0) * pu.sqrt());
        }
        y += cvec(rng, n, p.sigma_z_sq);
        for m in 0..n {
            total[m] += y[m].norm_sqr() / DRAWS as f64;
            si_only[m] += si[m].norm_sqr() / DRAWS as f64;
        }
    }
    (total, si_only)
}

/// A random instance with unit-scale channels for the sampling oracles.
pub fn sampling_instance<R: Rng>(
    rng: &mut R,
    n: usize,
    k: usize,
    l: usize,
) -> (
    SystemParams,
    Factored,
    ChannelRealization,
    fdtrx::TransceiverSolution,
) {
    let p = loud_params(n, k, l);
    let f = Factored::new(rng, n, p.beta2);
    let ch = ChannelRealization {
        h: (0..k).map(|_| cvec(rng, n, 1.0)).collect(),
        g: (0..l).map(|_| cvec(rng, n, 1.0)).collect(),
        f: cmat(rng, l, k, 1.0),
        seed: 0,
    };
    let sol = fdtrx::TransceiverSolution {
        w: (0..k).map(|_| cvec(rng, n, 1.0)).collect(),
        v: (0..l)
            .map(|_| fdtrx::linalg::normalized(&cvec(rng, n, 1.0)).unwrap())
            .collect(),
        p_u: (0..l).map(|_| rng.random_range(0.2..1.0)).collect(),
    };
    (p, f, ch, sol)
}
