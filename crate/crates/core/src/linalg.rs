//! Small complex linear-algebra helpers shared by the solvers.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real part of `x^H A x`.
pub fn quad(a: &CMat, x: &CVec) -> f64 {
    let n = x.len();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let mut col = C64::new(0.0, 0.0);
        for i in 0..n {
            col += x[i].conj() * a[(i, j)];
        }
        acc += col * xj;
    }
    acc.re
}

/// `|a^H b|^2`.
pub fn inner_abs2(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

pub fn outer(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// `diag(|x|^2)`.
pub fn diag_abs2(x: &CVec) -> CMat {
    CMat::from_diagonal(&x.map(|z| C64::new(z.norm_sqr(), 0.0)))
}

/// Keeps only the diagonal of `a`.
pub fn diag_part(a: &CMat) -> CMat {
    CMat::from_diagonal(&a.diagonal())
}

pub fn real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        d.len(),
        d.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Symmetrizes `a` in place: `(A + A^H)/2`.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let mut sym = a.clone();
    hermitize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = a.nrows();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn lambda_max(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = eigh(a);
    vals[vals.len() - 1]
}

pub fn lambda_min(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    eigh(a).0[0]
}

/// Cholesky factor of a Hermitian positive-definite matrix, or `None`.
pub fn cholesky(a: &CMat) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    Cholesky::new(a.clone())
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMat, b: &CVec) -> Option<CVec> {
    cholesky(a).map(|ch| ch.solve(b))
}

/// Factor `A = U U^H` of a Hermitian PSD matrix, negative eigenvalues clipped.
pub fn psd_factor(a: &CMat) -> CMat {
    let (vals, vecs) = eigh(a);
    let mut u = vecs;
    for (j, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        u.column_mut(j).scale_mut(s);
    }
    u
}

/// Unit-norm copy of `x`. Returns `None` for the zero vector.
pub fn normalized(x: &CVec) -> Option<CVec> {
    let n = x.norm();
    if n > 0.0 && n.is_finite() {
        Some(x.unscale(n))
    } else {
        None
    }
}

/// Rotates `x` so that `h^H x` is real and nonnegative.
pub fn align_phase(x: &CVec, h: &CVec) -> CVec {
    let ip = h.dotc(x);
    if ip.norm() == 0.0 {
        return x.clone();
    }
    let phase = ip.conj() / ip.norm();
    x * phase
}

/// Max-entry norm of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Solves a small real linear system with partial-pivot LU.
pub fn solve_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}
