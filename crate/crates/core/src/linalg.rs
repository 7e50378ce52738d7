//! Dense complex linear-algebra helpers.
//!
//! Matrices are `nalgebra` column-major [`CMatrix`] values. The hot-loop kernels
//! work on raw column slices so the coordinate-descent inner loop stays free of
//! bounds-checked views and temporary allocations.

use alloc::format;
use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Circularly-symmetric complex Gaussian sample with the given variance.
///
/// Real and imaginary parts are independent normals with variance `variance / 2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance * 0.5).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Matrix of i.i.d. CN(0, variance) entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = complex_normal(rng, variance);
    }
    m
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let mut h = m.clone();
    symmetrize_in_place(&mut h);
    h
}

pub fn symmetrize_in_place(m: &mut CMatrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for j in 0..n {
        let d = m[(j, j)];
        m[(j, j)] = Complex64::new(d.re, 0.0);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm = frobenius_norm(b);
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// Largest deviation from unitarity, `||u u^H - I||_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = u * u.adjoint();
    let n = u.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            acc += (prod[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// The complex factorization takes square roots of pivots without checking
/// their sign, so the diagonal of the factor is checked afterwards.
pub fn cholesky_hpd(m: &CMatrix) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    let not_pd = || Error::Numerical(format!("matrix of order {} is not positive definite", m.nrows()));
    let chol = Cholesky::new(hermitian_part(m)).ok_or_else(not_pd)?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let p = l[(i, i)];
        if !(p.re > 0.0) || !p.re.is_finite() || p.im.abs() > 1e-8 * p.re {
            return Err(not_pd());
        }
    }
    Ok(chol)
}

/// `log det(m)` of a Hermitian positive-definite matrix.
pub fn log_det_hpd(m: &CMatrix) -> Result<f64> {
    let chol = cholesky_hpd(m)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        acc += l[(i, i)].re.ln();
    }
    let value = 2.0 * acc;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!("log-determinant is {value}")))
    }
}

/// Inverse of a Hermitian positive-definite matrix, symmetrized.
pub fn inverse_hpd(m: &CMatrix) -> Result<CMatrix> {
    let mut inv = cholesky_hpd(m)?.inverse();
    symmetrize_in_place(&mut inv);
    Ok(inv)
}

/// `out = m x`, with `m` column-major.
pub fn matvec(m: &CMatrix, x: &[Complex64], out: &mut [Complex64]) {
    let n = m.nrows();
    debug_assert_eq!(m.ncols(), x.len());
    debug_assert_eq!(out.len(), n);
    out.fill(ZERO);
    let data = m.as_slice();
    for (col, &xj) in data.chunks_exact(n).zip(x) {
        for (o, &c) in out.iter_mut().zip(col) {
            *o += c * xj;
        }
    }
}

/// `x^H y`.
pub fn dot_conj(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex64::new(re, im)
}

/// `(a^H m1 a, a^H m2 a)` for Hermitian `m1`, `m2`, reading only their lower triangles.
pub fn hermitian_quad_forms(m1: &CMatrix, m2: &CMatrix, a: &[Complex64]) -> (f64, f64) {
    let n = m1.nrows();
    debug_assert_eq!(m2.nrows(), n);
    debug_assert_eq!(a.len(), n);
    let (d1, d2) = (m1.as_slice(), m2.as_slice());
    let (mut diag1, mut diag2, mut off1, mut off2) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let aj = a[j];
        let p = aj.norm_sqr();
        diag1 += d1[j * n + j].re * p;
        diag2 += d2[j * n + j].re * p;
        // sum_{i > j} conj(a_i) m_ij
        let (mut r1, mut i1, mut r2, mut i2) = (0.0, 0.0, 0.0, 0.0);
        let lower = j * n + j + 1..(j + 1) * n;
        for ((x, y), ai) in d1[lower.clone()].iter().zip(&d2[lower]).zip(&a[j + 1..]) {
            r1 += ai.re * x.re + ai.im * x.im;
            i1 += ai.re * x.im - ai.im * x.re;
            r2 += ai.re * y.re + ai.im * y.im;
            i2 += ai.re * y.im - ai.im * y.re;
        }
        off1 += r1 * aj.re - i1 * aj.im;
        off2 += r2 * aj.re - i2 * aj.im;
    }
    (diag1 + 2.0 * off1, diag2 + 2.0 * off2)
}

/// `m <- m - c u u^H` for Hermitian `m` and real `c`; keeps `m` exactly Hermitian.
pub fn hermitian_rank_one_sub(m: &mut CMatrix, u: &[Complex64], c: f64) {
    let n = m.nrows();
    debug_assert_eq!(u.len(), n);
    let data = m.as_mut_slice();
    // update the lower triangle and mirror it, so the result is exactly Hermitian
    for j in 0..n {
        let w = u[j].conj() * c;
        let diag = data[j * n + j] - u[j] * w;
        data[j * n + j] = Complex64::new(diag.re, 0.0);
        for i in (j + 1)..n {
            let v = data[j * n + i] - u[i] * w;
            data[j * n + i] = v;
            data[i * n + j] = v.conj();
        }
    }
}

/// Column `i` of a column-major matrix as a contiguous slice.
pub fn column(m: &CMatrix, i: usize) -> &[Complex64] {
    let n = m.nrows();
    &m.as_slice()[i * n..(i + 1) * n]
}
