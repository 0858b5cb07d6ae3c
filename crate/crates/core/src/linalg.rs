// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear-algebra helpers built on `faer`.
//!
//! Everything in the trajectory hot loop goes through [`matmul_into`] and
//! [`orthonormalize`]; both run sequentially because parallelism lives at
//! the ensemble level.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Smallest accepted ratio `min |R_kk| / max |R_kk|` in a QR factorization.
pub const RANK_TOLERANCE: f64 = 1e-13;

/// `dst = lhs * rhs`, sequential.
pub fn matmul_into<L, R>(dst: &mut Mat<c64>, lhs: MatRef<'_, L>, rhs: MatRef<'_, R>)
where
    L: Conjugate<Canonical = c64>,
    R: Conjugate<Canonical = c64>,
{
    matmul(dst.as_mut(), Accum::Replace, lhs, rhs, ONE, Par::Seq);
}

pub fn product<L, R>(lhs: MatRef<'_, L>, rhs: MatRef<'_, R>) -> Mat<c64>
where
    L: Conjugate<Canonical = c64>,
    R: Conjugate<Canonical = c64>,
{
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    matmul_into(&mut out, lhs, rhs);
    out
}

/// Replace the columns of `m` with an orthonormal basis of their span
/// (the thin `Q` factor of a Householder QR).
pub fn orthonormalize(m: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let qr = m.qr();
    let r = qr.thin_R();
    let k = r.nrows().min(r.ncols());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..k {
        let d = r[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if k > 0 && (!(hi > 0.0) || !(lo / hi >= RANK_TOLERANCE) || !lo.is_finite()) {
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        return Err(Error::RankDeficient { ratio });
    }
    Ok(qr.compute_thin_Q())
}

pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenNonConvergence { dim: m.nrows() })
}

pub fn eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<c64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues().map_err(|_| Error::EigenNonConvergence { dim: m.nrows() })
}

pub fn norm_1(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, |acc, c| if c.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(c) })
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `max |(UᴴU − I)_ij|`.
pub fn orthonormality_defect(u: MatRef<'_, c64>) -> f64 {
    let gram = product(u.adjoint(), u);
    let id = Mat::<c64>::identity(u.ncols(), u.ncols());
    max_abs_diff(gram.as_ref(), id.as_ref())
}

// Padé(13) coefficients for the scaling-and-squaring exponential.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential `exp(A)` by scaling and squaring with a Padé(13)
/// approximant.
pub fn expm(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::ExponentialOverflow { norm });
    }
    if norm == 0.0 {
        return Ok(Mat::identity(n, n));
    }
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(Error::ExponentialOverflow { norm });
    }
    let scale = 0.5f64.powi(squarings);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);

    let a2 = product(a.as_ref(), a.as_ref());
    let a4 = product(a2.as_ref(), a2.as_ref());
    let a6 = product(a4.as_ref(), a2.as_ref());
    let b = &PADE13;
    let comb = |c6: f64, c4: f64, c2: f64, c0: f64| {
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { c0 } else { 0.0 };
            a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + c64::new(d, 0.0)
        })
    };
    let inner_u = product(a6.as_ref(), comb(b[13], b[11], b[9], 0.0).as_ref());
    let tail_u = comb(b[7], b[5], b[3], b[1]);
    let u = product(a.as_ref(), (&inner_u + &tail_u).as_ref());
    let inner_v = product(a6.as_ref(), comb(b[12], b[10], b[8], 0.0).as_ref());
    let v = &inner_v + &comb(b[6], b[4], b[2], b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut x = denom.partial_piv_lu().solve(&numer);
    for _ in 0..squarings {
        x = product(x.as_ref(), x.as_ref());
    }
    if x.col_iter().any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::ExponentialOverflow { norm });
    }
    Ok(x)
}
