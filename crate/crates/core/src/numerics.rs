//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are plain `nalgebra` dynamic matrices of `Complex64`. The functions
//! here add the tolerance conventions the rest of the crate relies on: a
//! relative rank tolerance, singularity checks before inversion, and sorted
//! singular values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Relative tolerance (to the largest singular value) used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Inputs whose condition ratio falls below this are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

const SVD_EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const J: C64 = C64::new(0.0, 1.0);

/// `e^{j theta}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Builds a complex matrix from row slices. Panics on ragged input.
pub fn cmat(rows: &[&[C64]]) -> CMat {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
    CMat::from_fn(nr, nc, |i, j| rows[i][j])
}

/// Builds a complex matrix from real row slices.
pub fn cmat_re(rows: &[&[f64]]) -> CMat {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
    CMat::from_fn(nr, nc, |i, j| C64::new(rows[i][j], 0.0))
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_square(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

/// Singular value decomposition with singular values in descending order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// Left factor, `rows x k` with `k = min(rows, cols)`.
    pub u: CMat,
    /// Conjugate-transposed right factor, `k x cols`.
    pub v_h: CMat,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMat {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for c in 0..k {
            let s = self.singular_values[c];
            us.column_mut(c).iter_mut().for_each(|z| *z *= s);
        }
        us * &self.v_h
    }

    pub fn max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }
}

pub fn svd(a: &CMat) -> Result<SvdResult> {
    if !all_finite(a) {
        return Err(Error::ConvergenceFailure);
    }
    let k = a.nrows().min(a.ncols());
    let dec = a
        .clone()
        .try_svd(true, true, SVD_EPS, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let u = dec.u.ok_or(Error::ConvergenceFailure)?;
    let v_t = dec.v_t.ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| dec.singular_values[y].total_cmp(&dec.singular_values[x]));
    let singular_values = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = CMat::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let v_h = CMat::from_fn(k, v_t.ncols(), |r, c| v_t[(order[r], c)]);
    Ok(SvdResult { singular_values, u, v_h })
}

/// Singular values only, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if !all_finite(a) {
        return Err(Error::ConvergenceFailure);
    }
    let dec = a
        .clone()
        .try_svd(false, false, SVD_EPS, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let mut s: Vec<f64> = dec.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Number of singular values above `rel_tol * sigma_max`; zero for the zero matrix.
pub fn numeric_rank(a: &CMat, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol {rel_tol} not in (0,1)")));
    }
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * smax).count())
}

/// `sigma_min / sigma_max` of a square matrix, 0 for the zero matrix.
pub fn condition_ratio(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    Ok(s.last().copied().unwrap_or(0.0) / smax)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    require_square(a)?;
    let ratio = condition_ratio(a)?;
    if ratio <= SINGULAR_TOL {
        return Err(Error::SingularMatrix { ratio });
    }
    let inv = a.clone().try_inverse().ok_or(Error::SingularMatrix { ratio })?;
    if !all_finite(&inv) {
        return Err(Error::SingularMatrix { ratio });
    }
    Ok(inv)
}

pub fn det(a: &CMat) -> Result<C64> {
    require_square(a)?;
    Ok(a.determinant())
}

/// Kronecker product with the standard block layout.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigen-decomposition of a diagonalizable matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors as columns, first significant entry real-positive.
    pub vectors: CMat,
}

/// Scales `v` to unit norm and rotates it so its first significant entry is
/// real and positive.
pub fn normalize_phase(v: &mut nalgebra::DVector<C64>) {
    let n = v.norm();
    if n == 0.0 {
        return;
    }
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v.iter().find(|z| z.norm() > 1e-8 * big).copied().unwrap_or(ONE);
    let rot = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|z| *z = *z * rot / n);
}

/// Eigenvalues and eigenvectors of a general square complex matrix.
///
/// Eigenvectors are obtained by back-substitution on the complex Schur form.
/// Every returned pair satisfies `|A v - lambda v| <= 1e-8 |A|`; inputs whose
/// eigenvector matrix is numerically singular are rejected as defective.
pub fn eig_general(a: &CMat) -> Result<Eigen> {
    require_square(a)?;
    if !all_finite(a) {
        return Err(Error::ConvergenceFailure);
    }
    let n = a.nrows();
    let anorm = frobenius(a);
    let (q, t) = a
        .clone()
        .try_schur(1e-15, MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?
        .unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = frobenius(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;

    let mut vectors = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = nalgebra::DVector::<C64>::zeros(n);
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for l in j + 1..=k {
                s += t[(j, l)] * y[l];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[j] = -s / d;
        }
        let mut v = &q * y;
        normalize_phase(&mut v);
        vectors.set_column(k, &v);
    }

    for k in 0..n {
        let v = vectors.column(k);
        let r = a * v - v * values[k];
        if r.norm() > 1e-8 * anorm.max(f64::MIN_POSITIVE) {
            return Err(Error::DefectiveMatrix(format!(
                "residual {:e} for eigenvalue {}",
                r.norm(),
                values[k]
            )));
        }
    }
    let ratio = condition_ratio(&vectors)?;
    if ratio <= 1e-10 {
        return Err(Error::DefectiveMatrix(format!("eigenvector basis condition ratio {ratio:e}")));
    }
    Ok(Eigen { values, vectors })
}

/// Real-valued lift of a complex matrix: `[[Re, -Im], [Im, Re]]`.
pub fn real_lift(a: &CMat) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
