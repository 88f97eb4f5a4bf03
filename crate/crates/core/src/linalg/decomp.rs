//! SVD-backed rank utilities.

use super::mat::Mat;
use crate::error::{invalid, Error, Result};

/// Default relative tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Tolerance on `‖UΣVᵀ − A‖` (relative) and on `UᵀU − I` after each
/// factorization.
const SVD_CHECK_TOL: f64 = 1e-10;

struct Svd {
    u: Mat,
    sigma: Vec<f64>,
    v_t: Mat,
}

fn svd(a: &Mat) -> Result<Svd> {
    let m = faer::Mat::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j));
    let s = m.thin_svd().map_err(|e| Error::NumericFailure(format!("SVD did not converge: {e:?}")))?;
    let (u, sigma, v) = (s.U(), s.S().column_vector(), s.V());
    let rebuilt = u * s.S() * v.transpose();
    let gram = u.transpose() * u;
    let defect = (0..gram.nrows())
        .flat_map(|i| (0..gram.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if (&rebuilt - &m).norm_l2() > SVD_CHECK_TOL * m.norm_l2().max(f64::MIN_POSITIVE) || defect > SVD_CHECK_TOL {
        return Err(Error::NumericFailure("SVD failed its reconstruction check".into()));
    }
    // faer returns singular values in nonincreasing order
    Ok(Svd {
        u: Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        sigma: sigma.iter().copied().collect(),
        v_t: Mat::from_fn(v.ncols(), v.nrows(), |i, j| v[(j, i)]),
    })
}

/// Singular values in descending order.
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    Ok(svd(a)?.sigma)
}

fn rank_from_sigma(sigma: &[f64], tol: f64) -> usize {
    match sigma.first() {
        Some(&top) if top > 0.0 => sigma.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

/// Number of singular values above `tol` times the largest.
pub fn numerical_rank(a: &Mat, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(invalid("rank tolerance must be positive"));
    }
    if a.is_zero() {
        return Ok(0);
    }
    Ok(rank_from_sigma(&singular_values(a)?, tol))
}

/// Orthonormal basis of the column space, one column per retained
/// singular direction.
pub fn colspace_basis(a: &Mat, tol: f64) -> Result<Mat> {
    if !(tol > 0.0) {
        return Err(invalid("rank tolerance must be positive"));
    }
    if a.is_zero() || a.cols() == 0 {
        return Ok(Mat::zeros(a.rows(), 0));
    }
    let Svd { u, sigma, .. } = svd(a)?;
    let r = rank_from_sigma(&sigma, tol);
    Ok(Mat::from_fn(a.rows(), r, |i, j| u.get(i, j)))
}

/// Best approximation of rank at most `r` in Frobenius norm.
pub fn truncate_rank(a: &Mat, r: usize) -> Result<Mat> {
    if a.is_zero() || r >= a.rows().min(a.cols()) {
        return Ok(a.clone());
    }
    let Svd { u, sigma, v_t } = svd(a)?;
    Ok(Mat::from_fn(a.rows(), a.cols(), |i, j| {
        (0..r).map(|l| u.get(i, l) * sigma[l] * v_t.get(l, j)).sum()
    }))
}

/// Largest deviation of `EᵀE` from the identity.
pub fn orthonormality_defect(e: &Mat) -> f64 {
    let gram = e.transpose().matmul(e).expect("EᵀE is always defined");
    gram.max_abs_diff(&Mat::identity(e.cols()))
}

/// Orthogonal projection `E Eᵀ A` onto the span of orthonormal columns `E`.
pub fn project_onto_span(e: &Mat, a: &Mat) -> Result<Mat> {
    e.matmul(&e.transpose().matmul(a)?)
}
