//! Vector and matrix norms.
//!
//! Exponents are passed as `f64`; `f64::INFINITY` selects the max norm.
//! Entry-wise matrix norms follow the column convention: the inner
//! `p`-norm runs down each column, the outer `q`-norm runs across columns.

use super::mat::Mat;
use crate::error::{invalid, Error, Result};

/// Default relative tolerance for power iteration.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Iteration cap for power iteration.
pub const SPECTRAL_MAX_ITERS: usize = 10_000;

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("{name} = {p} must be >= 1 (or infinity)")));
    }
    Ok(())
}

fn p_norm_unchecked(x: impl Iterator<Item = f64> + Clone, p: f64) -> f64 {
    if p.is_infinite() {
        x.map(f64::abs).fold(0.0, f64::max)
    } else if p == 1.0 {
        x.map(f64::abs).sum()
    } else if p == 2.0 {
        // scaled to avoid overflow on large entries
        let scale = x.clone().map(f64::abs).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        scale * x.map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
    } else {
        let scale = x.clone().map(f64::abs).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        scale * x.map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `ℓ_p` norm of a vector.
pub fn vec_norm(x: &[f64], p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    Ok(p_norm_unchecked(x.iter().copied(), p))
}

/// Hölder conjugate of `p`: `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

/// Entry-wise `(p, q)` norm: `q`-norm of the vector of column `p`-norms.
///
/// For `q = 1` this is the sum of the column `p`-norms.
pub fn entrywise_norm(a: &Mat, p: f64, q: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    let col_norms: Vec<f64> = (0..a.cols())
        .map(|j| p_norm_unchecked((0..a.rows()).map(|i| a.get(i, j)), p))
        .collect();
    Ok(p_norm_unchecked(col_norms.iter().copied(), q))
}

pub fn frobenius_norm(a: &Mat) -> f64 {
    p_norm_unchecked(a.data().iter().copied(), 2.0)
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// The start vector is a fixed, non-symmetric sequence so the result is
/// reproducible. Convergence is declared when successive estimates agree
/// to `tol` relative.
pub fn spectral_norm(a: &Mat, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("spectral tolerance must be positive"));
    }
    if a.is_zero() || a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let n = a.cols();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_7).fract()).collect();
    normalize(&mut v);
    // the fixed start can be annihilated by A; fall back to coordinate vectors
    if a.matvec(&v)?.iter().all(|&x| x == 0.0) {
        let j = (0..n)
            .find(|&j| (0..a.rows()).any(|i| a.get(i, j) != 0.0))
            .expect("nonzero matrix has a nonzero column");
        v = vec![0.0; n];
        v[j] = 1.0;
    }
    let mut sigma = 0.0_f64;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let u = a.matvec(&v)?;
        let next_sigma = super::mat::dot(&u, &u).sqrt();
        let mut w = a.tr_matvec(&u)?;
        let w_norm = normalize(&mut w);
        if w_norm == 0.0 {
            return Ok(next_sigma);
        }
        if (next_sigma - sigma).abs() <= tol * next_sigma {
            return Ok(next_sigma.max(w_norm.sqrt()));
        }
        sigma = next_sigma;
        v = w;
    }
    Err(Error::NumericFailure(format!(
        "power iteration did not converge in {SPECTRAL_MAX_ITERS} iterations"
    )))
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = super::mat::dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vector_norm_examples() {
        assert_abs_diff_eq!(vec_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0, epsilon = 1e-15);
        assert_eq!(vec_norm(&[1.0, 1.0, 1.0], f64::INFINITY).unwrap(), 1.0);
        assert_eq!(vec_norm(&[1.0, -2.0, 2.0], 1.0).unwrap(), 5.0);
        assert_abs_diff_eq!(vec_norm(&[1.0, 1.0], 3.0).unwrap(), 2f64.powf(1.0 / 3.0), epsilon = 1e-15);
        assert!(matches!(vec_norm(&[1.0], 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn entrywise_examples() {
        assert_abs_diff_eq!(entrywise_norm(&Mat::identity(2), 2.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(entrywise_norm(&Mat::zeros(3, 3), 3.0, 7.0).unwrap(), 0.0);
        let ones = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(entrywise_norm(&ones, 1.0, 1.0).unwrap(), 4.0);
        // column convention: columns (1,2) and (0,5)
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![2.0, 5.0]]).unwrap();
        assert_eq!(entrywise_norm(&a, 1.0, f64::INFINITY).unwrap(), 5.0);
        assert_eq!(entrywise_norm(&a, f64::INFINITY, 1.0).unwrap(), 7.0);
        assert_abs_diff_eq!(entrywise_norm(&a, 2.0, 2.0).unwrap(), frobenius_norm(&a), epsilon = 1e-14);
        assert!(entrywise_norm(&a, 1.0, 0.0).is_err());
    }

    #[test]
    fn spectral_examples() {
        assert_abs_diff_eq!(spectral_norm(&Mat::identity(3), SPECTRAL_TOL).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spectral_norm(&Mat::diag(&[3.0, 4.0]), SPECTRAL_TOL).unwrap(), 4.0, epsilon = 1e-9);
        assert_eq!(spectral_norm(&Mat::zeros(2, 3), SPECTRAL_TOL).unwrap(), 0.0);
        // top right-singular vector orthogonal to the all-ones direction
        let a = Mat::from_rows(&[vec![1.0, -1.0]]).unwrap();
        assert_abs_diff_eq!(spectral_norm(&a, SPECTRAL_TOL).unwrap(), 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert_eq!(conjugate_exponent(1.0).unwrap(), f64::INFINITY);
        assert_eq!(conjugate_exponent(f64::INFINITY).unwrap(), 1.0);
        assert_abs_diff_eq!(conjugate_exponent(3.0).unwrap(), 1.5);
    }
}
