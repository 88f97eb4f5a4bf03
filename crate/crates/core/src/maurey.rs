//! Maurey sparsification and the convex decompositions of `W x` that feed it.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{invalid, precondition, Error, Result};
use crate::linalg::{
    colspace_basis, conjugate_exponent, dot, entrywise_norm, frobenius_norm, numerical_rank, orthonormality_defect,
    project_onto_span, rng_from_seed, vec_norm, Mat, BASIS_TOL, FEASIBILITY_TOL, RANK_TOL,
};

/// Absolute slack for the representation invariants.
pub const REP_TOL: f64 = 1e-10;
/// Slack added to the sparsification guarantee.
pub const SPARSIFY_SLACK: f64 = 1e-9;
/// Total index draws allowed across retries.
pub const MAX_DRAWS: usize = 1_000_000;

/// `f = Σ w_j g_j` with `‖g_j‖₂ ≤ b`, `w_j ≥ 0` and `Σ w_j ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRepresentation {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub b: f64,
    pub target: Vec<f64>,
}

impl ConvexRepresentation {
    /// Total weight `α`.
    pub fn alpha(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_j g_j`.
    pub fn combination(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.target.len()];
        for (g, &w) in self.atoms.iter().zip(&self.weights) {
            for (o, v) in out.iter_mut().zip(g) {
                *o += w * v;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.len() != self.weights.len() {
            return Err(invalid("one weight per atom"));
        }
        if self.atoms.iter().any(|g| g.len() != self.target.len()) {
            return Err(invalid("atom dimension differs from target"));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        if self.alpha() > 1.0 + 1e-12 {
            return Err(invalid(format!("total weight {} exceeds 1", self.alpha())));
        }
        if self.atoms.iter().any(|g| dot(g, g).sqrt() > self.b + 1e-12) {
            return Err(invalid("atom norm exceeds b"));
        }
        let residual: Vec<f64> = self.combination().iter().zip(&self.target).map(|(a, f)| a - f).collect();
        if dot(&residual, &residual).sqrt() > REP_TOL {
            return Err(invalid("weights do not reconstruct the target"));
        }
        Ok(())
    }

    /// Smallest `t` with `α b² / t ≤ ε²`, which makes the sparsified
    /// error at most `ε`.
    pub fn sufficient_terms(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        Ok(((self.b * self.b / (eps * eps)).ceil() as usize).max(1))
    }
}

/// `(1/t) Σ k_j g_j` approximating a representation's target.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseApprox {
    pub counts: Vec<usize>,
    pub t: usize,
    pub approx: Vec<f64>,
    pub sq_error: f64,
    /// `(α b² − ‖f‖²)/t`.
    pub guarantee: f64,
}

fn within(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + FEASIBILITY_TOL) + 1e-12
}

fn check_shapes(w: &Mat, x: &[f64]) -> Result<()> {
    if w.cols() != x.len() {
        return Err(invalid(format!("W has {} columns but x has length {}", w.cols(), x.len())));
    }
    Ok(())
}

fn check_bounds(b_w: f64, b_x: f64) -> Result<()> {
    if !(b_w >= 0.0) || !(b_x >= 0.0) || !b_w.is_finite() || !b_x.is_finite() {
        return Err(invalid("norm bounds must be finite and >= 0"));
    }
    Ok(())
}

fn empty(k: usize) -> ConvexRepresentation {
    ConvexRepresentation {
        atoms: Vec::new(),
        weights: Vec::new(),
        b: 0.0,
        target: vec![0.0; k],
    }
}

/// Builds atoms `±e_j · scale` and weights `|e_jᵀ W x| / scale` from an
/// orthonormal basis `E` of a space containing `col(W)`.
fn along_basis(e: &Mat, wx: Vec<f64>, scale: f64) -> ConvexRepresentation {
    let coeffs = e.tr_matvec(&wx).expect("basis rows match W rows");
    let mut atoms = Vec::with_capacity(coeffs.len());
    let mut weights = Vec::with_capacity(coeffs.len());
    for (j, &c) in coeffs.iter().enumerate() {
        // sgn(0) = +1; its weight is 0 either way
        let sign = if c < 0.0 { -1.0 } else { 1.0 };
        atoms.push(e.col(j).iter().map(|v| v * sign * scale).collect());
        weights.push(c.abs() / scale);
    }
    ConvexRepresentation {
        atoms,
        weights,
        b: scale,
        target: wx,
    }
}

fn rank_decomposition(w: &Mat, x: &[f64], b_w: f64, b_x: f64) -> Result<ConvexRepresentation> {
    let r = numerical_rank(w, RANK_TOL)?;
    if r == 0 {
        return Ok(empty(w.rows()));
    }
    let e = colspace_basis(w, RANK_TOL)?;
    let wx = w.matvec(x)?;
    Ok(along_basis(&e, wx, (r as f64).sqrt() * b_w * b_x))
}

/// Decomposition for `‖W‖_F ≤ B_w` and `‖x‖₂ ≤ B_x`, with atoms of norm
/// `√r B_w B_x` where `r = rank(W)`.
pub fn decompose_frobenius(w: &Mat, x: &[f64], b_w: f64, b_x: f64) -> Result<ConvexRepresentation> {
    check_shapes(w, x)?;
    check_bounds(b_w, b_x)?;
    if !within(frobenius_norm(w), b_w) {
        return Err(precondition("Frobenius norm of W exceeds B_w"));
    }
    if !within(vec_norm(x, 2.0)?, b_x) {
        return Err(precondition("l2 norm of x exceeds B_x"));
    }
    rank_decomposition(w, x, b_w, b_x)
}

/// Decomposition for `Σ_l ‖W_{:,l}‖₂ ≤ B_w` and `‖x‖_∞ ≤ B_x`; atoms as in
/// [`decompose_frobenius`].
pub fn decompose_21(w: &Mat, x: &[f64], b_w: f64, b_x: f64) -> Result<ConvexRepresentation> {
    check_shapes(w, x)?;
    check_bounds(b_w, b_x)?;
    if !within(entrywise_norm(w, 2.0, 1.0)?, b_w) {
        return Err(precondition("column (2,1) norm of W exceeds B_w"));
    }
    if !within(vec_norm(x, f64::INFINITY)?, b_x) {
        return Err(precondition("max norm of x exceeds B_x"));
    }
    rank_decomposition(w, x, b_w, b_x)
}

/// Decomposition for `Σ_j ‖Wᵀ e_j‖_p ≤ B_w`, `‖x‖_q ≤ B_x` with `q` the
/// conjugate of `p` and `col(W) ⊆ span(E)`; atoms have norm `B_w B_x`.
pub fn decompose_basis_p1(
    w: &Mat,
    x: &[f64],
    e: &Mat,
    p: f64,
    b_w: f64,
    b_x: f64,
) -> Result<ConvexRepresentation> {
    check_shapes(w, x)?;
    check_bounds(b_w, b_x)?;
    let q = conjugate_exponent(p)?;
    if e.rows() != w.rows() || e.cols() == 0 {
        return Err(invalid("basis must have one row per output and at least one column"));
    }
    if orthonormality_defect(e) > BASIS_TOL {
        return Err(invalid("basis columns are not orthonormal"));
    }
    let outside = project_onto_span(e, w)?.sub(w)?;
    if frobenius_norm(&outside) > 1e-9 * (1.0 + frobenius_norm(w)) {
        return Err(precondition("columns of W leave span(E)"));
    }
    if !within(entrywise_norm(&w.transpose().matmul(e)?, p, 1.0)?, b_w) {
        return Err(precondition("basis (p,1) norm of W exceeds B_w"));
    }
    if !within(vec_norm(x, q)?, b_x) {
        return Err(precondition("conjugate norm of x exceeds B_x"));
    }
    let scale = b_w * b_x;
    if scale == 0.0 || w.is_zero() {
        return Ok(empty(w.rows()));
    }
    Ok(along_basis(e, w.matvec(x)?, scale))
}

/// `t ln(2r + 1)`, the log of the bound `(2r + 1)^t` on nonnegative integer
/// vectors of length `r` with sum at most `t`.
pub fn count_solutions_bound(r: usize, t: usize) -> f64 {
    t as f64 * (2.0 * r as f64 + 1.0).ln()
}

/// Replaces the convex combination by an average of `t` atoms drawn from
/// the weights (the leftover mass `1 − α` selects the zero atom).
///
/// Draws repeat on the same seeded stream until the squared error meets
/// `(α b² − ‖f‖²)/t`; an average draw meets it, so some draw must.
pub fn sparsify(rep: &ConvexRepresentation, t: usize, seed: u64) -> Result<SparseApprox> {
    rep.validate()?;
    if t == 0 {
        return Err(invalid("t must be >= 1"));
    }
    let f = &rep.target;
    let f_sq = dot(f, f);
    let alpha = rep.alpha();
    let guarantee = (alpha * rep.b * rep.b - f_sq) / t as f64;
    let n = rep.atoms.len();
    if alpha == 0.0 || f.iter().all(|&v| v == 0.0) {
        return Ok(SparseApprox {
            counts: vec![0; n],
            t,
            approx: vec![0.0; f.len()],
            sq_error: f_sq,
            guarantee,
        });
    }
    let mut probs = rep.weights.clone();
    probs.push((1.0 - alpha).max(0.0));
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::NumericFailure(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let mut draws = 0;
    while draws + t <= MAX_DRAWS {
        let mut counts = vec![0usize; n + 1];
        for _ in 0..t {
            counts[dist.sample(&mut rng)] += 1;
        }
        draws += t;
        counts.pop();
        let mut approx = vec![0.0; f.len()];
        for (g, &c) in rep.atoms.iter().zip(&counts) {
            if c > 0 {
                for (a, v) in approx.iter_mut().zip(g) {
                    *a += c as f64 * v;
                }
            }
        }
        approx.iter_mut().for_each(|a| *a /= t as f64);
        let sq_error: f64 = approx.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
        if sq_error <= guarantee + SPARSIFY_SLACK {
            return Ok(SparseApprox {
                counts,
                t,
                approx,
                sq_error,
                guarantee,
            });
        }
    }
    Err(Error::NumericFailure(format!("no draw met the guarantee within {MAX_DRAWS} samples")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rank_one_frobenius() {
        let w = Mat::outer(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let rep = decompose_frobenius(&w, &[1.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        rep.validate().unwrap();
        assert_eq!(rep.atoms.len(), 1);
        assert_abs_diff_eq!(rep.weights[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.atoms[0][0].abs(), 1.0, epsilon = 1e-12);
        assert_eq!(rep.target, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_input_gives_zero_weights() {
        let w = Mat::from_rows(&[vec![0.3, 0.1], vec![0.0, 0.2]]).unwrap();
        for rep in [
            decompose_frobenius(&w, &[0.0, 0.0], 1.0, 1.0).unwrap(),
            decompose_21(&w, &[0.0, 0.0], 1.0, 1.0).unwrap(),
            decompose_basis_p1(&w, &[0.0, 0.0], &Mat::identity(2), 2.0, 1.0, 1.0).unwrap(),
        ] {
            assert!(rep.weights.iter().all(|&a| a == 0.0));
            assert!(rep.target.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_column_two_one_boundary() {
        let u = [0.6, 0.8];
        let w = Mat::from_fn(2, 3, |i, j| if j == 0 { u[i] } else { 0.0 });
        let rep = decompose_21(&w, &[1.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        rep.validate().unwrap();
        assert_abs_diff_eq!(rep.alpha(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn basis_p1_with_l1_inputs() {
        let w = Mat::from_rows(&[vec![0.2, -0.3], vec![0.1, 0.4]]).unwrap();
        // ‖Wᵀ‖_{∞,1} = 0.3 + 0.4 ≤ ‖W‖_{1,1} = 1.0
        let rep = decompose_basis_p1(&w, &[0.5, -0.5], &Mat::identity(2), f64::INFINITY, 1.0, 1.0).unwrap();
        rep.validate().unwrap();
        assert!(rep.atoms.iter().all(|g| (dot(g, g).sqrt() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn preconditions_are_enforced() {
        let w = Mat::identity(2);
        assert!(matches!(decompose_frobenius(&w, &[1.0, 0.0], 1.0, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(decompose_21(&w.scaled(0.1), &[2.0, 0.0], 1.0, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(
            decompose_basis_p1(&w, &[1.0, 0.0], &Mat::identity(2), 0.5, 5.0, 5.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sparsify_exact_atom() {
        let rep = ConvexRepresentation {
            atoms: vec![vec![1.0, 2.0]],
            weights: vec![1.0],
            b: 5f64.sqrt(),
            target: vec![1.0, 2.0],
        };
        let s = sparsify(&rep, 5, 0).unwrap();
        assert_eq!(s.counts, vec![5]);
        assert_eq!(s.sq_error, 0.0);
        assert_abs_diff_eq!(s.guarantee, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sparsify_two_orthogonal_atoms() {
        let rep = ConvexRepresentation {
            atoms: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            weights: vec![0.5, 0.5],
            b: 1.0,
            target: vec![0.5, 0.5],
        };
        let s = sparsify(&rep, 1, 3).unwrap();
        assert_abs_diff_eq!(s.guarantee, 0.5, epsilon = 1e-15);
        assert!(s.sq_error <= 0.5 + SPARSIFY_SLACK);
        assert_eq!(s.counts.iter().sum::<usize>(), 1);
    }

    #[test]
    fn counting_examples() {
        assert_abs_diff_eq!(count_solutions_bound(1, 1), 3f64.ln());
        assert_abs_diff_eq!(count_solutions_bound(2, 3), 3.0 * 5f64.ln());
    }
}
