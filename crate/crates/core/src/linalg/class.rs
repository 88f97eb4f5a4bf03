//! Constraint descriptions of matrix classes and samplers for them.
//!
//! A class matrix `W` is the linear map `x ↦ W x` from `ℝ^d` to `ℝ^k`,
//! stored `k × d`. Column `W_{:,l}` is the image direction of input
//! coordinate `l`, and subspace constraints apply to `col(W) ⊆ ℝ^k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::decomp::{colspace_basis, numerical_rank, orthonormality_defect, project_onto_span, RANK_TOL};
use super::mat::Mat;
use super::norms::{conjugate_exponent, entrywise_norm, frobenius_norm, spectral_norm, vec_norm, SPECTRAL_TOL};
use crate::error::{invalid, Error, Result};

/// Tolerance on `EᵀE = I` for subspace bases.
pub const BASIS_TOL: f64 = 1e-10;

/// Relative slack used when re-validating sampled members.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which norm bounds the class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// Operator norm `‖W‖_{2→2}`.
    Spectral,
    Frobenius,
    /// Entry-wise `(p, q)` norm of the stored matrix.
    Entrywise { p: f64, q: f64 },
    /// Sum over input coordinates of `‖W_{:,l}‖₂`, written `‖Wᵀ‖_{2,1}`
    /// when `W` is laid out `d × k`.
    Transposed21,
    /// Sum over outputs `j` of `‖W_{j,:}‖_p`; the basis norm with `E = I`.
    TransposedP1 { p: f64 },
    /// Sum over basis vectors `e_j` of `‖Wᵀ e_j‖_p`.
    BasisP1 { p: f64 },
}

impl NormKind {
    /// Input norm the matching theorem pairs with this class.
    pub fn input_norm(&self) -> f64 {
        match *self {
            NormKind::Spectral | NormKind::Frobenius => 2.0,
            NormKind::Entrywise { .. } => 1.0,
            NormKind::Transposed21 => f64::INFINITY,
            NormKind::TransposedP1 { p } | NormKind::BasisP1 { p } => {
                conjugate_exponent(p).unwrap_or(f64::NAN)
            }
        }
    }
}

/// A class `𝒲` of `k × d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixClassSpec {
    pub d: usize,
    pub k: usize,
    pub norm: NormKind,
    pub bound: f64,
    pub rank_cap: Option<usize>,
    /// Orthonormal columns spanning the allowed column space.
    pub basis: Option<Mat>,
}

impl MatrixClassSpec {
    pub fn new(
        d: usize,
        k: usize,
        norm: NormKind,
        bound: f64,
        rank_cap: Option<usize>,
        basis: Option<Mat>,
    ) -> Result<Self> {
        let spec = Self {
            d,
            k,
            norm,
            bound,
            rank_cap,
            basis,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(invalid("class dimensions must be positive"));
        }
        if !(self.bound >= 0.0) || !self.bound.is_finite() {
            return Err(invalid(format!("norm bound {} must be finite and >= 0", self.bound)));
        }
        match self.norm {
            NormKind::Entrywise { p, q } => {
                if p.is_nan() || p < 1.0 || q.is_nan() || q < 1.0 {
                    return Err(invalid("entrywise exponents must be >= 1"));
                }
            }
            NormKind::TransposedP1 { p } | NormKind::BasisP1 { p } => {
                conjugate_exponent(p)?;
            }
            _ => {}
        }
        if let Some(r) = self.rank_cap {
            if r == 0 || r > self.d.min(self.k) {
                return Err(Error::InfeasibleSpec(format!(
                    "rank cap {r} outside [1, min(d, k) = {}]",
                    self.d.min(self.k)
                )));
            }
        }
        if let Some(e) = &self.basis {
            if e.rows() != self.k {
                return Err(invalid(format!("basis has {} rows, expected k = {}", e.rows(), self.k)));
            }
            if e.cols() == 0 || e.cols() > self.k {
                return Err(Error::InfeasibleSpec(format!("basis dimension {} outside [1, k]", e.cols())));
            }
            if orthonormality_defect(e) > BASIS_TOL {
                return Err(invalid("basis columns are not orthonormal"));
            }
        }
        if matches!(self.norm, NormKind::BasisP1 { .. }) && self.basis.is_none() {
            return Err(invalid("basis norm requires a basis"));
        }
        Ok(())
    }

    /// Dimension of the subspace images are confined to, or the rank cap.
    pub fn effective_rank(&self) -> usize {
        let cap = self.rank_cap.unwrap_or(self.d.min(self.k));
        match &self.basis {
            Some(e) => cap.min(e.cols()),
            None => cap,
        }
    }

    pub fn input_norm(&self) -> f64 {
        self.norm.input_norm()
    }

    /// The declared norm of `w`.
    pub fn norm_of(&self, w: &Mat) -> Result<f64> {
        if w.shape() != (self.k, self.d) {
            return Err(invalid(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.k,
                self.d,
                w.rows(),
                w.cols()
            )));
        }
        match self.norm {
            NormKind::Spectral => spectral_norm(w, SPECTRAL_TOL),
            NormKind::Frobenius => Ok(frobenius_norm(w)),
            NormKind::Entrywise { p, q } => entrywise_norm(w, p, q),
            NormKind::Transposed21 => entrywise_norm(w, 2.0, 1.0),
            NormKind::TransposedP1 { p } => entrywise_norm(&w.transpose(), p, 1.0),
            NormKind::BasisP1 { p } => {
                let e = self.basis.as_ref().expect("validated");
                entrywise_norm(&w.transpose().matmul(e)?, p, 1.0)
            }
        }
    }

    /// Radius guaranteed to contain every image `W x` with `‖x‖ ≤ b_x`
    /// in the class input norm.
    pub fn image_radius(&self, b_x: f64) -> f64 {
        let factor = match self.norm {
            NormKind::Entrywise { p, .. } if p > 2.0 => {
                let e = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
                (self.k as f64).powf(e)
            }
            _ => 1.0,
        };
        self.bound * b_x * factor
    }

    /// Checks every constraint of the class on `w`.
    pub fn contains(&self, w: &Mat) -> Result<bool> {
        let n = self.norm_of(w)?;
        if n > self.bound * (1.0 + FEASIBILITY_TOL) + 1e-12 {
            return Ok(false);
        }
        if let Some(r) = self.rank_cap {
            if numerical_rank(w, RANK_TOL)? > r {
                return Ok(false);
            }
        }
        if let Some(e) = &self.basis {
            let residual = project_onto_span(e, w)?.sub(w)?;
            if frobenius_norm(&residual) > 1e-9 * (1.0 + frobenius_norm(w)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub(crate) fn gaussian_mat(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `k × r` matrix with orthonormal columns.
pub fn random_orthonormal(k: usize, r: usize, rng: &mut impl Rng) -> Result<Mat> {
    if r == 0 || r > k {
        return Err(invalid(format!("cannot draw {r} orthonormal vectors in dimension {k}")));
    }
    for _ in 0..16 {
        let q = colspace_basis(&gaussian_mat(k, r, rng), RANK_TOL)?;
        if q.cols() == r {
            return Ok(q);
        }
    }
    Err(Error::NumericFailure("degenerate gaussian draws".into()))
}

/// Uniform radius in `(0, 1]`.
pub(crate) fn unit_radius(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Random point in the `ℓ_p` ball of the given radius.
///
/// The `ℓ_∞` ball is sampled uniformly; other balls use a normalized
/// direction and a radius `radius · u^{1/dim}`.
pub fn sample_in_ball(dim: usize, p: f64, radius: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(radius >= 0.0) {
        return Err(invalid("ball radius must be >= 0"));
    }
    if p.is_infinite() {
        return Ok((0..dim).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect());
    }
    let mut g: Vec<f64> = if p == 1.0 {
        (0..dim)
            .map(|_| {
                let m: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            })
            .collect()
    } else {
        (0..dim).map(|_| rng.sample(StandardNormal)).collect()
    };
    let n = vec_norm(&g, p)?;
    let r = radius * unit_radius(rng).powf(1.0 / dim as f64);
    if n > 0.0 {
        g.iter_mut().for_each(|v| *v *= r / n);
    }
    Ok(g)
}

/// Deterministic random member of the class.
///
/// `W = A B` with Gaussian factors `A ∈ ℝ^{k×r}` (drawn inside `span(E)`
/// when a basis is given) and `B ∈ ℝ^{r×d}`, rescaled so the declared norm
/// equals `bound · u` with `u ~ U(0, 1]`.
pub fn sample_class_member(spec: &MatrixClassSpec, seed: u64) -> Result<Mat> {
    spec.validate()?;
    let r = spec.effective_rank();
    if r == 0 {
        return Err(Error::InfeasibleSpec("class has no admissible directions".into()));
    }
    if spec.bound == 0.0 {
        return Ok(Mat::zeros(spec.k, spec.d));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..16 {
        let left = match &spec.basis {
            Some(e) => e.matmul(&gaussian_mat(e.cols(), r, &mut rng))?,
            None => gaussian_mat(spec.k, r, &mut rng),
        };
        let mut w = left.matmul(&gaussian_mat(r, spec.d, &mut rng))?;
        let n = spec.norm_of(&w)?;
        let u = unit_radius(&mut rng);
        if n > 0.0 && n.is_finite() {
            w.scale_in_place(spec.bound * u / n);
            return Ok(w);
        }
    }
    Err(Error::NumericFailure("could not draw a nonzero class member".into()))
}
