//! Closed-form log-covering-number bounds for linear classes.
//!
//! Every value is a natural log of a covering number and is clamped at 0,
//! since a covering number is at least 1.

use std::f64::consts::E;

use crate::error::{invalid, Error, Result};

/// Inputs shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    /// Input-norm bound.
    pub b_x: f64,
    /// Matrix-norm bound.
    pub b_w: f64,
    /// Rank cap or subspace dimension.
    pub r_w: usize,
    pub d: usize,
    pub k: usize,
    /// Cover radius; `f64::INFINITY` is allowed and gives 0.
    pub eps: f64,
}

impl BoundQuery {
    pub fn new(b_x: f64, b_w: f64, r_w: usize, d: usize, k: usize, eps: f64) -> Result<Self> {
        let q = Self {
            b_x,
            b_w,
            r_w,
            d,
            k,
            eps,
        };
        q.validate()?;
        Ok(q)
    }

    /// Query with `d = k = r_w`, for bounds that ignore the ambient sizes.
    pub fn simple(b_x: f64, b_w: f64, r_w: usize, eps: f64) -> Result<Self> {
        Self::new(b_x, b_w, r_w, r_w, r_w, eps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(invalid(format!("cover radius {} must be positive", self.eps)));
        }
        if !(self.b_x >= 0.0 && self.b_x.is_finite()) || !(self.b_w >= 0.0 && self.b_w.is_finite()) {
            return Err(invalid("norm bounds must be finite and >= 0"));
        }
        if self.r_w == 0 {
            return Err(invalid("r_w must be >= 1"));
        }
        Ok(())
    }

    /// `B_x B_w / ε`, the only way radii enter the bounds.
    fn scale(&self) -> f64 {
        self.b_x * self.b_w / self.eps
    }

    fn with_rank(&self, r_w: usize) -> Self {
        Self { r_w, ..*self }
    }
}

/// Which result produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    /// Spectral-norm class in an `r_w`-dimensional subspace.
    T1Volumetric,
    /// Frobenius-norm class of rank at most `r_w`.
    T2FrobRank,
    /// Transposed (2,1)-norm class with `ℓ_∞` inputs.
    T3TwoOneRank,
    /// Basis (p,1)-norm class.
    T4BasisP1,
    /// Transposed (2,1) class with `r_w = min(d, k)`.
    CMinDK,
    /// General (p,1) class with `r_w = k`.
    CP1General,
    /// Entry-wise (1,1) class with `ℓ_1` inputs.
    C11,
    /// Volumetric bound for the (2,1) class with `ℓ_∞` inputs.
    LMain0AppF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Volumetric,
    Maurey,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub log_cover: f64,
    pub theorem: TheoremId,
    pub regime: Regime,
}

fn clamp0(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `(r/2) ln(4 B_x² B_w² r / ε²)`.
fn volumetric(q: &BoundQuery) -> f64 {
    let s = q.scale();
    let r = q.r_w as f64;
    clamp0(0.5 * r * (4.0 * s * s * r).ln())
}

/// `(s² m) ln(2r + 1)` with `m` the multiplier outside the log.
fn maurey(q: &BoundQuery, multiplier: f64) -> f64 {
    let s = q.scale();
    if s == 0.0 {
        return 0.0;
    }
    clamp0(multiplier * s * s * (2.0 * q.r_w as f64 + 1.0).ln())
}

fn result(log_cover: f64, theorem: TheoremId, regime: Regime) -> BoundResult {
    BoundResult {
        log_cover,
        theorem,
        regime,
    }
}

/// Volumetric bound for the spectral-norm class with columns in an
/// `r_w`-dimensional subspace and `ℓ_2` inputs.
pub fn bound_thm1(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    Ok(result(volumetric(q), TheoremId::T1Volumetric, Regime::Volumetric))
}

/// `(r_w B_x² B_w² / ε²) ln(2 r_w + 1)` for the Frobenius class of rank `≤ r_w`.
pub fn bound_thm2(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    Ok(result(maurey(q, q.r_w as f64), TheoremId::T2FrobRank, Regime::Maurey))
}

/// Same closed form as [`bound_thm2`], for the transposed (2,1) class with
/// `ℓ_∞` inputs.
pub fn bound_thm3(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    Ok(result(maurey(q, q.r_w as f64), TheoremId::T3TwoOneRank, Regime::Maurey))
}

/// `(B_x² B_w² / ε²) ln(2 r_w + 1)` for the basis (p,1) class; there is no
/// factor `r_w` outside the log.
pub fn bound_thm4(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    Ok(result(maurey(q, 1.0), TheoremId::T4BasisP1, Regime::Maurey))
}

/// Volumetric bound for the (2,1) class with `ℓ_∞` inputs.
pub fn bound_appf(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    Ok(result(volumetric(q), TheoremId::LMain0AppF, Regime::Volumetric))
}

fn require_dims(q: &BoundQuery) -> Result<()> {
    if q.d == 0 || q.k == 0 {
        return Err(invalid("d and k must be >= 1"));
    }
    Ok(())
}

/// [`bound_thm3`] with the rank replaced by `min(d, k)`; `r_w` is ignored.
pub fn bound_cor_mindk(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_dims(q)?;
    let q = q.with_rank(q.d.min(q.k));
    Ok(result(maurey(&q, q.r_w as f64), TheoremId::CMinDK, Regime::Maurey))
}

/// [`bound_thm4`] with `E = I_k`, hence `r_w = k`.
pub fn bound_cor_p1_general(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_dims(q)?;
    Ok(result(maurey(&q.with_rank(q.k), 1.0), TheoremId::CP1General, Regime::Maurey))
}

/// Entry-wise (1,1) class with `ℓ_1` inputs; same value as the general
/// (p,1) corollary at `p = ∞`.
pub fn bound_cor_11(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_dims(q)?;
    Ok(result(maurey(&q.with_rank(q.k), 1.0), TheoremId::C11, Regime::Maurey))
}

/// Pointwise minimum of two bounds for the same query; ties go to the
/// volumetric value.
pub fn best_bound(volumetric: BoundResult, maurey: BoundResult) -> BoundResult {
    if volumetric.log_cover <= maurey.log_cover {
        volumetric
    } else {
        maurey
    }
}

/// Radius `B_x B_w √(2/r_w)` below which the volumetric bound is the
/// smaller of [`bound_thm1`] and [`bound_thm2`].
pub fn volumetric_threshold(b_x: f64, b_w: f64, r_w: usize) -> f64 {
    b_x * b_w * (2.0 / r_w as f64).sqrt()
}

/// Evaluates `(c/2) ln(4cy) < y ln(2c + 1)` on the domain
/// `c ≥ (e − 1)/2`, `y ≥ c/2`.
///
/// The strict inequality is only guaranteed for `c` below about 1.366;
/// larger `c` fail near `y = c/2`, so callers get the honest truth value.
pub fn lemma_aux_check(c: f64, y: f64) -> Result<bool> {
    if !c.is_finite() || !y.is_finite() {
        return Err(Error::Domain("arguments must be finite".into()));
    }
    if c < (E - 1.0) / 2.0 {
        return Err(Error::Domain(format!("c = {c} below (e-1)/2")));
    }
    if y < c / 2.0 {
        return Err(Error::Domain(format!("y = {y} below c/2 = {}", c / 2.0)));
    }
    Ok(0.5 * c * (4.0 * c * y).ln() < y * (2.0 * c + 1.0).ln())
}
