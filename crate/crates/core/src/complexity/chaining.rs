//! Dyadic chaining bounds for the attention class.

use crate::error::{invalid, Result};

/// Grid size for [`ChainingParams::regime_split_holds`].
const SPLIT_GRID: usize = 400;
/// Depth at which [`dudley_generic`] decides convergence.
const DUDLEY_MAX_DEPTH: usize = 1000;

/// Constants of a log-covering bound `min{a ln(b/ε²), q²/ε²}` for the
/// query-key class at scale `ε/(2B_x²)`, plus the output prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainingParams {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub eps0: f64,
    pub b_x: f64,
    /// `B_w B_Wc L_σ B_Wv`.
    pub prefactor: f64,
    pub n: usize,
}

impl ChainingParams {
    /// Checks signs and `ε₀ ≤ B_x`.
    ///
    /// The split condition `a ln(b/ε²) ≤ q²/ε²` on `(0, ε₀]` is not
    /// required: the bound only uses that the cover is below each branch
    /// of the minimum. See [`Self::regime_split_holds`].
    pub fn new(a: f64, b: f64, q: f64, eps0: f64, b_x: f64, prefactor: f64, n: usize) -> Result<Self> {
        let p = Self {
            a,
            b,
            q,
            eps0,
            b_x,
            prefactor,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.q, self.eps0, self.b_x, self.prefactor]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("chaining constants must be finite"));
        }
        if self.a < 0.0 || self.q < 0.0 || self.prefactor < 0.0 {
            return Err(invalid("a, q and the prefactor must be >= 0"));
        }
        if !(self.b > 0.0) || !(self.eps0 > 0.0) || !(self.b_x > 0.0) {
            return Err(invalid("b, eps0 and B_x must be positive"));
        }
        if self.eps0 > self.b_x * (1.0 + 1e-12) {
            return Err(invalid(format!("eps0 = {} exceeds B_x = {}", self.eps0, self.b_x)));
        }
        if self.n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        Ok(())
    }

    /// `m₀ = ⌈log₂(B_x/ε₀)⌉`.
    pub fn m0(&self) -> u32 {
        (self.b_x / self.eps0).log2().ceil().max(0.0) as u32
    }

    /// Whether `a ln(b/ε²) ≤ q²/ε²` on a log grid over `[10⁻⁶ ε₀, ε₀]`.
    pub fn regime_split_holds(&self) -> bool {
        (0..=SPLIT_GRID).all(|i| {
            let eps = self.eps0 * 10f64.powf(-6.0 * i as f64 / SPLIT_GRID as f64);
            self.a * (self.b / (eps * eps)).ln() <= self.q * self.q / (eps * eps) * (1.0 + 1e-12)
        })
    }

    /// `min{a ln(b/ε²), q²/ε²}` clamped at 0.
    pub fn log_cover(&self, eps: f64) -> f64 {
        let vol = self.a * (self.b / (eps * eps)).ln();
        vol.min(self.q * self.q / (eps * eps)).max(0.0)
    }
}

/// `(24 P/√n) (ε₀ [√(a ln(b/B_x²)) + (√(a ln 4)/B_x)(m₀ + 1)] + q ln(B_x/ε₀))`
/// with `P` the prefactor and `ln(b/B_x²)` clamped at 0.
pub fn chaining_bound(p: &ChainingParams) -> Result<f64> {
    p.validate()?;
    let head = (p.a * (p.b / (p.b_x * p.b_x)).ln().max(0.0)).sqrt();
    let steps = (p.a * 4f64.ln()).sqrt() / p.b_x * (p.m0() as f64 + 1.0);
    let tail = p.q * (p.b_x / p.eps0).ln().max(0.0);
    Ok(24.0 * p.prefactor / (p.n as f64).sqrt() * (p.eps0 * (head + steps) + tail))
}

fn check_corollary(b_x: f64, b_qk: f64, r: usize, prefactor: f64, n: usize) -> Result<()> {
    if !(b_x > 0.0) || !(b_qk > 0.0) || !b_x.is_finite() || !b_qk.is_finite() {
        return Err(invalid("B_x and B_QK must be positive and finite"));
    }
    if r == 0 || n == 0 {
        return Err(invalid("rank and n must be >= 1"));
    }
    if !(prefactor >= 0.0) {
        return Err(invalid("prefactor must be >= 0"));
    }
    Ok(())
}

/// Constants for the basis (1,1) query-key class with `ℓ_1` inputs:
/// `a = r/2`, `b = 16 B_x⁶ B² r`, `q = 2 B_x³ B √ln(2r+1)`,
/// `ε₀ = min{B_x, 2 B_x³ B √(2/r)}`.
pub fn cor_main1_params(b_x: f64, b_qk: f64, r_w: usize, prefactor: f64, n: usize) -> Result<ChainingParams> {
    check_corollary(b_x, b_qk, r_w, prefactor, n)?;
    let r = r_w as f64;
    let scale = 2.0 * b_x.powi(3) * b_qk;
    ChainingParams::new(
        r / 2.0,
        16.0 * b_x.powi(6) * b_qk * b_qk * r,
        scale * (2.0 * r + 1.0).ln().sqrt(),
        b_x.min(scale * (2.0 / r).sqrt()),
        b_x,
        prefactor,
        n,
    )
}

pub fn bound_cor_main1(b_x: f64, b_qk: f64, r_w: usize, prefactor: f64, n: usize) -> Result<f64> {
    chaining_bound(&cor_main1_params(b_x, b_qk, r_w, prefactor, n)?)
}

/// Entry-wise (1,1) query-key class: the basis bound with `E = I_d`.
pub fn bound_cor_main2(b_x: f64, b_qk: f64, d: usize, prefactor: f64, n: usize) -> Result<f64> {
    bound_cor_main1(b_x, b_qk, d, prefactor, n)
}

/// Constants for the transposed (2,1) query-key class with `ℓ_∞` inputs;
/// as [`cor_main1_params`] but `q = 2 B_x³ B √(r ln(2r+1))`.
pub fn cor_18_params(b_x: f64, b_qk: f64, r_w: usize, prefactor: f64, n: usize) -> Result<ChainingParams> {
    let mut p = cor_main1_params(b_x, b_qk, r_w, prefactor, n)?;
    p.q *= (r_w as f64).sqrt();
    Ok(p)
}

pub fn bound_cor_18(b_x: f64, b_qk: f64, r_w: usize, prefactor: f64, n: usize) -> Result<f64> {
    chaining_bound(&cor_18_params(b_x, b_qk, r_w, prefactor, n)?)
}

/// Dyadic chaining sums at radii `ε_j = c_x / 2^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DudleyResult {
    /// Value at the requested depth `m`.
    pub value: f64,
    /// Limit as `m → ∞`; infinite when the sum diverges.
    pub limit: f64,
    /// Smallest value over depths `1..=m`.
    pub best: f64,
    pub best_m: usize,
}

/// `2 ε_{m+1} + (12/√n) Σ_{j=1}^{m} (ε_j − ε_{j+1}) √(log N(ε_j))`.
///
/// Negative log-cover values are treated as 0.
pub fn dudley_generic(cover_log_fn: impl Fn(f64) -> f64, c_x: f64, n: usize, m: usize) -> Result<DudleyResult> {
    if !(c_x > 0.0) || !c_x.is_finite() {
        return Err(invalid("c_x must be positive and finite"));
    }
    if n == 0 || m == 0 {
        return Err(invalid("n and m must be >= 1"));
    }
    let scale = 12.0 / (n as f64).sqrt();
    let eps = |j: usize| c_x * 0.5f64.powi(j as i32);
    let term = |j: usize| scale * (eps(j) - eps(j + 1)) * cover_log_fn(eps(j)).max(0.0).sqrt();

    let mut sum = 0.0;
    let mut value = f64::NAN;
    let mut best = f64::INFINITY;
    let mut best_m = 1;
    let mut last = 0.0;
    for j in 1..=m.max(DUDLEY_MAX_DEPTH) {
        last = term(j);
        sum += last;
        if j <= m {
            let v = 2.0 * eps(j + 1) + sum;
            if v < best {
                best = v;
                best_m = j;
            }
            if j == m {
                value = v;
            }
        }
    }
    let limit = if last > 1e-12 * sum.max(f64::MIN_POSITIVE) {
        f64::INFINITY
    } else {
        sum
    };
    Ok(DudleyResult {
        value,
        limit,
        best,
        best_m,
    })
}
