//! Single-layer attention head with a scalar `[CLS]` read-out.
//!
//! For a sequence `X ∈ ℝ^{T×d}` a head computes
//! `wᵀ W_cᵀ σ(W_vᵀ Xᵀ softmax(X W_QKᵀ x_cls))`. Heads are summed.
//!
//! The query-key class constrains the map `M = W_QKᵀ`, so
//! `MatrixClassSpec::norm_of(M)` is the norm bounded in the hypothesis.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, precondition, Result};
use crate::linalg::{
    dot, entrywise_norm, gaussian_mat, project_onto_span, sample_class_member, truncate_rank, unit_radius, vec_norm,
    Mat, MatrixClassSpec, FEASIBILITY_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu(s) => {
                if v >= 0.0 {
                    v
                } else {
                    s * v
                }
            }
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }

    /// Lipschitz constant `L_σ`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Activation::LeakyRelu(s) => s.abs().max(1.0),
            _ => 1.0,
        }
    }
}

/// Parameters of one head; `d` is the embedding size, `k` the value size.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `d × d`.
    pub w_qk: Mat,
    /// `d × k`.
    pub w_v: Mat,
    /// `k × d`.
    pub w_c: Mat,
    pub w: Vec<f64>,
    pub x_cls: Vec<f64>,
    pub activation: Activation,
}

impl HeadParams {
    pub fn new(w_qk: Mat, w_v: Mat, w_c: Mat, w: Vec<f64>, x_cls: Vec<f64>, activation: Activation) -> Result<Self> {
        let p = Self {
            w_qk,
            w_v,
            w_c,
            w,
            x_cls,
            activation,
        };
        p.check_dims()?;
        Ok(p)
    }

    /// All-zero head.
    pub fn zeros(d: usize, k: usize, x_cls: Vec<f64>, activation: Activation) -> Result<Self> {
        Self::new(Mat::zeros(d, d), Mat::zeros(d, k), Mat::zeros(k, d), vec![0.0; d], x_cls, activation)
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    pub fn k(&self) -> usize {
        self.w_v.cols()
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.w.len();
        let k = self.w_v.cols();
        if self.w_qk.shape() != (d, d)
            || self.w_v.rows() != d
            || self.w_c.shape() != (k, d)
            || self.x_cls.len() != d
        {
            return Err(invalid(format!(
                "inconsistent head shapes: W_QK {:?}, W_v {:?}, W_c {:?}, w {}, x_cls {}",
                self.w_qk.shape(),
                self.w_v.shape(),
                self.w_c.shape(),
                d,
                self.x_cls.len()
            )));
        }
        Ok(())
    }

    /// `M = W_QKᵀ`, the map constrained by the query-key class.
    pub fn qk_map(&self) -> Mat {
        self.w_qk.transpose()
    }

    pub fn forward(&self, x: &Mat) -> Result<f64> {
        self.check_dims()?;
        if x.cols() != self.d() || x.rows() == 0 {
            return Err(invalid(format!("sequence must be T x {} with T >= 1", self.d())));
        }
        Ok(forward_slices(
            &HeadSlices {
                d: self.d(),
                k: self.k(),
                w_qk: self.w_qk.data(),
                w_v: self.w_v.data(),
                w_c: self.w_c.data(),
                w: &self.w,
            },
            &self.x_cls,
            self.activation,
            x,
        ))
    }
}

/// Borrowed row-major head parameters.
pub(crate) struct HeadSlices<'a> {
    pub d: usize,
    pub k: usize,
    pub w_qk: &'a [f64],
    pub w_v: &'a [f64],
    pub w_c: &'a [f64],
    pub w: &'a [f64],
}

/// Head output without shape checks; callers guarantee consistent sizes.
pub(crate) fn forward_slices(h: &HeadSlices<'_>, x_cls: &[f64], act: Activation, x: &Mat) -> f64 {
    let (d, k) = (h.d, h.k);
    // v = W_QKᵀ x_cls
    let mut v = vec![0.0; d];
    for (i, &c) in x_cls.iter().enumerate() {
        if c != 0.0 {
            for (vj, a) in v.iter_mut().zip(&h.w_qk[i * d..(i + 1) * d]) {
                *vj += a * c;
            }
        }
    }
    let scores: Vec<f64> = (0..x.rows()).map(|t| dot(x.row(t), &v)).collect();
    let attn = softmax(&scores);
    // u = Xᵀ a
    let mut u = vec![0.0; d];
    for (t, &a) in attn.iter().enumerate() {
        for (ui, xi) in u.iter_mut().zip(x.row(t)) {
            *ui += a * xi;
        }
    }
    // hidden = σ(W_vᵀ u), then y = W_cᵀ hidden, out = wᵀ y
    let mut out = 0.0;
    let mut hidden = vec![0.0; k];
    for (i, &ui) in u.iter().enumerate() {
        for (hj, a) in hidden.iter_mut().zip(&h.w_v[i * k..(i + 1) * k]) {
            *hj += a * ui;
        }
    }
    for (j, hj) in hidden.iter().enumerate() {
        let s = act.apply(*hj);
        if s != 0.0 {
            out += s * dot(&h.w_c[j * d..(j + 1) * d], h.w);
        }
    }
    out
}

/// Stabilized softmax of one vector.
pub fn softmax(s: &[f64]) -> Vec<f64> {
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Softmax applied to each row.
pub fn row_softmax(m: &Mat) -> Mat {
    let mut out = Mat::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for (j, v) in softmax(m.row(i)).into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

pub fn head_forward(p: &HeadParams, x: &Mat) -> Result<f64> {
    p.forward(x)
}

/// Sum of head outputs.
pub fn multihead_forward(heads: &[HeadParams], x: &Mat) -> Result<f64> {
    heads.iter().map(|h| h.forward(x)).sum()
}

/// Norm bounds of the hypothesis class.
///
/// `W_c` and `W_v` are bounded by their largest column `ℓ_1` norm, which
/// is what makes the output bounded by
/// `B_w B_Wc L_σ B_Wv B_x` for rows with `‖x_t‖_∞ ≤ B_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub b_w: f64,
    pub b_wc: f64,
    pub b_wv: f64,
    /// Class of `M = W_QKᵀ`.
    pub qk: MatrixClassSpec,
    pub b_x: f64,
    /// Norm applied to sequence rows and `x_cls`.
    pub input_norm: f64,
}

/// Largest column `ℓ_1` norm.
pub fn max_col_l1(m: &Mat) -> f64 {
    entrywise_norm(m, 1.0, f64::INFINITY).expect("valid exponents")
}

fn le(v: f64, bound: f64) -> bool {
    v <= bound * (1.0 + FEASIBILITY_TOL) + 1e-12
}

impl ConstraintSet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("B_w", self.b_w), ("B_Wc", self.b_wc), ("B_Wv", self.b_wv), ("B_x", self.b_x)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if self.qk.d != self.qk.k {
            return Err(invalid("query-key class must be square"));
        }
        if self.input_norm.is_nan() || self.input_norm < 1.0 {
            return Err(invalid("input norm exponent must be >= 1"));
        }
        self.qk.validate()
    }

    pub fn d(&self) -> usize {
        self.qk.d
    }

    /// `B_w B_Wc L_σ B_Wv`.
    pub fn prefactor(&self, activation: Activation) -> f64 {
        self.b_w * self.b_wc * activation.lipschitz() * self.b_wv
    }

    pub fn contains(&self, p: &HeadParams) -> Result<bool> {
        p.check_dims()?;
        if p.d() != self.d() {
            return Ok(false);
        }
        Ok(le(vec_norm(&p.w, 1.0)?, self.b_w)
            && le(max_col_l1(&p.w_c), self.b_wc)
            && le(max_col_l1(&p.w_v), self.b_wv)
            && self.qk.contains(&p.qk_map())?)
    }

    /// Whether every row and `x_cls` lie in the input ball.
    pub fn admits(&self, x: &Mat) -> Result<bool> {
        for t in 0..x.rows() {
            if !le(vec_norm(x.row(t), self.input_norm)?, self.b_x) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Random feasible head: each block is a Gaussian direction scaled to
    /// a uniform fraction of its ball, and the query-key map is a class
    /// member.
    pub fn sample_head(
        &self,
        k: usize,
        x_cls: Vec<f64>,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Result<HeadParams> {
        self.validate()?;
        let d = self.d();
        let m = sample_class_member(&self.qk, rng.random())?;
        let mut w_v = gaussian_mat(d, k, rng);
        let mut w_c = gaussian_mat(k, d, rng);
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        rescale_mat(&mut w_v, max_col_l1, self.b_wv * unit_radius(rng));
        rescale_mat(&mut w_c, max_col_l1, self.b_wc * unit_radius(rng));
        let n = vec_norm(&w, 1.0)?;
        let target = self.b_w * unit_radius(rng);
        if n > 0.0 {
            w.iter_mut().for_each(|v| *v *= target / n);
        }
        HeadParams::new(m.transpose(), w_v, w_c, w, x_cls, activation)
    }
}

fn rescale_mat(m: &mut Mat, norm: impl Fn(&Mat) -> f64, target: f64) {
    let n = norm(m);
    if n > 0.0 {
        m.scale_in_place(target / n);
    }
}

fn shrink_mat(m: &mut Mat, n: f64, bound: f64) {
    if n > bound {
        m.scale_in_place(if n > 0.0 { bound / n } else { 0.0 });
    }
}

/// Pulls each parameter back onto its ball by radial scaling.
///
/// The query-key map is first projected onto the basis span and truncated
/// to the rank cap, then scaled.
pub fn project_constraints(p: &HeadParams, c: &ConstraintSet) -> Result<HeadParams> {
    c.validate()?;
    p.check_dims()?;
    if p.d() != c.d() {
        return Err(invalid("head and constraint dimensions differ"));
    }
    let mut out = p.clone();
    let n = vec_norm(&out.w, 1.0)?;
    if n > c.b_w {
        let s = if n > 0.0 { c.b_w / n } else { 0.0 };
        out.w.iter_mut().for_each(|v| *v *= s);
    }
    let n = max_col_l1(&out.w_c);
    shrink_mat(&mut out.w_c, n, c.b_wc);
    let n = max_col_l1(&out.w_v);
    shrink_mat(&mut out.w_v, n, c.b_wv);

    let mut m = out.qk_map();
    if let Some(e) = &c.qk.basis {
        m = project_onto_span(e, &m)?;
    }
    if let Some(r) = c.qk.rank_cap {
        m = truncate_rank(&m, r)?;
    }
    let n = c.qk.norm_of(&m)?;
    shrink_mat(&mut m, n, c.qk.bound);
    out.w_qk = m.transpose();
    Ok(out)
}

/// Checks, for every coordinate `j`,
/// `|(Xᵀ softmax(X W₁ x_cls) − Xᵀ softmax(X W₂ x_cls))_j| ≤ 2 B_x² ‖W₁ x_cls − W₂ x_cls‖₂`.
///
/// Rows of `X` must satisfy `‖x_t‖₂ ≤ B_x`; that covers `ℓ_1` and `ℓ_2`
/// bounded rows. Rows bounded only in `ℓ_∞` can break the inequality by a
/// factor up to `√d`.
pub fn attention_lipschitz_check(w1: &Mat, w2: &Mat, x: &Mat, x_cls: &[f64], b_x: f64) -> Result<bool> {
    let z1 = w1.matvec(x_cls)?;
    let z2 = w2.matvec(x_cls)?;
    if x.cols() != z1.len() {
        return Err(invalid("sequence width differs from the map output"));
    }
    for t in 0..x.rows() {
        if !le(vec_norm(x.row(t), 2.0)?, b_x) {
            return Err(precondition("sequence row outside the l2 ball of radius B_x"));
        }
    }
    let a1 = softmax(&x.matvec(&z1)?);
    let a2 = softmax(&x.matvec(&z2)?);
    let diff: Vec<f64> = a1.iter().zip(&a2).map(|(p, q)| p - q).collect();
    let lhs = x.tr_matvec(&diff)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let dz: Vec<f64> = z1.iter().zip(&z2).map(|(p, q)| p - q).collect();
    let rhs = 2.0 * b_x * b_x * dot(&dz, &dz).sqrt();
    Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-15)
}

/// Sequences sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch {
    pub samples: Vec<Mat>,
}

impl SequenceBatch {
    pub fn new(samples: Vec<Mat>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let shape = first.shape();
            if shape.0 == 0 || samples.iter().any(|s| s.shape() != shape) {
                return Err(invalid("samples must share a nonempty T x d shape"));
            }
        }
        Ok(Self { samples })
    }

    /// `n` sequences of `t` rows drawn uniformly from the input ball.
    pub fn sample(n: usize, t: usize, d: usize, norm: f64, b_x: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let mut data = Vec::with_capacity(t * d);
            for _ in 0..t {
                data.extend(crate::linalg::sample_in_ball(d, norm, b_x, rng)?);
            }
            samples.push(Mat::new(t, d, data)?);
        }
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seq_len(&self) -> usize {
        self.samples.first().map_or(0, Mat::rows)
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Mat::cols)
    }
}
