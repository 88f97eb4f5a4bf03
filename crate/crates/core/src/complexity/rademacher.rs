//! Monte Carlo lower estimates of the empirical Rademacher complexity.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attention::{forward_slices, project_constraints, Activation, ConstraintSet, HeadParams, HeadSlices};
use crate::error::{invalid, Result};
use crate::linalg::{vec_norm, Mat};

/// Central-difference step for numerical gradients.
pub const FD_STEP: f64 = 1e-5;
/// Default projected-ascent iterations per restart.
pub const DEFAULT_OPT_STEPS: usize = 40;

/// A contiguous group of parameters sharing one norm ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub range: Range<usize>,
    /// Radius of the ball, used to scale ascent steps.
    pub radius: f64,
}

/// A parametrized class `{x ↦ f(θ, x)}` with a feasible set.
pub trait HypothesisClass: Sync {
    fn num_params(&self) -> usize;
    fn blocks(&self) -> Vec<ParamBlock>;
    /// Random feasible parameters.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    /// Maps parameters back into the feasible set.
    fn project(&self, theta: &mut [f64]) -> Result<()>;
    fn eval(&self, theta: &[f64], x: &Mat) -> f64;
    /// Feasible parameters computing `−f(θ, ·)`, when the class is
    /// symmetric.
    fn negate(&self, _theta: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// Disjoint parameter ranges whose contributions to `f` add up.
    fn parts(&self) -> Vec<Range<usize>> {
        vec![0..self.num_params()]
    }
    /// Contribution of part `part`, given only that part's parameters.
    fn eval_part(&self, _part: usize, theta_part: &[f64], x: &Mat) -> f64 {
        self.eval(theta_part, x)
    }
}

/// Sum of `H` attention heads sharing one constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerClass {
    pub constraints: ConstraintSet,
    pub k: usize,
    pub heads: usize,
    pub x_cls: Vec<f64>,
    pub activation: Activation,
}

impl TransformerClass {
    pub fn new(
        constraints: ConstraintSet,
        k: usize,
        heads: usize,
        x_cls: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        constraints.validate()?;
        let d = constraints.d();
        if k == 0 || heads == 0 {
            return Err(invalid("k and the head count must be >= 1"));
        }
        if x_cls.len() != d {
            return Err(invalid("x_cls must have length d"));
        }
        if vec_norm(&x_cls, constraints.input_norm)? > constraints.b_x * (1.0 + 1e-9) + 1e-12 {
            return Err(invalid("x_cls lies outside the input ball"));
        }
        Ok(Self {
            constraints,
            k,
            heads,
            x_cls,
            activation,
        })
    }

    fn d(&self) -> usize {
        self.constraints.d()
    }

    /// Parameters per head, laid out `[W_QK, W_v, W_c, w]` row-major.
    pub fn head_len(&self) -> usize {
        let (d, k) = (self.d(), self.k);
        d * d + 2 * d * k + d
    }

    fn slices<'a>(&self, theta: &'a [f64]) -> HeadSlices<'a> {
        let (d, k) = (self.d(), self.k);
        let (qk, rest) = theta.split_at(d * d);
        let (v, rest) = rest.split_at(d * k);
        let (c, w) = rest.split_at(k * d);
        HeadSlices {
            d,
            k,
            w_qk: qk,
            w_v: v,
            w_c: c,
            w,
        }
    }

    pub fn to_heads(&self, theta: &[f64]) -> Result<Vec<HeadParams>> {
        theta
            .chunks(self.head_len())
            .map(|chunk| {
                let s = self.slices(chunk);
                HeadParams::new(
                    Mat::new(s.d, s.d, s.w_qk.to_vec())?,
                    Mat::new(s.d, s.k, s.w_v.to_vec())?,
                    Mat::new(s.k, s.d, s.w_c.to_vec())?,
                    s.w.to_vec(),
                    self.x_cls.clone(),
                    self.activation,
                )
            })
            .collect()
    }

    pub fn from_heads(&self, heads: &[HeadParams]) -> Vec<f64> {
        heads
            .iter()
            .flat_map(|h| {
                let mut v = h.w_qk.data().to_vec();
                v.extend_from_slice(h.w_v.data());
                v.extend_from_slice(h.w_c.data());
                v.extend_from_slice(&h.w);
                v
            })
            .collect()
    }
}

impl HypothesisClass for TransformerClass {
    fn num_params(&self) -> usize {
        self.heads * self.head_len()
    }

    fn blocks(&self) -> Vec<ParamBlock> {
        let (d, k) = (self.d(), self.k);
        let c = &self.constraints;
        let mut out = Vec::new();
        for h in 0..self.heads {
            let base = h * self.head_len();
            let sizes = [(d * d, c.qk.bound), (d * k, c.b_wv), (k * d, c.b_wc), (d, c.b_w)];
            let mut start = base;
            for (len, radius) in sizes {
                out.push(ParamBlock {
                    range: start..start + len,
                    radius,
                });
                start += len;
            }
        }
        out
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let heads = (0..self.heads)
            .map(|_| self.constraints.sample_head(self.k, self.x_cls.clone(), self.activation, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.from_heads(&heads))
    }

    fn project(&self, theta: &mut [f64]) -> Result<()> {
        let heads = self.to_heads(theta)?;
        let projected = heads
            .iter()
            .map(|h| project_constraints(h, &self.constraints))
            .collect::<Result<Vec<_>>>()?;
        theta.copy_from_slice(&self.from_heads(&projected));
        Ok(())
    }

    fn eval(&self, theta: &[f64], x: &Mat) -> f64 {
        theta
            .chunks(self.head_len())
            .map(|chunk| forward_slices(&self.slices(chunk), &self.x_cls, self.activation, x))
            .sum()
    }

    fn parts(&self) -> Vec<Range<usize>> {
        let len = self.head_len();
        (0..self.heads).map(|h| h * len..(h + 1) * len).collect()
    }

    fn eval_part(&self, _part: usize, theta_part: &[f64], x: &Mat) -> f64 {
        forward_slices(&self.slices(theta_part), &self.x_cls, self.activation, x)
    }

    fn negate(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let d = self.d();
        let len = self.head_len();
        let mut out = theta.to_vec();
        for chunk in out.chunks_mut(len) {
            chunk[len - d..].iter_mut().for_each(|v| *v = -*v);
        }
        Some(out)
    }
}

/// Settings for the inner maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub opt_steps: usize,
    /// Initial step as a fraction of each block radius.
    pub step: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            opt_steps: DEFAULT_OPT_STEPS,
            step: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate {
    pub value: f64,
    /// Standard error across sign draws.
    pub std_error: f64,
    pub n: usize,
    pub sigma_draws: usize,
    pub restarts: usize,
    pub opt_steps: usize,
    /// The inner supremum is approximated from below.
    pub is_lower_bound: bool,
}

/// `Σ_i c_i f(θ, x_i) / n`.
pub(crate) fn weighted_mean<C: HypothesisClass + ?Sized>(class: &C, theta: &[f64], xs: &[Mat], c: &[f64]) -> f64 {
    let s: f64 = xs.iter().zip(c).map(|(x, &ci)| ci * class.eval(theta, x)).sum();
    s / xs.len() as f64
}

/// Central-difference gradient of `θ ↦ (1/n) Σ_i φ(i, f(θ, x_i))`.
///
/// Each coordinate is perturbed inside its own part, so only that part's
/// contribution is recomputed; the others are cached.
pub(crate) fn sample_gradient<C: HypothesisClass + ?Sized>(
    class: &C,
    theta: &[f64],
    xs: &[Mat],
    phi: impl Fn(usize, f64) -> f64,
) -> Vec<f64> {
    let parts = class.parts();
    let cached: Vec<Vec<f64>> = parts
        .iter()
        .enumerate()
        .map(|(p, range)| xs.iter().map(|x| class.eval_part(p, &theta[range.clone()], x)).collect())
        .collect();
    let n = xs.len() as f64;
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for (p, range) in parts.iter().enumerate() {
        // sum of the other parts, in the order eval would add them
        let rest: Vec<f64> = (0..xs.len())
            .map(|i| (0..parts.len()).filter(|&q| q != p).map(|q| cached[q][i]).sum())
            .collect();
        for j in range.clone() {
            let orig = probe[j];
            let mut side = |v: f64| {
                probe[j] = v;
                let part = &probe[range.clone()];
                let s: f64 = xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| phi(i, rest[i] + class.eval_part(p, part, x)))
                    .sum();
                s / n
            };
            let up = side(orig + FD_STEP);
            let down = side(orig - FD_STEP);
            probe[j] = orig;
            grad[j] = (up - down) / (2.0 * FD_STEP);
        }
    }
    grad
}

/// Projected ascent with block-normalized steps and step halving on
/// failure. Returns the best feasible objective seen and its parameters.
pub(crate) fn projected_ascent<C: HypothesisClass + ?Sized>(
    class: &C,
    mut theta: Vec<f64>,
    objective: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Vec<f64>,
    cfg: AscentConfig,
) -> Result<(f64, Vec<f64>)> {
    let blocks = class.blocks();
    let mut value = objective(&theta);
    let mut eta = cfg.step;
    for _ in 0..cfg.opt_steps {
        if eta < 1e-6 {
            break;
        }
        let grad = gradient(&theta);
        let mut candidate = theta.clone();
        for b in &blocks {
            let g = &grad[b.range.clone()];
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && b.radius > 0.0 {
                let s = eta * b.radius / norm;
                for (t, gi) in candidate[b.range.clone()].iter_mut().zip(g) {
                    *t += s * gi;
                }
            }
        }
        class.project(&mut candidate)?;
        let next = objective(&candidate);
        if next > value {
            value = next;
            theta = candidate;
            eta = (eta * 1.5).min(cfg.step);
        } else {
            eta *= 0.5;
        }
    }
    Ok((value, theta))
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Estimates `E_σ sup_θ (1/n) Σ σ_i f(θ, x_i)`.
///
/// Each sign draw runs `restarts` projected ascents from random feasible
/// points and keeps the best value; draws use independent streams of one
/// seeded generator, so the result does not depend on thread count.
pub fn mc_rademacher<C: HypothesisClass + ?Sized>(
    class: &C,
    batch: &[Mat],
    sigma_draws: usize,
    restarts: usize,
    seed: u64,
    cfg: AscentConfig,
) -> Result<RademacherEstimate> {
    if batch.is_empty() || sigma_draws == 0 || restarts == 0 {
        return Err(invalid("batch, sigma draws and restarts must be nonempty"));
    }
    let per_draw: Vec<f64> = (0..sigma_draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(draw as u64);
            let sigma: Vec<f64> = (0..batch.len())
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let objective = |t: &[f64]| weighted_mean(class, t, batch, &sigma);
            let gradient = |t: &[f64]| sample_gradient(class, t, batch, |i, v| sigma[i] * v);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..restarts {
                let start = class.sample(&mut rng)?;
                let (v, theta) = projected_ascent(class, start, objective, gradient, cfg)?;
                let v = match class.negate(&theta) {
                    Some(neg) if v < 0.0 => v.max(objective(&neg)),
                    _ => v,
                };
                best = best.max(v);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let m = sigma_draws as f64;
    let value = neumaier_sum(&per_draw) / m;
    let var = if sigma_draws > 1 {
        per_draw.iter().map(|v| (v - value) * (v - value)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        value,
        std_error: (var / m).sqrt(),
        n: batch.len(),
        sigma_draws,
        restarts,
        opt_steps: cfg.opt_steps,
        is_lower_bound: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rng_from_seed, MatrixClassSpec, NormKind};
    use crate::attention::SequenceBatch;

    fn constraints(b: f64) -> ConstraintSet {
        ConstraintSet {
            b_w: b,
            b_wc: b,
            b_wv: b,
            qk: MatrixClassSpec::new(3, 3, NormKind::Entrywise { p: 1.0, q: 1.0 }, b, None, None).unwrap(),
            b_x: 1.0,
            input_norm: 1.0,
        }
    }

    #[test]
    fn zero_class_has_zero_complexity() {
        let class = TransformerClass::new(constraints(0.0), 2, 1, vec![0.5, 0.0, 0.0], Activation::Relu).unwrap();
        let mut rng = rng_from_seed(0);
        let batch = SequenceBatch::sample(8, 4, 3, 1.0, 1.0, &mut rng).unwrap();
        let est = mc_rademacher(&class, &batch.samples, 4, 2, 1, AscentConfig::default()).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.is_lower_bound);
    }

    #[test]
    fn flattening_round_trips() {
        let class = TransformerClass::new(constraints(1.0), 2, 2, vec![0.5, 0.0, 0.0], Activation::Relu).unwrap();
        let mut rng = rng_from_seed(3);
        let theta = class.sample(&mut rng).unwrap();
        assert_eq!(theta.len(), class.num_params());
        let heads = class.to_heads(&theta).unwrap();
        assert_eq!(class.from_heads(&heads), theta);
        let x = SequenceBatch::sample(1, 4, 3, 1.0, 1.0, &mut rng).unwrap().samples.remove(0);
        let direct: f64 = heads.iter().map(|h| h.forward(&x).unwrap()).sum();
        assert!((class.eval(&theta, &x) - direct).abs() < 1e-14);
        let neg = class.negate(&theta).unwrap();
        assert!((class.eval(&neg, &x) + direct).abs() < 1e-14);
    }

    #[test]
    fn partwise_gradient_matches_full_differences() {
        let class = TransformerClass::new(constraints(1.0), 2, 3, vec![0.5, 0.0, 0.0], Activation::Tanh).unwrap();
        let mut rng = rng_from_seed(8);
        let theta = class.sample(&mut rng).unwrap();
        let batch = SequenceBatch::sample(5, 4, 3, 1.0, 1.0, &mut rng).unwrap();
        let c = [1.0, -1.0, -1.0, 1.0, 1.0];
        let fast = sample_gradient(&class, &theta, &batch.samples, |i, v| c[i] * v);
        let mut probe = theta.clone();
        for (j, g) in fast.iter().enumerate() {
            let orig = probe[j];
            probe[j] = orig + FD_STEP;
            let up = weighted_mean(&class, &probe, &batch.samples, &c);
            probe[j] = orig - FD_STEP;
            let down = weighted_mean(&class, &probe, &batch.samples, &c);
            probe[j] = orig;
            assert!((g - (up - down) / (2.0 * FD_STEP)).abs() < 1e-8, "coordinate {j}");
        }
    }

    #[test]
    fn compensated_sum() {
        assert_eq!(neumaier_sum(&[1e16, 1.0, -1e16]), 1.0);
    }
}
