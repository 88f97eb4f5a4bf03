//! Generalization-gap bound, the comparison rate, and an empirical harness.

use crate::attention::{ConstraintSet, HeadParams, SequenceBatch};
use crate::error::{invalid, precondition, Result};
use crate::linalg::NormKind;

use super::chaining::{bound_cor_18, bound_cor_main1, bound_cor_main2};
use super::rademacher::{sample_gradient, HypothesisClass, TransformerClass};

/// `2 R + 4c √(2 ln(4/δ)/n)`.
pub fn gap_bound(rademacher_value: f64, c: f64, delta: f64, n: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(c >= 0.0) || n == 0 {
        return Err(invalid("loss cap must be >= 0 and n >= 1"));
    }
    Ok(2.0 * rademacher_value + 4.0 * c * (2.0 * (4.0 / delta).ln() / n as f64).sqrt())
}

/// Earlier `log n/√n` rate with unit implied constant:
/// `B (B_x³ α/√n (1 + ln(√n/(B_x² α))) + B_x √(ln(2d)/n))` where
/// `α = B_QK √(2 ln(2d² + 1))`; the inner log is clamped at 0.
pub fn trauger_expression(b: f64, b_x: f64, b_qk: f64, d: usize, n: usize) -> f64 {
    let d = d as f64;
    let n = n as f64;
    let alpha = b_qk * (2.0 * (2.0 * d * d + 1.0).ln()).sqrt();
    let inner = if alpha > 0.0 && b_x > 0.0 {
        (n.sqrt() / (b_x * b_x * alpha)).ln().max(0.0)
    } else {
        0.0
    };
    let first = b_x.powi(3) * alpha / n.sqrt() * (1.0 + inner);
    let second = b_x * ((2.0 * d).ln() / n).sqrt();
    b * (first + second)
}

/// Which chaining corollary covers a query-key class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corollary {
    /// Basis (1,1) norm, `ℓ_1` inputs.
    BasisOneOne,
    /// Entry-wise (1,1) norm, `ℓ_1` inputs.
    EntrywiseOneOne,
    /// Transposed (2,1) norm, `ℓ_∞` inputs.
    TwoOne,
}

impl Corollary {
    pub fn for_constraints(c: &ConstraintSet) -> Result<Self> {
        match (c.qk.norm, c.input_norm) {
            (NormKind::BasisP1 { p }, q) if p == 1.0 && q == 1.0 => Ok(Corollary::BasisOneOne),
            (NormKind::Entrywise { p, q }, i) if p == 1.0 && q == 1.0 && i == 1.0 => Ok(Corollary::EntrywiseOneOne),
            (NormKind::Transposed21, i) if i.is_infinite() => Ok(Corollary::TwoOne),
            _ => Err(invalid("no chaining corollary matches this query-key class and input norm")),
        }
    }
}

/// Single-head bound for the class described by `c`, with prefactor
/// `B_w B_Wc L_σ B_Wv` given by the caller.
///
/// A zero prefactor or zero query-key bound leaves a class of constant
/// outputs, handled directly.
pub fn corollary_bound(c: &ConstraintSet, prefactor: f64, n: usize) -> Result<f64> {
    let kind = Corollary::for_constraints(c)?;
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    if c.qk.bound == 0.0 {
        return Err(invalid("query-key bound must be positive for a chaining bound"));
    }
    let d = c.d();
    match kind {
        Corollary::BasisOneOne => {
            let r = c.qk.basis.as_ref().map_or(d, |e| e.cols());
            bound_cor_main1(c.b_x, c.qk.bound, r, prefactor, n)
        }
        Corollary::EntrywiseOneOne => bound_cor_main2(c.b_x, c.qk.bound, d, prefactor, n),
        Corollary::TwoOne => bound_cor_18(c.b_x, c.qk.bound, c.qk.effective_rank(), prefactor, n),
    }
}

/// Bounded Lipschitz losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// `min(c, |ŷ − y|)`, 1-Lipschitz in `ŷ`.
    ClippedAbsolute { cap: f64 },
}

impl Loss {
    pub fn eval(&self, pred: f64, label: f64) -> f64 {
        match *self {
            Loss::ClippedAbsolute { cap } => (pred - label).abs().min(cap),
        }
    }

    pub fn cap(&self) -> f64 {
        match *self {
            Loss::ClippedAbsolute { cap } => cap,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    /// Step as a fraction of each block radius.
    pub step: f64,
    pub delta: f64,
    /// Multiplier on the holdout standard error added as slack.
    pub slack_se: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 30,
            step: 0.2,
            delta: 0.05,
            slack_se: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub train_loss: f64,
    /// Holdout mean, standing in for the population loss.
    pub population_loss_estimate: f64,
    pub holdout_std_error: f64,
    /// Population proxy minus training loss.
    pub gap: f64,
    /// `H L` times the single-head corollary bound.
    pub rademacher_bound: f64,
    pub bound: f64,
    /// Allowance for the holdout proxy.
    pub slack: f64,
    pub c: f64,
    pub delta: f64,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.gap.abs() <= self.bound + self.slack
    }
}

fn mean_loss(class: &TransformerClass, theta: &[f64], batch: &SequenceBatch, labels: &[f64], loss: Loss) -> Vec<f64> {
    batch
        .samples
        .iter()
        .zip(labels)
        .map(|(x, &y)| loss.eval(class.eval(theta, x), y))
        .collect()
}

/// Trains the heads on `train` by projected gradient descent on the mean
/// loss, then compares training loss with holdout loss against the bound
/// `2 H L R + 4c √(2 ln(4/δ)/n)`, with `R` the single-head corollary bound.
#[allow(clippy::too_many_arguments)]
pub fn measure_gap(
    heads: &[HeadParams],
    c_set: &ConstraintSet,
    train: &SequenceBatch,
    train_labels: &[f64],
    holdout: &SequenceBatch,
    holdout_labels: &[f64],
    loss: Loss,
    cfg: TrainConfig,
) -> Result<GapReport> {
    c_set.validate()?;
    let first = heads.first().ok_or_else(|| invalid("at least one head is required"))?;
    if train.is_empty() || holdout.is_empty() {
        return Err(invalid("train and holdout batches must be nonempty"));
    }
    if train.len() != train_labels.len() || holdout.len() != holdout_labels.len() {
        return Err(invalid("one label per sample"));
    }
    for h in heads {
        if !c_set.contains(h)? {
            return Err(precondition("head violates the constraint set"));
        }
        if h.x_cls != first.x_cls || h.activation != first.activation || h.k() != first.k() {
            return Err(invalid("heads must share x_cls, activation and value size"));
        }
    }
    for x in train.samples.iter().chain(&holdout.samples) {
        if !c_set.admits(x)? {
            return Err(precondition("sequence row outside the input ball"));
        }
    }
    let class = TransformerClass::new(c_set.clone(), first.k(), heads.len(), first.x_cls.clone(), first.activation)?;
    let mut theta = class.from_heads(heads);

    // descent on the training loss, with the same block-normalized steps
    // and step halving as the ascent used for Rademacher estimates
    let objective = |t: &[f64]| -> f64 {
        let per = mean_loss(&class, t, train, train_labels, loss);
        per.iter().sum::<f64>() / per.len() as f64
    };
    let blocks = class.blocks();
    let mut current = objective(&theta);
    let mut eta = cfg.step;
    for _ in 0..cfg.steps {
        if eta < 1e-6 {
            break;
        }
        let grad = sample_gradient(&class, &theta, &train.samples, |i, v| loss.eval(v, train_labels[i]));
        let mut cand = theta.clone();
        for b in &blocks {
            let g = &grad[b.range.clone()];
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && b.radius > 0.0 {
                let s = eta * b.radius / norm;
                for (t, gi) in cand[b.range.clone()].iter_mut().zip(g) {
                    *t -= s * gi;
                }
            }
        }
        class.project(&mut cand)?;
        let next = objective(&cand);
        if next < current {
            current = next;
            theta = cand;
        } else {
            eta *= 0.5;
        }
    }

    let hold = mean_loss(&class, &theta, holdout, holdout_labels, loss);
    let m = hold.len() as f64;
    let pop = hold.iter().sum::<f64>() / m;
    let var = if hold.len() > 1 {
        hold.iter().map(|v| (v - pop) * (v - pop)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let se = (var / m).sqrt();
    let n = train.len();
    let prefactor = c_set.prefactor(first.activation);
    let rademacher_bound = heads.len() as f64 * loss.lipschitz() * corollary_bound(c_set, prefactor, n)?;
    let bound = gap_bound(rademacher_bound, loss.cap(), cfg.delta, n)?;
    Ok(GapReport {
        train_loss: current,
        population_loss_estimate: pop,
        holdout_std_error: se,
        gap: pop - current,
        rademacher_bound,
        bound,
        slack: cfg.slack_se * se,
        c: loss.cap(),
        delta: cfg.delta,
    })
}
