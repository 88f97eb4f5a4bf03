//! Monte Carlo Rademacher estimates and generalization gaps for
//! single-layer attention classes.

use genbound_core::attention::{multihead_forward, Activation, ConstraintSet, HeadParams, SequenceBatch};
use genbound_core::complexity::{
    corollary_bound, measure_gap, mc_rademacher, AscentConfig, Loss, TrainConfig, TransformerClass,
};
use genbound_core::linalg::{random_orthonormal, MatrixClassSpec, NormKind};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{item_rng, sweep};
use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::params;
use crate::row::ResultRow;

/// Scalars shared by both suites.
struct Setup {
    d: usize,
    k: usize,
    r_w: usize,
    b_x: f64,
    b_qk: f64,
    b_w: f64,
    b_wc: f64,
    b_wv: f64,
    activation: Activation,
    x_cls_scale: f64,
}

impl Setup {
    fn read(cfg: &ExperimentConfig) -> Result<Self> {
        let s = Setup {
            d: cfg.int("d"),
            k: cfg.int("k"),
            r_w: cfg.int("r_w"),
            b_x: cfg.float("b_x"),
            b_qk: cfg.float("b_qk"),
            b_w: cfg.float("b_w"),
            b_wc: cfg.float("b_wc"),
            b_wv: cfg.float("b_wv"),
            activation: parse_activation(&cfg.name("activation")),
            x_cls_scale: cfg.float("x_cls_scale"),
        };
        if s.d == 0 || s.k == 0 || s.r_w == 0 || s.r_w > s.d {
            return Err(config("need d, k >= 1 and 1 <= r_w <= d"));
        }
        if !(0.0..=1.0).contains(&s.x_cls_scale) {
            return Err(config("x_cls_scale must lie in [0, 1]"));
        }
        Ok(s)
    }

    /// Constraint set matching a corollary; the basis is drawn from `rng`.
    fn constraints(&self, corollary: &str, rng: &mut impl Rng) -> Result<ConstraintSet> {
        let d = self.d;
        let (qk, input_norm) = match corollary {
            "basis_11" => {
                let e = random_orthonormal(d, self.r_w, rng)?;
                (MatrixClassSpec::new(d, d, NormKind::BasisP1 { p: 1.0 }, self.b_qk, None, Some(e))?, 1.0)
            }
            "entrywise_11" => (
                MatrixClassSpec::new(d, d, NormKind::Entrywise { p: 1.0, q: 1.0 }, self.b_qk, None, None)?,
                1.0,
            ),
            "two_one" => (
                MatrixClassSpec::new(d, d, NormKind::Transposed21, self.b_qk, Some(self.r_w), None)?,
                f64::INFINITY,
            ),
            other => return Err(config(format!("unknown corollary `{other}`"))),
        };
        let c = ConstraintSet {
            b_w: self.b_w,
            b_wc: self.b_wc,
            b_wv: self.b_wv,
            qk,
            b_x: self.b_x,
            input_norm,
        };
        c.validate()?;
        Ok(c)
    }

    fn x_cls(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        x[0] = self.x_cls_scale * self.b_x;
        x
    }
}

fn parse_activation(name: &str) -> Activation {
    match name {
        "relu" => Activation::Relu,
        "identity" => Activation::Identity,
        "tanh" => Activation::Tanh,
        "leaky_relu" => Activation::LeakyRelu(0.01),
        other => unreachable!("validated activation `{other}`"),
    }
}

pub(super) fn rademacher_verify(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let setup = Setup::read(cfg)?;
    let (draws, restarts) = (cfg.int("sigma_draws"), cfg.int("restarts"));
    let ascent = AscentConfig {
        opt_steps: cfg.int("opt_steps"),
        ..AscentConfig::default()
    };
    let mut points = Vec::new();
    for corollary in cfg.names("corollary") {
        for &heads in &cfg.ints("heads") {
            for &t in &cfg.ints("seq_len") {
                for &n in &cfg.ints("n") {
                    if heads == 0 || t == 0 || n == 0 {
                        return Err(config("heads, seq_len and n must be >= 1"));
                    }
                    for &seed in &cfg.seeds {
                        points.push((corollary.clone(), heads, t, n, seed, points.len() as u64));
                    }
                }
            }
        }
    }
    sweep(cfg, &points, |(corollary, heads, t, n, seed, stream)| {
        let mut rng = item_rng(*seed, *stream);
        let c = setup.constraints(corollary, &mut rng)?;
        let batch = SequenceBatch::sample(*n, *t, setup.d, c.input_norm, setup.b_x, &mut rng)?;
        let class = TransformerClass::new(c.clone(), setup.k, *heads, setup.x_cls(), setup.activation)?;
        let est = mc_rademacher(&class, &batch.samples, draws, restarts, rng.random(), ascent)?;
        let bound = *heads as f64 * corollary_bound(&c, c.prefactor(setup.activation), *n)?;
        let params = params![
            "corollary" => corollary.as_str(), "heads" => *heads, "seq_len" => *t, "n" => *n, "seed" => *seed,
        ];
        Ok(vec![ResultRow::new("rademacher_verify", params, est.value, bound, 0.0)])
    })
}

fn sample_heads(c: &ConstraintSet, setup: &Setup, heads: usize, rng: &mut impl Rng) -> Result<Vec<HeadParams>> {
    (0..heads)
        .map(|_| Ok(c.sample_head(setup.k, setup.x_cls(), setup.activation, rng)?))
        .collect()
}

fn noisy_labels(teacher: &[HeadParams], batch: &SequenceBatch, noise: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    batch
        .samples
        .iter()
        .map(|x| {
            let eta: f64 = rng.sample(StandardNormal);
            Ok(multihead_forward(teacher, x)? + noise * eta)
        })
        .collect()
}

/// A student trained on labels from a random teacher plus Gaussian noise;
/// the row passes when `|gap| ≤ bound + slack_se · SE(holdout)`.
pub(super) fn gap_study(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let setup = Setup::read(cfg)?;
    let (t, heads, holdout) = (cfg.int("seq_len"), cfg.int("heads"), cfg.int("holdout"));
    let noise = cfg.float("noise");
    if t == 0 || heads == 0 || holdout == 0 {
        return Err(config("seq_len, heads and holdout must be >= 1"));
    }
    let loss = Loss::ClippedAbsolute { cap: cfg.float("loss_cap") };
    let train_cfg = TrainConfig {
        steps: cfg.int("steps"),
        delta: cfg.float("delta"),
        slack_se: cfg.float("slack_se"),
        ..TrainConfig::default()
    };
    let mut points = Vec::new();
    for corollary in cfg.names("corollary") {
        for &n in &cfg.ints("n") {
            if n == 0 {
                return Err(config("n must be >= 1"));
            }
            for &seed in &cfg.seeds {
                points.push((corollary.clone(), n, seed, points.len() as u64));
            }
        }
    }
    sweep(cfg, &points, |(corollary, n, seed, stream)| {
        let mut rng = item_rng(*seed, *stream);
        let c = setup.constraints(corollary, &mut rng)?;
        let teacher = sample_heads(&c, &setup, heads, &mut rng)?;
        let train = SequenceBatch::sample(*n, t, setup.d, c.input_norm, setup.b_x, &mut rng)?;
        let test = SequenceBatch::sample(holdout, t, setup.d, c.input_norm, setup.b_x, &mut rng)?;
        let train_labels = noisy_labels(&teacher, &train, noise, &mut rng)?;
        let test_labels = noisy_labels(&teacher, &test, noise, &mut rng)?;
        let student = sample_heads(&c, &setup, heads, &mut rng)?;
        let report = measure_gap(&student, &c, &train, &train_labels, &test, &test_labels, loss, train_cfg)?;
        let params = params!["corollary" => corollary.as_str(), "n" => *n, "seed" => *seed];
        Ok(vec![ResultRow::new("gap_study", params, report.gap.abs(), report.bound, report.slack)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn small_rademacher_run() {
        let cfg = ExperimentConfig::parse(
            Experiment::RademacherVerify,
            "n = 4\nsigma_draws = 4\nrestarts = 2\nopt_steps = 5",
        )
        .unwrap();
        let rows = rademacher_verify(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.pass && r.measured.is_finite()));
    }

    #[test]
    fn small_gap_run() {
        let cfg = ExperimentConfig::parse(
            Experiment::GapStudy,
            "corollary = basis_11,two_one\nn = 8\nholdout = 200\nsteps = 3",
        )
        .unwrap();
        let rows = gap_study(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn rank_above_dimension_is_rejected() {
        let cfg = ExperimentConfig::parse(Experiment::GapStudy, "r_w = 4").unwrap();
        assert!(matches!(gap_study(&cfg), Err(crate::error::CliError::Config(_))));
    }
}
