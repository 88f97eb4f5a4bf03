use genbound_core::attention::{Activation, ConstraintSet, HeadParams, SequenceBatch};
use genbound_core::complexity::{
    bound_cor_18, bound_cor_main1, bound_cor_main2, cor_main1_params, dudley_generic, mc_rademacher, measure_gap,
    trauger_expression, AscentConfig, HypothesisClass, Loss, ParamBlock, TrainConfig, TransformerClass,
};
use genbound_core::linalg::{rng_from_seed, Mat, MatrixClassSpec, NormKind};
use genbound_core::Result;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

proptest! {
    #[test]
    fn chaining_decays_at_root_n(b_x in 0.2..3.0f64, b_qk in 0.2..3.0f64, r in 1usize..64, pre in 0.1..5.0f64) {
        let ns: Vec<f64> = (2..=8).map(|e| 10f64.powi(e)).collect();
        let ys: Vec<f64> = ns.iter().map(|&n| bound_cor_main2(b_x, b_qk, r, pre, n as usize).unwrap()).collect();
        prop_assert!((slope(&ns, &ys) + 0.5).abs() <= 1e-3);
    }

    #[test]
    fn comparison_rate_decays_slower(b_x in 0.5..2.0f64, b_qk in 0.5..2.0f64, d in 1usize..16) {
        let ns = [1e3, 1e4, 1e5];
        let ys: Vec<f64> = ns.iter().map(|&n| trauger_expression(1.0, b_x, b_qk, d, n as usize)).collect();
        prop_assert!(slope(&ns, &ys) > -0.5);
    }

    #[test]
    fn larger_q_never_helps(b_x in 0.2..3.0f64, b_qk in 0.2..3.0f64, r in 1usize..200, n in 1usize..10_000) {
        let m1 = bound_cor_main1(b_x, b_qk, r, 1.0, n).unwrap();
        prop_assert!(bound_cor_18(b_x, b_qk, r, 1.0, n).unwrap() >= m1 * (1.0 - 1e-12));
        prop_assert!(bound_cor_main2(b_x, b_qk, r + 1, 1.0, n).unwrap() >= bound_cor_main2(b_x, b_qk, r, 1.0, n).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn hybrid_entropy_is_tighter(b_x in 0.2..3.0f64, b_qk in 0.2..3.0f64, r in 1usize..64, m in 1usize..30) {
        let p = cor_main1_params(b_x, b_qk, r, 1.0, 100).unwrap();
        let hybrid = dudley_generic(|e| p.log_cover(e), b_x, 100, m).unwrap();
        let single = dudley_generic(|e| p.q * p.q / (e * e), b_x, 100, m).unwrap();
        prop_assert!(hybrid.value <= single.value * (1.0 + 1e-12));
    }

    #[test]
    fn dudley_matches_direct_summation(c_x in 0.1..4.0f64, n in 1usize..1000, m in 1usize..20, q in 0.0..3.0f64) {
        let f = |e: f64| q * q / (e * e) + (1.0 / e).ln().max(0.0);
        let got = dudley_generic(f, c_x, n, m).unwrap();
        let mut want = 2.0 * c_x / 2f64.powi(m as i32 + 1);
        for j in 1..=m {
            let (ej, ej1) = (c_x / 2f64.powi(j as i32), c_x / 2f64.powi(j as i32 + 1));
            want += 12.0 / (n as f64).sqrt() * (ej - ej1) * f(ej).sqrt();
        }
        prop_assert!((got.value - want).abs() <= 1e-12 * want.max(1.0));
    }
}

/// `{θ h₀ : θ = ±1}` for a fixed scalar function `h₀`.
struct SignedPair {
    h0: fn(&Mat) -> f64,
}

impl HypothesisClass for SignedPair {
    fn num_params(&self) -> usize {
        1
    }
    fn blocks(&self) -> Vec<ParamBlock> {
        vec![ParamBlock { range: 0..1, radius: 1.0 }]
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(vec![if rng.random::<bool>() { 1.0 } else { -1.0 }])
    }
    fn project(&self, theta: &mut [f64]) -> Result<()> {
        theta[0] = if theta[0] >= 0.0 { 1.0 } else { -1.0 };
        Ok(())
    }
    fn eval(&self, theta: &[f64], x: &Mat) -> f64 {
        theta[0] * (self.h0)(x)
    }
    fn negate(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(vec![-theta[0]])
    }
}

#[test]
fn two_function_class_matches_enumeration() {
    let class = SignedPair { h0: |x| x.get(0, 0).tanh() };
    let mut rng = rng_from_seed(6);
    for n in [4usize, 8, 12] {
        let batch = SequenceBatch::sample(n, 1, 1, 2.0, 3.0, &mut rng).unwrap();
        let h: Vec<f64> = batch.samples.iter().map(|x| (class.h0)(x)).collect();
        let exact = (0..1u32 << n)
            .map(|mask| {
                let s: f64 = h.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v }).sum();
                s.abs() / n as f64
            })
            .sum::<f64>()
            / (1u64 << n) as f64;
        assert!(exact <= 1.0 / (n as f64).sqrt());
        let est = mc_rademacher(&class, &batch.samples, 4096, 1, 2, AscentConfig::default()).unwrap();
        assert!((est.value - exact).abs() <= 4.0 * est.std_error + 1e-12, "n={n}: {} vs {exact}", est.value);
        assert!(est.is_lower_bound);
    }
}

fn basis_constraints(b_w: f64, b_wc: f64, b_wv: f64, b_qk: f64) -> ConstraintSet {
    ConstraintSet {
        b_w,
        b_wc,
        b_wv,
        qk: MatrixClassSpec::new(3, 3, NormKind::BasisP1 { p: 1.0 }, b_qk, None, Some(Mat::identity(3))).unwrap(),
        b_x: 1.0,
        input_norm: 1.0,
    }
}

#[test]
fn enlarging_output_bounds_never_lowers_the_estimate() {
    let mut rng = rng_from_seed(31);
    let batch = SequenceBatch::sample(8, 4, 3, 1.0, 1.0, &mut rng).unwrap();
    let x_cls = vec![0.4, -0.3, 0.2];
    let cfg = AscentConfig { opt_steps: 10, ..AscentConfig::default() };
    let est = |c: ConstraintSet| {
        let class = TransformerClass::new(c, 2, 1, x_cls.clone(), Activation::Relu).unwrap();
        mc_rademacher(&class, &batch.samples, 8, 3, 77, cfg).unwrap().value
    };
    let base = est(basis_constraints(1.0, 1.0, 1.0, 1.0));
    for c in [
        basis_constraints(2.0, 1.0, 1.0, 1.0),
        basis_constraints(1.0, 2.0, 1.0, 1.0),
        basis_constraints(1.0, 1.0, 2.0, 1.0),
    ] {
        let bigger = est(c);
        assert!(bigger >= base - 1e-12, "{bigger} < {base}");
    }
}

#[test]
fn estimates_ignore_sequence_length_under_one_bound() {
    let c = basis_constraints(1.0, 1.0, 1.0, 1.0);
    let n = 8;
    let bound = bound_cor_main1(1.0, 1.0, 3, c.prefactor(Activation::Relu), n).unwrap();
    let cfg = AscentConfig { opt_steps: 10, ..AscentConfig::default() };
    for t in [2, 4, 8, 16] {
        let mut rng = rng_from_seed(t as u64);
        let batch = SequenceBatch::sample(n, t, 3, 1.0, 1.0, &mut rng).unwrap();
        let class = TransformerClass::new(c.clone(), 2, 1, vec![0.5, 0.0, 0.0], Activation::Relu).unwrap();
        let est = mc_rademacher(&class, &batch.samples, 8, 2, 5, cfg).unwrap();
        assert!(est.value <= bound, "T={t}: {} > {bound}", est.value);
    }
}

#[test]
fn zero_capacity_gap_is_only_the_deviation_term() {
    let c = basis_constraints(0.0, 0.0, 0.0, 0.0);
    let mut rng = rng_from_seed(2);
    let train = SequenceBatch::sample(16, 3, 3, 1.0, 1.0, &mut rng).unwrap();
    let holdout = SequenceBatch::sample(200, 3, 3, 1.0, 1.0, &mut rng).unwrap();
    let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let train_y: Vec<f64> = (0..16).map(|_| sign(&mut rng)).collect();
    let hold_y: Vec<f64> = (0..200).map(|_| sign(&mut rng)).collect();
    let heads = [HeadParams::zeros(3, 2, vec![0.5, 0.0, 0.0], Activation::Relu).unwrap()];
    let loss = Loss::ClippedAbsolute { cap: 2.0 };
    let cfg = TrainConfig::default();
    let report = measure_gap(&heads, &c, &train, &train_y, &holdout, &hold_y, loss, cfg).unwrap();
    assert_eq!(report.gap, 0.0);
    assert_eq!(report.rademacher_bound, 0.0);
    let additive = 4.0 * 2.0 * (2.0 * (4.0 / cfg.delta).ln() / 16.0).sqrt();
    assert!((report.bound - additive).abs() <= 1e-15);
    assert!(report.holds());
}
