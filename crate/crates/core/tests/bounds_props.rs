use genbound_core::bounds::{
    bound_appf, bound_cor_11, bound_cor_mindk, bound_cor_p1_general, bound_thm1, bound_thm2, bound_thm3,
    bound_thm4, lemma_aux_check, volumetric_threshold, BoundQuery, BoundResult,
};
use genbound_core::linalg::{
    numerical_rank, random_orthonormal, rng_from_seed, sample_class_member, sample_in_ball, vec_norm,
    MatrixClassSpec, NormKind, RANK_TOL,
};
use genbound_core::maurey::{
    count_solutions_bound, decompose_21, decompose_basis_p1, decompose_frobenius, sparsify, ConvexRepresentation,
};
use genbound_core::Result;
use proptest::prelude::*;

type BoundFn = fn(&BoundQuery) -> Result<BoundResult>;

const ALL: [BoundFn; 8] = [
    bound_thm1,
    bound_thm2,
    bound_thm3,
    bound_thm4,
    bound_appf,
    bound_cor_mindk,
    bound_cor_p1_general,
    bound_cor_11,
];

fn query() -> impl Strategy<Value = BoundQuery> {
    (0.01..10.0f64, 0.01..10.0f64, 1usize..40, 1usize..20, 1usize..20, 0.001..20.0f64)
        .prop_map(|(bx, bw, r, d, k, e)| BoundQuery::new(bx, bw, r, d, k, e).unwrap())
}

proptest! {
    #[test]
    fn bounds_are_monotone(q in query(), grow in 1.0..3.0f64, extra in 1usize..5) {
        for f in ALL {
            let base = f(&q).unwrap().log_cover;
            prop_assert!(base >= 0.0);
            let tol = 1e-12 * base.max(1.0);
            let at = |q: BoundQuery| f(&q).unwrap().log_cover;
            let wider_x = at(BoundQuery { b_x: q.b_x * grow, ..q });
            let wider_w = at(BoundQuery { b_w: q.b_w * grow, ..q });
            let higher_rank = at(BoundQuery { r_w: q.r_w + extra, ..q });
            let coarser = at(BoundQuery { eps: q.eps * grow, ..q });
            prop_assert!(wider_x >= base - tol);
            prop_assert!(wider_w >= base - tol);
            prop_assert!(higher_rank >= base - tol);
            prop_assert!(coarser <= base + tol);
        }
    }

    #[test]
    fn bounds_depend_on_radii_through_their_ratio(q in query(), lambda in 0.01..100.0f64) {
        let scaled = BoundQuery { b_x: q.b_x * lambda, eps: q.eps * lambda, ..q };
        for f in ALL {
            let (a, b) = (f(&q).unwrap().log_cover, f(&scaled).unwrap().log_cover);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn volumetric_wins_below_threshold(bx in 1.0..64.0f64, bw in 1.0..64.0f64, r in 1usize..=64, u in 0.0..1.0f64) {
        let eps = volumetric_threshold(bx, bw, r) * (1.0 - u).max(1e-9);
        let q = BoundQuery::simple(bx, bw, r, eps).unwrap();
        prop_assert!(bound_thm1(&q).unwrap().log_cover < bound_thm2(&q).unwrap().log_cover);
    }

    #[test]
    fn auxiliary_inequality_on_small_c(c in 0.8592..1.366f64, ratio in 0.5..200.0f64) {
        prop_assert!(lemma_aux_check(c, c * ratio).unwrap());
    }
}

#[test]
fn auxiliary_inequality_fails_for_large_c() {
    // at y = c/2 the gap is (c/2)(ln(2c²) − ln(2c + 1)), positive once 2c² > 2c + 1
    for c in [1.4, 2.0, 5.0, 30.0] {
        assert!(!lemma_aux_check(c, c / 2.0).unwrap());
    }
}

fn count_bounded(r: usize, t: usize) -> u64 {
    if r == 0 {
        return 1;
    }
    (0..=t).map(|first| count_bounded(r - 1, t - first)).sum()
}

#[test]
fn integer_solution_count_is_below_its_bound() {
    for r in 1..=6 {
        for t in 1..=6 {
            let exact = count_bounded(r, t);
            let binom = (1..=r as u64).fold(1u64, |acc, i| acc * (t as u64 + i) / i);
            assert_eq!(exact, binom);
            assert!((exact as f64).ln() <= count_solutions_bound(r, t) + 1e-12);
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Recipe {
    Frobenius,
    TwoOne,
    Basis(f64),
}

fn instance() -> impl Strategy<Value = (Recipe, usize, usize, usize, f64, f64, u64)> {
    let recipe = prop_oneof![
        Just(Recipe::Frobenius),
        Just(Recipe::TwoOne),
        prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.2..6.0f64].prop_map(Recipe::Basis),
    ];
    (recipe, 1usize..=8, 1usize..=8, 1usize..=4, 0.1..3.0f64, 0.1..3.0f64, any::<u64>())
}

/// Builds an admissible `(W, x)` and its decomposition with the stated
/// atom norm.
fn build(recipe: Recipe, d: usize, k: usize, r: usize, bw: f64, bx: f64, seed: u64) -> (ConvexRepresentation, f64) {
    let r = r.min(d).min(k);
    let mut rng = rng_from_seed(seed);
    match recipe {
        Recipe::Frobenius | Recipe::TwoOne => {
            let (norm, input) = match recipe {
                Recipe::Frobenius => (NormKind::Frobenius, 2.0),
                _ => (NormKind::Transposed21, f64::INFINITY),
            };
            let spec = MatrixClassSpec::new(d, k, norm, bw, Some(r), None).unwrap();
            let w = sample_class_member(&spec, seed).unwrap();
            let x = sample_in_ball(d, input, bx, &mut rng).unwrap();
            let rank = numerical_rank(&w, RANK_TOL).unwrap() as f64;
            let rep = match recipe {
                Recipe::Frobenius => decompose_frobenius(&w, &x, bw, bx),
                _ => decompose_21(&w, &x, bw, bx),
            }
            .unwrap();
            (rep, rank.sqrt() * bw * bx)
        }
        Recipe::Basis(p) => {
            let e = random_orthonormal(k, r, &mut rng).unwrap();
            let spec = MatrixClassSpec::new(d, k, NormKind::BasisP1 { p }, bw, None, Some(e.clone())).unwrap();
            let w = sample_class_member(&spec, seed).unwrap();
            let q = spec.input_norm();
            let x = sample_in_ball(d, q, bx, &mut rng).unwrap();
            (decompose_basis_p1(&w, &x, &e, p, bw, bx).unwrap(), bw * bx)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decompositions_satisfy_their_invariants((recipe, d, k, r, bw, bx, seed) in instance()) {
        let (rep, atom_norm) = build(recipe, d, k, r, bw, bx, seed);
        rep.validate().unwrap();
        prop_assert!(rep.alpha() <= 1.0 + 1e-12);
        for g in &rep.atoms {
            prop_assert!((vec_norm(g, 2.0).unwrap() - atom_norm).abs() <= 1e-10);
        }
        let back = rep.combination();
        let err: f64 = back.iter().zip(&rep.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn sparsification_meets_its_guarantee((recipe, d, k, r, bw, bx, seed) in instance(), t in prop_oneof![Just(1usize), Just(4), Just(16)]) {
        let (rep, _) = build(recipe, d, k, r, bw, bx, seed);
        let s = sparsify(&rep, t, seed).unwrap();
        prop_assert!(s.counts.iter().sum::<usize>() <= t);
        let direct: f64 = s.approx.iter().zip(&rep.target).map(|(a, b)| (a - b).powi(2)).sum();
        prop_assert!((direct - s.sq_error).abs() <= 1e-12);
        let guarantee = (rep.alpha() * rep.b * rep.b - vec_norm(&rep.target, 2.0).unwrap().powi(2)) / t as f64;
        prop_assert!(s.sq_error <= guarantee + 1e-9);
    }

    #[test]
    fn sparsified_images_land_within_eps((recipe, d, k, r, bw, bx, seed) in instance(), eps in 0.2..2.0f64) {
        let (rep, _) = build(recipe, d, k, r, bw, bx, seed);
        let t = rep.sufficient_terms(eps).unwrap();
        let s = sparsify(&rep, t, seed).unwrap();
        prop_assert!(s.sq_error.sqrt() <= eps + 1e-9);
    }
}
