//! Sparsification of random convex decompositions.

use genbound_core::linalg::{
    random_orthonormal, sample_class_member, sample_in_ball, MatrixClassSpec, NormKind,
};
use genbound_core::maurey::{decompose_21, decompose_basis_p1, decompose_frobenius, sparsify, ConvexRepresentation};
use rand::Rng;

use super::{item_rng, sweep};
use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::params;
use crate::row::ResultRow;

/// Absolute slack on the squared-error guarantee.
const SLACK: f64 = 1e-9;

struct Instance {
    decomposition: String,
    index: usize,
    seed: u64,
}

struct Drawn {
    rep: ConvexRepresentation,
    d: usize,
    k: usize,
    r: usize,
    /// Basis exponent; 0 for the rank decompositions.
    p: f64,
}

fn draw(decomposition: &str, max_dim: usize, max_rank: usize, rng: &mut impl Rng) -> Result<Drawn> {
    let d = rng.random_range(1..=max_dim);
    let k = rng.random_range(1..=max_dim);
    let r = rng.random_range(1..=max_rank.min(d).min(k));
    let b_w = rng.random_range(0.1..3.0);
    let b_x = rng.random_range(0.1..3.0);
    let (rep, p) = match decomposition {
        "frobenius" | "two_one" => {
            let (norm, input) = if decomposition == "frobenius" {
                (NormKind::Frobenius, 2.0)
            } else {
                (NormKind::Transposed21, f64::INFINITY)
            };
            let spec = MatrixClassSpec::new(d, k, norm, b_w, Some(r), None)?;
            let w = sample_class_member(&spec, rng.random())?;
            let x = sample_in_ball(d, input, b_x, rng)?;
            let rep = if decomposition == "frobenius" {
                decompose_frobenius(&w, &x, b_w, b_x)?
            } else {
                decompose_21(&w, &x, b_w, b_x)?
            };
            (rep, 0.0)
        }
        "basis_p1" => {
            let p = match rng.random_range(0..4) {
                0 => 1.0,
                1 => 2.0,
                2 => f64::INFINITY,
                _ => rng.random_range(1.2..6.0),
            };
            let e = random_orthonormal(k, r, rng)?;
            let spec = MatrixClassSpec::new(d, k, NormKind::BasisP1 { p }, b_w, None, Some(e.clone()))?;
            let w = sample_class_member(&spec, rng.random())?;
            let x = sample_in_ball(d, spec.input_norm(), b_x, rng)?;
            (decompose_basis_p1(&w, &x, &e, p, b_w, b_x)?, p)
        }
        other => return Err(config(format!("unknown decomposition `{other}`"))),
    };
    Ok(Drawn { rep, d, k, r, p })
}

/// Instance `i` uses the `i`-th decomposition cyclically; one row per
/// instance, seed and `t`.
pub(super) fn maurey_verify(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let decompositions = cfg.names("decomposition");
    let ts = cfg.ints("t");
    let (max_dim, max_rank) = (cfg.int("max_dim"), cfg.int("max_rank"));
    if max_dim == 0 || max_rank == 0 || ts.contains(&0) {
        return Err(config("max_dim, max_rank and t must be >= 1"));
    }
    let mut items = Vec::new();
    for &seed in &cfg.seeds {
        for index in 0..cfg.int("instances") {
            let decomposition = decompositions[index % decompositions.len()].clone();
            items.push(Instance { decomposition, index, seed });
        }
    }
    sweep(cfg, &items, |it| {
        let mut rng = item_rng(it.seed, it.index as u64);
        let drawn = draw(&it.decomposition, max_dim, max_rank, &mut rng)?;
        ts.iter()
            .map(|&t| {
                let s = sparsify(&drawn.rep, t, rng.random())?;
                let params = params![
                    "decomposition" => it.decomposition.as_str(), "instance" => it.index, "seed" => it.seed,
                    "d" => drawn.d, "k" => drawn.k, "r_w" => drawn.r, "p" => drawn.p, "t" => t,
                ];
                Ok(ResultRow::new("maurey_verify", params, s.sq_error, s.guarantee, SLACK))
            })
            .collect()
    })
}
