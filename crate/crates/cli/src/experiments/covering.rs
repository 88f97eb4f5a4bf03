//! Greedy internal covers of sampled image clouds against the closed-form
//! bounds at half the radius.

use genbound_core::bounds::BoundQuery;
use genbound_core::covering::{build_cloud, greedy_cover_multi, TheoremClass};
use genbound_core::linalg::sample_in_ball;
use rand::Rng;

use super::{item_rng, sweep};
use crate::config::{parse_class, ExperimentConfig};
use crate::error::{config, Result};
use crate::params;
use crate::row::ResultRow;

struct Point {
    class: TheoremClass,
    name: String,
    d: usize,
    k: usize,
    r: usize,
    seed: u64,
    stream: u64,
}

/// Rank classes run once per `r_w ≤ min(d, k)`; classes without a rank
/// run once per shape, reporting the rank their bound uses.
fn grid(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for name in cfg.names("class") {
        let class = parse_class(&name).expect("validated class");
        for &d in &cfg.ints("d") {
            for &k in &cfg.ints("k") {
                if d == 0 || k == 0 {
                    return Err(config("d and k must be >= 1"));
                }
                let ranks: Vec<usize> = match class {
                    TheoremClass::MinDimTwoOne => vec![d.min(k)],
                    TheoremClass::GeneralP1 { .. } | TheoremClass::EntrywiseOneOne => vec![k],
                    _ => cfg.ints("r_w").into_iter().filter(|&r| r >= 1 && r <= d.min(k)).collect(),
                };
                for r in ranks {
                    for &seed in &cfg.seeds {
                        let stream = points.len() as u64;
                        points.push(Point { class, name: name.clone(), d, k, r, seed, stream });
                    }
                }
            }
        }
    }
    Ok(points)
}

pub(super) fn covering_verify(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let eps = cfg.floats("eps");
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(config("eps must be positive"));
    }
    let (b_x, b_w) = (cfg.float("b_x"), cfg.float("b_w"));
    let (n_matrices, n_inputs) = (cfg.int("n_matrices"), cfg.int("n_inputs"));
    if n_matrices == 0 || n_inputs == 0 {
        return Err(config("n_matrices and n_inputs must be >= 1"));
    }
    let points = grid(cfg)?;
    sweep(cfg, &points, |p| {
        let mut rng = item_rng(p.seed, p.stream);
        let spec = p.class.spec(p.d, p.k, p.r, b_w, rng.random())?;
        let inputs = (0..n_inputs)
            .map(|_| sample_in_ball(p.d, p.class.input_norm(), b_x, &mut rng))
            .collect::<genbound_core::Result<Vec<_>>>()?;
        let cloud = build_cloud(&spec, &inputs, b_x, n_matrices, rng.random())?;
        let covers = greedy_cover_multi(&cloud, &eps)?;
        eps.iter()
            .zip(covers)
            .map(|(&e, cover)| {
                let q = BoundQuery::new(b_x, b_w, p.r, p.d, p.k, e / 2.0)?;
                let bound = p.class.bound(&q)?.log_cover;
                let params = params![
                    "class" => p.name.as_str(), "d" => p.d, "k" => p.k, "r_w" => p.r,
                    "eps" => e, "seed" => p.seed,
                ];
                Ok(ResultRow::new("covering_verify", params, (cover.size as f64).ln(), bound, 0.0))
            })
            .collect()
    })
}
