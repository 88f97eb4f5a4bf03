//! Suites that only evaluate formulas: closed-form covering bounds, the
//! `1/√n` decay of the chaining bounds, and the comparison rate.

use genbound_core::bounds::{
    bound_appf, bound_cor_11, bound_cor_mindk, bound_cor_p1_general, bound_thm1, bound_thm2, bound_thm3,
    bound_thm4, BoundQuery,
};
use genbound_core::complexity::{bound_cor_18, bound_cor_main1, bound_cor_main2, trauger_expression};

use super::sweep;
use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::params;
use crate::row::ResultRow;

/// Log-covering bound by name, written out directly from the formulas
/// and used as the reference for `bounds_eval`.
pub fn closed_form_log_cover(name: &str, b_x: f64, b_w: f64, r: usize, d: usize, k: usize, eps: f64) -> Option<f64> {
    // ln(B_x B_w/ε), −∞ when the class is {0}
    let log_ratio = (b_x * b_w).ln() - eps.ln();
    let ratio_sq = (b_x * b_w / eps).powi(2);
    let volumetric = |r: f64| r / 2.0 * (4f64.ln() + 2.0 * log_ratio + r.ln());
    let sparsified = |outside: f64, inside: f64| outside * ratio_sq * (1.0 + 2.0 * inside).ln();
    let m = d.min(k) as f64;
    let value = match name {
        "volumetric" | "two_one_subspace" => volumetric(r as f64),
        "frobenius_rank" | "two_one_rank" => sparsified(r as f64, r as f64),
        "basis_p1" => sparsified(1.0, r as f64),
        "two_one_mindk" => sparsified(m, m),
        "general_p1" | "entrywise_11" => sparsified(1.0, k as f64),
        _ => return None,
    };
    Some(if value > 0.0 { value } else { 0.0 })
}

fn library_log_cover(name: &str, q: &BoundQuery) -> Result<f64> {
    let f = match name {
        "volumetric" => bound_thm1,
        "frobenius_rank" => bound_thm2,
        "two_one_rank" => bound_thm3,
        "basis_p1" => bound_thm4,
        "two_one_subspace" => bound_appf,
        "two_one_mindk" => bound_cor_mindk,
        "general_p1" => bound_cor_p1_general,
        "entrywise_11" => bound_cor_11,
        _ => return Err(config(format!("unknown bound `{name}`"))),
    };
    Ok(f(q)?.log_cover)
}

pub(super) fn bounds_eval(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut points = Vec::new();
    for bound in cfg.names("bound") {
        for &b_x in &cfg.floats("b_x") {
            for &b_w in &cfg.floats("b_w") {
                for &r_w in &cfg.ints("r_w") {
                    for &d in &cfg.ints("d") {
                        for &k in &cfg.ints("k") {
                            for &eps in &cfg.floats("eps") {
                                points.push((bound.clone(), b_x, b_w, r_w, d, k, eps));
                            }
                        }
                    }
                }
            }
        }
    }
    sweep(cfg, &points, |(bound, b_x, b_w, r_w, d, k, eps)| {
        let q = BoundQuery::new(*b_x, *b_w, *r_w, *d, *k, *eps)?;
        let measured = library_log_cover(bound, &q)?;
        let reference = closed_form_log_cover(bound, *b_x, *b_w, *r_w, *d, *k, *eps).expect("validated name");
        let p = params![
            "bound" => bound.as_str(), "b_x" => *b_x, "b_w" => *b_w, "r_w" => *r_w,
            "d" => *d, "k" => *k, "eps" => *eps,
        ];
        Ok(vec![ResultRow::new(
            "bounds_eval",
            p,
            measured,
            reference,
            1e-12 * reference.abs().max(1.0),
        )])
    })
}

fn corollary_value(name: &str, b_x: f64, b_qk: f64, r: usize, prefactor: f64, n: usize) -> Result<f64> {
    Ok(match name {
        "basis_11" => bound_cor_main1(b_x, b_qk, r, prefactor, n)?,
        "entrywise_11" => bound_cor_main2(b_x, b_qk, r, prefactor, n)?,
        "two_one" => bound_cor_18(b_x, b_qk, r, prefactor, n)?,
        _ => return Err(config(format!("unknown corollary `{name}`"))),
    })
}

/// Each bound against its own value at the first `n`, rescaled by
/// `√(n₀/n)`.
pub(super) fn decay_study(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let ns = cfg.ints("n");
    if ns.contains(&0) {
        return Err(config("n must be >= 1"));
    }
    let (b_x, b_qk, prefactor) = (cfg.float("b_x"), cfg.float("b_qk"), cfg.float("prefactor"));
    let mut points = Vec::new();
    for bound in cfg.names("bound") {
        for &r_w in &cfg.ints("r_w") {
            points.push((bound.clone(), r_w));
        }
    }
    sweep(cfg, &points, |(bound, r_w)| {
        let n0 = ns[0];
        let base = corollary_value(bound, b_x, b_qk, *r_w, prefactor, n0)?;
        ns.iter()
            .map(|&n| {
                let measured = corollary_value(bound, b_x, b_qk, *r_w, prefactor, n)?;
                let predicted = base * (n0 as f64 / n as f64).sqrt();
                let p = params!["bound" => bound.as_str(), "r_w" => *r_w, "n" => n];
                Ok(ResultRow::new("decay_study", p, measured, predicted, 1e-12 * predicted.abs().max(1e-300)))
            })
            .collect()
    })
}

/// `−d ln f / d ln n` from a symmetric ±10% difference.
fn decay_rate(f: impl Fn(usize) -> f64, n: usize) -> f64 {
    let (lo, hi) = (n - n / 10, n + n / 10);
    -(f(hi).ln() - f(lo).ln()) / ((hi as f64).ln() - (lo as f64).ln())
}

/// Local decay rate of the comparison expression against that of the
/// entry-wise chaining bound; a row passes when the comparison decays no
/// faster.
pub(super) fn compare_trauger(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let ns = cfg.ints("n");
    if ns.iter().any(|&n| n < 10) {
        return Err(config("n must be >= 10 for a local slope"));
    }
    let (b_x, b_qk, b) = (cfg.float("b_x"), cfg.float("b_qk"), cfg.float("b"));
    let mut points = Vec::new();
    for &d in &cfg.ints("d") {
        for &n in &ns {
            points.push((d, n));
        }
    }
    sweep(cfg, &points, |&(d, n)| {
        if d == 0 {
            return Err(config("d must be >= 1"));
        }
        let theirs = decay_rate(|m| trauger_expression(b, b_x, b_qk, d, m), n);
        let ours = decay_rate(|m| bound_cor_main2(b_x, b_qk, d, b, m).unwrap_or(f64::NAN), n);
        Ok(vec![ResultRow::new("compare_trauger", params!["d" => d, "n" => n], theirs, ours, 0.0)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn reference_examples() {
        let v = closed_form_log_cover("volumetric", 1.0, 1.0, 2, 1, 1, 0.5).unwrap();
        assert!((v - 32f64.ln()).abs() < 1e-12);
        let v = closed_form_log_cover("frobenius_rank", 1.0, 1.0, 1, 1, 1, 1.0).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-12);
        assert_eq!(closed_form_log_cover("volumetric", 1.0, 0.0, 2, 1, 1, 0.5), Some(0.0));
        assert_eq!(closed_form_log_cover("spectral", 1.0, 1.0, 2, 1, 1, 0.5), None);
    }

    #[test]
    fn nine_point_sweep() {
        let cfg = ExperimentConfig::parse(Experiment::BoundsEval, "r_w = 1,2,4\neps = 0.25,0.5,1").unwrap();
        let rows = bounds_eval(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn every_bound_agrees_with_its_reference() {
        let text = format!(
            "bound = {}\nb_x = 0.5,2\nb_w = 0,1.5\nr_w = 1,3\nd = 2,5\nk = 3\neps = 0.01,0.7,4",
            crate::config::BOUND_NAMES.join(",")
        );
        let cfg = ExperimentConfig::parse(Experiment::BoundsEval, &text).unwrap();
        let rows = bounds_eval(&cfg).unwrap();
        assert_eq!(rows.len(), 8 * 2 * 2 * 2 * 2 * 3);
        for r in &rows {
            assert!((r.measured - r.theoretical).abs() <= 1e-12 * r.theoretical.abs().max(1.0), "{r:?}");
        }
    }

    #[test]
    fn trauger_rows_pass() {
        let rows = compare_trauger(&ExperimentConfig::defaults(Experiment::CompareTrauger)).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.pass);
            assert!((r.theoretical - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn decay_rows_follow_root_n() {
        let rows = decay_study(&ExperimentConfig::defaults(Experiment::DecayStudy)).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().all(|r| r.pass));
    }
}
