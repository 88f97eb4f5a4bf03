//! Closed forms against tables computed with 40-digit arithmetic by
//! `tests/data/make_golden.py`.

use genbound_core::bounds::{
    bound_appf, bound_cor_11, bound_cor_mindk, bound_cor_p1_general, bound_thm1, bound_thm2, bound_thm3,
    bound_thm4, BoundQuery,
};
use genbound_core::complexity::{bound_cor_18, bound_cor_main1, trauger_expression};

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-12 * want.abs().max(1.0)
}

#[test]
fn covering_bounds_match_the_table() {
    let table = rows(include_str!("data/golden_bounds.csv"));
    assert!(table.len() >= 100);
    for r in &table {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        let u = |i: usize| r[i].parse::<usize>().unwrap();
        let q = BoundQuery::new(f(1), f(2), u(3), u(4), u(5), f(6)).unwrap();
        let got = match r[0].as_str() {
            "thm1" => bound_thm1(&q),
            "thm2" => bound_thm2(&q),
            "thm3" => bound_thm3(&q),
            "thm4" => bound_thm4(&q),
            "appf" => bound_appf(&q),
            "cor_mindk" => bound_cor_mindk(&q),
            "cor_p1" => bound_cor_p1_general(&q),
            "cor_11" => bound_cor_11(&q),
            other => panic!("unknown op {other}"),
        }
        .unwrap()
        .log_cover;
        assert!(close(got, f(7)), "{r:?}: got {got}");
    }
}

#[test]
fn chaining_bounds_match_the_table() {
    let table = rows(include_str!("data/golden_chaining.csv"));
    for r in &table {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        let u = |i: usize| r[i].parse::<usize>().unwrap();
        let got = match r[0].as_str() {
            "cor_main1" => bound_cor_main1(f(1), f(2), u(3), f(4), u(5)).unwrap(),
            "cor18" => bound_cor_18(f(1), f(2), u(3), f(4), u(5)).unwrap(),
            "trauger" => trauger_expression(f(4), f(1), f(2), u(3), u(5)),
            other => panic!("unknown op {other}"),
        };
        assert!(close(got, f(6)), "{r:?}: got {got}");
    }
}
