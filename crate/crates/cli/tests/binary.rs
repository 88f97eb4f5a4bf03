use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use genbound::row::{parse_csv, parse_json};
use genbound::ParamValue;
use genbound_core::bounds::{bound_thm1, BoundQuery};

fn genbound(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genbound"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("GENBOUND_THREADS", t),
        None => cmd.env_remove("GENBOUND_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn float(v: &ParamValue) -> f64 {
    match v {
        ParamValue::Float(x) => *x,
        ParamValue::Int(x) => *x as f64,
        ParamValue::Text(t) => panic!("text {t}"),
    }
}

#[test]
fn bounds_sweep_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.cfg", "r_w = 1, 2, 4\neps = 0.25, 0.5, 1\n");
    let out = dir.path().join("b.csv");
    let res = genbound(&["bounds_eval", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = parse_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let q = BoundQuery::new(
            1.0,
            1.0,
            float(r.param("r_w").unwrap()) as usize,
            4,
            4,
            float(r.param("eps").unwrap()),
        )
        .unwrap();
        assert_eq!(r.measured, bound_thm1(&q).unwrap().log_cover);
        assert!(r.pass && r.consistent());
    }
}

#[test]
fn stdout_and_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.cfg", "eps = 0.5\n");
    let res = genbound(&["bounds_eval", "--config", &cfg, "--format", "json"], None);
    assert_eq!(res.status.code(), Some(0));
    let rows = parse_json(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    // (r/2) ln(4 s² r) with r = 1, s = 2
    assert!((rows[0].measured - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("empty.cfg", "k =\n"), ("unknown.cfg", "colour = red\n"), ("bad.cfg", "eps = -x\n")] {
        let cfg = write_config(dir.path(), name, text);
        let res = genbound(&["bounds_eval", "--config", &cfg], None);
        assert_eq!(res.status.code(), Some(2), "{name}");
        assert!(!res.stderr.is_empty());
    }
    let cfg = write_config(dir.path(), "ok.cfg", "");
    assert_eq!(genbound(&["bounds_eval", "--config", &cfg], Some("0")).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg");
    assert_eq!(
        genbound(&["bounds_eval", "--config", missing.to_str().unwrap()], None).status.code(),
        Some(3)
    );
    let cfg = write_config(dir.path(), "ok.cfg", "");
    let out = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        genbound(&["bounds_eval", "--config", &cfg, "--out", out.to_str().unwrap()], None).status.code(),
        Some(3)
    );
}

#[test]
fn seed_flag_replaces_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.cfg", "instances = 6\nseeds = 0, 1\n");
    let res = genbound(&["maurey_verify", "--config", &cfg, "--seed", "7"], None);
    assert_eq!(res.status.code(), Some(0));
    let rows = parse_csv(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.param("seed") == Some(&ParamValue::Int(7))));
}

#[test]
fn maurey_thousand_instances_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.cfg", "instances = 1000\n");
    let res = genbound(&["maurey_verify", "--config", &cfg], None);
    assert_eq!(res.status.code(), Some(0));
    let rows = parse_csv(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r.pass && r.consistent()));
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let suites = [
        ("maurey_verify", "instances = 40\nt = 1, 4, 16\nseeds = 3, 4\n"),
        (
            "covering_verify",
            "class = frobenius_rank, basis_p1_2\nd = 3\nk = 4\nr_w = 1, 2\nn_matrices = 20\nn_inputs = 5\nseeds = 0, 1\n",
        ),
        ("rademacher_verify", "n = 4\nsigma_draws = 3\nrestarts = 2\nopt_steps = 4\nseeds = 0, 1\n"),
        ("gap_study", "n = 8\nholdout = 100\nsteps = 3\nseeds = 0, 1\n"),
    ];
    for (suite, text) in suites {
        let cfg = write_config(dir.path(), &format!("{suite}.cfg"), text);
        let mut outputs = Vec::new();
        for (i, threads) in [None, None, Some("1"), Some("3")].into_iter().enumerate() {
            let out = dir.path().join(format!("{suite}-{i}.csv"));
            let res = genbound(&[suite, "--config", &cfg, "--out", out.to_str().unwrap()], threads);
            assert_eq!(res.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&res.stderr));
            outputs.push(fs::read(&out).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{suite} output varies");
    }
}
