//! Flat `key = value` experiment configs.
//!
//! One assignment per line, `#` starts a comment, lists are comma
//! separated. Keys not set take the experiment's defaults; unknown keys,
//! repeated keys and empty lists are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use genbound_core::covering::TheoremClass;

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    BoundsEval,
    CoveringVerify,
    MaureyVerify,
    RademacherVerify,
    DecayStudy,
    CompareTrauger,
    GapStudy,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::BoundsEval,
        Experiment::CoveringVerify,
        Experiment::MaureyVerify,
        Experiment::RademacherVerify,
        Experiment::DecayStudy,
        Experiment::CompareTrauger,
        Experiment::GapStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BoundsEval => "bounds_eval",
            Experiment::CoveringVerify => "covering_verify",
            Experiment::MaureyVerify => "maurey_verify",
            Experiment::RademacherVerify => "rademacher_verify",
            Experiment::DecayStudy => "decay_study",
            Experiment::CompareTrauger => "compare_trauger",
            Experiment::GapStudy => "gap_study",
        }
    }

    /// Keys this experiment accepts, in output column order.
    pub fn keys(self) -> &'static [Key] {
        match self {
            Experiment::BoundsEval => BOUNDS_EVAL,
            Experiment::CoveringVerify => COVERING_VERIFY,
            Experiment::MaureyVerify => MAUREY_VERIFY,
            Experiment::RademacherVerify => RADEMACHER_VERIFY,
            Experiment::DecayStudy => DECAY_STUDY,
            Experiment::CompareTrauger => COMPARE_TRAUGER,
            Experiment::GapStudy => GAP_STUDY,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Float,
    Int,
    Name(fn(&str) -> bool),
}

/// A config key with its value type and default.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    /// Single value rather than a grid axis.
    pub scalar: bool,
    pub default: &'static str,
}

const fn axis(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key {
        name,
        kind,
        scalar: false,
        default,
    }
}

const fn one(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key {
        name,
        kind,
        scalar: true,
        default,
    }
}

pub const BOUND_NAMES: [&str; 8] = [
    "volumetric",
    "frobenius_rank",
    "two_one_rank",
    "basis_p1",
    "two_one_subspace",
    "two_one_mindk",
    "general_p1",
    "entrywise_11",
];
pub const DECOMPOSITIONS: [&str; 3] = ["frobenius", "two_one", "basis_p1"];
pub const COROLLARIES: [&str; 3] = ["basis_11", "entrywise_11", "two_one"];
pub const ACTIVATIONS: [&str; 4] = ["relu", "identity", "tanh", "leaky_relu"];

fn bound_name(s: &str) -> bool {
    BOUND_NAMES.contains(&s)
}

fn decomposition_name(s: &str) -> bool {
    DECOMPOSITIONS.contains(&s)
}

fn corollary_name(s: &str) -> bool {
    COROLLARIES.contains(&s)
}

fn activation_name(s: &str) -> bool {
    ACTIVATIONS.contains(&s)
}

fn class_name(s: &str) -> bool {
    parse_class(s).is_some()
}

/// Covering classes by name; the `p` classes take any exponent `p ≥ 1`,
/// e.g. `basis_p1_3` or `general_p1_inf`.
pub fn parse_class(s: &str) -> Option<TheoremClass> {
    let exponent = |rest: &str| parse_float(rest).filter(|&p| p >= 1.0);
    if let Some(rest) = s.strip_prefix("basis_p1_") {
        return exponent(rest).map(|p| TheoremClass::BasisP1 { p });
    }
    if let Some(rest) = s.strip_prefix("general_p1_") {
        return exponent(rest).map(|p| TheoremClass::GeneralP1 { p });
    }
    TheoremClass::all().into_iter().find(|c| c.name() == s)
}

const DEFAULT_CLASSES: &str = "volumetric,frobenius_rank,two_one_rank,two_one_mindk,basis_p1_2,basis_p1_inf,general_p1_2,entrywise_11,two_one_subspace";

const BOUNDS_EVAL: &[Key] = &[
    axis("bound", Kind::Name(bound_name), "volumetric"),
    axis("b_x", Kind::Float, "1"),
    axis("b_w", Kind::Float, "1"),
    axis("r_w", Kind::Int, "1"),
    axis("d", Kind::Int, "4"),
    axis("k", Kind::Int, "4"),
    axis("eps", Kind::Float, "0.5"),
];

const COVERING_VERIFY: &[Key] = &[
    axis("class", Kind::Name(class_name), DEFAULT_CLASSES),
    axis("d", Kind::Int, "4,8"),
    axis("k", Kind::Int, "4,8"),
    axis("r_w", Kind::Int, "1,2,4"),
    axis("eps", Kind::Float, "0.1,0.2,0.5,1"),
    one("b_x", Kind::Float, "1"),
    one("b_w", Kind::Float, "1"),
    one("n_matrices", Kind::Int, "200"),
    one("n_inputs", Kind::Int, "50"),
];

const MAUREY_VERIFY: &[Key] = &[
    axis("decomposition", Kind::Name(decomposition_name), "frobenius,two_one,basis_p1"),
    axis("t", Kind::Int, "16"),
    one("instances", Kind::Int, "1000"),
    one("max_dim", Kind::Int, "8"),
    one("max_rank", Kind::Int, "4"),
];

const RADEMACHER_VERIFY: &[Key] = &[
    axis("corollary", Kind::Name(corollary_name), "basis_11,entrywise_11,two_one"),
    axis("heads", Kind::Int, "1"),
    axis("seq_len", Kind::Int, "4"),
    axis("n", Kind::Int, "16"),
    one("d", Kind::Int, "3"),
    one("k", Kind::Int, "2"),
    one("r_w", Kind::Int, "2"),
    one("sigma_draws", Kind::Int, "64"),
    one("restarts", Kind::Int, "20"),
    one("opt_steps", Kind::Int, "40"),
    one("b_x", Kind::Float, "1"),
    one("b_qk", Kind::Float, "1"),
    one("b_w", Kind::Float, "1"),
    one("b_wc", Kind::Float, "1"),
    one("b_wv", Kind::Float, "1"),
    one("activation", Kind::Name(activation_name), "relu"),
    one("x_cls_scale", Kind::Float, "0.5"),
];

const DECAY_STUDY: &[Key] = &[
    axis("bound", Kind::Name(corollary_name), "entrywise_11"),
    axis("r_w", Kind::Int, "3"),
    axis("n", Kind::Int, "100,1000,10000,100000,1000000,10000000,100000000"),
    one("b_x", Kind::Float, "1"),
    one("b_qk", Kind::Float, "1"),
    one("prefactor", Kind::Float, "1"),
];

const COMPARE_TRAUGER: &[Key] = &[
    axis("d", Kind::Int, "3"),
    axis("n", Kind::Int, "1000,10000,100000"),
    one("b_x", Kind::Float, "1"),
    one("b_qk", Kind::Float, "1"),
    one("b", Kind::Float, "1"),
];

const GAP_STUDY: &[Key] = &[
    axis("corollary", Kind::Name(corollary_name), "basis_11"),
    axis("n", Kind::Int, "64"),
    one("holdout", Kind::Int, "10000"),
    one("seq_len", Kind::Int, "4"),
    one("d", Kind::Int, "3"),
    one("k", Kind::Int, "2"),
    one("r_w", Kind::Int, "2"),
    one("heads", Kind::Int, "1"),
    one("loss_cap", Kind::Float, "1"),
    one("noise", Kind::Float, "0.1"),
    one("delta", Kind::Float, "0.05"),
    one("steps", Kind::Int, "30"),
    one("slack_se", Kind::Float, "3"),
    one("b_x", Kind::Float, "1"),
    one("b_qk", Kind::Float, "1"),
    one("b_w", Kind::Float, "1"),
    one("b_wc", Kind::Float, "1"),
    one("b_wv", Kind::Float, "1"),
    one("activation", Kind::Name(activation_name), "relu"),
    one("x_cls_scale", Kind::Float, "0.5"),
];

/// Keys every experiment accepts.
const COMMON: [&str; 5] = ["experiment", "seeds", "output_path", "format", "timing"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    values: BTreeMap<&'static str, Vec<String>>,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Record wall-clock runtimes; off by default so outputs are
    /// byte-stable.
    pub timing: bool,
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Nonnegative integers, also written in exponent form such as `1e6`.
fn parse_int(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        let v: f64 = s.parse().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53)).then_some(v as u64)
    })
}

fn split_list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn check_token(key: &Key, tok: &str) -> Result<()> {
    let ok = match key.kind {
        Kind::Float => parse_float(tok).is_some(),
        Kind::Int => parse_int(tok).is_some(),
        Kind::Name(valid) => valid(tok),
    };
    if ok {
        Ok(())
    } else {
        Err(config(format!("invalid value `{tok}` for `{}`", key.name)))
    }
}

impl ExperimentConfig {
    /// Parses config text for `experiment`.
    pub fn parse(experiment: Experiment, text: &str) -> Result<Self> {
        let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(config(format!("line {}: missing key", i + 1)));
            }
            if raw.insert(k.to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(config(format!("line {}: `{k}` set twice", i + 1)));
            }
        }

        let keys = experiment.keys();
        for (k, (line, _)) in &raw {
            if !COMMON.contains(&k.as_str()) && !keys.iter().any(|key| key.name == k) {
                return Err(config(format!("line {line}: unknown key `{k}` for {experiment}")));
            }
        }
        let take = |k: &str| raw.get(k).map(|(_, v)| v.as_str());

        if let Some(name) = take("experiment") {
            if name.parse::<Experiment>()? != experiment {
                return Err(config(format!("config is for `{name}`, not {experiment}")));
            }
        }
        let seeds = split_list(take("seeds").unwrap_or("0"))
            .iter()
            .map(|s| s.parse::<u64>().map_err(|_| config(format!("invalid seed `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if seeds.is_empty() {
            return Err(config("empty seed list"));
        }
        let format = take("format").map_or(Ok(Format::Csv), str::parse)?;
        let timing = match take("timing") {
            None | Some("false") => false,
            Some("true") => true,
            Some(v) => return Err(config(format!("timing must be true or false, got `{v}`"))),
        };
        let output_path = match take("output_path") {
            Some("") => return Err(config("empty output_path")),
            Some(p) => Some(PathBuf::from(p)),
            None => None,
        };

        let mut values = BTreeMap::new();
        for key in keys {
            let tokens = split_list(take(key.name).unwrap_or(key.default));
            if tokens.is_empty() {
                return Err(config(format!("empty grid for `{}`", key.name)));
            }
            if key.scalar && tokens.len() != 1 {
                return Err(config(format!("`{}` takes a single value", key.name)));
            }
            for tok in &tokens {
                check_token(key, tok)?;
            }
            values.insert(key.name, tokens);
        }
        Ok(Self {
            experiment,
            values,
            seeds,
            output_path,
            format,
            timing,
        })
    }

    pub fn from_file(experiment: Experiment, path: &Path) -> Result<Self> {
        Self::parse(experiment, &std::fs::read_to_string(path)?)
    }

    /// All defaults.
    pub fn defaults(experiment: Experiment) -> Self {
        Self::parse(experiment, "").expect("defaults are valid")
    }

    fn tokens(&self, key: &str) -> &[String] {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("{} has no key `{key}`", self.experiment))
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        self.tokens(key).iter().map(|t| parse_float(t).expect("validated")).collect()
    }

    pub fn ints(&self, key: &str) -> Vec<usize> {
        self.tokens(key).iter().map(|t| parse_int(t).expect("validated") as usize).collect()
    }

    pub fn names(&self, key: &str) -> Vec<String> {
        self.tokens(key).to_vec()
    }

    pub fn float(&self, key: &str) -> f64 {
        self.floats(key)[0]
    }

    pub fn int(&self, key: &str) -> usize {
        self.ints(key)[0]
    }

    pub fn name(&self, key: &str) -> String {
        self.tokens(key)[0].clone()
    }
}
