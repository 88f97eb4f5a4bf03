//! The seven experiment suites.

mod closed_form;
mod covering;
mod maurey;
mod transformer;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::row::{emit, ResultRow};

pub use closed_form::closed_form_log_cover;

/// Runs the configured suite and writes its output file when one is set.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let rows = compute(config)?;
    if let Some(path) = &config.output_path {
        emit(&rows, config.format, Some(path))?;
    }
    Ok(rows)
}

/// Runs the configured suite without writing anything.
pub fn compute(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match config.experiment {
        Experiment::BoundsEval => closed_form::bounds_eval(config),
        Experiment::DecayStudy => closed_form::decay_study(config),
        Experiment::CompareTrauger => closed_form::compare_trauger(config),
        Experiment::CoveringVerify => covering::covering_verify(config),
        Experiment::MaureyVerify => maurey::maurey_verify(config),
        Experiment::RademacherVerify => transformer::rademacher_verify(config),
        Experiment::GapStudy => transformer::gap_study(config),
    }
}

/// Evaluates grid points in parallel and concatenates their rows in grid
/// order.
fn sweep<P, F>(config: &ExperimentConfig, points: &[P], f: F) -> Result<Vec<ResultRow>>
where
    P: Sync,
    F: Fn(&P) -> Result<Vec<ResultRow>> + Sync,
{
    let chunks: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let mut rows = f(p)?;
            if config.timing {
                let ms = start.elapsed().as_millis() as u64;
                rows.iter_mut().for_each(|r| r.runtime_ms = ms);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Generator for one work item: stream `stream` of the generator seeded by
/// `seed`.
fn item_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
