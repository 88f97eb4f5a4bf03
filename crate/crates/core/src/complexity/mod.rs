//! Rademacher complexity: Monte Carlo estimates, chaining bounds and the
//! generalization-gap harness.

mod chaining;
mod gap;
mod rademacher;

pub use chaining::{
    bound_cor_18, bound_cor_main1, bound_cor_main2, chaining_bound, cor_18_params, cor_main1_params, dudley_generic,
    ChainingParams, DudleyResult,
};
pub use gap::{
    corollary_bound, gap_bound, measure_gap, trauger_expression, Corollary, GapReport, Loss, TrainConfig,
};
pub use rademacher::{
    mc_rademacher, AscentConfig, HypothesisClass, ParamBlock, RademacherEstimate, TransformerClass,
    DEFAULT_OPT_STEPS, FD_STEP,
};
