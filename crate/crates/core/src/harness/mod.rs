//! Monte Carlo evaluation, instance generators and certification reports.
//!
//! Trial `k` of a run seeded with `s` draws from a generator seeded by
//! [`crate::rng::trial_seed`]`(s, k)`, so any single trial can be replayed.

pub mod certify;
pub mod generators;
pub mod pipelines;
pub mod report;
pub mod sim;

pub use certify::{attach_ratio_checks, certify, decomposition_checks, CertifyReport, CheckOutcome};
pub use generators::{
    gen_cancel_benefit, gen_correlated_gap, gen_preemption_gap, gen_random_mab, gen_random_stock,
    preemption_min_budget, GenError, GeneratorSpec,
};
pub use pipelines::{BuiltPipeline, PipelineError, PipelineKind, TrialRecord};
pub use report::{certify_csv, sim_csv};
pub use sim::{sample, simulate, Comparison, KahanSum, SimReport, Verdict};
