//! Replay-based simulator for routing queries between a small and a large language model.
//!
//! Questions carry pre-recorded SLM samples (optionally confidence-prompted) and an LLM
//! outcome. Routers are swept over a threshold grid to trace cost-performance curves,
//! which are scored by their area against the random and golden baselines.

pub mod cascade;
pub mod cli;
pub mod cost;
pub mod error;
pub mod evaluate;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pre_router;
pub mod synth;
pub mod trainset;

pub use cascade::{
    decide, simulate_parallel, tally_votes, weight_of, CascadeConfig, Decision, VoteTally,
    VotingScheme,
};
pub use cost::EvalContext;
pub use error::{Error, Result};
pub use evaluate::{evaluate, Evaluation, EvaluationRequest, Policy};
pub use io::{load_dataset, parse_dataset, write_curve};
pub use metrics::{curve_toa, golden_curve, toa, togr, LatencyReport, MetricMode, MetricsReport};
pub use model::{
    ConfidenceLevel, CurvePoint, CurveTau, Dataset, LlmOutcome, PreferencePair, PricingSchedule,
    QuestionRecord, RefusalExample, RoutingMode, RoutingOutcome, SampleRecord,
};
pub use pre_router::ScoreSource;
pub use synth::{generate_synthetic, DifficultyProfile, SampleSchedule};
pub use trainset::{build_dpo_pair, build_refusal_set, combined_loss, CorpusQuestion, LossInputs};
