//! Black-box configuration tuning.
//!
//! The crate searches a declared parameter space for configurations that
//! improve a measured performance number, without any model of the system
//! under test. The pieces:
//!
//! - [`space`]: parameter spaces, configurations, discretization.
//! - [`validity`]: declarative constraint rules over configurations.
//! - [`sampler`]: the search drivers (evolutionary MCMC, greedy genetic,
//!   random) and their acceptance and proposal machinery.
//! - [`executor`]: measurement of configurations via external commands or
//!   synthetic calibration landscapes, with caching and parallelism.
//! - [`persistence`]: append-only run journals and resume-by-replay.
//! - [`analysis`]: gain, per-parameter sensitivity, break-even arithmetic.
//! - [`similarity`]: workload trace signatures, for deciding whether an
//!   existing tuning result carries over to a new workload.
//! - [`rng`]: deterministic per-purpose random streams.

pub mod analysis;
pub mod executor;
pub mod persistence;
pub mod rng;
pub mod sampler;
pub mod similarity;
pub mod space;
pub mod validity;
pub mod value;

pub use analysis::{
    break_even, evaluate_topk, gain, improvement_percent, sensitivity, AnalysisError, BreakEven,
    GainReport, SensitivityEntry, SensitivityReport, TopkReport,
};
pub use executor::{
    CommandEvaluator, CommandSettings, EvalStatus, EvaluationRecord, Evaluated, Executor,
    ExecutorError, FailurePolicy, LandscapeKind, LandscapeOptions, PerformanceSource, RenderMode,
    SourceOutcome, SyntheticLandscape,
};
pub use persistence::{
    digest, open_resume, read_journal, JournalContents, JournalHeader, JournalWriter,
    PersistenceError, RunSummary, JOURNAL_VERSION,
};
pub use sampler::{
    compare_samplers, run_on_landscape, AcceptancePolicy, ComparisonReport, Direction,
    GenerationSummary, RankedEntry, SamplerError, SamplerKind, SamplerScore, SamplerSettings,
    TerminationReason, TuneResult, Tuner,
};
pub use similarity::{
    compare, load_signature, signature_from_trace, SimilarityBreakdown, SimilarityError,
    WorkloadSignature, SIMILARITY_THRESHOLD,
};
pub use space::{
    discretize_numeric, load_space, space_from_toml, space_to_toml, synthetic_grid_space,
    Configuration, ConfigurationSpace, ParameterSpec, SpaceError,
};
pub use validity::{load_rules, rules_from_toml, RuleSet, ValidityError, ValidityReport};
pub use value::{ParamKind, Value};
