//! Experiment harness: episodes, metrics, suites and ablation sweeps.

pub mod ablation;
pub mod episode;
pub mod log;
pub mod metrics;
pub mod suite;

pub use ablation::{run_ablation, AblationKind, AblationRow};
pub use episode::{run_episode, Episode, EpisodeLimits, EpisodeRunner};
pub use log::{AgentSample, CycleRecord, EpisodeLog, EpisodeMeta, Frame};
pub use metrics::{compute_metrics, termination, MetricsRecord, Outcome, Termination};
pub use suite::{aggregate, run_suite, seed_list, AggregateRow, EpisodeRecord, SuiteCell, SuiteOptions, SuiteResult};
