//! Sock-puppet audits of recommendation systems.
//!
//! The pipeline trains automated personas, walks synchronized recommendation
//! trees from a seed video, records per-node popularity, channel diversity and
//! content semantics, and tests whether two audit configurations produce trees
//! that differ more than trees from one configuration differ among themselves.
//!
//! A deterministic synthetic platform ([`sim`]) with injectable biases stands
//! in for a live service, so every stage can be checked against known ground
//! truth.

pub mod analysis;
pub mod compare;
pub mod config;
pub mod metrics;
pub mod orchestrator;
pub mod report;
pub mod run;
pub mod sim;
pub mod stats;
pub mod text;
pub mod tree;

pub use analysis::{analyze, AnalyzeOptions, ReportTable, Slice};
pub use compare::{align, delta, TreeDelta};
pub use config::{load_spec, RunSpec};
pub use metrics::{MetricsContext, NodeMetrics, TreeMetrics};
pub use orchestrator::{run_experiment, AuditConfig, ExperimentSpec, Group, PathSchedule};
pub use run::{load_run, run, RunManifest};
pub use sim::{AccountMode, BiasParams, InteractionMode, SimWorld, WorldParams};
pub use stats::{Characteristic, EffectReport};
pub use tree::{build_tree, RecommendationTree, TreeNode, VideoMeta};
