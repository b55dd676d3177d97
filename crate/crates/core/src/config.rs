//! Declarative experiment files.
//!
//! One JSON document fully determines a run. Videos may be named directly or
//! through selectors resolved against the generated world:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "world_seed": 7,
//!   "rng_seed": 11,
//!   "config_a": {
//!     "training_set": { "near": { "view_quantile": 0.1 }, "size": 32 },
//!     "seed_video": { "view_quantile": 0.5 },
//!     "watch_fraction": 1.0
//!   },
//!   "config_b": { "training_set": ["v00001", "v00002"], "seed_video": "v00003" }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::orchestrator::{
    AuditConfig, ExperimentSpec, Fault, OrchestratorError, DEFAULT_DEPTH, DEFAULT_PATHS,
    DEFAULT_TRAINING_SIZE, DEFAULT_TREES_PER_GROUP,
};
use crate::sim::{AccountMode, InteractionMode, SimWorld, WorldParams};
use crate::stats::DEFAULT_RESAMPLES;
use crate::tree::DEFAULT_N_REC;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{at}: {reason}")]
    Parse { at: String, reason: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

impl From<OrchestratorError> for ConfigError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Invalid { field, reason } => ConfigError::Invalid { field, reason },
            other => invalid("spec", other.to_string()),
        }
    }
}

/// A video named by id or by its view-count quantile in the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VideoRef {
    Id(String),
    Quantile { view_quantile: f64 },
}

/// Explicit training videos, or the `size` topic neighbors of a video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainingRef {
    List(Vec<String>),
    Near {
        near: VideoRef,
        #[serde(default = "default_training_size")]
        size: usize,
    },
}

fn default_training_size() -> usize {
    DEFAULT_TRAINING_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfigFile {
    pub training_set: TrainingRef,
    pub seed_video: VideoRef,
    #[serde(default = "default_account_mode")]
    pub account_mode: AccountMode,
    #[serde(default = "default_fraction")]
    pub watch_fraction: f64,
    #[serde(default)]
    pub interaction_mode: InteractionMode,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_n_rec")]
    pub n_rec: usize,
    #[serde(default = "default_zipf")]
    pub zipf_s: f64,
}

fn default_account_mode() -> AccountMode {
    AccountMode::Full
}
fn default_fraction() -> f64 {
    1.0
}
fn default_paths() -> usize {
    DEFAULT_PATHS
}
fn default_depth() -> usize {
    DEFAULT_DEPTH
}
fn default_n_rec() -> usize {
    DEFAULT_N_REC
}
fn default_zipf() -> f64 {
    1.0
}
fn default_trees() -> usize {
    DEFAULT_TREES_PER_GROUP
}
fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}
fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Experiment file as written by users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub world: WorldParams,
    #[serde(default)]
    pub world_seed: u64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_trees")]
    pub n_trees_per_group: usize,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    pub config_a: AuditConfigFile,
    pub config_b: AuditConfigFile,
    #[serde(default)]
    pub faults: Vec<Fault>,
}

/// A validated experiment with every selector resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub schema_version: u32,
    pub resamples: usize,
    pub experiment: ExperimentSpec,
}

impl RunSpec {
    pub fn new(experiment: ExperimentSpec, resamples: usize) -> Self {
        RunSpec {
            schema_version: SCHEMA_VERSION,
            resamples,
            experiment,
        }
    }

    /// Canonical serialized form; the run's spec hash is taken over it.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_version(self.schema_version)?;
        check_resamples(self.resamples, "resamples")?;
        self.experiment.validate()?;
        Ok(())
    }
}

fn check_version(v: u32) -> Result<(), ConfigError> {
    if v != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

fn check_resamples(n: usize, field: &str) -> Result<(), ConfigError> {
    if n < crate::stats::MIN_RESAMPLES {
        return Err(invalid(
            field,
            format!("must be at least {}", crate::stats::MIN_RESAMPLES),
        ));
    }
    Ok(())
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            at: if at == "." { "document".into() } else { at },
            reason: inner.to_string(),
        }
    })
}

fn resolve_video(world: &SimWorld, r: &VideoRef, field: &str) -> Result<String, ConfigError> {
    match r {
        VideoRef::Id(id) => {
            world
                .index_of(id)
                .map_err(|_| invalid(field, format!("unknown video {id:?}")))?;
            Ok(id.clone())
        }
        VideoRef::Quantile { view_quantile } => {
            if !(0.0..=1.0).contains(view_quantile) {
                return Err(invalid(
                    format!("{field}.view_quantile"),
                    "must be in [0, 1]",
                ));
            }
            Ok(world
                .video_at_view_quantile(*view_quantile)
                .video_id
                .clone())
        }
    }
}

fn resolve_config(
    world: &SimWorld,
    c: &AuditConfigFile,
    at: &str,
) -> Result<AuditConfig, ConfigError> {
    let seed_video = resolve_video(world, &c.seed_video, &format!("{at}.seed_video"))?;
    let training_set = match &c.training_set {
        TrainingRef::List(ids) => ids.clone(),
        TrainingRef::Near { near, size } => {
            let field = format!("{at}.training_set");
            if *size == 0 || *size >= world.len() {
                return Err(invalid(
                    format!("{field}.size"),
                    format!("must be in 1..{}", world.len()),
                ));
            }
            let anchor = resolve_video(world, near, &format!("{field}.near"))?;
            let mut set = vec![anchor.clone()];
            set.extend(
                world
                    .topic_neighbors(&anchor, size - 1)
                    .map_err(|e| invalid(&field, e.to_string()))?,
            );
            set
        }
    };
    Ok(AuditConfig {
        training_set,
        seed_video,
        account_mode: c.account_mode,
        watch_fraction: c.watch_fraction,
        interaction_mode: c.interaction_mode,
        n_paths: c.n_paths,
        depth: c.depth,
        n_rec: c.n_rec,
        zipf_s: c.zipf_s,
    })
}

impl SpecFile {
    /// Validates, generates the world, and resolves selectors.
    pub fn resolve(&self) -> Result<(RunSpec, SimWorld), ConfigError> {
        check_version(self.schema_version)?;
        check_resamples(self.resamples, "resamples")?;
        self.world
            .validate()
            .map_err(|e| invalid("world", e.to_string()))?;
        let world = SimWorld::new(&self.world, self.world_seed)
            .map_err(|e| invalid("world", e.to_string()))?;
        let experiment = ExperimentSpec {
            config_a: resolve_config(&world, &self.config_a, "config_a")?,
            config_b: resolve_config(&world, &self.config_b, "config_b")?,
            n_trees_per_group: self.n_trees_per_group,
            world: self.world.clone(),
            world_seed: self.world_seed,
            rng_seed: self.rng_seed,
            faults: self.faults.clone(),
        };
        experiment.validate()?;
        experiment.check_videos(&world)?;
        Ok((RunSpec::new(experiment, self.resamples), world))
    }
}

/// Parses and validates an experiment document.
pub fn parse_spec(text: &str) -> Result<RunSpec, ConfigError> {
    Ok(parse::<SpecFile>(text)?.resolve()?.0)
}

/// Reads an experiment file. Unknown keys are rejected and every error
/// names the offending field.
pub fn load_spec(path: &Path) -> Result<RunSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

/// Parses a resolved spec as written to a run directory.
pub fn parse_run_spec(text: &str) -> Result<RunSpec, ConfigError> {
    let spec: RunSpec = parse(text)?;
    spec.validate()?;
    Ok(spec)
}
