//! Audit execution: sock-puppet training, path selection, and synchronized
//! traversal of recommendation trees.

mod crawl;
mod experiment;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{AccountMode, InteractionMode, PuppetSession, SimError, SimWorld, WorldParams};
use crate::tree::{TreeError, DEFAULT_N_REC};

pub use crawl::{traverse_path, Crawler, PathRecord};
pub use experiment::{
    puppet_id, run_experiment, run_experiment_in, CrawlerEpochs, ExperimentOutcome, Scheduler,
    TreeRun, TreeStatus,
};

pub const DEFAULT_PATHS: usize = 5;
pub const DEFAULT_DEPTH: usize = 10;
pub const DEFAULT_TREES_PER_GROUP: usize = 8;
pub const DEFAULT_TRAINING_SIZE: usize = 32;
/// Watch fractions audited by default.
pub const WATCH_FRACTIONS: [f64; 4] = [1.0, 0.5, 0.25, 0.10];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OrchestratorError {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> OrchestratorError {
    OrchestratorError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One of the two configurations under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn tag(self) -> &'static str {
        match self {
            Group::A => "a",
            Group::B => "b",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub training_set: Vec<String>,
    pub seed_video: String,
    pub account_mode: AccountMode,
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

impl AuditConfig {
    /// Config with default traversal shape.
    pub fn new(
        training_set: Vec<String>,
        seed_video: impl Into<String>,
        account_mode: AccountMode,
        watch_fraction: f64,
    ) -> Self {
        AuditConfig {
            training_set,
            seed_video: seed_video.into(),
            account_mode,
            watch_fraction,
            interaction_mode: InteractionMode::default(),
            n_paths: DEFAULT_PATHS,
            depth: DEFAULT_DEPTH,
            n_rec: DEFAULT_N_REC,
            zipf_s: 1.0,
        }
    }

    /// Checks field constraints; `at` prefixes field names in errors.
    pub fn validate(&self, at: &str) -> Result<(), OrchestratorError> {
        if self.training_set.is_empty() {
            return Err(invalid(format!("{at}.training_set"), "must not be empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for (k, v) in self.training_set.iter().enumerate() {
            if !seen.insert(v) {
                return Err(invalid(
                    format!("{at}.training_set[{k}]"),
                    format!("duplicate video {v:?}"),
                ));
            }
        }
        if !(self.watch_fraction > 0.0 && self.watch_fraction <= 1.0) {
            return Err(invalid(format!("{at}.watch_fraction"), "must be in (0, 1]"));
        }
        if self.n_paths < 2 {
            return Err(invalid(format!("{at}.n_paths"), "must be at least 2"));
        }
        if self.n_rec < self.n_paths {
            return Err(invalid(format!("{at}.n_rec"), "must be at least n_paths"));
        }
        if !self.zipf_s.is_finite() || self.zipf_s < 0.0 {
            return Err(invalid(
                format!("{at}.zipf_s"),
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// A fault injected into one crawler's view of the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub group: Group,
    pub tree: usize,
    pub path: usize,
    pub depth: usize,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FaultKind {
    /// The platform returns no recommendations.
    Empty,
    /// The platform returns only the first `len` recommendations.
    Truncate { len: usize },
    /// The crawler errors out.
    Crash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub config_a: AuditConfig,
    pub config_b: AuditConfig,
    pub n_trees_per_group: usize,
    pub world: WorldParams,
    pub world_seed: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub faults: Vec<Fault>,
}

impl ExperimentSpec {
    pub fn new(
        config_a: AuditConfig,
        config_b: AuditConfig,
        world: WorldParams,
        world_seed: u64,
        rng_seed: u64,
    ) -> Self {
        ExperimentSpec {
            config_a,
            config_b,
            n_trees_per_group: DEFAULT_TREES_PER_GROUP,
            world,
            world_seed,
            rng_seed,
            faults: Vec::new(),
        }
    }

    pub fn config(&self, group: Group) -> &AuditConfig {
        match group {
            Group::A => &self.config_a,
            Group::B => &self.config_b,
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        self.config_a.validate("config_a")?;
        self.config_b.validate("config_b")?;
        let (a, b) = (&self.config_a, &self.config_b);
        // Both groups follow one path schedule, so the traversal shape is shared.
        for (name, same) in [
            ("n_paths", a.n_paths == b.n_paths),
            ("depth", a.depth == b.depth),
            ("n_rec", a.n_rec == b.n_rec),
            ("zipf_s", a.zipf_s == b.zipf_s),
        ] {
            if !same {
                return Err(invalid(format!("config_b.{name}"), "must equal config_a"));
            }
        }
        if self.n_trees_per_group < 2 {
            return Err(invalid("n_trees_per_group", "must be at least 2"));
        }
        if a.n_rec > self.world.n_rec {
            return Err(invalid("config_a.n_rec", "exceeds the world's n_rec"));
        }
        self.world
            .validate()
            .map_err(|e| invalid("world", e.to_string()))?;
        for (k, f) in self.faults.iter().enumerate() {
            if f.tree >= self.n_trees_per_group || f.path >= a.n_paths || f.depth > a.depth {
                return Err(invalid(
                    format!("faults[{k}]"),
                    "position outside the experiment",
                ));
            }
        }
        Ok(())
    }

    /// Checks that every referenced video exists in `world`.
    pub fn check_videos(&self, world: &SimWorld) -> Result<(), OrchestratorError> {
        for group in [Group::A, Group::B] {
            let c = self.config(group);
            let at = format!("config_{}", group.tag());
            world.index_of(&c.seed_video).map_err(|_| {
                invalid(
                    format!("{at}.seed_video"),
                    format!("unknown video {:?}", c.seed_video),
                )
            })?;
            for (k, v) in c.training_set.iter().enumerate() {
                world.index_of(v).map_err(|_| {
                    invalid(
                        format!("{at}.training_set[{k}]"),
                        format!("unknown video {v:?}"),
                    )
                })?;
            }
        }
        Ok(())
    }
}

/// Column followed at every depth by each path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSchedule {
    pub columns: Vec<usize>,
}

/// Leftmost and rightmost columns plus `n_paths - 2` middle columns drawn
/// without replacement with weight `(column + 1)^-zipf_s`, kept in draw order.
pub fn select_paths<R: Rng + ?Sized>(
    n_rec: usize,
    n_paths: usize,
    zipf_s: f64,
    rng: &mut R,
) -> Result<PathSchedule, OrchestratorError> {
    if n_paths < 2 {
        return Err(invalid("n_paths", "must be at least 2"));
    }
    if n_rec < n_paths {
        return Err(invalid(
            "n_rec",
            format!("{n_rec} columns cannot supply {n_paths} distinct paths"),
        ));
    }
    let mut pool: Vec<usize> = (1..n_rec - 1).collect();
    let mut weights: Vec<f64> = pool
        .iter()
        .map(|&c| ((c + 1) as f64).powf(-zipf_s))
        .collect();
    let mut columns = vec![0];
    for _ in 0..n_paths - 2 {
        let k = WeightedIndex::new(&weights)
            .map_err(|e| invalid("zipf_s", e.to_string()))?
            .sample(rng);
        columns.push(pool.remove(k));
        weights.remove(k);
    }
    columns.push(n_rec - 1);
    Ok(PathSchedule { columns })
}

/// Seconds watched for a video of `duration_s` at `fraction` completion.
pub fn watch_seconds(fraction: f64, duration_s: u64) -> u64 {
    // The tolerance keeps e.g. 0.1 * 600 from rounding up to 61.
    (fraction * duration_s as f64 - 1e-9).ceil().max(0.0) as u64
}

/// Watches each training video in order at `watch_fraction`.
pub fn train_puppet(
    session: &mut PuppetSession,
    training_set: &[String],
    watch_fraction: f64,
    world: &SimWorld,
) -> Result<(), SimError> {
    for id in training_set {
        let duration = world.video(id)?.duration_s;
        session.register_watch(world, id, watch_seconds(watch_fraction, duration))?;
    }
    Ok(())
}

/// A trained session for one crawler. Clear-mode sessions are cleared after
/// training.
pub fn prepare_session(
    world: &SimWorld,
    config: &AuditConfig,
    puppet_id: u64,
) -> Result<PuppetSession, SimError> {
    let mut session = PuppetSession::new(
        world,
        config.account_mode,
        config.interaction_mode,
        puppet_id,
    );
    train_puppet(
        &mut session,
        &config.training_set,
        config.watch_fraction,
        world,
    )?;
    if config.account_mode == AccountMode::Clear {
        session.clear_history()?;
    }
    Ok(session)
}
