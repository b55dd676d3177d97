//! Run directories: a resolved spec, one file per tree, and a manifest.
//!
//! ```text
//! <out>/spec.json
//! <out>/manifest.json
//! <out>/trees/a_00.json ...
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_run_spec, ConfigError, RunSpec};
use crate::orchestrator::{run_experiment_in, Group, OrchestratorError, Scheduler, TreeStatus};
use crate::sim::SimWorld;
use crate::tree::{ParseMode, RecommendationTree, TreeError};

pub const SPEC_FILE: &str = "spec.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TREE_DIR: &str = "trees";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error("{path}: {source}")]
    Tree {
        path: String,
        #[source]
        source: TreeError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEntry {
    /// Relative to the run directory.
    pub file: String,
    pub group: Group,
    pub index: usize,
    pub status: TreeStatus,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Hex sha256 of the canonical spec in `spec.json`.
    pub spec_hash: String,
    /// RFC 3339 UTC.
    pub created_at: String,
    pub world_seed: u64,
    pub rng_seed: u64,
    pub path_columns: Vec<usize>,
    pub trees: Vec<TreeEntry>,
}

impl RunManifest {
    pub fn entries(&self, group: Group) -> impl Iterator<Item = &TreeEntry> {
        self.trees.iter().filter(move |t| t.group == group)
    }

    pub fn count(&self, group: Group, status: TreeStatus) -> usize {
        self.entries(group).filter(|t| t.status == status).count()
    }
}

pub fn spec_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn tree_file(group: Group, index: usize) -> String {
    format!("{TREE_DIR}/{}_{index:02}.json", group.tag())
}

/// Runs the experiment and persists it under `out_dir`. Re-running the same
/// spec rewrites byte-identical spec and tree files.
pub fn run(spec: &RunSpec, out_dir: &Path) -> Result<RunManifest, RunError> {
    spec.validate()?;
    let e = &spec.experiment;
    let world = SimWorld::new(&e.world, e.world_seed).map_err(OrchestratorError::from)?;
    let outcome = run_experiment_in(&world, e, Scheduler::Threads)?;

    let tree_dir = out_dir.join(TREE_DIR);
    fs::create_dir_all(&tree_dir).map_err(io(&tree_dir))?;
    // Drop tree files left by an earlier run with more trees.
    for entry in fs::read_dir(&tree_dir).map_err(io(&tree_dir))? {
        let path = entry.map_err(io(&tree_dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if (name.starts_with("a_") || name.starts_with("b_")) && name.ends_with(".json") {
            fs::remove_file(&path).map_err(io(&path))?;
        }
    }

    let canonical = spec.canonical_json();
    let spec_path = out_dir.join(SPEC_FILE);
    fs::write(&spec_path, &canonical).map_err(io(&spec_path))?;

    let mut trees = Vec::new();
    for r in outcome.trees_a.iter().chain(&outcome.trees_b) {
        let file = tree_file(r.group, r.index);
        let path = out_dir.join(&file);
        fs::write(&path, r.tree.serialize()).map_err(io(&path))?;
        trees.push(TreeEntry {
            file,
            group: r.group,
            index: r.index,
            status: r.status,
            failures: r.failures.clone(),
        });
    }
    let manifest = RunManifest {
        spec_hash: spec_hash(&canonical),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        world_seed: e.world_seed,
        rng_seed: e.rng_seed,
        path_columns: outcome.schedule.columns.clone(),
        trees,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text).map_err(io(&manifest_path))?;
    Ok(manifest)
}

/// A persisted run, checked against its manifest.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub spec: RunSpec,
    pub manifest: RunManifest,
    pub trees: Vec<(TreeEntry, RecommendationTree)>,
}

impl LoadedRun {
    /// Trees of `group` in index order, optionally only complete ones.
    pub fn trees(&self, group: Group, complete_only: bool) -> Vec<&RecommendationTree> {
        self.trees
            .iter()
            .filter(|(e, _)| {
                e.group == group && (!complete_only || e.status == TreeStatus::Complete)
            })
            .map(|(_, t)| t)
            .collect()
    }
}

/// Loads a run directory without re-crawling. Fails if a listed file is
/// missing or malformed or if the spec no longer matches its hash.
pub fn load_run(dir: &Path) -> Result<LoadedRun, RunError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(io(&manifest_path))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| RunError::Manifest(e.to_string()))?;
    let spec_path = dir.join(SPEC_FILE);
    let spec_text = fs::read_to_string(&spec_path).map_err(io(&spec_path))?;
    if spec_hash(&spec_text) != manifest.spec_hash {
        return Err(RunError::Manifest(format!(
            "{SPEC_FILE} does not match spec_hash"
        )));
    }
    let spec = parse_run_spec(&spec_text)?;
    let mut trees = Vec::with_capacity(manifest.trees.len());
    for entry in &manifest.trees {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io(&path))?;
        let tree =
            RecommendationTree::deserialize(&bytes, ParseMode::Strict).map_err(|source| {
                RunError::Tree {
                    path: entry.file.clone(),
                    source,
                }
            })?;
        if entry.status == TreeStatus::Complete && !tree.is_complete() {
            return Err(RunError::Manifest(format!(
                "{} is listed complete but has gaps",
                entry.file
            )));
        }
        trees.push((entry.clone(), tree));
    }
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        spec,
        manifest,
        trees,
    })
}
