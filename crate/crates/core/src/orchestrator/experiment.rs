use std::collections::HashMap;
use std::sync::{Arc, Barrier, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    prepare_session, select_paths, Crawler, ExperimentSpec, FaultKind, Group, OrchestratorError,
    PathRecord, PathSchedule,
};
use crate::sim::{SimWorld, WorldEpoch};
use crate::tree::{build_tree, RecommendationTree};

/// How crawler tasks are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheduler {
    /// One OS thread per crawler, synchronized by a barrier at every depth.
    #[default]
    Threads,
    /// All crawlers stepped in turn on the calling thread.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeStatus {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRun {
    pub group: Group,
    pub index: usize,
    pub tree: RecommendationTree,
    pub status: TreeStatus,
    /// One line per halted path.
    pub failures: Vec<String>,
}

/// World epochs a crawler observed, one per depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlerEpochs {
    pub group: Group,
    pub tree: usize,
    pub path: usize,
    pub epochs: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub schedule: PathSchedule,
    pub trees_a: Vec<TreeRun>,
    pub trees_b: Vec<TreeRun>,
    pub epochs: Vec<CrawlerEpochs>,
}

impl ExperimentOutcome {
    pub fn runs(&self, group: Group) -> &[TreeRun] {
        match group {
            Group::A => &self.trees_a,
            Group::B => &self.trees_b,
        }
    }

    pub fn trees(&self, group: Group) -> Vec<&RecommendationTree> {
        self.runs(group).iter().map(|r| &r.tree).collect()
    }

    /// Trees of `group` with no gaps.
    pub fn complete_trees(&self, group: Group) -> Vec<&RecommendationTree> {
        self.runs(group)
            .iter()
            .filter(|r| r.status == TreeStatus::Complete)
            .map(|r| &r.tree)
            .collect()
    }

    pub fn crawler_count(&self) -> usize {
        self.epochs.len()
    }

    pub fn node_visits(&self) -> usize {
        self.trees_a
            .iter()
            .chain(&self.trees_b)
            .map(|r| r.tree.node_count())
            .sum()
    }
}

/// Noise stream id of the crawler for (`group`, `tree`, `path`).
pub fn puppet_id(rng_seed: u64, group: Group, tree: usize, path: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(rng_seed.to_le_bytes());
    h.update(group.tag().as_bytes());
    h.update((tree as u64).to_le_bytes());
    h.update((path as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

type Key = (Group, usize, usize);

/// Builds the spec's world and runs the experiment on it.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, OrchestratorError> {
    let world = SimWorld::new(&spec.world, spec.world_seed)?;
    run_experiment_in(&world, spec, Scheduler::Threads)
}

/// Runs the experiment against an existing world. `spec.world` is not
/// consulted.
pub fn run_experiment_in(
    world: &SimWorld,
    spec: &ExperimentSpec,
    scheduler: Scheduler,
) -> Result<ExperimentOutcome, OrchestratorError> {
    spec.validate()?;
    spec.check_videos(world)?;
    let shape = &spec.config_a;
    let schedule = select_paths(
        shape.n_rec,
        shape.n_paths,
        shape.zipf_s,
        &mut ChaCha8Rng::seed_from_u64(spec.rng_seed),
    )?;

    let mut crawlers: Vec<(Key, Crawler)> = Vec::new();
    for group in [Group::A, Group::B] {
        let config = spec.config(group);
        for tree in 0..spec.n_trees_per_group {
            for (path, &column) in schedule.columns.iter().enumerate() {
                let session =
                    prepare_session(world, config, puppet_id(spec.rng_seed, group, tree, path))?;
                let crawler = Crawler::new(
                    session,
                    path,
                    &config.seed_video,
                    column,
                    config.n_rec,
                    config.watch_fraction,
                );
                crawlers.push(((group, tree, path), crawler));
            }
        }
    }
    let faults: HashMap<(Key, usize), FaultKind> = spec
        .faults
        .iter()
        .map(|f| (((f.group, f.tree, f.path), f.depth), f.kind))
        .collect();

    let finished = match scheduler {
        Scheduler::Threads => run_threaded(world, crawlers, &faults, shape.depth),
        Scheduler::RoundRobin => run_round_robin(world, crawlers, &faults, shape.depth),
    };

    let mut records: HashMap<Key, PathRecord> = HashMap::new();
    let mut epochs = Vec::with_capacity(finished.len());
    for ((group, tree, path), record, seen) in finished {
        records.insert((group, tree, path), record);
        epochs.push(CrawlerEpochs {
            group,
            tree,
            path,
            epochs: seen,
        });
    }
    let mut stitch = |group: Group| -> Result<Vec<TreeRun>, OrchestratorError> {
        let config = spec.config(group);
        (0..spec.n_trees_per_group)
            .map(|tree| {
                let mut failures = Vec::new();
                let mut paths = Vec::with_capacity(config.n_paths);
                for path in 0..config.n_paths {
                    let record = records
                        .remove(&(group, tree, path))
                        .expect("one record per crawler");
                    if let Some((depth, reason)) = record.halted {
                        failures.push(format!("path {path} halted at depth {depth}: {reason}"));
                    }
                    paths.push(record.nodes);
                }
                let tree_doc = build_tree(
                    &config.seed_video,
                    paths,
                    group.tag(),
                    config.depth,
                    config.n_rec,
                )?;
                let status = if failures.is_empty() && tree_doc.is_complete() {
                    TreeStatus::Complete
                } else {
                    TreeStatus::Partial
                };
                Ok(TreeRun {
                    group,
                    index: tree,
                    tree: tree_doc,
                    status,
                    failures,
                })
            })
            .collect()
    };
    let trees_a = stitch(Group::A)?;
    let trees_b = stitch(Group::B)?;
    Ok(ExperimentOutcome {
        schedule,
        trees_a,
        trees_b,
        epochs,
    })
}

type Finished = Vec<(Key, PathRecord, Vec<u64>)>;

fn run_round_robin(
    world: &SimWorld,
    mut crawlers: Vec<(Key, Crawler)>,
    faults: &HashMap<(Key, usize), FaultKind>,
    depth: usize,
) -> Finished {
    let mut seen = vec![Vec::with_capacity(depth + 1); crawlers.len()];
    for j in 0..=depth {
        let epoch = world.at_epoch(j as u64);
        for ((key, crawler), log) in crawlers.iter_mut().zip(&mut seen) {
            log.push(epoch.epoch);
            crawler.step(&epoch, faults.get(&(*key, j)).copied());
        }
    }
    crawlers
        .into_iter()
        .zip(seen)
        .map(|((key, c), log)| (key, c.finish(), log))
        .collect()
}

/// Every crawler waits at a barrier before each depth; the barrier leader
/// then publishes the next world epoch, and a second barrier keeps anyone
/// from stepping before it is published.
fn run_threaded(
    world: &SimWorld,
    crawlers: Vec<(Key, Crawler)>,
    faults: &HashMap<(Key, usize), FaultKind>,
    depth: usize,
) -> Finished {
    let barrier = Barrier::new(crawlers.len());
    let current: RwLock<Option<Arc<WorldEpoch<'_>>>> = RwLock::new(None);
    let (barrier, current) = (&barrier, &current);
    std::thread::scope(|scope| {
        let handles: Vec<_> = crawlers
            .into_iter()
            .map(|(key, mut crawler)| {
                scope.spawn(move || {
                    let mut log = Vec::with_capacity(depth + 1);
                    for j in 0..=depth {
                        if barrier.wait().is_leader() {
                            *current.write().expect("epoch lock") =
                                Some(Arc::new(world.at_epoch(j as u64)));
                        }
                        barrier.wait();
                        let epoch = current
                            .read()
                            .expect("epoch lock")
                            .clone()
                            .expect("epoch published");
                        log.push(epoch.epoch);
                        crawler.step(&epoch, faults.get(&(key, j)).copied());
                    }
                    (key, crawler.finish(), log)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("crawler thread panicked"))
            .collect()
    })
}
