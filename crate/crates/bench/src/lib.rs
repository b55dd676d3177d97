//! Shared fixtures for the benchmarks.

use puppet_audit::orchestrator::{run_experiment_in, Scheduler};
use puppet_audit::{
    AccountMode, AuditConfig, ExperimentSpec, Group, RecommendationTree, SimWorld, WorldParams,
};

/// A default-sized world.
pub fn world(seed: u64) -> SimWorld {
    SimWorld::new(&WorldParams::default(), seed).expect("default world is valid")
}

/// A full-vs-half-watch experiment with the default traversal shape.
pub fn spec(world: &SimWorld, trees: usize) -> ExperimentSpec {
    let seed = world.video_at_view_quantile(0.5).video_id.clone();
    let anchor = world.video_at_view_quantile(0.1).video_id.clone();
    let mut training = vec![anchor.clone()];
    training.extend(world.topic_neighbors(&anchor, 31).expect("anchor exists"));
    let a = AuditConfig::new(training, seed, AccountMode::Full, 1.0);
    let b = AuditConfig {
        watch_fraction: 0.5,
        ..a.clone()
    };
    ExperimentSpec {
        n_trees_per_group: trees,
        ..ExperimentSpec::new(a, b, world.params().clone(), world.seed(), 1)
    }
}

/// Crawled trees of both groups.
pub fn trees(world: &SimWorld, trees: usize) -> (Vec<RecommendationTree>, Vec<RecommendationTree>) {
    let out = run_experiment_in(world, &spec(world, trees), Scheduler::RoundRobin)
        .expect("experiment runs");
    let own = |g| out.trees(g).into_iter().cloned().collect::<Vec<_>>();
    (own(Group::A), own(Group::B))
}
