use std::path::Path;

use puppet_audit::config::{load_spec, parse_run_spec, parse_spec, ConfigError};
use puppet_audit::orchestrator::{run_experiment_in, Scheduler, TreeStatus};
use puppet_audit::{AccountMode, Group, SimWorld};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn watch_spec_resolves_selectors() {
    let spec = load_spec(&fixture("spec_watch_100_50.json")).unwrap();
    let e = &spec.experiment;
    assert_eq!(e.n_trees_per_group, 8);
    assert_eq!((e.world_seed, e.rng_seed), (2024, 7));
    assert_eq!(e.config_a.watch_fraction, 1.0);
    assert_eq!(e.config_b.watch_fraction, 0.5);
    assert_eq!(e.config_a.account_mode, AccountMode::Full);
    assert_eq!(e.config_a.training_set.len(), 32);
    assert_eq!(e.config_a.training_set, e.config_b.training_set);

    let world = SimWorld::new(&e.world, e.world_seed).unwrap();
    assert_eq!(
        e.config_a.seed_video,
        world.video_at_view_quantile(0.5).video_id
    );
    assert_eq!(
        e.config_a.training_set[0],
        world.video_at_view_quantile(0.2).video_id
    );
}

#[test]
fn canonical_form_is_a_fixed_point() {
    let spec = load_spec(&fixture("spec_watch_100_50.json")).unwrap();
    let text = spec.canonical_json();
    let again = parse_run_spec(&text).unwrap();
    assert_eq!(again, spec);
    assert_eq!(again.canonical_json(), text);
}

#[test]
fn small_watch_experiment_completes() {
    let mut spec = load_spec(&fixture("spec_watch_100_50.json")).unwrap();
    let e = &mut spec.experiment;
    e.n_trees_per_group = 2;
    e.config_a.depth = 2;
    e.config_b.depth = 2;
    let world = SimWorld::new(&e.world, e.world_seed).unwrap();
    let out = run_experiment_in(&world, e, Scheduler::RoundRobin).unwrap();
    for g in [Group::A, Group::B] {
        let runs = out.runs(g);
        assert_eq!(runs.len(), 2);
        assert!(runs.iter().all(|r| r.status == TreeStatus::Complete));
        assert!(runs.iter().all(|r| r.tree.node_count() == 5 * 3));
    }
}

#[test]
fn unknown_keys_name_their_location() {
    let text = std::fs::read_to_string(fixture("spec_watch_100_50.json")).unwrap();
    let bad = text.replace(
        "\"watch_fraction\": 0.5",
        "\"watch_fraction\": 0.5, \"speed\": 2",
    );
    match parse_spec(&bad) {
        Err(ConfigError::Parse { at, .. }) => assert!(at.starts_with("config_b"), "{at}"),
        other => panic!("{other:?}"),
    }
    let zero = text.replace("\"watch_fraction\": 0.5", "\"watch_fraction\": 0.0");
    let err = parse_spec(&zero).unwrap_err().to_string();
    assert!(err.contains("config_b.watch_fraction"), "{err}");
}
