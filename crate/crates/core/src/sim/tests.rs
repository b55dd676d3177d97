use super::*;
use crate::tree::VideoMeta;

fn small_params(catalog_size: usize, bias: BiasParams) -> WorldParams {
    WorldParams {
        catalog_size,
        n_channels: 12,
        n_rec: 10,
        vocab_size: 120,
        bias,
        ..WorldParams::default()
    }
}

fn quiet() -> BiasParams {
    BiasParams::default().with_noise(0.0)
}

fn ids(v: &[VideoMeta]) -> Vec<&str> {
    v.iter().map(|m| m.video_id.as_str()).collect()
}

#[test]
fn worlds_regenerate_identically() {
    let p = small_params(200, BiasParams::default());
    let a = SimWorld::new(&p, 42).unwrap();
    let b = SimWorld::new(&p, 42).unwrap();
    assert_eq!(a.catalog(), b.catalog());
    let c = SimWorld::new(&p, 43).unwrap();
    assert_ne!(a.catalog(), c.catalog());
}

#[test]
fn topics_are_unit_and_ids_sorted() {
    let w = SimWorld::new(&small_params(200, quiet()), 1).unwrap();
    for (i, v) in w.catalog().iter().enumerate() {
        let n: f64 = w.topic(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(w.index_of(&v.video_id).unwrap(), i);
    }
}

#[test]
fn two_channels() {
    let p = WorldParams {
        n_channels: 2,
        ..small_params(200, quiet())
    };
    let w = SimWorld::new(&p, 5).unwrap();
    assert!(w
        .catalog()
        .iter()
        .all(|v| w.channels().contains(&v.channel_id)));
    assert_eq!(w.channels().len(), 2);
}

#[test]
fn larger_sigma_spreads_log_views() {
    let var_of = |sigma: f64| {
        let bias = BiasParams {
            views_lognormal: (11.0, sigma),
            ..quiet()
        };
        let p = WorldParams {
            catalog_size: 10_000,
            ..small_params(10_000, bias)
        };
        let w = SimWorld::new(&p, 8).unwrap();
        let logs: Vec<f64> = w
            .catalog()
            .iter()
            .map(|v| (v.views as f64).max(1.0).ln())
            .collect();
        let m = logs.iter().sum::<f64>() / logs.len() as f64;
        logs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (logs.len() - 1) as f64
    };
    let (narrow, wide) = (var_of(1.0), var_of(2.0));
    // Moment oracle: Var(log views) ~ sigma^2.
    assert!((narrow - 1.0).abs() < 0.25, "{narrow}");
    assert!((wide - 4.0).abs() < 1.0, "{wide}");
    assert!(wide > narrow);
}

#[test]
fn invalid_sizes_rejected() {
    assert!(SimWorld::new(&small_params(99, quiet()), 0).is_err());
    let p = WorldParams {
        n_channels: 1,
        ..small_params(200, quiet())
    };
    assert!(SimWorld::new(&p, 0).is_err());
    assert!(new_world(BiasParams::default(), 0, 399, 10).is_err());
    assert!(new_world(BiasParams::default(), 0, 400, 10).is_ok());
}

#[test]
fn watch_threshold() {
    let w = SimWorld::new(&small_params(200, quiet()), 3).unwrap();
    let id = w.catalog()[0].video_id.clone();
    let mut s = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Click, 0);
    assert!(s.register_watch(&w, &id, 60).unwrap());
    assert!(!s.register_watch(&w, &id, 20).unwrap());
    assert!(!s.register_watch(&w, &id, 0).unwrap());
    assert!(s.register_watch(&w, &id, 30).unwrap());
    assert_eq!(s.history().len(), 4);
    assert_eq!(s.influence_count(), 2);
    assert_eq!(
        s.register_watch(&w, "nope", 60),
        Err(SimError::UnknownVideo("nope".into()))
    );
}

#[test]
fn clearing_history() {
    let w = SimWorld::new(&small_params(200, BiasParams::default()), 3).unwrap();
    let epoch = w.at_epoch(0);
    let seed = w.catalog()[7].video_id.clone();
    let mut trained = PuppetSession::new(&w, AccountMode::Clear, InteractionMode::Click, 9);
    for v in &w.catalog()[20..40] {
        trained.register_watch(&w, &v.video_id, 600).unwrap();
    }
    trained.clear_history().unwrap();
    trained.clear_history().unwrap();
    assert!(trained.history().is_empty());
    let mut fresh = PuppetSession::new(&w, AccountMode::Clear, InteractionMode::Click, 9);
    assert_eq!(
        recommend(&epoch, &mut trained, &seed, 0, 10).unwrap(),
        recommend(&epoch, &mut fresh, &seed, 0, 10).unwrap()
    );

    let mut cookies = PuppetSession::new(&w, AccountMode::Cookies, InteractionMode::Click, 9);
    assert_eq!(cookies.clear_history(), Err(SimError::ClearUnsupported));
}

#[test]
fn popularity_only_returns_most_viewed() {
    let bias = BiasParams {
        recency_weight: 0.0,
        history_weight: 0.0,
        ..quiet()
    };
    let w = SimWorld::new(&small_params(200, bias), 11).unwrap();
    let epoch = w.at_epoch(0);
    let mut by_views: Vec<&VideoMeta> = w.catalog().iter().collect();
    by_views.sort_by(|a, b| b.views.cmp(&a.views).then(a.video_id.cmp(&b.video_id)));
    let expected: Vec<&str> = by_views
        .iter()
        .take(10)
        .map(|v| v.video_id.as_str())
        .collect();
    for seed in [&by_views[150].video_id, &by_views[199].video_id] {
        let mut s = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Click, 0);
        assert_eq!(
            ids(&recommend(&epoch, &mut s, seed, 0, 10).unwrap()),
            expected
        );
    }
}

#[test]
fn recency_only_returns_topic_neighbors() {
    let bias = BiasParams {
        popularity_weight: 0.0,
        history_weight: 0.0,
        ..quiet()
    };
    let w = SimWorld::new(&small_params(200, bias), 12).unwrap();
    let epoch = w.at_epoch(0);
    let seed = w.catalog()[33].video_id.clone();
    let mut s = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Click, 0);
    let got = recommend(&epoch, &mut s, &seed, 0, 10).unwrap();
    assert_eq!(ids(&got), w.topic_neighbors(&seed, 10).unwrap());
}

fn oracle_scores(
    w: &SimWorld,
    history: &[usize],
    current: usize,
    depth: usize,
) -> Vec<(f64, String)> {
    let b = w.bias();
    let logs: Vec<f64> = w
        .catalog()
        .iter()
        .map(|v| (v.views as f64).ln_1p())
        .collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let sd = (logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let cos = |a: &[f64], c: &[f64]| {
        let d: f64 = a.iter().zip(c).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nc = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        d / (na * nc)
    };
    let topic = |i: usize| w.catalog()[i].topic.clone().unwrap();
    let dim = w.params().topic_dim;
    let mut h = vec![0.0; dim];
    for &i in history {
        for (k, x) in topic(i).iter().enumerate() {
            h[k] += x / history.len() as f64;
        }
    }
    (0..w.len())
        .filter(|&c| c != current)
        .map(|c| {
            let mut s = b.popularity_weight * b.depth_decay.powi(depth as i32) * (logs[c] - mean)
                / sd
                + b.recency_weight * cos(&topic(c), &topic(current));
            if !history.is_empty() {
                s += b.history_weight * cos(&topic(c), &h);
            }
            (s, w.catalog()[c].video_id.clone())
        })
        .collect()
}

#[test]
fn mixed_weights_match_brute_force() {
    let bias = BiasParams {
        popularity_weight: 0.7,
        recency_weight: 1.3,
        history_weight: 0.9,
        depth_decay: 0.8,
        ..quiet()
    };
    let p = WorldParams {
        epoch_view_drift: 0.0,
        ..small_params(100, bias)
    };
    let w = SimWorld::new(&p, 21).unwrap();
    let epoch = w.at_epoch(3);
    let mut s = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Click, 4);
    let history = [5usize, 17, 60];
    for &i in &history {
        s.register_watch(&w, &w.catalog()[i].video_id.clone(), 100)
            .unwrap();
    }
    let current = 42;
    let got = recommend(
        &epoch,
        &mut s,
        &w.catalog()[current].video_id.clone(),
        3,
        10,
    )
    .unwrap();
    let mut want = oracle_scores(&w, &history, current, 3);
    want.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let want: Vec<&str> = want.iter().take(10).map(|x| x.1.as_str()).collect();
    assert_eq!(ids(&got), want);
}

#[test]
fn recommendations_are_deterministic_and_distinct() {
    let w = SimWorld::new(&small_params(300, BiasParams::default()), 2).unwrap();
    let epoch = w.at_epoch(1);
    let seed = w.catalog()[0].video_id.clone();
    let run = || {
        let mut s = PuppetSession::new(&w, AccountMode::Cookies, InteractionMode::Get, 77);
        (0..3)
            .map(|d| recommend(&epoch, &mut s, &seed, d, 20).unwrap())
            .collect::<Vec<_>>()
    };
    let first = run();
    assert_eq!(first, run());
    for list in &first {
        let unique: std::collections::HashSet<_> = list.iter().map(|v| &v.video_id).collect();
        assert_eq!(unique.len(), list.len());
        assert!(!unique.contains(&seed));
    }
    // Each call consumes fresh noise.
    assert_ne!(first[0], first[1]);
}

#[test]
fn get_penalty_changes_popularity_pull() {
    let bias = BiasParams {
        get_penalty: 1.0,
        recency_weight: 0.0,
        history_weight: 0.0,
        ..quiet()
    };
    let w = SimWorld::new(&small_params(200, bias), 6).unwrap();
    let epoch = w.at_epoch(0);
    let seed = w.catalog()[1].video_id.clone();
    let mut get = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Get, 0);
    let mut click = PuppetSession::new(&w, AccountMode::Full, InteractionMode::Click, 0);
    let g = recommend(&epoch, &mut get, &seed, 0, 10).unwrap();
    let c = recommend(&epoch, &mut click, &seed, 0, 10).unwrap();
    // With every term zeroed, get sessions fall back to id order.
    assert_eq!(
        ids(&g),
        ids(&w.catalog()[0..11]
            .iter()
            .filter(|v| v.video_id != seed)
            .cloned()
            .collect::<Vec<_>>())
    );
    assert_ne!(g, c);
}

#[test]
fn epochs_pin_observed_views() {
    let w = SimWorld::new(&small_params(200, quiet()), 2).unwrap();
    let (e0, e1) = (w.at_epoch(0), w.at_epoch(1));
    assert_eq!(e0.views(3), w.catalog()[3].views);
    assert_eq!(w.at_epoch(1).views(3), e1.views(3));
    assert!((0..200).any(|i| e1.views(i) != e0.views(i)));
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn world() -> &'static SimWorld {
        static W: OnceLock<SimWorld> = OnceLock::new();
        W.get_or_init(|| {
            let p = WorldParams {
                epoch_view_drift: 0.0,
                ..small_params(400, quiet())
            };
            SimWorld::new(&p, 99).unwrap()
        })
    }

    fn rank_of(w: &SimWorld, seed: &str, target: &str) -> Option<usize> {
        let mut s = PuppetSession::new(w, AccountMode::Full, InteractionMode::Click, 0);
        let recs = recommend(&w.at_epoch(0), &mut s, seed, 0, 399).unwrap();
        recs.iter().position(|v| v.video_id == target)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn more_views_never_lower_rank(seed in 0usize..400, target in 0usize..400, factor in 1.0f64..20.0) {
            prop_assume!(seed != target);
            let w = world();
            let (s, t) = (w.catalog()[seed].video_id.clone(), w.catalog()[target].video_id.clone());
            let before = rank_of(w, &s, &t).unwrap();
            let boosted = w.with_views(&t, (w.catalog()[target].views as f64 * factor) as u64).unwrap();
            let after = rank_of(&boosted, &s, &t).unwrap();
            prop_assert!(after <= before, "rank {before} -> {after}");
        }
    }
}
