use puppet_audit::compare::{align, delta, CompareError};
use puppet_audit::tree::{ParseMode, TreeError};
use puppet_audit::{MetricsContext, RecommendationTree};

const T: &str = include_str!("fixtures/golden_tree_t.json");
const U: &str = include_str!("fixtures/golden_tree_u.json");

fn load(text: &str) -> RecommendationTree {
    RecommendationTree::deserialize(text.as_bytes(), ParseMode::Strict).unwrap()
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * y.abs().max(1.0)
}

#[test]
fn documents_round_trip_byte_for_byte() {
    for text in [T, U] {
        assert_eq!(load(text).to_json(), text);
    }
}

#[test]
fn shape_and_gaps() {
    let (t, u) = (load(T), load(U));
    assert_eq!((t.paths(), t.max_depth(), t.n_rec()), (2, 1, 3));
    assert_eq!(t.gaps(), vec![(1, 1)]);
    assert_eq!(u.gaps(), vec![(0, 1)]);
    assert!(t.node_at(0, 1).unwrap().unwrap().clamped);
    assert_eq!(align(&t, &u).unwrap(), vec![(0, 0), (1, 0)]);
}

#[test]
fn node_metrics_match_hand_computed_values() {
    let (t, u) = (load(T), load(U));
    let ctx = MetricsContext::for_trees([&t, &u]).unwrap();
    let m = ctx.tree_metrics(&t).unwrap();
    let expect = [
        ((0, 0), 300.0, 0.9182958340544896),
        ((0, 1), 15.0, 1.0),
        ((1, 0), 51.666666666666664, 1.584962500721156),
    ];
    for ((i, j), pop, div) in expect {
        let n = m.get(i, j).unwrap();
        assert!(close(n.pop, pop), "pop at ({i}, {j}): {}", n.pop);
        assert!(close(n.div, div), "div at ({i}, {j}): {}", n.div);
    }
    let mu = ctx.tree_metrics(&u).unwrap();
    assert_eq!(mu.get(1, 0).unwrap().div, 0.0);
    assert!(m.get(1, 1).is_none());
}

#[test]
fn delta_matches_hand_computed_values() {
    let (t, u) = (load(T), load(U));
    let ctx = MetricsContext::for_trees([&t, &u]).unwrap();
    let d = delta(&t, &u, &ctx).unwrap();
    assert_eq!(d.n_aligned, 2);
    assert!(close(d.d_pop, -474.1666666666667), "{}", d.d_pop);
    assert!(close(d.d_div, 0.792481250360578), "{}", d.d_div);
    // Node (0, 0) is identical in both trees, node (1, 0) shares no words.
    let m = ctx.tree_metrics(&t).unwrap();
    let mu = ctx.tree_metrics(&u).unwrap();
    let other =
        puppet_audit::text::docsim(&m.get(1, 0).unwrap().doc, &mu.get(1, 0).unwrap().doc).unwrap();
    assert!(close(d.d_sem, (1.0 + other) / 2.0));
}

#[test]
fn shape_mismatch_is_rejected() {
    let t = load(T);
    let narrow = load(&U.replace("\"P\": 2", "\"P\": 3"));
    assert_eq!(
        align(&t, &narrow),
        Err(CompareError::ShapeMismatch(2, 1, 3, 1))
    );
}

#[test]
fn strict_and_lenient_parsing() {
    let extra = T.replacen(
        "\"seed\": \"s\",",
        "\"seed\": \"s\",\n  \"crawler\": \"v2\",",
        1,
    );
    let err = RecommendationTree::deserialize(extra.as_bytes(), ParseMode::Strict).unwrap_err();
    assert!(
        matches!(err, TreeError::Schema { ref at, .. } if at.ends_with("crawler")),
        "{err}"
    );
    assert_eq!(
        RecommendationTree::deserialize(extra.as_bytes(), ParseMode::Lenient).unwrap(),
        load(T)
    );

    let orphan = T.replace("\"watched\": \"c\"", "\"watched\": \"zz\"");
    let err = RecommendationTree::deserialize(orphan.as_bytes(), ParseMode::Lenient).unwrap_err();
    assert_eq!(err, TreeError::OrphanNode(0, 1));
}
