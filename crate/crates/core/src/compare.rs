//! Node-position-aligned comparison of two trees.

use crate::metrics::{MetricsContext, TreeMetrics};
use crate::text::{docsim, TextError};
use crate::tree::RecommendationTree;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CompareError {
    #[error("tree shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("the trees share no recorded node position")]
    EmptyAlignment,
    #[error(transparent)]
    Text(#[from] TextError),
}

/// Mean node-to-node differences between two trees.
///
/// `d_pop` and `d_div` are differences (first minus second); `d_sem` is a
/// mean cosine similarity, not a difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeDelta {
    pub d_pop: f64,
    pub d_div: f64,
    pub d_sem: f64,
    pub n_aligned: usize,
}

fn check_shape(a: (usize, usize), b: (usize, usize)) -> Result<(), CompareError> {
    if a != b {
        return Err(CompareError::ShapeMismatch(a.0, a.1, b.0, b.1));
    }
    Ok(())
}

/// Positions recorded in both trees, path-major then depth.
pub fn align(
    t: &RecommendationTree,
    u: &RecommendationTree,
) -> Result<Vec<(usize, usize)>, CompareError> {
    check_shape((t.paths(), t.max_depth()), (u.paths(), u.max_depth()))?;
    Ok(t.nodes()
        .map(|n| (n.path_index, n.depth))
        .filter(|&(i, j)| u.contains(i, j))
        .collect())
}

pub fn align_metrics(
    t: &TreeMetrics,
    u: &TreeMetrics,
) -> Result<Vec<(usize, usize)>, CompareError> {
    check_shape((t.paths, t.max_depth), (u.paths, u.max_depth))?;
    Ok(t.nodes
        .keys()
        .filter(|k| u.nodes.contains_key(k))
        .copied()
        .collect())
}

/// Delta over precomputed node metrics.
pub fn delta_metrics(t: &TreeMetrics, u: &TreeMetrics) -> Result<TreeDelta, CompareError> {
    let positions = align_metrics(t, u)?;
    if positions.is_empty() {
        return Err(CompareError::EmptyAlignment);
    }
    let (mut pop, mut div, mut sem) = (0.0, 0.0, 0.0);
    for key in &positions {
        let (a, b) = (&t.nodes[key], &u.nodes[key]);
        pop += a.pop - b.pop;
        div += a.div - b.div;
        sem += docsim(&a.doc, &b.doc)?;
    }
    let n = positions.len() as f64;
    Ok(TreeDelta {
        d_pop: pop / n,
        d_div: div / n,
        d_sem: sem / n,
        n_aligned: positions.len(),
    })
}

pub fn delta(
    t: &RecommendationTree,
    u: &RecommendationTree,
    ctx: &MetricsContext,
) -> Result<TreeDelta, CompareError> {
    align(t, u)?;
    delta_metrics(&ctx.tree_metrics(t)?, &ctx.tree_metrics(u)?)
}
