//! Per-node characteristics: popularity, channel diversity, content vector.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::text::{self, CorpusStats, DocVector, EmbeddingProvider, HashedEmbedding, TextError};
use crate::tree::{RecommendationTree, TreeNode};

/// Mean view count of the node's recommendations.
pub fn pop(node: &TreeNode) -> f64 {
    let recs = &node.recommendations;
    debug_assert!(!recs.is_empty());
    recs.iter().map(|r| r.views as f64).sum::<f64>() / recs.len() as f64
}

/// Median view count. Not used by the default pipeline.
pub fn pop_median(node: &TreeNode) -> f64 {
    let mut views: Vec<u64> = node.recommendations.iter().map(|r| r.views).collect();
    views.sort_unstable();
    let n = views.len();
    if n % 2 == 1 {
        views[n / 2] as f64
    } else {
        (views[n / 2 - 1] as f64 + views[n / 2] as f64) / 2.0
    }
}

/// Plug-in Shannon entropy in bits of a list of category counts.
pub fn entropy_bits(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Entropy in bits of the channels among the node's recommendations.
pub fn div(node: &TreeNode) -> f64 {
    // Ordered map: the summation order, and so the exact result, must not
    // depend on hashing.
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &node.recommendations {
        *counts.entry(r.channel_id.as_str()).or_insert(0) += 1;
    }
    entropy_bits(counts.into_values())
}

/// Document vector of all recommendation titles and descriptions at a node.
pub fn doc(
    node: &TreeNode,
    stats: &CorpusStats,
    provider: &dyn EmbeddingProvider,
) -> Result<DocVector, TextError> {
    let combined = node
        .recommendations
        .iter()
        .map(|r| r.text())
        .collect::<Vec<_>>()
        .join(" ");
    text::embed(&text::preprocess(&combined, stats), provider)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub pop: f64,
    pub div: f64,
    pub doc: DocVector,
}

/// Corpus statistics and word vectors shared by every tree in an analysis.
#[derive(Clone)]
pub struct MetricsContext {
    pub stats: CorpusStats,
    pub provider: Arc<dyn EmbeddingProvider>,
}

impl std::fmt::Debug for MetricsContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricsContext")
            .field("doc_count", &self.stats.doc_count)
            .field("dim", &self.provider.dim())
            .finish()
    }
}

impl MetricsContext {
    pub fn new(stats: CorpusStats, provider: Arc<dyn EmbeddingProvider>) -> Self {
        MetricsContext { stats, provider }
    }

    /// Corpus statistics over every distinct video observed in `trees`, with
    /// the default hashed provider. One document per video: title plus
    /// description.
    pub fn for_trees<'a>(
        trees: impl IntoIterator<Item = &'a RecommendationTree>,
    ) -> Result<Self, TextError> {
        let mut seen = HashSet::new();
        let mut docs = Vec::new();
        for tree in trees {
            for node in tree.nodes() {
                for r in &node.recommendations {
                    if seen.insert(r.video_id.clone()) {
                        docs.push(r.text());
                    }
                }
            }
        }
        Ok(MetricsContext::new(
            text::build_corpus_stats(&docs)?,
            Arc::new(HashedEmbedding::default()),
        ))
    }

    pub fn node_metrics(&self, node: &TreeNode) -> Result<NodeMetrics, TextError> {
        Ok(NodeMetrics {
            pop: pop(node),
            div: div(node),
            doc: doc(node, &self.stats, self.provider.as_ref())?,
        })
    }

    pub fn tree_metrics(&self, tree: &RecommendationTree) -> Result<TreeMetrics, TextError> {
        let nodes: Vec<&TreeNode> = tree.nodes().collect();
        let computed = nodes
            .par_iter()
            .map(|n| Ok(((n.path_index, n.depth), self.node_metrics(n)?)))
            .collect::<Result<Vec<_>, TextError>>()?;
        Ok(TreeMetrics {
            paths: tree.paths(),
            max_depth: tree.max_depth(),
            nodes: computed.into_iter().collect(),
        })
    }
}

/// Metrics for every recorded position of one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMetrics {
    pub paths: usize,
    pub max_depth: usize,
    pub nodes: BTreeMap<(usize, usize), NodeMetrics>,
}

impl TreeMetrics {
    pub fn get(&self, path: usize, depth: usize) -> Option<&NodeMetrics> {
        self.nodes.get(&(path, depth))
    }

    /// Mean of a scalar characteristic over all recorded nodes.
    pub fn mean_of(&self, f: impl Fn(&NodeMetrics) -> f64) -> f64 {
        self.nodes.values().map(f).sum::<f64>() / self.nodes.len() as f64
    }

    /// Adds `shift` to every node's popularity, as if every recommendation's
    /// view count moved by the same amount.
    pub fn with_pop_shift(&self, shift: f64) -> TreeMetrics {
        let mut out = self.clone();
        out.nodes.values_mut().for_each(|m| m.pop += shift);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::VideoMeta;

    fn node(recs: &[(&str, u64, &str)]) -> TreeNode {
        let recommendations = recs
            .iter()
            .enumerate()
            .map(|(k, &(channel, views, desc))| VideoMeta {
                video_id: format!("v{k}"),
                channel_id: channel.into(),
                views,
                duration_s: 60,
                title: String::new(),
                description: desc.into(),
                topic: None,
            })
            .collect();
        TreeNode::new(0, 0, "seed", recommendations)
    }

    #[test]
    fn pop_is_mean_views() {
        assert_eq!(
            pop(&node(&[("a", 1_000_000, ""), ("b", 3_000_000, "")])),
            2_000_000.0
        );
        let same: Vec<_> = (0..40).map(|_| ("a", 777, "")).collect();
        assert_eq!(pop(&node(&same)), 777.0);
        assert_eq!(
            pop_median(&node(&[("a", 1, ""), ("a", 9, ""), ("a", 4, "")])),
            4.0
        );
        assert_eq!(pop_median(&node(&[("a", 1, ""), ("a", 9, "")])), 5.0);
    }

    #[test]
    fn div_cases() {
        let one: Vec<_> = (0..40).map(|_| ("a", 1, "")).collect();
        assert_eq!(div(&node(&one)), 0.0);
        let four: Vec<_> = (0..40)
            .map(|k| (["a", "b", "c", "d"][k % 4], 1, ""))
            .collect();
        assert_eq!(div(&node(&four)), 2.0);
        let skew: Vec<_> = (0..40)
            .map(|k| {
                (
                    if k < 20 {
                        "a"
                    } else if k < 30 {
                        "b"
                    } else {
                        "c"
                    },
                    1,
                    "",
                )
            })
            .collect();
        assert!((div(&node(&skew)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn doc_composition() {
        let stats =
            text::build_corpus_stats(&["solar eclipse", "lunar rover", "deep sea", "ocean"])
                .unwrap();
        let provider = HashedEmbedding::new(16);
        let empty = node(&[("a", 1, ""), ("b", 2, "")]);
        assert!(doc(&empty, &stats, &provider).unwrap().is_zero());

        let single = node(&[("a", 1, "solar eclipse")]);
        let expected = text::embed(&text::preprocess("solar eclipse", &stats), &provider).unwrap();
        assert_eq!(doc(&single, &stats, &provider).unwrap(), expected);

        let two = node(&[("a", 1, "solar eclipse"), ("b", 1, "deep sea")]);
        let union = text::TokenDoc {
            tokens: ["solar", "eclipse", "deep", "sea"]
                .map(String::from)
                .to_vec(),
        };
        let got = doc(&two, &stats, &provider).unwrap();
        let want = text::embed(&union, &provider).unwrap();
        for (g, w) in got.values().iter().zip(want.values()) {
            assert!((g - w).abs() < 1e-15);
        }
    }
}
