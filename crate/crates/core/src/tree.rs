//! Recommendation trees: per-path observations stitched into a fixed-shape
//! grid of `(path, depth)` positions.
//!
//! A tree is a sample of the full recommendation tree rooted at a seed video:
//! `P` root-to-leaf paths, each walked to depth `D`. Every traversed node keeps
//! the ordered recommendation list observed there. Positions the crawler never
//! reached are gaps; they are reported by [`RecommendationTree::gaps`] and
//! never filled in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Default number of recommendations captured per node.
pub const DEFAULT_N_REC: usize = 40;

/// A catalog entry as observed on the platform.
///
/// `topic` is latent simulator state. It is never serialized; observations
/// captured into trees carry `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub channel_id: String,
    pub views: u64,
    pub duration_s: u64,
    pub title: String,
    pub description: String,
    #[serde(skip)]
    pub topic: Option<Vec<f64>>,
}

impl VideoMeta {
    /// Copy of this entry without latent state, as a crawler would see it.
    pub fn observed(&self) -> VideoMeta {
        VideoMeta {
            topic: None,
            ..self.clone()
        }
    }

    /// Title and description joined for text processing.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }
}

/// A traversed video and the recommendations shown next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub path_index: usize,
    pub depth: usize,
    pub watched: String,
    /// Ordered by platform rank; index 0 is the top recommendation.
    pub recommendations: Vec<VideoMeta>,
    /// Set when the scheduled column exceeded the list and the crawler
    /// followed the last recommendation instead.
    pub clamped: bool,
}

impl TreeNode {
    pub fn new(
        path_index: usize,
        depth: usize,
        watched: impl Into<String>,
        recommendations: Vec<VideoMeta>,
    ) -> Self {
        TreeNode {
            path_index,
            depth,
            watched: watched.into(),
            recommendations,
            clamped: false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("path {path} starts at {found:?}, expected seed {seed:?}")]
    SeedMismatch {
        path: usize,
        seed: String,
        found: String,
    },
    #[error("duplicate node at (path {0}, depth {1})")]
    DuplicateNode(usize, usize),
    #[error("node at (path {path}, depth {depth}) is out of range for a {paths}x{max_depth} tree")]
    OutOfRange {
        path: usize,
        depth: usize,
        paths: usize,
        max_depth: usize,
    },
    #[error("node at (path {0}, depth {1}) has no recommendations")]
    EmptyRecommendations(usize, usize),
    #[error("node at (path {path}, depth {depth}) has {len} recommendations, limit is {n_rec}")]
    TooManyRecommendations {
        path: usize,
        depth: usize,
        len: usize,
        n_rec: usize,
    },
    #[error("node at (path {0}, depth {1}) watched a video not recommended by its parent")]
    OrphanNode(usize, usize),
    #[error("a tree needs at least one path and n_rec >= 1")]
    EmptyShape,
    #[error("schema violation at {at}: {reason}")]
    Schema { at: String, reason: String },
    #[error("malformed tree document: {0}")]
    Json(String),
}

/// Stitched observations of one audit run.
///
/// Immutable after construction; share freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationTree {
    seed: String,
    config_tag: String,
    paths: usize,
    max_depth: usize,
    n_rec: usize,
    nodes: BTreeMap<(usize, usize), TreeNode>,
}

/// Stitches per-path observation sequences into a tree.
///
/// `path_records[i]` holds the nodes observed by the crawler of path `i`; each
/// node's `path_index` must be `i`. Missing depths become gaps.
pub fn build_tree(
    seed: &str,
    path_records: Vec<Vec<TreeNode>>,
    config_tag: &str,
    max_depth: usize,
    n_rec: usize,
) -> Result<RecommendationTree, TreeError> {
    let paths = path_records.len();
    if paths == 0 || n_rec == 0 {
        return Err(TreeError::EmptyShape);
    }
    let mut nodes = BTreeMap::new();
    for (i, record) in path_records.into_iter().enumerate() {
        for node in record {
            if node.path_index != i || node.depth > max_depth {
                return Err(TreeError::OutOfRange {
                    path: node.path_index,
                    depth: node.depth,
                    paths,
                    max_depth,
                });
            }
            let key = (node.path_index, node.depth);
            if nodes.contains_key(&key) {
                return Err(TreeError::DuplicateNode(key.0, key.1));
            }
            nodes.insert(key, node);
        }
    }
    let tree = RecommendationTree {
        seed: seed.to_string(),
        config_tag: config_tag.to_string(),
        paths,
        max_depth,
        n_rec,
        nodes,
    };
    tree.validate()?;
    Ok(tree)
}

impl RecommendationTree {
    fn validate(&self) -> Result<(), TreeError> {
        for (&(i, j), node) in &self.nodes {
            if i >= self.paths || j > self.max_depth {
                return Err(TreeError::OutOfRange {
                    path: i,
                    depth: j,
                    paths: self.paths,
                    max_depth: self.max_depth,
                });
            }
            let len = node.recommendations.len();
            if len == 0 {
                return Err(TreeError::EmptyRecommendations(i, j));
            }
            if len > self.n_rec {
                return Err(TreeError::TooManyRecommendations {
                    path: i,
                    depth: j,
                    len,
                    n_rec: self.n_rec,
                });
            }
            if j == 0 {
                if node.watched != self.seed {
                    return Err(TreeError::SeedMismatch {
                        path: i,
                        seed: self.seed.clone(),
                        found: node.watched.clone(),
                    });
                }
            } else if let Some(parent) = self.nodes.get(&(i, j - 1)) {
                if !parent
                    .recommendations
                    .iter()
                    .any(|r| r.video_id == node.watched)
                {
                    return Err(TreeError::OrphanNode(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> &str {
        &self.seed
    }

    pub fn config_tag(&self) -> &str {
        &self.config_tag
    }

    /// Number of paths, `P`.
    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Deepest depth index, `D`. Paths hold depths `0..=D`.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn n_rec(&self) -> usize {
        self.n_rec
    }

    /// The node at `(path, depth)`; `Ok(None)` marks a gap.
    pub fn node_at(&self, path: usize, depth: usize) -> Result<Option<&TreeNode>, TreeError> {
        if path >= self.paths || depth > self.max_depth {
            return Err(TreeError::OutOfRange {
                path,
                depth,
                paths: self.paths,
                max_depth: self.max_depth,
            });
        }
        Ok(self.nodes.get(&(path, depth)))
    }

    /// All recorded nodes, path-major then depth.
    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, path: usize, depth: usize) -> bool {
        self.nodes.contains_key(&(path, depth))
    }

    /// Positions with no recorded node, path-major.
    pub fn gaps(&self) -> Vec<(usize, usize)> {
        (0..self.paths)
            .flat_map(|i| (0..=self.max_depth).map(move |j| (i, j)))
            .filter(|key| !self.nodes.contains_key(key))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.len() == self.paths * (self.max_depth + 1)
    }

    /// Same observations with every recommendation's view count shifted.
    /// Counts saturate at zero.
    pub fn with_view_shift(&self, shift: i64) -> RecommendationTree {
        let mut out = self.clone();
        for node in out.nodes.values_mut() {
            for rec in &mut node.recommendations {
                rec.views = rec.views.saturating_add_signed(shift);
            }
        }
        out
    }

    /// The single path `path`, re-indexed as path 0 of a one-path tree.
    pub fn path_slice(&self, path: usize) -> Result<RecommendationTree, TreeError> {
        if path >= self.paths {
            return Err(TreeError::OutOfRange {
                path,
                depth: 0,
                paths: self.paths,
                max_depth: self.max_depth,
            });
        }
        let nodes = self
            .nodes
            .range((path, 0)..=(path, self.max_depth))
            .map(|(&(_, j), n)| {
                (
                    (0, j),
                    TreeNode {
                        path_index: 0,
                        ..n.clone()
                    },
                )
            })
            .collect();
        Ok(RecommendationTree {
            paths: 1,
            nodes,
            ..self.shallow()
        })
    }

    /// The nodes at `depth` across all paths, re-indexed as a depth-0 tree.
    ///
    /// The result has no seed constraint: its root nodes watched whatever the
    /// paths reached at `depth`.
    pub fn depth_slice(&self, depth: usize) -> Result<RecommendationTree, TreeError> {
        if depth > self.max_depth {
            return Err(TreeError::OutOfRange {
                path: 0,
                depth,
                paths: self.paths,
                max_depth: self.max_depth,
            });
        }
        let nodes = self
            .nodes
            .iter()
            .filter(|(&(_, j), _)| j == depth)
            .map(|(&(i, _), n)| {
                (
                    (i, 0),
                    TreeNode {
                        depth: 0,
                        ..n.clone()
                    },
                )
            })
            .collect();
        Ok(RecommendationTree {
            max_depth: 0,
            nodes,
            ..self.shallow()
        })
    }

    fn shallow(&self) -> RecommendationTree {
        RecommendationTree {
            seed: self.seed.clone(),
            config_tag: self.config_tag.clone(),
            paths: self.paths,
            max_depth: self.max_depth,
            n_rec: self.n_rec,
            nodes: BTreeMap::new(),
        }
    }

    /// Serializes to the tree document format. Output is deterministic.
    pub fn to_json(&self) -> String {
        let doc = TreeDocument {
            seed: self.seed.clone(),
            config_tag: self.config_tag.clone(),
            p: self.paths,
            d: self.max_depth,
            n_rec: self.n_rec,
            nodes: self
                .nodes
                .values()
                .map(|n| NodeDocument {
                    path: n.path_index,
                    depth: n.depth,
                    watched: n.watched.clone(),
                    clamped: n.clamped,
                    recs: n.recommendations.clone(),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("tree document serializes");
        out.push('\n');
        out
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.to_json().into_bytes()
    }

    /// Parses a tree document. In strict mode unknown fields are rejected;
    /// in lenient mode they are ignored.
    pub fn deserialize(bytes: &[u8], mode: ParseMode) -> Result<RecommendationTree, TreeError> {
        let value: Value =
            serde_json::from_slice(bytes).map_err(|e| TreeError::Json(e.to_string()))?;
        if mode == ParseMode::Strict {
            check_known_fields(&value)?;
        }
        let doc: TreeDocument =
            serde_json::from_value(value).map_err(|e| TreeError::Json(e.to_string()))?;
        let mut records: Vec<Vec<TreeNode>> = vec![Vec::new(); doc.p];
        for (k, n) in doc.nodes.into_iter().enumerate() {
            if n.path >= doc.p {
                return Err(TreeError::Schema {
                    at: format!("nodes[{k}].path"),
                    reason: format!("{} is not below P = {}", n.path, doc.p),
                });
            }
            records[n.path].push(TreeNode {
                path_index: n.path,
                depth: n.depth,
                watched: n.watched,
                recommendations: n.recs,
                clamped: n.clamped,
            });
        }
        build_tree(&doc.seed, records, &doc.config_tag, doc.d, doc.n_rec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Serialize, Deserialize)]
struct TreeDocument {
    seed: String,
    config_tag: String,
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "N_rec")]
    n_rec: usize,
    nodes: Vec<NodeDocument>,
}

#[derive(Serialize, Deserialize)]
struct NodeDocument {
    path: usize,
    depth: usize,
    watched: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    clamped: bool,
    recs: Vec<VideoMeta>,
}

const TREE_FIELDS: &[&str] = &["seed", "config_tag", "P", "D", "N_rec", "nodes"];
const NODE_FIELDS: &[&str] = &["path", "depth", "watched", "clamped", "recs"];
const REC_FIELDS: &[&str] = &[
    "video_id",
    "channel_id",
    "views",
    "duration_s",
    "title",
    "description",
];

fn unknown_field(obj: &Map<String, Value>, allowed: &[&str], at: &str) -> Result<(), TreeError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(TreeError::Schema {
            at: format!("{at}.{k}"),
            reason: "unknown field".into(),
        }),
        None => Ok(()),
    }
}

fn check_known_fields(value: &Value) -> Result<(), TreeError> {
    let Some(root) = value.as_object() else {
        return Ok(());
    };
    unknown_field(root, TREE_FIELDS, "$")?;
    let nodes = root
        .get("nodes")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[]);
    for (k, node) in nodes.iter().enumerate() {
        let Some(node) = node.as_object() else {
            continue;
        };
        unknown_field(node, NODE_FIELDS, &format!("$.nodes[{k}]"))?;
        let recs = node
            .get("recs")
            .and_then(Value::as_array)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for (r, rec) in recs.iter().enumerate() {
            if let Some(rec) = rec.as_object() {
                unknown_field(rec, REC_FIELDS, &format!("$.nodes[{k}].recs[{r}]"))?;
            }
        }
    }
    Ok(())
}
