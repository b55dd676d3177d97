//! Effect-size analysis of persisted runs.

use serde::{Deserialize, Serialize};

use crate::compare::CompareError;
use crate::config::RunSpec;
use crate::metrics::{MetricsContext, TreeMetrics};
use crate::orchestrator::{AuditConfig, Group};
use crate::run::LoadedRun;
use crate::stats::{
    bootstrap_trees, group_mean, BootstrapConfig, Characteristic, CiMethod, EffectReport,
    GroupComparison, StatsError,
};
use crate::tree::{RecommendationTree, TreeError};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{group} needs at least {needed} complete trees, found {found}")]
    InsufficientTrees {
        group: String,
        needed: usize,
        found: usize,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Text(#[from] crate::text::TextError),
}

/// Which part of each tree is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slice {
    /// Whole trees, first configuration against second.
    #[default]
    None,
    /// Leftmost path against rightmost path, over all trees.
    Breadth,
    /// Depth 1 against the deepest level, over all trees.
    Depth,
}

impl std::str::FromStr for Slice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Slice::None),
            "breadth" => Ok(Slice::Breadth),
            "depth" => Ok(Slice::Depth),
            other => Err(format!(
                "unknown slice {other:?}, expected none, breadth or depth"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub characteristics: Vec<Characteristic>,
    /// Split each group into two disjoint halves, one row per half.
    pub split: bool,
    pub slice: Slice,
    pub resamples: usize,
    pub seed: u64,
    pub method: CiMethod,
}

impl AnalyzeOptions {
    pub fn new(resamples: usize, seed: u64) -> Self {
        AnalyzeOptions {
            characteristics: Characteristic::ALL.to_vec(),
            split: false,
            slice: Slice::None,
            resamples,
            seed,
            method: CiMethod::Percentile,
        }
    }
}

/// Effect of one characteristic in one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Group means of the node metric; absent for semantics.
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub effect: EffectReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// What the two sides share.
    pub fixed: String,
    /// What differs between the two sides.
    pub varied: String,
    pub n_a: usize,
    pub n_b: usize,
    /// Trees left out because they have gaps.
    pub excluded: usize,
    pub cells: Vec<Cell>,
}

impl ReportRow {
    pub fn cell(&self, ch: Characteristic) -> Option<&Cell> {
        self.cells.iter().find(|c| c.effect.characteristic == ch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

/// Effects of `a` against `b` for each characteristic, with one bootstrap
/// seed per characteristic derived from `seed`.
pub fn compare_groups(
    a: &[TreeMetrics],
    b: &[TreeMetrics],
    characteristics: &[Characteristic],
    resamples: usize,
    seed: u64,
    method: CiMethod,
) -> Result<Vec<Cell>, AnalysisError> {
    let cmp = GroupComparison::new(a, b)?;
    characteristics
        .iter()
        .map(|&ch| {
            let cfg =
                BootstrapConfig::new(resamples, seed.wrapping_add(ch as u64)).with_method(method);
            Ok(Cell {
                mean_a: group_mean(a, ch),
                mean_b: group_mean(b, ch),
                effect: bootstrap_trees(&cmp, ch, &cfg)?,
            })
        })
        .collect()
}

fn fmt_fraction(f: f64) -> String {
    format!("W={:.0}%", f * 100.0)
}

/// Human-readable summaries of the parameters the two configs share and
/// the ones they vary.
fn describe(a: &AuditConfig, b: &AuditConfig) -> (String, String) {
    let mut fixed = Vec::new();
    let mut varied = Vec::new();
    let mut field = |name: &str, x: String, y: String| {
        if x == y {
            fixed.push(format!("{name}={x}"));
        } else {
            varied.push(format!("{name}: {x} vs {y}"));
        }
    };
    field(
        "account",
        format!("{:?}", a.account_mode).to_lowercase(),
        format!("{:?}", b.account_mode).to_lowercase(),
    );
    field(
        "watch",
        fmt_fraction(a.watch_fraction),
        fmt_fraction(b.watch_fraction),
    );
    field(
        "interaction",
        format!("{:?}", a.interaction_mode).to_lowercase(),
        format!("{:?}", b.interaction_mode).to_lowercase(),
    );
    field("seed", a.seed_video.clone(), b.seed_video.clone());
    let training = |c: &AuditConfig| format!("{}..({})", c.training_set[0], c.training_set.len());
    field("training", training(a), training(b));
    let varied = if varied.is_empty() {
        "none".to_string()
    } else {
        varied.join(", ")
    };
    (fixed.join(", "), varied)
}

fn need(group: &str, needed: usize, found: usize) -> Result<(), AnalysisError> {
    if found < needed {
        return Err(AnalysisError::InsufficientTrees {
            group: group.to_string(),
            needed,
            found,
        });
    }
    Ok(())
}

/// Analyzes complete trees of a persisted run. Pure in the run's files.
pub fn analyze(run: &LoadedRun, opts: &AnalyzeOptions) -> Result<ReportTable, AnalysisError> {
    let a = run.trees(Group::A, true);
    let b = run.trees(Group::B, true);
    let excluded = run.trees.len() - a.len() - b.len();
    analyze_trees(&run.spec, &a, &b, excluded, opts)
}

/// As [`analyze`] on trees already in memory.
pub fn analyze_trees(
    spec: &RunSpec,
    a: &[&RecommendationTree],
    b: &[&RecommendationTree],
    excluded: usize,
    opts: &AnalyzeOptions,
) -> Result<ReportTable, AnalysisError> {
    let min = if opts.split { 4 } else { 2 };
    let e = &spec.experiment;
    let ctx = MetricsContext::for_trees(a.iter().chain(b).copied())?;
    let metrics = |trees: &[RecommendationTree]| -> Result<Vec<TreeMetrics>, AnalysisError> {
        trees.iter().map(|t| Ok(ctx.tree_metrics(t)?)).collect()
    };

    // Each comparison: (fixed, varied, side a, side b).
    let mut comparisons: Vec<(
        String,
        String,
        Vec<RecommendationTree>,
        Vec<RecommendationTree>,
    )> = Vec::new();
    match opts.slice {
        Slice::None => {
            need("config_a", min, a.len())?;
            need("config_b", min, b.len())?;
            let (fixed, varied) = describe(&e.config_a, &e.config_b);
            let own =
                |t: &[&RecommendationTree]| t.iter().map(|x| (*x).clone()).collect::<Vec<_>>();
            comparisons.push((fixed, varied, own(a), own(b)));
        }
        Slice::Breadth | Slice::Depth => {
            let all: Vec<&RecommendationTree> = a.iter().chain(b).copied().collect();
            need("all configurations", min, all.len())?;
            let depth = e.config_a.depth;
            let paths = e.config_a.n_paths;
            let (left, right, varied) = if opts.slice == Slice::Breadth {
                let l = all
                    .iter()
                    .map(|t| t.path_slice(0))
                    .collect::<Result<Vec<_>, _>>()?;
                let r = all
                    .iter()
                    .map(|t| t.path_slice(paths - 1))
                    .collect::<Result<Vec<_>, _>>()?;
                (l, r, "path: leftmost vs rightmost".to_string())
            } else {
                let top = depth.min(1);
                let l = all
                    .iter()
                    .map(|t| t.depth_slice(top))
                    .collect::<Result<Vec<_>, _>>()?;
                let r = all
                    .iter()
                    .map(|t| t.depth_slice(depth))
                    .collect::<Result<Vec<_>, _>>()?;
                (l, r, format!("depth: {top} vs {depth}"))
            };
            comparisons.push(("all trees".into(), varied, left, right));
        }
    }
    if opts.split {
        comparisons = comparisons
            .into_iter()
            .flat_map(|(fixed, varied, x, y)| {
                let (hx, hy) = (x.len() / 2, y.len() / 2);
                [
                    (
                        format!("{fixed} [set 1]"),
                        varied.clone(),
                        x[..hx].to_vec(),
                        y[..hy].to_vec(),
                    ),
                    (
                        format!("{fixed} [set 2]"),
                        varied,
                        x[hx..].to_vec(),
                        y[hy..].to_vec(),
                    ),
                ]
            })
            .collect();
    }

    let mut rows = Vec::with_capacity(comparisons.len());
    for (k, (fixed, varied, x, y)) in comparisons.into_iter().enumerate() {
        let (mx, my) = (metrics(&x)?, metrics(&y)?);
        let seed = opts.seed.wrapping_add(1000 * k as u64);
        let cells = compare_groups(
            &mx,
            &my,
            &opts.characteristics,
            opts.resamples,
            seed,
            opts.method,
        )?;
        rows.push(ReportRow {
            fixed,
            varied,
            n_a: x.len(),
            n_b: y.len(),
            excluded,
            cells,
        });
    }
    Ok(ReportTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::{run_experiment_in, ExperimentSpec, Scheduler};
    use crate::sim::{AccountMode, SimWorld, WorldParams};

    fn outcome(fraction_b: f64) -> (RunSpec, crate::orchestrator::ExperimentOutcome) {
        let p = WorldParams {
            catalog_size: 500,
            n_channels: 12,
            vocab_size: 150,
            n_rec: 10,
            ..WorldParams::default()
        };
        let world = SimWorld::new(&p, 2).unwrap();
        let training: Vec<String> = world.catalog()[..6]
            .iter()
            .map(|v| v.video_id.clone())
            .collect();
        let a = AuditConfig {
            n_paths: 3,
            depth: 3,
            n_rec: 10,
            ..AuditConfig::new(training, "v00050", AccountMode::Full, 1.0)
        };
        let b = AuditConfig {
            watch_fraction: fraction_b,
            ..a.clone()
        };
        let e = ExperimentSpec {
            n_trees_per_group: 4,
            ..ExperimentSpec::new(a, b, p, 2, 9)
        };
        let out = run_experiment_in(&world, &e, Scheduler::RoundRobin).unwrap();
        (RunSpec::new(e, 2000), out)
    }

    #[test]
    fn rows_per_mode() {
        let (spec, out) = outcome(0.5);
        let (a, b) = (out.trees(Group::A), out.trees(Group::B));
        let mut opts = AnalyzeOptions::new(2000, 1);
        let t = analyze_trees(&spec, &a, &b, 0, &opts).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].varied, "watch: W=100% vs W=50%");
        assert!(t.rows[0].fixed.starts_with("account=full"));
        assert_eq!(t.rows[0].cells.len(), 3);
        assert!(t.rows[0]
            .cell(Characteristic::Sem)
            .unwrap()
            .mean_a
            .is_none());

        opts.split = true;
        let t = analyze_trees(&spec, &a, &b, 0, &opts).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!((t.rows[1].n_a, t.rows[1].n_b), (2, 2));

        opts.split = false;
        opts.slice = Slice::Depth;
        opts.characteristics = vec![Characteristic::Div];
        let t = analyze_trees(&spec, &a, &b, 0, &opts).unwrap();
        assert_eq!(t.rows[0].varied, "depth: 1 vs 3");
        assert_eq!(t.rows[0].n_a, 8);
        assert_eq!(t.rows[0].cells.len(), 1);

        opts.slice = Slice::Breadth;
        let t = analyze_trees(&spec, &a, &b, 0, &opts).unwrap();
        assert_eq!(t.rows[0].varied, "path: leftmost vs rightmost");
    }

    #[test]
    fn depth_slices_use_only_their_level() {
        let (_, out) = outcome(1.0);
        let t = out.trees(Group::A)[0];
        let top = t.depth_slice(1).unwrap();
        let expected: Vec<&str> = (0..3)
            .map(|i| t.node_at(i, 1).unwrap().unwrap().watched.as_str())
            .collect();
        let got: Vec<&str> = top.nodes().map(|n| n.watched.as_str()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn too_few_trees() {
        let (spec, out) = outcome(1.0);
        let (a, b) = (out.trees(Group::A), out.trees(Group::B));
        let mut opts = AnalyzeOptions::new(2000, 1);
        let err = analyze_trees(&spec, &a[..1], &b, 0, &opts).unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::InsufficientTrees {
                needed: 2,
                found: 1,
                ..
            }
        ));
        opts.split = true;
        assert!(analyze_trees(&spec, &a[..3], &b, 0, &opts).is_err());
    }

    #[test]
    fn deterministic() {
        let (spec, out) = outcome(0.25);
        let (a, b) = (out.trees(Group::A), out.trees(Group::B));
        let opts = AnalyzeOptions::new(3000, 5);
        assert_eq!(
            analyze_trees(&spec, &a, &b, 0, &opts).unwrap(),
            analyze_trees(&spec, &a, &b, 0, &opts).unwrap()
        );
    }
}
