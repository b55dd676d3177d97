//! Within- and across-group difference distributions and bootstrap effect
//! sizes.
//!
//! For a characteristic `x`, the within-group distribution holds `delta_x`
//! between every unordered pair of distinct trees from one configuration; the
//! across-group distribution holds `delta_x` for every (first group, second
//! group) pair. The effect is `mean(across) - mean(within)`, and it is
//! significant at level N when the N% bootstrap interval lies strictly on one
//! side of zero.

mod bootstrap;

use serde::{Deserialize, Serialize};

use crate::compare::{delta_metrics, CompareError, TreeDelta};
use crate::metrics::TreeMetrics;

pub use bootstrap::{
    bootstrap_effect, bootstrap_trees, percentile, BootstrapConfig, CiMethod, Resampling,
    DEFAULT_RESAMPLES, MIN_RESAMPLES,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("within-group differences need at least 2 trees, got {0}")]
    TooFewTrees(usize),
    #[error("group is empty")]
    EmptyGroup,
    #[error("difference distribution is empty")]
    EmptyDistribution,
    #[error("n_resamples must be at least {MIN_RESAMPLES}, got {0}")]
    TooFewResamples(usize),
    #[error("confidence interval lower bound {0} exceeds upper bound {1}")]
    InvertedInterval(f64, f64),
    #[error("distributions describe different characteristics")]
    CharacteristicMismatch,
    #[error(transparent)]
    Compare(#[from] CompareError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Characteristic {
    Pop,
    Div,
    Sem,
}

impl Characteristic {
    pub const ALL: [Characteristic; 3] = [
        Characteristic::Pop,
        Characteristic::Div,
        Characteristic::Sem,
    ];

    pub fn of(self, d: &TreeDelta) -> f64 {
        match self {
            Characteristic::Pop => d.d_pop,
            Characteristic::Div => d.d_div,
            Characteristic::Sem => d.d_sem,
        }
    }

    /// Whether `delta(t, u) == -delta(u, t)` for this characteristic.
    pub fn is_antisymmetric(self) -> bool {
        !matches!(self, Characteristic::Sem)
    }

    pub fn name(self) -> &'static str {
        match self {
            Characteristic::Pop => "pop",
            Characteristic::Div => "div",
            Characteristic::Sem => "sem",
        }
    }
}

impl std::fmt::Display for Characteristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Characteristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pop" => Ok(Characteristic::Pop),
            "div" => Ok(Characteristic::Div),
            "sem" => Ok(Characteristic::Sem),
            other => Err(format!("unknown characteristic {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    Within,
    Across,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffDistribution {
    pub values: Vec<f64>,
    pub characteristic: Characteristic,
    pub kind: DiffKind,
}

impl DiffDistribution {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    /// Concatenation of two distributions of the same characteristic and kind.
    pub fn pooled(&self, other: &DiffDistribution) -> Result<DiffDistribution, StatsError> {
        if self.characteristic != other.characteristic || self.kind != other.kind {
            return Err(StatsError::CharacteristicMismatch);
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(DiffDistribution {
            values,
            ..other.clone()
        })
    }
}

/// Deltas between every unordered pair `{i, j}`, `i < j`, of distinct trees.
pub fn within_group(
    trees: &[TreeMetrics],
    ch: Characteristic,
) -> Result<DiffDistribution, StatsError> {
    if trees.len() < 2 {
        return Err(StatsError::TooFewTrees(trees.len()));
    }
    let mut values = Vec::with_capacity(trees.len() * (trees.len() - 1) / 2);
    for i in 0..trees.len() {
        for j in i + 1..trees.len() {
            values.push(ch.of(&delta_metrics(&trees[i], &trees[j])?));
        }
    }
    Ok(DiffDistribution {
        values,
        characteristic: ch,
        kind: DiffKind::Within,
    })
}

/// Deltas for every ordered pair `(a_i, b_j)`.
pub fn across_group(
    a: &[TreeMetrics],
    b: &[TreeMetrics],
    ch: Characteristic,
) -> Result<DiffDistribution, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    let mut values = Vec::with_capacity(a.len() * b.len());
    for t in a {
        for u in b {
            values.push(ch.of(&delta_metrics(t, u)?));
        }
    }
    Ok(DiffDistribution {
        values,
        characteristic: ch,
        kind: DiffKind::Across,
    })
}

/// Every pairwise delta between the trees of two groups, computed once.
///
/// Trees are indexed with group `a` first, then group `b`.
#[derive(Debug, Clone)]
pub struct GroupComparison {
    n_a: usize,
    n_b: usize,
    // upper[i][j - i - 1] = delta(tree i, tree j) for i < j
    upper: Vec<Vec<TreeDelta>>,
}

impl GroupComparison {
    pub fn new(a: &[TreeMetrics], b: &[TreeMetrics]) -> Result<Self, StatsError> {
        if a.len() < 2 {
            return Err(StatsError::TooFewTrees(a.len()));
        }
        if b.len() < 2 {
            return Err(StatsError::TooFewTrees(b.len()));
        }
        let all: Vec<&TreeMetrics> = a.iter().chain(b).collect();
        let upper = (0..all.len())
            .map(|i| {
                (i + 1..all.len())
                    .map(|j| delta_metrics(all[i], all[j]))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroupComparison {
            n_a: a.len(),
            n_b: b.len(),
            upper,
        })
    }

    pub fn group_sizes(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    /// `delta_x(tree i, tree j)` over combined indices; `i == j` is not a pair.
    pub fn value(&self, i: usize, j: usize, ch: Characteristic) -> f64 {
        debug_assert_ne!(i, j);
        if i < j {
            ch.of(&self.upper[i][j - i - 1])
        } else {
            let v = ch.of(&self.upper[j][i - j - 1]);
            if ch.is_antisymmetric() {
                -v
            } else {
                v
            }
        }
    }

    fn within_range(&self, range: std::ops::Range<usize>, ch: Characteristic) -> Vec<f64> {
        let mut out = Vec::new();
        for i in range.clone() {
            for j in i + 1..range.end {
                out.push(self.value(i, j, ch));
            }
        }
        out
    }

    pub fn within_a(&self, ch: Characteristic) -> DiffDistribution {
        DiffDistribution {
            values: self.within_range(0..self.n_a, ch),
            characteristic: ch,
            kind: DiffKind::Within,
        }
    }

    pub fn within_b(&self, ch: Characteristic) -> DiffDistribution {
        DiffDistribution {
            values: self.within_range(self.n_a..self.n_a + self.n_b, ch),
            characteristic: ch,
            kind: DiffKind::Within,
        }
    }

    /// Within-group differences of both configurations, pooled.
    pub fn within(&self, ch: Characteristic) -> DiffDistribution {
        let mut d = self.within_a(ch);
        d.values.extend(self.within_b(ch).values);
        d
    }

    pub fn across(&self, ch: Characteristic) -> DiffDistribution {
        let mut values = Vec::with_capacity(self.n_a * self.n_b);
        for i in 0..self.n_a {
            for j in 0..self.n_b {
                values.push(self.value(i, self.n_a + j, ch));
            }
        }
        DiffDistribution {
            values,
            characteristic: ch,
            kind: DiffKind::Across,
        }
    }
}

/// Grand mean of a scalar characteristic over every node of every tree.
/// `None` for the semantic characteristic, which has no per-node scalar.
pub fn group_mean(trees: &[TreeMetrics], ch: Characteristic) -> Option<f64> {
    let pick: fn(&crate::metrics::NodeMetrics) -> f64 = match ch {
        Characteristic::Pop => |m| m.pop,
        Characteristic::Div => |m| m.div,
        Characteristic::Sem => return None,
    };
    let (sum, n) = trees
        .iter()
        .flat_map(|t| t.nodes.values())
        .fold((0.0, 0usize), |(s, n), m| (s + pick(m), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// True iff both bounds are strictly negative or both strictly positive.
pub fn significance(lower: f64, upper: f64) -> Result<bool, StatsError> {
    if lower > upper {
        return Err(StatsError::InvertedInterval(lower, upper));
    }
    Ok(upper < 0.0 || lower > 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub characteristic: Characteristic,
    pub mean_within: f64,
    pub mean_across: f64,
    /// Mean of the bootstrap effect samples.
    pub mean_effect: f64,
    pub ci95: (f64, f64),
    pub ci99: (f64, f64),
    pub within_ci95: (f64, f64),
    pub across_ci95: (f64, f64),
    pub significant95: bool,
    pub significant99: bool,
    pub n_resamples: usize,
    pub resampling: Resampling,
    pub method: CiMethod,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_rule() {
        assert!(significance(0.34, 1.33).unwrap());
        assert!(!significance(-0.16, 0.17).unwrap());
        assert!(significance(2.68, 3.05).unwrap());
        assert!(!significance(-0.86, 0.28).unwrap());
        assert!(!significance(0.0, 0.5).unwrap());
        assert!(!significance(-0.5, 0.0).unwrap());
        assert!(significance(-0.05, -0.02).unwrap());
        assert!(!significance(0.0, 0.0).unwrap());
        assert_eq!(
            significance(1.0, 0.0),
            Err(StatsError::InvertedInterval(1.0, 0.0))
        );
    }

    #[test]
    fn characteristic_parse() {
        for ch in Characteristic::ALL {
            assert_eq!(ch.name().parse::<Characteristic>().unwrap(), ch);
        }
        assert!("views".parse::<Characteristic>().is_err());
    }

    #[test]
    fn pooled_requires_matching_kind() {
        let w = DiffDistribution {
            values: vec![1.0],
            characteristic: Characteristic::Pop,
            kind: DiffKind::Within,
        };
        let a = DiffDistribution {
            kind: DiffKind::Across,
            ..w.clone()
        };
        assert_eq!(w.pooled(&w).unwrap().values, vec![1.0, 1.0]);
        assert!(w.pooled(&a).is_err());
    }
}
