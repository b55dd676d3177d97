use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BiasParams, SimError};
use crate::tree::VideoMeta;

/// Everything needed to regenerate a world, apart from its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    pub catalog_size: usize,
    pub n_channels: usize,
    pub topic_dim: usize,
    /// Inclusive range of video durations in seconds.
    pub duration_s: (u64, u64),
    /// Channel sizes follow `rank^-s`.
    pub channel_zipf_s: f64,
    /// Scale of a video's topic scatter around its channel's topic.
    pub channel_topic_spread: f64,
    /// Share of log-view variance explained by the channel, in `[0, 1]`.
    pub channel_view_share: f64,
    pub vocab_size: usize,
    pub title_words: usize,
    pub description_words: usize,
    /// How strongly word choice follows a video's topic.
    pub word_focus: f64,
    /// Minimum watch seconds for a watch to influence recommendations.
    pub view_threshold_s: u64,
    /// Per-epoch log-normal jitter of view counts.
    pub epoch_view_drift: f64,
    /// Recommendation list length the catalog must support (10x rule).
    pub n_rec: usize,
    pub bias: BiasParams,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            catalog_size: 2000,
            n_channels: 80,
            topic_dim: 16,
            duration_s: (600, 3600),
            channel_zipf_s: 1.0,
            channel_topic_spread: 0.6,
            channel_view_share: 0.6,
            vocab_size: 600,
            title_words: 5,
            description_words: 25,
            word_focus: 8.0,
            view_threshold_s: 30,
            epoch_view_drift: 0.02,
            n_rec: crate::tree::DEFAULT_N_REC,
            bias: BiasParams::default(),
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |what: &str| Err(SimError::InvalidParams(what.to_string()));
        if self.n_rec == 0 || self.catalog_size < 10 * self.n_rec {
            return invalid("catalog_size must be at least 10 x n_rec");
        }
        if self.n_channels < 2 {
            return invalid("n_channels must be at least 2");
        }
        if self.topic_dim == 0 || self.vocab_size == 0 {
            return invalid("topic_dim and vocab_size must be positive");
        }
        if self.duration_s.0 > self.duration_s.1 {
            return invalid("duration_s range is inverted");
        }
        if !(0.0..=1.0).contains(&self.channel_view_share) {
            return invalid("channel_view_share must be in [0, 1]");
        }
        let finite = [
            self.channel_zipf_s,
            self.channel_topic_spread,
            self.word_focus,
            self.epoch_view_drift,
        ];
        if finite.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return invalid("shape parameters must be finite and non-negative");
        }
        self.bias.validate()
    }
}

/// A synthetic platform: catalog, channels and bias parameters.
///
/// Immutable once generated; regenerate it from `(params, seed)`.
#[derive(Debug, Clone)]
pub struct SimWorld {
    params: WorldParams,
    seed: u64,
    channels: Vec<String>,
    catalog: Vec<VideoMeta>,
    /// Row-major `catalog_size x topic_dim`.
    topics: Vec<f64>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub(crate) fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "kr", "pl", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Pseudo-words that end in a vowel, so no lemmatizer suffix rule applies.
fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut words = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.random_range(0..ONSETS.len())],
                    VOWELS[rng.random_range(0..VOWELS.len())]
                )
            })
            .collect();
        if !crate::text::is_stopword(&word) && words.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

impl SimWorld {
    pub fn new(params: &WorldParams, seed: u64) -> Result<SimWorld, SimError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = params.topic_dim;
        let width = params.catalog_size.to_string().len().max(5);

        let channels: Vec<String> = (0..params.n_channels)
            .map(|k| format!("ch{k:03}"))
            .collect();
        let centers: Vec<Vec<f64>> = (0..params.n_channels)
            .map(|_| unit_gaussian(&mut rng, dim))
            .collect();
        let channel_pop: Vec<f64> = (0..params.n_channels)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let sizes = WeightedIndex::new(
            (0..params.n_channels).map(|k| ((k + 1) as f64).powf(-params.channel_zipf_s)),
        )
        .map_err(|e| SimError::InvalidParams(e.to_string()))?;

        let words = vocabulary(&mut rng, params.vocab_size);
        let word_dirs: Vec<Vec<f64>> = (0..words.len())
            .map(|_| unit_gaussian(&mut rng, dim))
            .collect();

        let (mu, sigma) = params.bias.views_lognormal;
        let share = params.channel_view_share;
        let noise_scale = params.channel_topic_spread / (dim as f64).sqrt();
        let mut catalog = Vec::with_capacity(params.catalog_size);
        let mut topics = Vec::with_capacity(params.catalog_size * dim);
        for v in 0..params.catalog_size {
            let ch = sizes.sample(&mut rng);
            let mut topic: Vec<f64> = centers[ch]
                .iter()
                .map(|c| c + noise_scale * gauss(&mut rng))
                .collect();
            normalize(&mut topic);
            let eps: f64 = StandardNormal.sample(&mut rng);
            let z = share.sqrt() * channel_pop[ch] + (1.0 - share).sqrt() * eps;
            let views = (mu + sigma * z).exp().round() as u64;
            let duration_s = rng.random_range(params.duration_s.0..=params.duration_s.1);

            let weights = word_dirs
                .iter()
                .map(|d| (params.word_focus * dot(&topic, d)).exp());
            let pick =
                WeightedIndex::new(weights).map_err(|e| SimError::InvalidParams(e.to_string()))?;
            let mut draw = |n: usize| {
                (0..n)
                    .map(|_| words[pick.sample(&mut rng)].as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let title = draw(params.title_words);
            let body = draw(params.description_words);
            let video_id = format!("v{v:0width$}");
            let description =
                format!("{body}. Subscribe for more https://sim.example/watch/{video_id}");

            topics.extend_from_slice(&topic);
            catalog.push(VideoMeta {
                video_id,
                channel_id: channels[ch].clone(),
                views,
                duration_s,
                title,
                description,
                topic: Some(topic),
            });
        }
        Ok(SimWorld {
            params: params.clone(),
            seed,
            channels,
            catalog,
            topics,
        })
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn bias(&self) -> &BiasParams {
        &self.params.bias
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn catalog(&self) -> &[VideoMeta] {
        &self.catalog
    }

    pub fn view_threshold_s(&self) -> u64 {
        self.params.view_threshold_s
    }

    pub fn len(&self) -> usize {
        self.catalog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.catalog.is_empty()
    }

    /// Catalog index of `video_id`. Ids are zero-padded in index order.
    pub fn index_of(&self, video_id: &str) -> Result<usize, SimError> {
        self.catalog
            .binary_search_by(|v| v.video_id.as_str().cmp(video_id))
            .map_err(|_| SimError::UnknownVideo(video_id.to_string()))
    }

    pub fn video(&self, video_id: &str) -> Result<&VideoMeta, SimError> {
        Ok(&self.catalog[self.index_of(video_id)?])
    }

    pub fn topic(&self, index: usize) -> &[f64] {
        let dim = self.params.topic_dim;
        &self.topics[index * dim..(index + 1) * dim]
    }

    /// Copy of this world with one video's base view count replaced.
    pub fn with_views(&self, video_id: &str, views: u64) -> Result<SimWorld, SimError> {
        let mut out = self.clone();
        let i = out.index_of(video_id)?;
        out.catalog[i].views = views;
        Ok(out)
    }

    /// Copy of this world with different bias parameters and the same catalog.
    pub fn with_bias(&self, bias: BiasParams) -> Result<SimWorld, SimError> {
        bias.validate()?;
        let mut out = self.clone();
        out.params.bias = bias;
        Ok(out)
    }

    /// The `k` videos whose topics are closest to `anchor`'s, excluding
    /// `anchor`, ties by id.
    pub fn topic_neighbors(&self, anchor: &str, k: usize) -> Result<Vec<String>, SimError> {
        let a = self.index_of(anchor)?;
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&i| i != a)
            .map(|i| (dot(self.topic(a), self.topic(i)), i))
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(_, i)| self.catalog[i].video_id.clone())
            .collect())
    }

    /// The video at view-count quantile `q` in `[0, 1]` (0 = least viewed).
    pub fn video_at_view_quantile(&self, q: f64) -> &VideoMeta {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&x, &y| {
            self.catalog[x]
                .views
                .cmp(&self.catalog[y].views)
                .then(x.cmp(&y))
        });
        let at = ((self.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
        &self.catalog[order[at]]
    }

    /// Platform state at `epoch`: view counts with epoch jitter and their
    /// standardized logs.
    pub fn at_epoch(&self, epoch: u64) -> WorldEpoch<'_> {
        let drift = self.params.epoch_view_drift;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_e90c_u64);
        rng.set_stream(epoch);
        let views: Vec<u64> = self
            .catalog
            .iter()
            .map(|v| {
                if drift == 0.0 || epoch == 0 {
                    v.views
                } else {
                    let j: f64 = StandardNormal.sample(&mut rng);
                    (v.views as f64 * (drift * j).exp()).round() as u64
                }
            })
            .collect();
        let logs: Vec<f64> = views.iter().map(|&v| (v as f64).ln_1p()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let sd = (logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let zlog = logs
            .iter()
            .map(|x| if sd > 0.0 { (x - mean) / sd } else { 0.0 })
            .collect();
        WorldEpoch {
            world: self,
            epoch,
            views,
            zlog,
        }
    }
}

/// Read-only view of a world pinned to one epoch.
#[derive(Debug, Clone)]
pub struct WorldEpoch<'w> {
    pub world: &'w SimWorld,
    pub epoch: u64,
    views: Vec<u64>,
    zlog: Vec<f64>,
}

impl WorldEpoch<'_> {
    pub fn views(&self, index: usize) -> u64 {
        self.views[index]
    }

    /// Standard score of log views over the catalog at this epoch.
    pub fn zlog(&self, index: usize) -> f64 {
        self.zlog[index]
    }

    /// Catalog entry as observed at this epoch.
    pub fn observe(&self, index: usize) -> VideoMeta {
        let mut v = self.world.catalog[index].observed();
        v.views = self.views[index];
        v
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}
