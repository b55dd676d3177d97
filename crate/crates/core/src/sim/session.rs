use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::world::{cosine, gauss, SimWorld, WorldEpoch};
use super::{AccountMode, InteractionMode, SimError};
use crate::tree::VideoMeta;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatchEvent {
    pub video_id: String,
    pub watch_seconds: u64,
    /// Whether the watch passed the view threshold.
    pub influences: bool,
}

/// One sock-puppet's state on the platform.
///
/// Owned by a single crawler at a time.
#[derive(Debug, Clone)]
pub struct PuppetSession {
    account_mode: AccountMode,
    interaction_mode: InteractionMode,
    puppet_id: u64,
    history: Vec<WatchEvent>,
    influence_sum: Vec<f64>,
    influence_count: usize,
    rng: ChaCha8Rng,
}

impl PuppetSession {
    /// A fresh session whose noise stream is derived from the world seed and
    /// `puppet_id`.
    pub fn new(
        world: &SimWorld,
        account_mode: AccountMode,
        interaction_mode: InteractionMode,
        puppet_id: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(world.seed());
        rng.set_stream(puppet_id);
        PuppetSession {
            account_mode,
            interaction_mode,
            puppet_id,
            history: Vec::new(),
            influence_sum: vec![0.0; world.params().topic_dim],
            influence_count: 0,
            rng,
        }
    }

    pub fn account_mode(&self) -> AccountMode {
        self.account_mode
    }

    pub fn interaction_mode(&self) -> InteractionMode {
        self.interaction_mode
    }

    pub fn puppet_id(&self) -> u64 {
        self.puppet_id
    }

    pub fn history(&self) -> &[WatchEvent] {
        &self.history
    }

    /// Number of watches that influence recommendations.
    pub fn influence_count(&self) -> usize {
        self.influence_count
    }

    /// Records a watch. Returns whether it reached the view threshold and so
    /// will influence future recommendations.
    pub fn register_watch(
        &mut self,
        world: &SimWorld,
        video_id: &str,
        watch_seconds: u64,
    ) -> Result<bool, SimError> {
        let index = world.index_of(video_id)?;
        let influences = watch_seconds >= world.view_threshold_s();
        if influences {
            for (s, t) in self.influence_sum.iter_mut().zip(world.topic(index)) {
                *s += t;
            }
            self.influence_count += 1;
        }
        self.history.push(WatchEvent {
            video_id: video_id.to_string(),
            watch_seconds,
            influences,
        });
        Ok(influences)
    }

    /// Empties the server-side watch history.
    pub fn clear_history(&mut self) -> Result<(), SimError> {
        if self.account_mode == AccountMode::Cookies {
            return Err(SimError::ClearUnsupported);
        }
        self.history.clear();
        self.influence_sum.iter_mut().for_each(|s| *s = 0.0);
        self.influence_count = 0;
        Ok(())
    }

    /// Mean topic of influencing watches, if any.
    pub fn history_topic(&self) -> Option<Vec<f64>> {
        (self.influence_count > 0).then(|| {
            let n = self.influence_count as f64;
            self.influence_sum.iter().map(|s| s / n).collect()
        })
    }
}

/// Top-`n` recommendations for `current` at traversal `depth`.
///
/// Each candidate `c != current` scores
///
/// ```text
/// pop_w * decay^depth * z(log views(c)) + rec_w * cos(c, current)
///   + hist_w * cos(c, history mean) + noise
/// ```
///
/// where noise is Gaussian with the session's account-mode scale, drawn from
/// the session stream. Ties break by ascending video id.
pub fn recommend(
    world: &WorldEpoch<'_>,
    session: &mut PuppetSession,
    current: &str,
    depth: usize,
    n: usize,
) -> Result<Vec<VideoMeta>, SimError> {
    let w = world.world;
    let cur = w.index_of(current)?;
    if n >= w.len() {
        return Err(SimError::TooManyRequested {
            requested: n,
            available: w.len() - 1,
        });
    }
    let bias = w.bias();
    let mut pop_w = bias.popularity_weight * bias.depth_decay.powi(depth as i32);
    if session.interaction_mode == InteractionMode::Get {
        pop_w *= 1.0 - bias.get_penalty;
    }
    let noise = bias.noise(session.account_mode);
    let history = session.history_topic();
    let current_topic = w.topic(cur);

    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(w.len() - 1);
    for c in 0..w.len() {
        let jitter = if noise > 0.0 {
            noise * gauss(&mut session.rng)
        } else {
            0.0
        };
        if c == cur {
            continue;
        }
        let topic = w.topic(c);
        let mut score =
            pop_w * world.zlog(c) + bias.recency_weight * cosine(topic, current_topic) + jitter;
        if let Some(h) = &history {
            score += bias.history_weight * cosine(topic, h);
        }
        scored.push((score, c));
    }
    // Catalog indices are in id order, so index order breaks ties by id.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(_, c)| world.observe(c))
        .collect())
}
