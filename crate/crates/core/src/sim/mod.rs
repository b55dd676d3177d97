//! A deterministic synthetic recommendation platform.
//!
//! The scoring rule is deliberately simple and every audited behavior is a
//! parameter: popularity pull, recency pull toward the current video, pull
//! toward the watch history, depth decay of popularity, per-account-mode
//! noise, a watch-time threshold for influence, and an optional penalty for
//! sessions that load videos without clicking.

mod session;
mod world;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use session::{recommend, PuppetSession, WatchEvent};
pub use world::{SimWorld, WorldEpoch, WorldParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("unknown video {0:?}")]
    UnknownVideo(String),
    #[error("invalid world parameters: {0}")]
    InvalidParams(String),
    #[error("cookie-only sessions keep no server-side history to clear")]
    ClearUnsupported,
    #[error("requested {requested} recommendations from a catalog of {available}")]
    TooManyRequested { requested: usize, available: usize },
}

/// How a sock-puppet presents itself to the platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountMode {
    /// Logged into a fresh account.
    Full,
    /// Logged out, browser cookies kept.
    Cookies,
    /// Logged in, history cleared before the crawl.
    Clear,
}

impl AccountMode {
    pub const ALL: [AccountMode; 3] = [AccountMode::Full, AccountMode::Cookies, AccountMode::Clear];
}

/// How a crawler moves to the next video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionMode {
    /// Loads the video URL directly.
    Get,
    /// Clicks the recommendation.
    #[default]
    Click,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasParams {
    pub popularity_weight: f64,
    /// Pull toward the topic of the video being watched.
    pub recency_weight: f64,
    /// Pull toward the mean topic of all influencing watches.
    pub history_weight: f64,
    /// The popularity term is scaled by `depth_decay^depth`.
    pub depth_decay: f64,
    /// Standard deviation of Gaussian score noise per account mode.
    pub account_mode_noise: BTreeMap<AccountMode, f64>,
    /// `(mu, sigma)` of log view counts.
    pub views_lognormal: (f64, f64),
    /// Fraction of the popularity term withheld from `get` sessions.
    pub get_penalty: f64,
}

impl Default for BiasParams {
    fn default() -> Self {
        BiasParams {
            popularity_weight: 1.0,
            recency_weight: 1.0,
            history_weight: 0.5,
            depth_decay: 1.0,
            account_mode_noise: AccountMode::ALL.into_iter().map(|m| (m, 0.15)).collect(),
            views_lognormal: (11.0, 2.0),
            get_penalty: 0.0,
        }
    }
}

impl BiasParams {
    pub fn noise(&self, mode: AccountMode) -> f64 {
        self.account_mode_noise.get(&mode).copied().unwrap_or(0.0)
    }

    /// All score noise set to `scale`.
    pub fn with_noise(mut self, scale: f64) -> Self {
        self.account_mode_noise = AccountMode::ALL.into_iter().map(|m| (m, scale)).collect();
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let weights = [
            self.popularity_weight,
            self.recency_weight,
            self.history_weight,
        ];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SimError::InvalidParams(
                "bias weights must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.depth_decay) {
            return Err(SimError::InvalidParams(
                "depth_decay must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.get_penalty) {
            return Err(SimError::InvalidParams(
                "get_penalty must be in [0, 1]".into(),
            ));
        }
        if self
            .account_mode_noise
            .values()
            .any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(SimError::InvalidParams(
                "noise scales must be finite and non-negative".into(),
            ));
        }
        let (mu, sigma) = self.views_lognormal;
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(SimError::InvalidParams(
                "views_lognormal needs finite mu and sigma > 0".into(),
            ));
        }
        Ok(())
    }
}

/// World with default shape parameters and the given bias and sizes.
pub fn new_world(
    bias: BiasParams,
    seed: u64,
    catalog_size: usize,
    n_channels: usize,
) -> Result<SimWorld, SimError> {
    let params = WorldParams {
        catalog_size,
        n_channels,
        bias,
        ..WorldParams::default()
    };
    SimWorld::new(&params, seed)
}

#[cfg(test)]
mod tests;
