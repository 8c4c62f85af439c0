use serde::Serialize;

use crate::error::{Error, Result};

/// Randomized separated-set search schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Random directions tried per separation level.
    pub max_directions: usize,
    pub levels: usize,
    /// First separation threshold is `delta_init / sqrt(r)`.
    pub delta_init: f64,
    /// Threshold multiplier between levels.
    pub delta_decay: f64,
    /// Required `min(|L|, |R|) / n`. `None` uses `min(eta * spread / 32, 1/8)`.
    pub target_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_directions: 32,
            levels: 8,
            delta_init: 0.25,
            delta_decay: 0.5,
            target_fraction: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedderConfig {
    pub eta: f64,
    pub dense_ball_radius: f64,
    pub dense_ball_mass: f64,
    pub outer_ball_radius: f64,
    pub outer_ball_mass: f64,
    /// Projected-energy threshold per `|S|^2` separating the two projection cases.
    pub proj_split: f64,
    pub tcore_radius: f64,
    pub tcore_mass: f64,
    /// Inputs that are not exactly l2-squared are accepted down to this measured beta.
    pub beta_floor: f64,
    pub search: SearchConfig,
}

impl EmbedderConfig {
    pub fn new(eta: f64) -> Self {
        Self {
            eta,
            dense_ball_radius: 1.0 / 12.0,
            dense_ball_mass: 1.0 / 12.0,
            outer_ball_radius: 12.0 / 9.0,
            outer_ball_mass: 3.0 / 12.0,
            proj_split: eta / 600.0,
            tcore_radius: eta / 24.0,
            tcore_mass: 24.0 / 25.0,
            beta_floor: 0.5,
            search: SearchConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.search.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |what: &str, v: f64| Err(Error::InvalidInput(format!("{what} out of range: {v}")));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", self.eta);
        }
        for (name, v) in [
            ("dense_ball_radius", self.dense_ball_radius),
            ("outer_ball_radius", self.outer_ball_radius),
            ("proj_split", self.proj_split),
            ("tcore_radius", self.tcore_radius),
            ("delta_init", self.search.delta_init),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, v);
            }
        }
        for (name, v) in [
            ("dense_ball_mass", self.dense_ball_mass),
            ("outer_ball_mass", self.outer_ball_mass),
            ("tcore_mass", self.tcore_mass),
            ("beta_floor", self.beta_floor),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(name, v);
            }
        }
        if !(self.search.delta_decay > 0.0 && self.search.delta_decay < 1.0) {
            return bad("delta_decay", self.search.delta_decay);
        }
        if let Some(b) = self.search.target_fraction {
            if !(b > 0.0 && b < 0.5) {
                return bad("target_fraction", b);
            }
        }
        if self.search.max_directions == 0 || self.search.levels == 0 {
            return Err(Error::InvalidInput(
                "search needs at least one direction and level".into(),
            ));
        }
        Ok(())
    }
}
