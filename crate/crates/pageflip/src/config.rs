//! Flat TOML overrides. Keys carry the same names as the config fields they
//! replace, e.g.
//!
//! ```toml
//! window = 41
//! turn_fraction = 0.6
//! blackout_sec = 1.5
//! ```

use std::path::Path;

use pageflip_core::filter::FilterConfig;
use pageflip_core::layout::LayoutConfig;
use pageflip_core::policy::{PolicyConfig, PolicyKind};
use pageflip_core::session::SessionConfig;
use serde::Deserialize;

use crate::Error;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    // layout
    pub window: Option<usize>,
    pub offset: Option<f64>,
    pub line_threshold_rel: Option<f64>,
    pub staff_gap_factor: Option<f64>,
    pub staves_per_system: Option<usize>,
    pub system_gap_factor: Option<f64>,
    pub col_threshold_rel: Option<f64>,
    // filter
    pub backward_conf: Option<f64>,
    pub backtrack_eps: Option<f64>,
    pub max_snap: Option<f64>,
    pub min_conf: Option<f64>,
    // policy
    pub kind: Option<PolicyKind>,
    pub turn_fraction: Option<f64>,
    pub confirm_count: Option<u32>,
    pub window_sec: Option<f64>,
    pub min_samples: Option<usize>,
    pub min_velocity: Option<f64>,
    pub lead_time_sec: Option<f64>,
    // session
    pub rate_hz: Option<f64>,
    pub blackout_sec: Option<f64>,
    pub device_timeout_ms: Option<u64>,
}

macro_rules! apply {
    ($src:expr, $dst:expr, $($field:ident),+) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, Error> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn layout(&self, mut cfg: LayoutConfig) -> LayoutConfig {
        apply!(self, cfg, window, offset, line_threshold_rel, staff_gap_factor, staves_per_system, system_gap_factor, col_threshold_rel);
        cfg
    }

    pub fn filter(&self, mut cfg: FilterConfig) -> FilterConfig {
        apply!(self, cfg, backward_conf, backtrack_eps, min_conf);
        if self.max_snap.is_some() {
            cfg.max_snap = self.max_snap;
        }
        cfg
    }

    pub fn policy(&self, mut cfg: PolicyConfig) -> PolicyConfig {
        apply!(self, cfg, kind, turn_fraction, confirm_count, window_sec, min_samples, min_velocity, lead_time_sec);
        cfg
    }

    pub fn session(&self, mut cfg: SessionConfig) -> SessionConfig {
        apply!(self, cfg, rate_hz, blackout_sec, device_timeout_ms);
        cfg.filter = self.filter(cfg.filter);
        cfg.policy = self.policy(cfg.policy);
        cfg
    }
}
