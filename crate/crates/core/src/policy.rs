//! Page-turn trigger policies.
//!
//! * Halfway: turn once the reading position has been at least
//!   `turn_fraction` into the last system for `confirm_count` consecutive
//!   accepted positions.
//! * Tempo: fit a reading velocity over a trailing window and turn once the
//!   projected time to the end of the page drops under `lead_time_sec`, while
//!   in the last system.

use alloc::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::filter::ReadingPosition;
use crate::layout::PageLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Halfway,
    Tempo,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Halfway => "halfway",
            PolicyKind::Tempo => "tempo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub turn_fraction: f64,
    pub confirm_count: u32,
    pub window_sec: f64,
    pub min_samples: usize,
    /// Velocities (page fraction per second) at or below this count as stalled.
    pub min_velocity: f64,
    pub lead_time_sec: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Halfway,
            turn_fraction: 0.5,
            confirm_count: 3,
            window_sec: 3.0,
            min_samples: 5,
            min_velocity: 1e-4,
            lead_time_sec: 1.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.turn_fraction > 0.0 && self.turn_fraction <= 1.0) {
            return Err("turn_fraction must be in (0, 1]");
        }
        if self.confirm_count < 1 {
            return Err("confirm_count must be >= 1");
        }
        if !(self.lead_time_sec > 0.0) {
            return Err("lead_time_sec must be > 0");
        }
        if !(self.window_sec > 0.0) {
            return Err("window_sec must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TurnDecision {
    Hold,
    Turn(ReadingPosition),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyState {
    pub turned: bool,
    pub streak: u32,
    /// `(t, frac_page)` samples inside the trailing window.
    pub history: VecDeque<(f64, f64)>,
}

/// Least-squares slope of `frac_page` over `t` for the samples within
/// `window_sec` of the newest one.
pub fn tempo_estimate<'a>(history: impl IntoIterator<Item = &'a (f64, f64)>, cfg: &PolicyConfig) -> Option<f64> {
    let samples: alloc::vec::Vec<(f64, f64)> = history.into_iter().copied().collect();
    let newest = samples.last()?.0;
    let window: alloc::vec::Vec<(f64, f64)> =
        samples.into_iter().filter(|&(t, _)| t >= newest - cfg.window_sec).collect();
    if window.len() < cfg.min_samples.max(2) {
        return None;
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_f = window.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, f) in &window {
        sxy += (t - mean_t) * (f - mean_f);
        sxx += (t - mean_t) * (t - mean_t);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    (slope > cfg.min_velocity).then_some(slope)
}

/// Projected seconds until the end of the page, if a velocity is available.
pub fn time_to_page_end(frac_page: f64, velocity: Option<f64>) -> Option<f64> {
    velocity.map(|v| (1.0 - frac_page) / v)
}

impl PolicyState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(self, pos: &ReadingPosition, layout: &PageLayout, cfg: &PolicyConfig) -> (Self, TurnDecision) {
        match cfg.kind {
            PolicyKind::Halfway => self.halfway_step(pos, layout, cfg),
            PolicyKind::Tempo => self.tempo_step(pos, layout, cfg),
        }
    }

    pub fn halfway_step(mut self, pos: &ReadingPosition, layout: &PageLayout, cfg: &PolicyConfig) -> (Self, TurnDecision) {
        let in_region = pos.system_index == layout.last_index() && pos.frac_in_system >= cfg.turn_fraction;
        self.streak = if in_region { self.streak.saturating_add(1) } else { 0 };
        if self.streak >= cfg.confirm_count && !self.turned {
            self.turned = true;
            return (self, TurnDecision::Turn(*pos));
        }
        (self, TurnDecision::Hold)
    }

    pub fn tempo_step(mut self, pos: &ReadingPosition, layout: &PageLayout, cfg: &PolicyConfig) -> (Self, TurnDecision) {
        match self.history.back_mut() {
            // keep timestamps strictly increasing; a repeated time replaces the sample
            Some(last) if pos.t <= last.0 => *last = (last.0, pos.frac_page),
            _ => self.history.push_back((pos.t, pos.frac_page)),
        }
        while self.history.front().is_some_and(|&(t, _)| t < pos.t - cfg.window_sec) {
            self.history.pop_front();
        }
        let eta = time_to_page_end(pos.frac_page, tempo_estimate(&self.history, cfg));
        let fire = !self.turned
            && pos.system_index == layout.last_index()
            && eta.is_some_and(|eta| eta <= cfg.lead_time_sec);
        if fire {
            self.turned = true;
            return (self, TurnDecision::Turn(*pos));
        }
        (self, TurnDecision::Hold)
    }
}
