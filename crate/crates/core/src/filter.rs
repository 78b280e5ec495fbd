//! Reading-order constraints on raw tracker predictions.
//!
//! The filter is a pure transition `(state, prediction) -> (state, outcome)`.
//! A page starts in its first system at the left edge, moves only between
//! adjacent systems, and only goes backwards on confident predictions.

use serde::{Deserialize, Serialize};

use crate::layout::PageLayout;

/// One tracker output: bounding-box center and size in page pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerPrediction {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
    pub conf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingPosition {
    #[serde(rename = "page")]
    pub page_index: usize,
    #[serde(rename = "system")]
    pub system_index: usize,
    pub x: f64,
    pub frac_in_system: f64,
    pub frac_page: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Minimum confidence for a backward move.
    pub backward_conf: f64,
    /// Within-system regression (px) tolerated before a step counts as backward.
    pub backtrack_eps: f64,
    /// Snap radius in px; `None` uses half the page's median system height.
    pub max_snap: Option<f64>,
    /// General confidence gate, 0 disables it.
    pub min_conf: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { backward_conf: 0.5, backtrack_eps: 10.0, max_snap: None, min_conf: 0.0 }
    }
}

impl FilterConfig {
    pub fn snap_radius(&self, layout: &PageLayout) -> f64 {
        self.max_snap.unwrap_or_else(|| layout.median_system_height() / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    OffSystem,
    NonAdjacentJump,
    LowConfidenceBackward,
    LowConfidence,
    NonMonotonicTime,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::OffSystem => "off_system",
            RejectReason::NonAdjacentJump => "non_adjacent_jump",
            RejectReason::LowConfidenceBackward => "low_confidence_backward",
            RejectReason::LowConfidence => "low_confidence",
            RejectReason::NonMonotonicTime => "non_monotonic_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterOutcome {
    Accept(ReadingPosition),
    Reject(RejectReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub page_index: usize,
    pub current_system: usize,
    pub current_x: f64,
    pub accepted_count: u64,
    pub rejected_count: u64,
    /// Timestamp of the last accepted prediction.
    pub last_t: Option<f64>,
}

/// Maps a bbox center to `(system_index, x)`.
///
/// A center inside a system's rows selects it. Otherwise the system with the
/// nearest center is taken if `v` is within the snap radius of its rows.
/// `x` is clamped to the system's ink extent.
pub fn snap_to_system(pred: &TrackerPrediction, layout: &PageLayout, cfg: &FilterConfig) -> Option<(usize, f64)> {
    let system = match layout.systems.iter().find(|s| s.contains_y(pred.v)) {
        Some(s) => s,
        None => {
            let nearest = layout
                .systems
                .iter()
                .min_by(|a, b| (a.y_center() - pred.v).abs().total_cmp(&(b.y_center() - pred.v).abs()))?;
            if nearest.y_distance(pred.v) > cfg.snap_radius(layout) {
                return None;
            }
            nearest
        }
    };
    let x = pred.u.clamp(system.x_left as f64, system.x_right as f64);
    Some((system.index, x))
}

/// Fraction of the system's ink extent covered at `x`.
pub fn fraction_in_system(system_index: usize, x: f64, layout: &PageLayout) -> f64 {
    let s = &layout.systems[system_index];
    let width = s.width();
    if width <= 0.0 {
        return 1.0;
    }
    ((x - s.x_left as f64) / width).clamp(0.0, 1.0)
}

/// Scalar progress through the page in reading order: all systems laid end
/// to end, weighted by their ink widths.
pub fn reading_fraction(system_index: usize, x: f64, layout: &PageLayout) -> f64 {
    let total = layout.total_width();
    if total <= 0.0 {
        return if layout.systems.is_empty() { 0.0 } else { (system_index + 1) as f64 / layout.systems.len() as f64 };
    }
    let before: f64 = layout.systems[..system_index].iter().map(|s| s.width()).sum();
    let s = &layout.systems[system_index];
    ((before + (x - s.x_left as f64)) / total).clamp(0.0, 1.0)
}

/// Fresh state for a page: first system, top left.
pub fn reset_for_page(page_index: usize, layout: &PageLayout) -> FilterState {
    FilterState {
        page_index,
        current_system: 0,
        current_x: layout.systems[0].x_left as f64,
        accepted_count: 0,
        rejected_count: 0,
        last_t: None,
    }
}

impl FilterState {
    pub fn new(page_index: usize, layout: &PageLayout) -> Self {
        reset_for_page(page_index, layout)
    }

    fn reject(&self, reason: RejectReason) -> (FilterState, FilterOutcome) {
        let mut next = *self;
        next.rejected_count += 1;
        (next, FilterOutcome::Reject(reason))
    }

    pub fn step(
        &self,
        pred: &TrackerPrediction,
        layout: &PageLayout,
        cfg: &FilterConfig,
    ) -> (FilterState, FilterOutcome) {
        if self.last_t.is_some_and(|last| pred.t < last) {
            return self.reject(RejectReason::NonMonotonicTime);
        }
        let Some((system, x)) = snap_to_system(pred, layout, cfg) else {
            return self.reject(RejectReason::OffSystem);
        };
        if pred.conf < cfg.min_conf {
            return self.reject(RejectReason::LowConfidence);
        }
        if system.abs_diff(self.current_system) >= 2 {
            return self.reject(RejectReason::NonAdjacentJump);
        }
        let backward = system < self.current_system
            || (system == self.current_system && x < self.current_x - cfg.backtrack_eps);
        if backward && pred.conf < cfg.backward_conf {
            return self.reject(RejectReason::LowConfidenceBackward);
        }

        let position = ReadingPosition {
            page_index: self.page_index,
            system_index: system,
            x,
            frac_in_system: fraction_in_system(system, x, layout),
            frac_page: reading_fraction(system, x, layout),
            t: pred.t,
        };
        let next = FilterState {
            current_system: system,
            current_x: x,
            accepted_count: self.accepted_count + 1,
            last_t: Some(pred.t),
            ..*self
        };
        (next, FilterOutcome::Accept(position))
    }
}

/// Free-function form of [`FilterState::step`].
pub fn filter_step(
    state: &FilterState,
    pred: &TrackerPrediction,
    layout: &PageLayout,
    cfg: &FilterConfig,
) -> (FilterState, FilterOutcome) {
    state.step(pred, layout, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::System;
    use alloc::vec;
    use alloc::vec::Vec;

    /// Systems of height 120 spaced `pitch` apart, ink from x=100 to x=900.
    fn layout(n: usize, pitch: usize) -> PageLayout {
        let systems = (0..n)
            .map(|i| System {
                index: i,
                y_top: 100 + i * pitch,
                y_bottom: 220 + i * pitch,
                x_left: 100,
                x_right: 900,
                x_fallback: false,
                band_count: 10,
            })
            .collect();
        PageLayout { page_index: 0, width: 1000, height: 200 + n * pitch, systems, warnings: vec![] }
    }

    fn pred(t: f64, u: f64, v: f64, conf: f64) -> TrackerPrediction {
        TrackerPrediction { t, u, v, w: 20.0, h: 100.0, conf }
    }

    fn state_at(layout: &PageLayout, system: usize, x: f64) -> FilterState {
        FilterState { current_system: system, current_x: x, ..reset_for_page(0, layout) }
    }

    fn center(layout: &PageLayout, i: usize) -> f64 {
        layout.systems[i].y_center()
    }

    #[test]
    fn snapping() {
        let l = layout(2, 420);
        let cfg = FilterConfig { max_snap: Some(40.0), ..Default::default() };
        assert_eq!(snap_to_system(&pred(0.0, 500.0, center(&l, 1), 1.0), &l, &cfg), Some((1, 500.0)));
        assert_eq!(snap_to_system(&pred(0.0, 500.0, 95.0, 1.0), &l, &cfg), Some((0, 500.0)));
        // systems 300 px apart (220..520 gap); midpoint is 150 px from either
        assert_eq!(snap_to_system(&pred(0.0, 500.0, 370.0, 1.0), &l, &cfg), None);
        // x is clamped into the ink extent
        assert_eq!(snap_to_system(&pred(0.0, 5.0, 150.0, 1.0), &l, &cfg), Some((0, 100.0)));
    }

    #[test]
    fn default_snap_radius_is_half_median_height() {
        let l = layout(3, 300);
        assert_eq!(FilterConfig::default().snap_radius(&l), 60.0);
    }

    #[test]
    fn reading_fraction_examples() {
        let l = layout(2, 300);
        assert_eq!(reading_fraction(0, 100.0, &l), 0.0);
        assert_eq!(reading_fraction(1, 900.0, &l), 1.0);
        assert_eq!(reading_fraction(1, 500.0, &l), 0.75);
    }

    #[test]
    fn reset_starts_top_left() {
        let mut l = layout(3, 300);
        let s = reset_for_page(4, &l);
        assert_eq!((s.page_index, s.current_system, s.current_x), (4, 0, 100.0));
        l.systems[0].x_left = 0;
        l.systems[0].x_fallback = true;
        assert_eq!(reset_for_page(0, &l).current_x, 0.0);
        let single = layout(1, 300);
        assert_eq!(single.last_index(), reset_for_page(0, &single).current_system);
    }

    #[test]
    fn non_adjacent_jump_is_rejected() {
        let l = layout(5, 250);
        let s = state_at(&l, 2, 500.0);
        let (next, out) = s.step(&pred(1.0, 300.0, center(&l, 4), 0.9), &l, &FilterConfig::default());
        assert_eq!(out, FilterOutcome::Reject(RejectReason::NonAdjacentJump));
        assert_eq!(next.current_system, 2);
        assert_eq!(next.rejected_count, 1);
    }

    #[test]
    fn backward_needs_confidence() {
        let l = layout(4, 250);
        let s = state_at(&l, 2, 500.0);
        let cfg = FilterConfig::default();
        let (_, low) = s.step(&pred(1.0, 300.0, center(&l, 1), 0.4), &l, &cfg);
        assert_eq!(low, FilterOutcome::Reject(RejectReason::LowConfidenceBackward));
        let (next, high) = s.step(&pred(1.0, 300.0, center(&l, 1), 0.6), &l, &cfg);
        assert!(matches!(high, FilterOutcome::Accept(p) if p.system_index == 1));
        assert_eq!(next.current_system, 1);
    }

    #[test]
    fn small_regression_is_not_backward() {
        let l = layout(2, 300);
        let s = state_at(&l, 0, 100.0);
        let cfg = FilterConfig::default();
        let (_, out) = s.step(&pred(1.0, 95.0, center(&l, 0), 0.1), &l, &cfg);
        // u=95 clamps to x_left=100, so this is not even a regression
        assert!(matches!(out, FilterOutcome::Accept(_)));
        let s = state_at(&l, 0, 300.0);
        let (_, within) = s.step(&pred(1.0, 292.0, center(&l, 0), 0.1), &l, &cfg);
        assert!(matches!(within, FilterOutcome::Accept(_)));
        let (_, beyond) = s.step(&pred(1.0, 280.0, center(&l, 0), 0.1), &l, &cfg);
        assert_eq!(beyond, FilterOutcome::Reject(RejectReason::LowConfidenceBackward));
    }

    #[test]
    fn time_must_not_go_backwards() {
        let l = layout(2, 300);
        let cfg = FilterConfig::default();
        let s = reset_for_page(0, &l);
        let (s, _) = s.step(&pred(2.0, 200.0, center(&l, 0), 0.9), &l, &cfg);
        let (s2, out) = s.step(&pred(1.5, 210.0, center(&l, 0), 0.9), &l, &cfg);
        assert_eq!(out, FilterOutcome::Reject(RejectReason::NonMonotonicTime));
        assert_eq!(s2.last_t, Some(2.0));
        // equal timestamps are allowed
        let (_, same) = s.step(&pred(2.0, 210.0, center(&l, 0), 0.9), &l, &cfg);
        assert!(matches!(same, FilterOutcome::Accept(_)));
    }

    #[test]
    fn general_gate_and_off_system() {
        let l = layout(2, 400);
        let s = reset_for_page(0, &l);
        let gated = FilterConfig { min_conf: 0.3, ..Default::default() };
        let (_, out) = s.step(&pred(0.0, 200.0, center(&l, 0), 0.2), &l, &gated);
        assert_eq!(out, FilterOutcome::Reject(RejectReason::LowConfidence));
        let (_, out) = s.step(&pred(0.0, 200.0, 370.0, 0.9), &l, &FilterConfig::default());
        assert_eq!(out, FilterOutcome::Reject(RejectReason::OffSystem));
    }

    #[test]
    fn reason_strings() {
        let all = [
            RejectReason::OffSystem,
            RejectReason::NonAdjacentJump,
            RejectReason::LowConfidenceBackward,
            RejectReason::LowConfidence,
            RejectReason::NonMonotonicTime,
        ];
        let names: Vec<&str> = all.iter().map(|r| r.as_str()).collect();
        assert_eq!(
            names,
            ["off_system", "non_adjacent_jump", "low_confidence_backward", "low_confidence", "non_monotonic_time"]
        );
    }
}
