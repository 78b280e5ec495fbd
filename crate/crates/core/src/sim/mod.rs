//! Stand-ins for the neural score follower.
//!
//! [`synth_trajectory`] produces a seeded stream of noisy predictions that
//! read through a sequence of pages at constant speed; [`oracle_turn_time`]
//! computes when an ideal reader crosses the turn point, by brute-force scan
//! of the analytic path. [`page`] renders synthetic score pages with known
//! geometry.

pub mod page;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::filter::TrackerPrediction;
use crate::layout::PageLayout;
use crate::policy::{PolicyConfig, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seconds_per_page: f64,
    pub rate_hz: f64,
    /// Gaussian sigma (px) added to the bbox center.
    pub noise_px: f64,
    pub outlier_prob: f64,
    pub outlier_conf_range: (f64, f64),
    pub inlier_conf_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seconds_per_page: 10.0,
            rate_hz: 20.0,
            noise_px: 3.0,
            outlier_prob: 0.05,
            outlier_conf_range: (0.0, 0.4),
            inlier_conf_range: (0.6, 1.0),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn noiseless(seconds_per_page: f64) -> Self {
        Self { seconds_per_page, noise_px: 0.0, outlier_prob: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let range_ok = |(lo, hi): (f64, f64)| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi;
        if !(self.seconds_per_page > 0.0) {
            return Err("seconds_per_page must be > 0");
        }
        if !(self.rate_hz > 0.0) {
            return Err("rate_hz must be > 0");
        }
        if !(self.noise_px >= 0.0 && self.noise_px.is_finite()) {
            return Err("noise_px must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.outlier_prob) {
            return Err("outlier_prob must be in [0, 1)");
        }
        if !range_ok(self.outlier_conf_range) || !range_ok(self.inlier_conf_range) {
            return Err("confidence ranges must lie within [0, 1]");
        }
        Ok(())
    }
}

/// What the ideal reader was doing when a sample was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub system: usize,
    pub x: f64,
    pub frac_page: f64,
    pub frac_in_system: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSample {
    pub page: usize,
    pub prediction: TrackerPrediction,
    pub truth: GroundTruth,
}

/// Inverse of the reading fraction: the system and x reached after reading
/// `frac` of the page's total system width.
pub fn position_at_fraction(layout: &PageLayout, frac: f64) -> (usize, f64) {
    let total = layout.total_width();
    let mut remaining = frac.clamp(0.0, 1.0) * total;
    let last = layout.systems.len() - 1;
    for (i, s) in layout.systems.iter().enumerate() {
        let w = s.width();
        if remaining <= w || i == last {
            return (i, s.x_left as f64 + remaining.min(w));
        }
        remaining -= w;
    }
    unreachable!("layout has at least one system")
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Generates predictions at `k / rate_hz` for every page in turn, each page
/// read linearly over `seconds_per_page`.
///
/// Every page draws from its own ChaCha stream (`seed`, stream = page index),
/// so adding pages never changes the samples of earlier ones.
pub fn synth_trajectory(layouts: &[PageLayout], cfg: &SyntheticConfig) -> Vec<SyntheticSample> {
    let spp = cfg.seconds_per_page;
    let noise = Normal::new(0.0, cfg.noise_px).expect("noise_px is finite and non-negative");
    let mut out = Vec::new();
    let mut k: u64 = 0;
    for (page, layout) in layouts.iter().enumerate() {
        assert!(!layout.systems.is_empty(), "page {page} has no systems");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(page as u64);
        let page_end = (page + 1) as f64 * spp;
        loop {
            let t = k as f64 / cfg.rate_hz;
            if t >= page_end {
                break;
            }
            k += 1;
            let frac_page = ((t - page as f64 * spp) / spp).clamp(0.0, 1.0);
            let (system, x) = position_at_fraction(layout, frac_page);
            let s = &layout.systems[system];
            let frac_in_system = if s.width() > 0.0 { (x - s.x_left as f64) / s.width() } else { 1.0 };

            let outlier = cfg.outlier_prob > 0.0 && rng.random_bool(cfg.outlier_prob);
            let (u, v, conf) = if outlier {
                let u = rng.random_range(0.0..layout.width as f64);
                let v = rng.random_range(0.0..layout.height as f64);
                (u, v, uniform(&mut rng, cfg.outlier_conf_range))
            } else {
                let u = x + noise.sample(&mut rng);
                let v = s.y_center() + noise.sample(&mut rng);
                (u, v, uniform(&mut rng, cfg.inlier_conf_range))
            };
            out.push(SyntheticSample {
                page,
                prediction: TrackerPrediction { t, u, v, w: 0.03 * layout.width as f64, h: s.height(), conf },
                truth: GroundTruth { system, x, frac_page, frac_in_system, outlier },
            });
        }
    }
    out
}

/// Earliest time (seconds from the start of the page, 1 ms grid) at which
/// the noiseless reading path satisfies the turn condition.
///
/// Halfway: in the last system and at least `turn_fraction` into it.
/// Tempo: in the last system and no more than `lead_time_sec` before the end
/// of the page. The path is evaluated directly from the system widths; no
/// filter or policy code is involved.
pub fn oracle_turn_time(layout: &PageLayout, cfg: &SyntheticConfig, policy: &PolicyConfig) -> f64 {
    let spp = cfg.seconds_per_page;
    let widths: Vec<f64> = layout.systems.iter().map(|s| s.x_right as f64 - s.x_left as f64).collect();
    let total: f64 = widths.iter().sum();
    let last = layout
        .systems
        .iter()
        .enumerate()
        .max_by_key(|(_, s)| s.y_top)
        .map(|(i, _)| i)
        .expect("layout has at least one system");
    let last_start: f64 = widths[..last].iter().sum();

    let steps = libm::ceil(spp * 1000.0) as u64;
    for ms in 0..=steps {
        let t = (ms as f64 / 1000.0).min(spp);
        let read = t / spp * total;
        let mut system = widths.len() - 1;
        let mut cum = 0.0;
        for (i, w) in widths.iter().enumerate() {
            if read <= cum + w {
                system = i;
                break;
            }
            cum += w;
        }
        if system != last {
            continue;
        }
        let hit = match policy.kind {
            PolicyKind::Halfway => {
                let within = if widths[last] > 0.0 { (read - last_start) / widths[last] } else { 1.0 };
                within >= policy.turn_fraction
            }
            PolicyKind::Tempo => spp - t <= policy.lead_time_sec,
        };
        if hit {
            return t;
        }
    }
    spp
}
