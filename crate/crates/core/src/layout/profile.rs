//! Row projection profile and staff-line band extraction.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LayoutConfig, LayoutError};
use crate::image::BinaryImage;

/// Per-row ink counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowProfile {
    pub counts: Vec<usize>,
    pub width: usize,
}

impl RowProfile {
    pub fn max(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Inclusive run of rows `y_start..=y_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBand {
    pub y_start: usize,
    pub y_end: usize,
}

impl LineBand {
    pub fn center(&self) -> f64 {
        (self.y_start + self.y_end) as f64 / 2.0
    }
}

pub fn row_ink_profile(img: &BinaryImage) -> RowProfile {
    let counts = (0..img.height())
        .map(|y| img.row(y).iter().filter(|&&b| b).count())
        .collect();
    RowProfile { counts, width: img.width() }
}

/// Maximal runs of rows whose count reaches `line_threshold_rel * max`.
pub fn detect_line_bands(profile: &RowProfile, cfg: &LayoutConfig) -> Result<Vec<LineBand>, LayoutError> {
    let max = profile.max();
    if max == 0 {
        return Err(LayoutError::NoInk);
    }
    let tau = cfg.line_threshold_rel * max as f64;
    let mut bands = Vec::new();
    let mut start = None;
    for (y, &c) in profile.counts.iter().enumerate() {
        match (c as f64 >= tau, start) {
            (true, None) => start = Some(y),
            (false, Some(s)) => {
                bands.push(LineBand { y_start: s, y_end: y - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        bands.push(LineBand { y_start: s, y_end: profile.counts.len() - 1 });
    }
    Ok(bands)
}
