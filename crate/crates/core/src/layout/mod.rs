//! Page image to system geometry.
//!
//! Pipeline: grayscale → adaptive Gaussian binarization → row ink profile →
//! staff-line bands → staves → systems (y-interval plus ink x-extent).

mod binarize;
mod grouping;
mod profile;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use binarize::{binarize_adaptive_gaussian, gaussian_kernel, gaussian_local_mean, gaussian_sigma, reflect_index};
pub use grouping::{group_bands_into_staves, group_staves_into_systems, system_x_extent, Staff};
pub use profile::{detect_line_bands, row_ink_profile, LineBand, RowProfile};

use crate::image::{GrayImage, RgbImage};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("bad layout config: {0}")]
    BadConfig(String),
    #[error("page contains no ink")]
    NoInk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    /// Gaussian window side in pixels; odd, at least 3.
    pub window: usize,
    /// Subtracted from the local mean before comparing.
    pub offset: f64,
    /// Row threshold as a fraction of the profile maximum.
    pub line_threshold_rel: f64,
    pub staff_gap_factor: f64,
    /// Staves chunked into one system; 0 groups purely by gap.
    pub staves_per_system: usize,
    pub system_gap_factor: f64,
    /// Column threshold as a fraction of the system's band count.
    pub col_threshold_rel: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            window: 51,
            offset: 10.0,
            line_threshold_rel: 0.5,
            staff_gap_factor: 2.0,
            staves_per_system: 2,
            system_gap_factor: 1.5,
            col_threshold_rel: 0.5,
        }
    }
}

impl LayoutConfig {
    pub(crate) fn check_window(&self) -> Result<(), LayoutError> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(LayoutError::BadConfig(format!("window must be odd and >= 3, got {}", self.window)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        self.check_window()?;
        let positive = [("staff_gap_factor", self.staff_gap_factor), ("system_gap_factor", self.system_gap_factor)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LayoutError::BadConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let fractions = [("line_threshold_rel", self.line_threshold_rel), ("col_threshold_rel", self.col_threshold_rel)];
        for (name, v) in fractions {
            if !(v > 0.0 && v <= 1.0) {
                return Err(LayoutError::BadConfig(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if !self.offset.is_finite() {
            return Err(LayoutError::BadConfig(format!("offset must be finite, got {}", self.offset)));
        }
        Ok(())
    }
}

/// One system: a horizontal block of staves read left to right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct System {
    pub index: usize,
    pub y_top: usize,
    pub y_bottom: usize,
    pub x_left: usize,
    pub x_right: usize,
    pub x_fallback: bool,
    #[serde(default, skip_serializing)]
    pub band_count: usize,
}

impl System {
    pub fn width(&self) -> f64 {
        self.x_right.saturating_sub(self.x_left) as f64
    }

    pub fn height(&self) -> f64 {
        self.y_bottom.saturating_sub(self.y_top) as f64
    }

    pub fn y_center(&self) -> f64 {
        (self.y_top + self.y_bottom) as f64 / 2.0
    }

    pub fn contains_y(&self, v: f64) -> bool {
        v >= self.y_top as f64 && v <= self.y_bottom as f64
    }

    /// Vertical distance from `v` to the band; zero inside it.
    pub fn y_distance(&self, v: f64) -> f64 {
        if v < self.y_top as f64 {
            self.y_top as f64 - v
        } else if v > self.y_bottom as f64 {
            v - self.y_bottom as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    #[serde(rename = "page")]
    pub page_index: usize,
    pub width: usize,
    pub height: usize,
    pub systems: Vec<System>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PageLayout {
    pub fn last_system(&self) -> &System {
        self.systems.iter().max_by_key(|s| s.y_top).expect("layout has at least one system")
    }

    pub fn last_index(&self) -> usize {
        self.last_system().index
    }

    pub fn total_width(&self) -> f64 {
        self.systems.iter().map(System::width).sum()
    }

    pub fn median_system_height(&self) -> f64 {
        let heights: Vec<f64> = self.systems.iter().map(System::height).collect();
        grouping::median(&heights)
    }

    /// Checks the ordering invariants: non-empty, sorted by `y_top`,
    /// y-disjoint, consecutive indices and ordered extents.
    pub fn check(&self) -> Result<(), String> {
        if self.systems.is_empty() {
            return Err("layout has no systems".into());
        }
        for (i, s) in self.systems.iter().enumerate() {
            if s.index != i {
                return Err(format!("system {i} has index {}", s.index));
            }
            if s.y_top > s.y_bottom || s.x_left > s.x_right {
                return Err(format!("system {i} has inverted extents"));
            }
            if s.y_bottom >= self.height || s.x_right >= self.width {
                return Err(format!("system {i} lies outside the page"));
            }
        }
        for w in self.systems.windows(2) {
            if w[1].y_top <= w[0].y_bottom {
                return Err(format!("systems {} and {} overlap or are unordered", w[0].index, w[1].index));
            }
        }
        Ok(())
    }
}

/// Either kind of page raster accepted by [`analyze_page`].
#[derive(Debug, Clone, Copy)]
pub enum PageImage<'a> {
    Rgb(&'a RgbImage),
    Gray(&'a GrayImage),
}

impl<'a> From<&'a RgbImage> for PageImage<'a> {
    fn from(img: &'a RgbImage) -> Self {
        PageImage::Rgb(img)
    }
}

impl<'a> From<&'a GrayImage> for PageImage<'a> {
    fn from(img: &'a GrayImage) -> Self {
        PageImage::Gray(img)
    }
}

fn merge_overlapping(systems: Vec<System>, warnings: &mut Vec<String>) -> Vec<System> {
    let mut merged: Vec<System> = Vec::with_capacity(systems.len());
    for s in systems {
        match merged.last_mut() {
            Some(prev) if s.y_top <= prev.y_bottom => {
                warnings.push(format!("merged overlapping systems at y {}..{}", prev.y_top, s.y_bottom));
                prev.y_bottom = prev.y_bottom.max(s.y_bottom);
                prev.x_left = prev.x_left.min(s.x_left);
                prev.x_right = prev.x_right.max(s.x_right);
                prev.x_fallback &= s.x_fallback;
                prev.band_count += s.band_count;
            }
            _ => merged.push(s),
        }
    }
    for (i, s) in merged.iter_mut().enumerate() {
        s.index = i;
    }
    merged
}

pub fn analyze_page<'a>(
    img: impl Into<PageImage<'a>>,
    page_index: usize,
    cfg: &LayoutConfig,
) -> Result<PageLayout, LayoutError> {
    cfg.validate()?;
    let converted;
    let gray = match img.into() {
        PageImage::Gray(g) => g,
        PageImage::Rgb(rgb) => {
            converted = rgb.to_grayscale();
            &converted
        }
    };

    let binary = binarize_adaptive_gaussian(gray, cfg)?;
    let profile = row_ink_profile(&binary);
    let bands = detect_line_bands(&profile, cfg)?;
    let mut warnings = Vec::new();
    if bands.len() < 5 {
        warnings.push(format!("only {} staff-line bands detected", bands.len()));
    }
    let staves = group_bands_into_staves(&bands, cfg);
    let (mut systems, grouping_warnings) = group_staves_into_systems(&staves, &binary, cfg);
    warnings.extend(grouping_warnings);
    systems.sort_by_key(|s| s.y_top);
    let systems = merge_overlapping(systems, &mut warnings);

    Ok(PageLayout { page_index, width: gray.width(), height: gray.height(), systems, warnings })
}
