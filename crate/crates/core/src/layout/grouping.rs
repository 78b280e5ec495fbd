//! Two-level grouping: line bands into staves, staves into systems.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::profile::LineBand;
use super::{LayoutConfig, System};
use crate::image::BinaryImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Staff {
    pub bands: Vec<LineBand>,
}

impl Staff {
    pub fn y_top(&self) -> usize {
        self.bands[0].y_start
    }

    pub fn y_bottom(&self) -> usize {
        self.bands[self.bands.len() - 1].y_end
    }

    pub fn mid(&self) -> f64 {
        (self.y_top() + self.y_bottom()) as f64 / 2.0
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Splits `items` (ordered by `pos`) wherever the gap to the next item is
/// larger than `factor` times the median gap.
fn split_by_gap<T: Clone>(items: &[T], pos: impl Fn(&T) -> f64, factor: f64) -> Vec<Vec<T>> {
    if items.len() < 2 {
        return vec![items.to_vec()];
    }
    let gaps: Vec<f64> = items.windows(2).map(|w| pos(&w[1]) - pos(&w[0])).collect();
    let limit = factor * median(&gaps);
    let mut groups = Vec::new();
    let mut current = vec![items[0].clone()];
    for (item, &gap) in items[1..].iter().zip(&gaps) {
        if gap > limit {
            groups.push(core::mem::take(&mut current));
        }
        current.push(item.clone());
    }
    groups.push(current);
    groups
}

pub fn group_bands_into_staves(bands: &[LineBand], cfg: &LayoutConfig) -> Vec<Staff> {
    assert!(!bands.is_empty(), "need at least one band");
    split_by_gap(bands, LineBand::center, cfg.staff_gap_factor)
        .into_iter()
        .map(|bands| Staff { bands })
        .collect()
}

/// Column extent of the ink inside rows `y_top..=y_bottom`. A column counts
/// when it holds at least `col_threshold_rel * band_count` ink pixels; when no
/// column does, the full page width is returned with the fallback flag set.
pub fn system_x_extent(
    img: &BinaryImage,
    y_top: usize,
    y_bottom: usize,
    band_count: usize,
    cfg: &LayoutConfig,
) -> (usize, usize, bool) {
    let width = img.width();
    let mut cols = vec![0usize; width];
    for y in y_top..=y_bottom.min(img.height() - 1) {
        for (c, &ink) in cols.iter_mut().zip(img.row(y)) {
            *c += ink as usize;
        }
    }
    let need = cfg.col_threshold_rel * band_count as f64;
    let qualifies = |c: &usize| *c > 0 && *c as f64 >= need;
    match (cols.iter().position(qualifies), cols.iter().rposition(qualifies)) {
        (Some(l), Some(r)) => (l, r, false),
        _ => (0, width - 1, true),
    }
}

pub fn group_staves_into_systems(
    staves: &[Staff],
    img: &BinaryImage,
    cfg: &LayoutConfig,
) -> (Vec<System>, Vec<String>) {
    assert!(!staves.is_empty(), "need at least one staff");
    let mut warnings = Vec::new();
    let per = cfg.staves_per_system;
    let groups: Vec<Vec<Staff>> = if per > 0 && staves.len().is_multiple_of(per) {
        staves.chunks(per).map(<[Staff]>::to_vec).collect()
    } else {
        if per > 0 {
            warnings.push(format!(
                "{} staves not divisible by staves_per_system={}; grouped by gap",
                staves.len(),
                per
            ));
        }
        split_by_gap(staves, Staff::mid, cfg.system_gap_factor)
    };

    let systems = groups
        .iter()
        .enumerate()
        .map(|(index, group)| {
            let y_top = group[0].y_top();
            let y_bottom = group[group.len() - 1].y_bottom();
            let band_count = group.iter().map(|s| s.bands.len()).sum();
            let (x_left, x_right, x_fallback) = system_x_extent(img, y_top, y_bottom, band_count, cfg);
            System { index, y_top, y_bottom, x_left, x_right, x_fallback, band_count }
        })
        .collect();
    (systems, warnings)
}
