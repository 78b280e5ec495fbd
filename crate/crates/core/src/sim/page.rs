//! Synthetic score pages with known system geometry.
//!
//! Pages carry piano-style systems (two five-line staves), random note heads
//! with stems, bar lines, a smooth illumination gradient and pixel noise.
//! The generator records the exact rows and columns of every system, which
//! makes it the reference for layout recovery.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct PageSpec {
    pub width: usize,
    pub height: usize,
    pub systems: usize,
    pub staves_per_system: usize,
    /// Top-to-top distance between neighbouring staff lines.
    pub line_gap: usize,
    pub line_thickness: usize,
    /// Blank rows between the staves of one system.
    pub staff_sep: usize,
    /// Blank rows between systems.
    pub system_gap: usize,
    pub top_margin: usize,
    pub x_left: usize,
    pub x_right: usize,
    pub notes_per_staff: usize,
    /// Paper brightness at the left and right edges.
    pub paper: (u8, u8),
    pub ink: u8,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Ground-truth extents of one rendered system (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrueSystem {
    pub y_top: usize,
    pub y_bottom: usize,
    pub x_left: usize,
    pub x_right: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticPage {
    pub image: GrayImage,
    pub systems: Vec<TrueSystem>,
    /// Top row of every staff line, in order.
    pub line_rows: Vec<usize>,
}

impl PageSpec {
    pub fn staff_height(&self) -> usize {
        4 * self.line_gap + self.line_thickness
    }

    pub fn system_height(&self) -> usize {
        self.staves_per_system * self.staff_height() + (self.staves_per_system - 1) * self.staff_sep
    }

    pub fn content_height(&self) -> usize {
        self.systems * self.system_height() + (self.systems - 1) * self.system_gap
    }

    /// Draws a random page of roughly 1000 x 1400 px with `systems` grand
    /// staves, line gap >= 8 px and system gap >= 3x the staff gap.
    pub fn random(systems: usize, seed: u64) -> PageSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = rng.random_range(950..=1050);
        let height = rng.random_range(1350..=1450);
        let line_thickness = rng.random_range(1..=2);
        let margin = 60;
        let mut line_gap = rng.random_range(8..=12);
        loop {
            let staff_sep = 3 * line_gap;
            let spec = PageSpec {
                width,
                height,
                systems,
                staves_per_system: 2,
                line_gap,
                line_thickness,
                staff_sep,
                system_gap: 3 * staff_sep,
                top_margin: margin,
                x_left: rng.random_range(40..=90),
                x_right: width - rng.random_range(40..=90),
                notes_per_staff: rng.random_range(8..=24),
                paper: (rng.random_range(200..=235), rng.random_range(215..=250)),
                ink: rng.random_range(10..=60),
                noise_sigma: 3.0,
                seed,
            };
            let spare = height as isize - 2 * margin as isize - spec.content_height() as isize;
            if spare >= 0 || line_gap == 8 {
                let extra_gap = if systems > 1 { spare.max(0) as usize / (systems - 1) } else { 0 };
                let system_gap = spec.system_gap + rng.random_range(0..=extra_gap.min(4 * spec.staff_sep));
                let used = spec.content_height() + (systems - 1) * (system_gap - spec.system_gap);
                let top_margin = margin + rng.random_range(0..=(height - 2 * margin).saturating_sub(used));
                return PageSpec { system_gap, top_margin, ..spec };
            }
            line_gap -= 1;
        }
    }

    pub fn render(&self) -> SyntheticPage {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_5eed);
        let (w, h) = (self.width, self.height);
        let mut canvas: Vec<f64> = Vec::with_capacity(w * h);
        let (p0, p1) = (self.paper.0 as f64, self.paper.1 as f64);
        for _y in 0..h {
            for x in 0..w {
                canvas.push(p0 + (p1 - p0) * x as f64 / (w - 1) as f64);
            }
        }
        let ink = self.ink as f64;
        let mut fill = |x0: usize, y0: usize, x1: usize, y1: usize| {
            for y in y0..=y1.min(h - 1) {
                for x in x0..=x1.min(w - 1) {
                    canvas[y * w + x] = ink;
                }
            }
        };

        let mut systems = Vec::new();
        let mut line_rows = Vec::new();
        let t = self.line_thickness;
        let mut y = self.top_margin;
        for _ in 0..self.systems {
            let sys_top = y;
            let mut staff_top = y;
            for staff in 0..self.staves_per_system {
                if staff > 0 {
                    staff_top += self.staff_height() + self.staff_sep;
                }
                for line in 0..5 {
                    let ly = staff_top + line * self.line_gap;
                    line_rows.push(ly);
                    fill(self.x_left, ly, self.x_right, ly + t - 1);
                }
                // note heads on lines and spaces, stems upward
                let span = self.x_right - self.x_left;
                for _ in 0..self.notes_per_staff {
                    let cx = self.x_left + 60 + rng.random_range(0..span.saturating_sub(90).max(1));
                    let step = rng.random_range(0..=8usize);
                    let cy = staff_top + step * self.line_gap / 2 + t / 2;
                    let rx = self.line_gap * 2 / 3;
                    let ry = self.line_gap / 2;
                    for dy in 0..=2 * ry {
                        for dx in 0..=2 * rx {
                            let nx = (dx as f64 - rx as f64) / rx as f64;
                            let ny = (dy as f64 - ry as f64) / ry.max(1) as f64;
                            if nx * nx + ny * ny <= 1.0 {
                                fill(cx + dx - rx, cy + dy - ry, cx + dx - rx, cy + dy - ry);
                            }
                        }
                    }
                    let stem_x = cx + rx;
                    let stem_top = cy.saturating_sub(3 * self.line_gap + self.line_gap / 2);
                    fill(stem_x, stem_top.max(staff_top), stem_x, cy);
                }
            }
            let sys_bottom = staff_top + 4 * self.line_gap + t - 1;
            // bar lines at both ends and in the middle
            for bx in [self.x_left, (self.x_left + self.x_right) / 2, self.x_right - 1] {
                fill(bx, sys_top, bx + 1, sys_bottom);
            }
            systems.push(TrueSystem { y_top: sys_top, y_bottom: sys_bottom, x_left: self.x_left, x_right: self.x_right });
            y = sys_bottom + 1 + self.system_gap;
        }

        let noise = Normal::new(0.0, self.noise_sigma).expect("finite sigma");
        let pixels = canvas
            .into_iter()
            .map(|v| libm::round(v + noise.sample(&mut rng)).clamp(0.0, 255.0) as u8)
            .collect();
        let image = GrayImage::new(w, h, pixels).expect("non-empty page");
        SyntheticPage { image, systems, line_rows }
    }
}
