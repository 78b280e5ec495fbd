//! Debug rendering of a detected layout on top of the page image.

use std::path::Path;

use image::{Rgb, RgbImage};
use pageflip_core::layout::PageLayout;

use crate::formats::PageRaster;
use crate::Error;

const SYSTEM_COLOR: Rgb<u8> = Rgb([220, 30, 30]);
const TURN_COLOR: Rgb<u8> = Rgb([30, 90, 230]);

fn to_rgb(raster: &PageRaster) -> RgbImage {
    match raster {
        PageRaster::Gray(g) => RgbImage::from_fn(g.width() as u32, g.height() as u32, |x, y| {
            let v = g.get(x as usize, y as usize);
            Rgb([v, v, v])
        }),
        PageRaster::Rgb(c) => {
            let raw: Vec<u8> = c.pixels().iter().flatten().copied().collect();
            RgbImage::from_raw(c.width() as u32, c.height() as u32, raw).expect("buffer matches dimensions")
        }
    }
}

fn rect(img: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    for t in 0..2 {
        for x in x0..=x1.min(w - 1) {
            img.put_pixel(x, (y0 + t).min(h - 1), color);
            img.put_pixel(x, y1.saturating_sub(t), color);
        }
        for y in y0..=y1.min(h - 1) {
            img.put_pixel((x0 + t).min(w - 1), y, color);
            img.put_pixel(x1.saturating_sub(t), y, color);
        }
    }
}

/// System rectangles in red; the turn line of the last system in blue.
pub fn render_overlay(raster: &PageRaster, layout: &PageLayout, turn_fraction: f64) -> RgbImage {
    let mut img = to_rgb(raster);
    for s in &layout.systems {
        rect(&mut img, s.x_left as u32, s.y_top as u32, s.x_right as u32, s.y_bottom as u32, SYSTEM_COLOR);
    }
    let last = layout.last_system();
    let x = (last.x_left as f64 + turn_fraction * last.width()).round() as u32;
    for y in last.y_top..=last.y_bottom {
        for dx in 0..3 {
            let px = (x + dx).saturating_sub(1).min(img.width() - 1);
            img.put_pixel(px, y as u32, TURN_COLOR);
        }
    }
    img
}

pub fn write_overlay(path: &Path, raster: &PageRaster, layout: &PageLayout, turn_fraction: f64) -> Result<(), Error> {
    render_overlay(raster, layout, turn_fraction)
        .save(path)
        .map_err(|source| Error::Image { path: path.to_owned(), source })
}
