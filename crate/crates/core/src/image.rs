//! Minimal owned raster types. Row-major, 8 bits per channel.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be non-zero (got {width}x{height})")]
    Empty { width: usize, height: usize },
    #[error("expected {expected} pixel values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
}

fn check_dims(width: usize, height: usize, expected: usize, actual: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::Empty { width, height });
    }
    if expected != actual {
        return Err(ImageError::SizeMismatch { expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        check_dims(width, height, width * height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    /// Builds an image from interleaved `RGBRGB...` bytes.
    pub fn from_interleaved(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        if !bytes.len().is_multiple_of(3) {
            return Err(ImageError::SizeMismatch { expected: width * height * 3, actual: bytes.len() });
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// ITU-R BT.601 luma, rounded half away from zero.
    ///
    /// Computed in integer thousandths so that ties round exactly.
    pub fn to_grayscale(&self) -> GrayImage {
        let pixels = self
            .pixels
            .iter()
            .map(|&[r, g, b]| {
                let luma = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
                ((luma + 500) / 1000).min(255) as u8
            })
            .collect();
        GrayImage { width: self.width, height: self.height, pixels }
    }
}

/// 8-bit grayscale, 0 = black ink, 255 = white paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, width * height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }
}

/// Foreground mask, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    ink: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, ink: Vec<bool>) -> Result<Self, ImageError> {
        check_dims(width, height, width * height, ink.len())?;
        Ok(Self { width, height, ink })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ink(&self) -> &[bool] {
        &self.ink
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.ink[y * self.width..(y + 1) * self.width]
    }

    pub fn ink_count(&self) -> usize {
        self.ink.iter().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_of(rgb: [u8; 3]) -> u8 {
        RgbImage::new(1, 1, vec![rgb]).unwrap().to_grayscale().pixels()[0]
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(gray_of([255, 255, 255]), 255);
        assert_eq!(gray_of([0, 0, 0]), 0);
        // 29.9 + 88.05 + 22.8 = 140.75
        assert_eq!(gray_of([100, 150, 200]), 141);
    }

    #[test]
    fn grayscale_rounds_ties_up() {
        // 1.495 -> 1, 2.85 -> 3, and the exact tie 28.5 -> 29
        assert_eq!(gray_of([5, 0, 0]), 1);
        assert_eq!(gray_of([0, 0, 25]), 3);
        assert_eq!(gray_of([0, 0, 250]), 29);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert_eq!(GrayImage::new(0, 3, vec![]), Err(ImageError::Empty { width: 0, height: 3 }));
        assert_eq!(
            GrayImage::new(2, 2, vec![0; 3]),
            Err(ImageError::SizeMismatch { expected: 4, actual: 3 })
        );
    }
}
