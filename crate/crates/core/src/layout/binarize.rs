//! Adaptive thresholding against a Gaussian-weighted local mean.

use alloc::vec;
use alloc::vec::Vec;

use super::{LayoutConfig, LayoutError};
use crate::image::{BinaryImage, GrayImage};

/// Standard deviation used for a Gaussian window of `window` taps when no
/// explicit sigma is given (same rule as OpenCV's `getGaussianKernel`).
pub fn gaussian_sigma(window: usize) -> f64 {
    0.3 * ((window as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian kernel of odd length `window`.
pub fn gaussian_kernel(window: usize) -> Vec<f64> {
    let sigma = gaussian_sigma(window);
    let radius = (window / 2) as f64;
    let denom = 2.0 * sigma * sigma;
    let mut kernel: Vec<f64> = (0..window)
        .map(|k| {
            let d = k as f64 - radius;
            libm::exp(-(d * d) / denom)
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

/// Mirror an out-of-range index back into `0..len` without repeating the
/// edge sample (`dcb|abcd|cba`).
pub fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Gaussian-weighted local mean of every pixel, computed as two separable
/// passes with reflected borders.
pub fn gaussian_local_mean(img: &GrayImage, window: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let kernel = gaussian_kernel(window);
    let radius = (window / 2) as isize;

    let col_index: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| (-radius..=radius).map(|d| reflect_index(x + d, w)).collect())
        .collect();
    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        let row = img.row(y);
        let out = &mut horizontal[y * w..(y + 1) * w];
        for (x, taps) in col_index.iter().enumerate() {
            out[x] = taps.iter().zip(&kernel).map(|(&sx, &k)| k * row[sx] as f64).sum();
        }
    }

    let mut mean = vec![0.0f64; w * h];
    for y in 0..h {
        let out = &mut mean[y * w..(y + 1) * w];
        for (k, &weight) in kernel.iter().enumerate() {
            let sy = reflect_index(y as isize + k as isize - radius, h);
            let src = &horizontal[sy * w..(sy + 1) * w];
            for (o, &s) in out.iter_mut().zip(src) {
                *o += weight * s;
            }
        }
    }
    mean
}

/// Marks a pixel as ink when it is strictly darker than its Gaussian local
/// mean minus `cfg.offset`.
pub fn binarize_adaptive_gaussian(img: &GrayImage, cfg: &LayoutConfig) -> Result<BinaryImage, LayoutError> {
    cfg.check_window()?;
    let mean = gaussian_local_mean(img, cfg.window);
    let ink = img
        .pixels()
        .iter()
        .zip(&mean)
        .map(|(&p, &m)| (p as f64) < m - cfg.offset)
        .collect();
    Ok(BinaryImage::new(img.width(), img.height(), ink).expect("dimensions come from a valid image"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for window in [3, 5, 51] {
            let k = gaussian_kernel(window);
            assert_eq!(k.len(), window);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..window / 2 {
                assert_eq!(k[i], k[window - 1 - i]);
            }
        }
        assert!((gaussian_sigma(51) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn reflect_does_not_repeat_edge() {
        let idx: Vec<usize> = (-3..8).map(|i| reflect_index(i, 5)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect_index(-7, 1), 0);
        // windows wider than the image keep bouncing
        assert_eq!(reflect_index(9, 3), 1);
    }

    #[test]
    fn even_or_tiny_window_is_rejected() {
        let img = GrayImage::filled(4, 4, 200).unwrap();
        for window in [0, 1, 2, 50] {
            let cfg = LayoutConfig { window, ..LayoutConfig::default() };
            assert!(matches!(binarize_adaptive_gaussian(&img, &cfg), Err(LayoutError::BadConfig(_))));
        }
    }

    #[test]
    fn uniform_image_is_background() {
        for v in [0u8, 17, 128, 255] {
            let img = GrayImage::filled(40, 30, v).unwrap();
            let bin = binarize_adaptive_gaussian(&img, &LayoutConfig::default()).unwrap();
            assert_eq!(bin.ink_count(), 0);
        }
    }

    #[test]
    fn single_dark_line_on_white() {
        let mut img = GrayImage::filled(120, 80, 255).unwrap();
        for x in 0..120 {
            img.set(x, 40, 0);
        }
        let bin = binarize_adaptive_gaussian(&img, &LayoutConfig::default()).unwrap();
        assert!((0..120).all(|x| bin.get(x, 40)));
        assert_eq!(bin.ink_count(), 120);
    }
}
