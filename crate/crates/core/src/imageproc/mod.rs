//! Sketch preprocessing: binarization, gap closing, thinning, contour
//! extraction, and Sobel edge strength.

mod contours;
mod gradient;
mod morphology;
mod thinning;

pub use contours::{extract_contours, Contour};
pub use gradient::{gradient_magnitude, sobel};
pub use morphology::{close_gaps, dilate, erode};
pub use thinning::{thin, thin_pass};

use crate::image::{BinaryImage, GrayImage};

/// Dark pixels (`intensity < threshold`) become ink.
pub fn binarize(img: &GrayImage, threshold: f64) -> BinaryImage {
    let bits = img.pixels().iter().map(|&v| v < threshold).collect();
    BinaryImage::from_bits(img.width(), img.height(), bits).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn white_is_background() {
        let img = GrayImage::filled(6, 4, 1.0);
        assert_eq!(binarize(&img, 0.5).count(), 0);
    }

    #[test]
    fn dark_pixel_is_ink() {
        let img = GrayImage::new(1, 1, vec![0.2]).unwrap();
        assert!(binarize(&img, 0.5).get(0, 0));
    }

    #[test]
    fn random_image_matches_scan_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = GrayImage::from_fn(23, 17, |_, _| rng.random());
        let bin = binarize(&img, 0.4);
        for y in 0..17 {
            for x in 0..23 {
                assert_eq!(bin.get(x, y), img.get(x, y) < 0.4);
            }
        }
        assert_eq!(binarize(&bin.to_gray(), 0.4), bin);
    }
}
