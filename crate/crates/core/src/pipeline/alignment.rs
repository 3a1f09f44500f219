//! Placing the sketch over the render frame.
//!
//! The sketch is first fit to the target height and centered horizontally.
//! The user transform then scales about the frame center and translates, in
//! target pixels. Uncovered pixels are white.

use crate::image::GrayImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("alignment scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("alignment translation must be finite")]
    BadTranslate,
    #[error("target size must be positive, got {0}x{1}")]
    BadTarget(usize, usize),
    #[error("aligned sketch does not overlap the frame")]
    EmptyCrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTransform {
    /// Offset in target pixels, `[x, y]`.
    pub translate: [f64; 2],
    pub scale: f64,
}

impl Default for AlignmentTransform {
    fn default() -> Self {
        AlignmentTransform {
            translate: [0.0, 0.0],
            scale: 1.0,
        }
    }
}

impl AlignmentTransform {
    pub fn validate(&self) -> Result<(), AlignError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(AlignError::BadScale(self.scale));
        }
        if !self.translate.iter().all(|v| v.is_finite()) {
            return Err(AlignError::BadTranslate);
        }
        Ok(())
    }
}

/// Resamples `sketch` into a `target.0 × target.1` frame.
pub fn apply_alignment(
    sketch: &GrayImage,
    t: &AlignmentTransform,
    target: (usize, usize),
) -> Result<GrayImage, AlignError> {
    t.validate()?;
    let (w, h) = target;
    if w == 0 || h == 0 {
        return Err(AlignError::BadTarget(w, h));
    }
    let fit = h as f64 / sketch.height() as f64;
    let offset_x = (w as f64 - fit * sketch.width() as f64) / 2.0;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut covered = false;
    let out = GrayImage::from_fn(w, h, |x, y| {
        // undo the user transform, then the height fit
        let u = cx + (x as f64 - t.translate[0] - cx) / t.scale;
        let v = cy + (y as f64 - t.translate[1] - cy) / t.scale;
        let sx = (u + 0.5 - offset_x) / fit - 0.5;
        let sy = (v + 0.5) / fit - 0.5;
        match sketch.sample_bilinear(sx, sy) {
            Some(value) => {
                covered = true;
                value
            }
            None => 1.0,
        }
    });
    if !covered {
        return Err(AlignError::EmptyCrop);
    }
    Ok(out)
}
