use crate::image::{GrayImage, ImageError};

/// Raw Sobel responses `(gx, gy)` with replicated borders.
pub fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| img.get_clamped(x as isize + dx, y as isize + dy);
            gx[y * w + x] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[y * w + x] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    (gx, gy)
}

/// Sobel gradient magnitude scaled so the strongest edge is 1. A constant
/// image yields all zeros.
pub fn gradient_magnitude(img: &GrayImage) -> Result<GrayImage, ImageError> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(ImageError::TooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let (gx, gy) = sobel(img);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let pixels = if max > 0.0 {
        mag.iter().map(|m| (m / max).min(1.0)).collect()
    } else {
        vec![0.0; w * h]
    };
    GrayImage::new(w, h, pixels)
}
