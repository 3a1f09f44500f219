use crate::image::GrayImage;
use crate::snake::{Snake, SnakePair};
use crate::tweakables::SnakeMode;

/// Gray level of input snakes in the overlay.
pub const INPUT_LEVEL: f64 = 0.4;
/// Gray level of output snakes in the overlay.
pub const OUTPUT_LEVEL: f64 = 0.0;

/// The reference washed out to light gray, with input snakes drawn at
/// [`INPUT_LEVEL`] and evolved snakes at [`OUTPUT_LEVEL`] on top.
pub fn snake_overlay(reference: &GrayImage, pairs: &[SnakePair]) -> GrayImage {
    let mut img = GrayImage::from_fn(reference.width(), reference.height(), |x, y| {
        0.65 + 0.35 * reference.get(x, y)
    });
    for p in pairs {
        draw_snake(&mut img, &p.input, INPUT_LEVEL);
    }
    for p in pairs {
        draw_snake(&mut img, &p.output, OUTPUT_LEVEL);
    }
    img
}

pub fn draw_snake(img: &mut GrayImage, snake: &Snake, level: f64) {
    let pts = &snake.points;
    let n = pts.len();
    let segments = if snake.mode == SnakeMode::Periodic { n } else { n.saturating_sub(1) };
    if n == 1 {
        plot(img, pts[0].x, pts[0].y, level);
    }
    for i in 0..segments {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let steps = ((b - a).norm() * 4.0).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            plot(img, a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, level);
        }
    }
}

fn plot(img: &mut GrayImage, x: f64, y: f64, level: f64) {
    let (x, y) = (x.round(), y.round());
    if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set(x as usize, y as usize, level);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    #[test]
    fn draws_both_levels() {
        let reference = GrayImage::filled(20, 20, 1.0);
        let snake = |x: f64| Snake {
            points: vec![Point2::new(x, 2.0), Point2::new(x, 17.0)],
            mode: SnakeMode::Free,
        };
        let pair = SnakePair {
            contour: 0,
            input: snake(5.0),
            output: snake(12.0),
            iterations: 1,
            converged: true,
        };
        let img = snake_overlay(&reference, &[pair]);
        assert_eq!(img.get(5, 10), INPUT_LEVEL);
        assert_eq!(img.get(12, 10), OUTPUT_LEVEL);
        assert_eq!(img.get(0, 0), 1.0);
    }
}
