//! Marching squares on the 0/1 field of a binary image, iso-level 0.5.
//!
//! Cell corners are visited clockwise on screen (y down):
//!
//! ```text
//!  TL --top-- TR
//!  |          |
//! left      right
//!  |          |
//!  BL -bottom- BR
//! ```
//!
//! Each segment runs from the edge where the walk enters the foreground to
//! an edge where it leaves, so ink always lies on the left of a contour as
//! drawn on screen. Saddle cells are split by the cell-center average; for a
//! binary field that average equals the level and the diagonal ink corners
//! are joined (8-connected ink).

use crate::image::BinaryImage;
use nalgebra::Point2;

const LEVEL: f64 = 0.5;
const NONE: usize = usize::MAX;

/// Ordered iso-line through sub-pixel crossings. Closed contours do not
/// repeat their first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<Point2<f64>>,
    pub closed: bool,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

struct Grid<'a> {
    img: &'a BinaryImage,
    w: usize,
    h: usize,
}

impl Grid<'_> {
    fn value(&self, x: usize, y: usize) -> f64 {
        if self.img.get(x, y) {
            1.0
        } else {
            0.0
        }
    }

    fn horizontal(&self, x: usize, y: usize) -> usize {
        y * self.w + x
    }

    fn vertical(&self, x: usize, y: usize) -> usize {
        self.w * self.h + y * self.w + x
    }

    /// Crossing point on an edge, linearly interpolated to the level.
    fn crossing(&self, edge: usize) -> Point2<f64> {
        let lerp = |a: f64, b: f64| (LEVEL - a) / (b - a);
        if edge < self.w * self.h {
            let (x, y) = (edge % self.w, edge / self.w);
            let t = lerp(self.value(x, y), self.value(x + 1, y));
            Point2::new(x as f64 + t, y as f64)
        } else {
            let e = edge - self.w * self.h;
            let (x, y) = (e % self.w, e / self.w);
            let t = lerp(self.value(x, y), self.value(x, y + 1));
            Point2::new(x as f64, y as f64 + t)
        }
    }
}

/// Extracts every iso-contour of the ink mask. Contours touching the image
/// border come out open; all others are closed.
pub fn extract_contours(img: &BinaryImage) -> Vec<Contour> {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return Vec::new();
    }
    let grid = Grid { img, w, h };
    let mut next = vec![NONE; 2 * w * h];
    let mut has_prev = vec![false; 2 * w * h];
    let mut starts = Vec::new();

    for cy in 0..h - 1 {
        for cx in 0..w - 1 {
            let corners = [
                grid.value(cx, cy),
                grid.value(cx + 1, cy),
                grid.value(cx + 1, cy + 1),
                grid.value(cx, cy + 1),
            ];
            let edges = [
                grid.horizontal(cx, cy),
                grid.vertical(cx + 1, cy),
                grid.horizontal(cx, cy + 1),
                grid.vertical(cx, cy),
            ];
            // (edge, enters foreground) in clockwise order
            let mut crossings = Vec::with_capacity(4);
            for k in 0..4 {
                let a = corners[k] >= LEVEL;
                let b = corners[(k + 1) % 4] >= LEVEL;
                if a != b {
                    crossings.push((edges[k], b));
                }
            }
            if crossings.is_empty() {
                continue;
            }
            let center_in = corners.iter().sum::<f64>() / 4.0 >= LEVEL;
            let n = crossings.len();
            for i in 0..n {
                let (from, enters) = crossings[i];
                if !enters {
                    continue;
                }
                let j = if n == 4 && center_in { (i + n - 1) % n } else { (i + 1) % n };
                let to = crossings[j].0;
                next[from] = to;
                has_prev[to] = true;
                starts.push(from);
            }
        }
    }

    let mut visited = vec![false; 2 * w * h];
    let mut contours = Vec::new();
    let trace = |start: usize, visited: &mut Vec<bool>| {
        let mut points = Vec::new();
        let mut edge = start;
        let mut closed = false;
        loop {
            visited[edge] = true;
            points.push(grid.crossing(edge));
            edge = next[edge];
            if edge == NONE {
                break;
            }
            if edge == start {
                closed = true;
                break;
            }
            if visited[edge] {
                break;
            }
        }
        points.dedup();
        if closed && points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        Contour { points, closed }
    };

    // open chains start where nothing leads in
    for &s in &starts {
        if !has_prev[s] && !visited[s] {
            contours.push(trace(s, &mut visited));
        }
    }
    for &s in &starts {
        if !visited[s] {
            contours.push(trace(s, &mut visited));
        }
    }
    contours.retain(|c| c.points.len() >= 2);
    contours
}
