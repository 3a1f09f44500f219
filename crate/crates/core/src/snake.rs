//! Active contours ("snakes") evolved over a reference image.
//!
//! Internal energy uses a membrane term (weight α, penalizing stretch) and a
//! thin-plate term (weight β, penalizing bending), assembled into a banded
//! matrix `A`. External energy is `−F` with `F = w_brightness·I + w_edge·G`,
//! so points climb `F`. Each step solves the semi-implicit update
//!
//! ```text
//! x ← (A + γ·Id)⁻¹ · (γ·x + ∂F/∂x)
//! y ← (A + γ·Id)⁻¹ · (γ·y + ∂F/∂y)
//! ```
//!
//! and saturates the per-point move at `max_step_px`.

use crate::image::{bilinear, GrayImage, ImageError};
use crate::imageproc::{gradient_magnitude, Contour};
use crate::tweakables::{SnakeMode, Tweakables};
use nalgebra::{DMatrix, DVector, Point2};
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};
use thiserror::Error;

/// Number of past configurations compared when testing convergence.
const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnakeError {
    #[error("{mode} snake needs at least {min} points, got {got}")]
    TooFewPoints {
        mode: SnakeMode,
        min: usize,
        got: usize,
    },
    #[error("snake point {0} is not finite")]
    NonFinite(usize),
    #[error("internal energy system is singular")]
    Singular,
    #[error("cancelled")]
    Cancelled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snake {
    pub points: Vec<Point2<f64>>,
    pub mode: SnakeMode,
}

impl Snake {
    pub fn new(points: Vec<Point2<f64>>, mode: SnakeMode) -> Result<Self, SnakeError> {
        let min = min_points(mode);
        if points.len() < min {
            return Err(SnakeError::TooFewPoints {
                mode,
                min,
                got: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(SnakeError::NonFinite(i));
        }
        Ok(Snake { points, mode })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn min_points(mode: SnakeMode) -> usize {
    match mode {
        SnakeMode::Periodic => 3,
        _ => 2,
    }
}

/// External energy landscape and its partial derivatives.
#[derive(Debug, Clone)]
pub struct ForceField {
    width: usize,
    height: usize,
    combined: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl ForceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn combined(&self) -> &[f64] {
        &self.combined
    }

    pub fn derivatives(&self) -> (&[f64], &[f64]) {
        (&self.dx, &self.dy)
    }

    /// Bilinear sample of `F`.
    pub fn value(&self, p: Point2<f64>) -> f64 {
        bilinear(&self.combined, self.width, self.height, p.x, p.y)
    }

    /// Bilinear sample of `(∂F/∂x, ∂F/∂y)`.
    pub fn force(&self, p: Point2<f64>) -> (f64, f64) {
        (
            bilinear(&self.dx, self.width, self.height, p.x, p.y),
            bilinear(&self.dy, self.width, self.height, p.x, p.y),
        )
    }

    fn clamp(&self, p: Point2<f64>) -> Point2<f64> {
        Point2::new(
            p.x.clamp(0.0, (self.width - 1) as f64),
            p.y.clamp(0.0, (self.height - 1) as f64),
        )
    }
}

pub fn build_force_field(reference: &GrayImage, tw: &Tweakables) -> Result<ForceField, ImageError> {
    let edges = gradient_magnitude(reference)?;
    let (w, h) = (reference.width(), reference.height());
    let combined: Vec<f64> = reference
        .pixels()
        .iter()
        .zip(edges.pixels())
        .map(|(i, g)| tw.w_brightness * i + tw.w_edge * g)
        .collect();
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        combined[y * w + x]
    };
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            dx[i] = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            dy[i] = (at(x, y + 1) - at(x, y - 1)) / 2.0;
        }
    }
    Ok(ForceField {
        width: w,
        height: h,
        combined,
        dx,
        dy,
    })
}

/// Internal-energy matrix `A` for `n` points.
///
/// Interior rows hold `−α·(1, −2, 1) + β·(1, −4, 6, −4, 1)`. Free ends
/// replace the first/last two rows with one-sided stencils `(1, −2, 1)` and
/// `(−1, 3, −3, 1)`; fixed ends zero the end row and put `(1, −2, 1)` in the
/// row next to it. Short chains that cannot hold those stencils get no
/// internal force at all.
pub fn internal_matrix(n: usize, alpha: f64, beta: f64, mode: SnakeMode) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    let stencil = [(-2, beta), (-1, -alpha - 4.0 * beta), (0, 2.0 * alpha + 6.0 * beta), (1, -alpha - 4.0 * beta), (2, beta)];
    for i in 0..n {
        for &(off, v) in &stencil {
            let j = i as isize + off;
            if mode == SnakeMode::Periodic || (0..n as isize).contains(&j) {
                a[(i, wrap(j))] += v;
            }
        }
    }
    match mode {
        SnakeMode::Periodic => {}
        SnakeMode::Free if n >= 4 => {
            a.row_mut(0).fill(0.0);
            a.row_mut(1).fill(0.0);
            a.row_mut(n - 1).fill(0.0);
            a.row_mut(n - 2).fill(0.0);
            for (k, v) in [1.0, -2.0, 1.0].into_iter().enumerate() {
                a[(0, k)] = v;
                a[(n - 1, n - 1 - k)] = v;
            }
            for (k, v) in [-1.0, 3.0, -3.0, 1.0].into_iter().enumerate() {
                a[(1, k)] = v;
                a[(n - 2, n - 1 - k)] = v;
            }
        }
        SnakeMode::Fixed if n >= 3 => {
            a.row_mut(0).fill(0.0);
            a.row_mut(1).fill(0.0);
            a.row_mut(n - 1).fill(0.0);
            a.row_mut(n - 2).fill(0.0);
            for (k, v) in [1.0, -2.0, 1.0].into_iter().enumerate() {
                a[(1, k)] = v;
                a[(n - 2, n - 1 - k)] = v;
            }
        }
        _ => a.fill(0.0),
    }
    a
}

/// Result of one snake evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub snake: Snake,
    pub iterations: usize,
    pub converged: bool,
    /// Largest single-iteration point move observed.
    pub max_move: f64,
}

pub fn evolve_snake(init: &Snake, field: &ForceField, tw: &Tweakables) -> Result<Evolution, SnakeError> {
    evolve_snake_with(init, field, tw, None, |_| {})
}

/// Like [`evolve_snake`], with an optional cancel flag and a per-iteration
/// observer that sees the snake after each step.
pub fn evolve_snake_with(
    init: &Snake,
    field: &ForceField,
    tw: &Tweakables,
    cancel: Option<&AtomicBool>,
    mut observe: impl FnMut(&[Point2<f64>]),
) -> Result<Evolution, SnakeError> {
    let snake = Snake::new(init.points.clone(), init.mode)?;
    let n = snake.len();
    let mode = snake.mode;
    let pinned = mode == SnakeMode::Fixed;
    let free_ends = mode == SnakeMode::Free;

    let system = internal_matrix(n, tw.continuity, tw.smoothness, mode)
        + DMatrix::identity(n, n) * tw.time_step;
    let inverse = system.try_inverse().ok_or(SnakeError::Singular)?;
    assert!(inverse.iter().all(|v| v.is_finite()), "singular snake system");

    let mut pts: Vec<Point2<f64>> = snake
        .points
        .iter()
        .enumerate()
        .map(|(i, &p)| if pinned && (i == 0 || i == n - 1) { p } else { field.clamp(p) })
        .collect();
    let mut history = vec![vec![Point2::origin(); n]; CONVERGENCE_WINDOW];
    let mut rhs_x = DVector::zeros(n);
    let mut rhs_y = DVector::zeros(n);
    let mut max_move: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;

    for it in 0..tw.max_iterations {
        if it % 64 == 0 && cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(SnakeError::Cancelled);
        }
        for (i, p) in pts.iter().enumerate() {
            let (mut fx, mut fy) = field.force(*p);
            let end = i == 0 || i == n - 1;
            if end && pinned {
                fx = 0.0;
                fy = 0.0;
            } else if end && free_ends {
                fx *= 2.0;
                fy *= 2.0;
            }
            rhs_x[i] = tw.time_step * p.x + fx;
            rhs_y[i] = tw.time_step * p.y + fy;
        }
        let next_x = &inverse * &rhs_x;
        let next_y = &inverse * &rhs_y;
        for (i, p) in pts.iter_mut().enumerate() {
            if pinned && (i == 0 || i == n - 1) {
                continue;
            }
            let (dx, dy) = (next_x[i] - p.x, next_y[i] - p.y);
            let len = dx.hypot(dy);
            let moved = if len > 0.0 {
                let scale = tw.max_step_px * (len / tw.max_step_px).tanh() / len;
                field.clamp(Point2::new(p.x + dx * scale, p.y + dy * scale))
            } else {
                *p
            };
            max_move = max_move.max((moved - *p).norm());
            *p = moved;
        }
        iterations = it + 1;
        observe(&pts);

        let slot = it % (CONVERGENCE_WINDOW + 1);
        if slot < CONVERGENCE_WINDOW {
            history[slot].clone_from(&pts);
        } else {
            let best = history
                .iter()
                .map(|old| {
                    old.iter()
                        .zip(&pts)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            if best < tw.convergence {
                converged = true;
                break;
            }
        }
    }
    Ok(Evolution {
        snake: Snake { points: pts, mode },
        iterations,
        converged,
        max_move,
    })
}

/// One evolved contour.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakePair {
    pub contour: usize,
    pub input: Snake,
    pub output: Snake,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedContour {
    pub contour: usize,
    pub reason: SnakeError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnakeBatch {
    pub pairs: Vec<SnakePair>,
    pub skipped: Vec<SkippedContour>,
}

/// Snake for a contour: duplicates dropped, closed contours made periodic.
pub fn snake_from_contour(contour: &Contour, open_mode: SnakeMode) -> Result<Snake, SnakeError> {
    let mut points = contour.points.clone();
    points.dedup();
    let mode = if contour.closed {
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        SnakeMode::Periodic
    } else {
        open_mode
    };
    Snake::new(points, mode)
}

/// Evolves every contour over the reference. Degenerate contours are skipped
/// and reported; output order follows input order.
pub fn run_snakes(contours: &[Contour], reference: &GrayImage, tw: &Tweakables) -> Result<SnakeBatch, ImageError> {
    let field = build_force_field(reference, tw)?;
    Ok(run_snakes_on_field(contours, &field, tw, None))
}

pub fn run_snakes_on_field(
    contours: &[Contour],
    field: &ForceField,
    tw: &Tweakables,
    cancel: Option<&AtomicBool>,
) -> SnakeBatch {
    let results: Vec<Result<SnakePair, SkippedContour>> = contours
        .par_iter()
        .enumerate()
        .map(|(index, contour)| {
            let skip = |reason| SkippedContour {
                contour: index,
                reason,
            };
            let input = snake_from_contour(contour, tw.snake_mode).map_err(skip)?;
            let evo = evolve_snake_with(&input, field, tw, cancel, |_| {}).map_err(skip)?;
            Ok(SnakePair {
                contour: index,
                input,
                output: evo.snake,
                iterations: evo.iterations,
                converged: evo.converged,
            })
        })
        .collect();
    let mut batch = SnakeBatch::default();
    for r in results {
        match r {
            Ok(pair) => batch.pairs.push(pair),
            Err(skip) => batch.skipped.push(skip),
        }
    }
    batch
}
