//! Orthographic front-view camera, flat-shaded z-buffer rendering, and the
//! vertex ↔ pixel correspondence used to turn image deltas back into mesh
//! edits.
//!
//! Pixel coordinates put the center of pixel `(i, j)` at `(i, j)`; `y` grows
//! downward.

use crate::image::GrayImage;
use crate::mesh::{bounding_box, BoundingBox, Mesh, MeshError};
use nalgebra::Point3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("mesh bounding box has zero height")]
    DegenerateBounds,
    #[error("image size must be positive, got {0}x{1}")]
    BadImageSize(usize, usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Orthographic camera looking down −Z. The vertical span of the mesh
/// bounding box fills the image height; the box center maps to the image
/// center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFront {
    pub width: usize,
    pub height: usize,
    center_x: f64,
    center_y: f64,
    scale: f64,
}

impl CameraFront {
    pub fn fit(bbox: &BoundingBox, width: usize, height: usize) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::BadImageSize(width, height));
        }
        let span = bbox.height();
        if !(span > 0.0 && span.is_finite()) {
            return Err(RasterError::DegenerateBounds);
        }
        let c = bbox.center();
        Ok(CameraFront {
            width,
            height,
            center_x: c.x,
            center_y: c.y,
            scale: height as f64 / span,
        })
    }

    pub fn for_mesh(mesh: &Mesh, width: usize, height: usize) -> Result<Self, RasterError> {
        Self::fit(&bounding_box(mesh)?, width, height)
    }

    /// Pixels per model unit.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Model point to `(pixel_x, pixel_y, depth)`; smaller depth is nearer.
    pub fn project(&self, p: &Point3<f64>) -> [f64; 3] {
        [
            (p.x - self.center_x) * self.scale + self.width as f64 / 2.0,
            self.height as f64 / 2.0 - (p.y - self.center_y) * self.scale,
            -p.z,
        ]
    }

    /// Inverse of the `(x, y)` part of [`project`](Self::project).
    pub fn unproject(&self, px: f64, py: f64) -> (f64, f64) {
        (
            (px - self.width as f64 / 2.0) / self.scale + self.center_x,
            (self.height as f64 / 2.0 - py) / self.scale + self.center_y,
        )
    }
}

const GRID_CELL: f64 = 4.0;

/// Per-vertex projections of the posed mesh, with a uniform grid over the
/// projected points for nearest-vertex queries.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPixelMap {
    projections: Vec<[f64; 3]>,
    diagonal: f64,
    depth_min: f64,
    depth_range: f64,
    origin: (f64, f64),
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl VertexPixelMap {
    pub fn projections(&self) -> &[[f64; 3]] {
        &self.projections
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    /// Image diagonal in pixels, the screen-distance normalizer.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// Order-sensitive hash of every stored projection.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for p in &self.projections {
            for c in p {
                h ^= c.to_bits();
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    /// Normalized depth: 0 at the vertex nearest the camera, 1 at the farthest.
    pub fn depth_norm(&self, index: usize) -> f64 {
        if self.depth_range > 0.0 {
            (self.projections[index][2] - self.depth_min) / self.depth_range
        } else {
            0.0
        }
    }

    pub fn score(&self, index: usize, pixel: (f64, f64), low_depth_preference: f64) -> f64 {
        let [x, y, _] = self.projections[index];
        let d = (x - pixel.0).hypot(y - pixel.1) / self.diagonal;
        (1.0 - low_depth_preference) * d + low_depth_preference * self.depth_norm(index)
    }

    fn cell_of(&self, x: f64, y: f64) -> (isize, isize) {
        (
            ((x - self.origin.0) / GRID_CELL).floor() as isize,
            ((y - self.origin.1) / GRID_CELL).floor() as isize,
        )
    }
}

pub fn project_vertices(mesh: &Mesh, cam: &CameraFront) -> Result<VertexPixelMap, RasterError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty.into());
    }
    let projections: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| cam.project(v)).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for p in &projections {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let cols = ((hi[0] - lo[0]) / GRID_CELL).floor() as usize + 1;
    let rows = ((hi[1] - lo[1]) / GRID_CELL).floor() as usize + 1;
    let mut map = VertexPixelMap {
        diagonal: (cam.width as f64).hypot(cam.height as f64),
        depth_min: lo[2],
        depth_range: hi[2] - lo[2],
        origin: (lo[0], lo[1]),
        cols,
        rows,
        cells: vec![Vec::new(); cols * rows],
        projections,
    };
    for i in 0..map.projections.len() {
        let [x, y, _] = map.projections[i];
        let (cx, cy) = map.cell_of(x, y);
        let (cx, cy) = (cx.clamp(0, cols as isize - 1), cy.clamp(0, rows as isize - 1));
        map.cells[cy as usize * cols + cx as usize].push(i);
    }
    Ok(map)
}

/// Vertex minimizing `(1−p)·screen_distance/diagonal + p·depth_norm`, lowest
/// index on ties.
pub fn nearest_vertex_for_pixel(
    map: &VertexPixelMap,
    pixel: (f64, f64),
    low_depth_preference: f64,
) -> Option<usize> {
    if map.is_empty() {
        return None;
    }
    let p = low_depth_preference.clamp(0.0, 1.0);
    let (qx, qy) = map.cell_of(pixel.0, pixel.1);
    let qx = qx.clamp(0, map.cols as isize - 1);
    let qy = qy.clamp(0, map.rows as isize - 1);
    let max_ring = map.cols.max(map.rows) as isize;
    let mut best: Option<(f64, usize)> = None;
    for ring in 0..=max_ring {
        if let Some((score, _)) = best {
            // every point in this ring is at least (ring - 1) cells away
            let bound = (1.0 - p) * (ring - 1).max(0) as f64 * GRID_CELL / map.diagonal;
            if bound > score {
                break;
            }
        }
        for cy in (qy - ring)..=(qy + ring) {
            if cy < 0 || cy >= map.rows as isize {
                continue;
            }
            let on_edge_row = cy == qy - ring || cy == qy + ring;
            let step = if on_edge_row { 1 } else { (2 * ring).max(1) };
            let mut cx = qx - ring;
            while cx <= qx + ring {
                if cx >= 0 && cx < map.cols as isize {
                    for &i in &map.cells[cy as usize * map.cols + cx as usize] {
                        let s = map.score(i, pixel, p);
                        let better = match best {
                            None => true,
                            Some((bs, bi)) => s < bs || (s == bs && i < bi),
                        };
                        if better {
                            best = Some((s, i));
                        }
                    }
                }
                cx += step;
            }
        }
    }
    best.map(|(_, i)| i)
}

/// Rendering parameters; `ambient` is the intensity floor of lit geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadeSettings {
    pub ambient: f64,
}

impl Default for ShadeSettings {
    fn default() -> Self {
        ShadeSettings { ambient: 0.1 }
    }
}

/// Flat-shaded, z-buffered render on a white background. Light comes from
/// the camera, so intensity is `ambient + (1 − ambient)·max(0, n_z)`.
pub fn shade_render(mesh: &Mesh, cam: &CameraFront, settings: ShadeSettings) -> GrayImage {
    let (w, h) = (cam.width, cam.height);
    let mut color = vec![1.0; w * h];
    let mut depth = vec![f64::INFINITY; w * h];
    let projected: Vec<[f64; 3]> = mesh.vertices.iter().map(|v| cam.project(v)).collect();
    let ambient = settings.ambient.clamp(0.0, 1.0);

    for face in &mesh.faces {
        let lambert = mesh.face_normal(face).z.clamp(0.0, 1.0);
        let intensity = ambient + (1.0 - ambient) * lambert;
        for k in 1..face.len() - 1 {
            let tri = [projected[face[0]], projected[face[k]], projected[face[k + 1]]];
            raster_triangle(&tri, w, h, |idx, z| {
                if z < depth[idx] {
                    depth[idx] = z;
                    color[idx] = intensity;
                }
            });
        }
    }
    GrayImage::new(w, h, color).expect("intensities lie in [0, 1]")
}

fn raster_triangle(tri: &[[f64; 3]; 3], w: usize, h: usize, mut plot: impl FnMut(usize, f64)) {
    let [a, b, c] = tri;
    let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_x = a[0].min(b[0]).min(c[0]).ceil().max(0.0);
    let max_x = a[0].max(b[0]).max(c[0]).floor().min(w as f64 - 1.0);
    let min_y = a[1].min(b[1]).min(c[1]).ceil().max(0.0);
    let max_y = a[1].max(b[1]).max(c[1]).floor().min(h as f64 - 1.0);
    if min_x > max_x || min_y > max_y {
        return;
    }
    let edge = |p: &[f64; 3], q: &[f64; 3], x: f64, y: f64| {
        (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
    };
    for y in min_y as usize..=max_y as usize {
        for x in min_x as usize..=max_x as usize {
            let (fx, fy) = (x as f64, y as f64);
            let w0 = edge(b, c, fx, fy) / area;
            let w1 = edge(c, a, fx, fy) / area;
            let w2 = edge(a, b, fx, fy) / area;
            if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                plot(y * w + x, w0 * a[2] + w1 * b[2] + w2 * c[2]);
            }
        }
    }
}
