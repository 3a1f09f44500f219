//! Synthetic meshes, rigs and images for tests, benchmarks and demos.

use crate::image::GrayImage;
use crate::mesh::{BlendshapeRig, Mesh};
use nalgebra::{Point2, Point3, Vector3};
use std::f64::consts::PI;

pub fn unit_cube() -> Mesh {
    let mut vertices = Vec::new();
    for i in 0..8 {
        let c = |bit: usize| if i & bit != 0 { 0.5 } else { -0.5 };
        vertices.push(Point3::new(c(1), c(2), c(4)));
    }
    let faces = vec![
        vec![0, 2, 3, 1],
        vec![4, 5, 7, 6],
        vec![0, 1, 5, 4],
        vec![2, 6, 7, 3],
        vec![0, 4, 6, 2],
        vec![1, 3, 7, 5],
    ];
    Mesh::new(vertices, faces).expect("valid cube")
}

/// UV sphere with poles on ±Y and outward, counter-clockwise faces.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> Mesh {
    ellipsoid(Vector3::new(radius, radius, radius), segments, rings)
}

/// UV ellipsoid with semi-axes `radii`, poles on ±Y. Vertex 0 is the north
/// pole, the last vertex the south pole.
pub fn ellipsoid(radii: Vector3<f64>, segments: usize, rings: usize) -> Mesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = vec![Point3::new(0.0, radii.y, 0.0)];
    for r in 1..rings {
        let phi = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let theta = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(Point3::new(
                radii.x * phi.sin() * theta.sin(),
                radii.y * phi.cos(),
                radii.z * phi.sin() * theta.cos(),
            ));
        }
    }
    vertices.push(Point3::new(0.0, -radii.y, 0.0));
    let south = vertices.len() - 1;
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push(vec![0, ring(1, s), ring(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            faces.push(vec![ring(r, s), ring(r + 1, s), ring(r + 1, s + 1), ring(r, s + 1)]);
        }
    }
    for s in 0..segments {
        faces.push(vec![ring(rings - 1, s), south, ring(rings - 1, s + 1)]);
    }
    Mesh::new(vertices, faces).expect("valid ellipsoid")
}

fn bump(p: &Point3<f64>, center: (f64, f64), sigma: (f64, f64)) -> f64 {
    let dx = (p.x - center.0) / sigma.0;
    let dy = (p.y - center.1) / sigma.1;
    (-0.5 * (dx * dx + dy * dy)).exp()
}

/// Mesh with the same topology as `base`, each vertex moved by `f`.
fn displaced(base: &Mesh, f: impl Fn(&Point3<f64>) -> Vector3<f64>) -> Mesh {
    Mesh {
        vertices: base.vertices.iter().map(|p| p + f(p)).collect(),
        faces: base.faces.clone(),
    }
}

/// Stylized head about 25 units tall with nose, brows, eye sockets and a
/// mouth groove. Fits a 91×200 frame.
pub fn face_mesh() -> Mesh {
    let head = ellipsoid(Vector3::new(5.2, 12.5, 6.0), 64, 64);
    displaced(&head, |p| {
        if p.z <= 0.0 {
            return Vector3::zeros();
        }
        let front = (p.z / 6.0).clamp(0.0, 1.0);
        let mut dz = 2.2 * bump(p, (0.0, 0.5), (0.7, 2.2));
        dz += 0.8 * (bump(p, (-2.0, 4.2), (1.4, 0.45)) + bump(p, (2.0, 4.2), (1.4, 0.45)));
        dz -= 1.2 * (bump(p, (-2.0, 3.0), (0.9, 0.7)) + bump(p, (2.0, 3.0), (0.9, 0.7)));
        dz -= 0.9 * bump(p, (0.0, -4.0), (1.8, 0.35));
        Vector3::new(0.0, 0.0, dz * front)
    })
}

/// [`face_mesh`] with three targets: `jaw_open`, `brow_raise`, `smile`.
/// Activation levels run from 0 to 100.
pub fn face_rig() -> BlendshapeRig {
    let base = face_mesh();
    let jaw = displaced(&base, |p| {
        let t = ((-3.5 - p.y) / 9.0).clamp(0.0, 1.0);
        Vector3::new(0.0, -1.6 * t, 0.3 * t)
    });
    let brow = displaced(&base, |p| {
        let w = bump(p, (-2.0, 4.2), (1.8, 0.9)) + bump(p, (2.0, 4.2), (1.8, 0.9));
        Vector3::new(0.0, 0.8 * w * (p.z > 0.0) as u8 as f64, 0.0)
    });
    let smile = displaced(&base, |p| {
        let l = bump(p, (-1.6, -4.0), (0.9, 0.8));
        let r = bump(p, (1.6, -4.0), (0.9, 0.8));
        let front = (p.z > 0.0) as u8 as f64;
        Vector3::new(0.5 * (r - l), 0.7 * (l + r), 0.0) * front
    });
    BlendshapeRig::new(
        base,
        vec![
            ("jaw_open".to_string(), jaw),
            ("brow_raise".to_string(), brow),
            ("smile".to_string(), smile),
        ],
        100.0,
    )
    .expect("consistent rig")
}

/// Dark disk centered in the frame: black inside `radius`, brightening
/// linearly to white over `halo` pixels outside it.
pub fn halo_disk(width: usize, height: usize, radius: f64, halo: f64) -> GrayImage {
    let (cx, cy) = disk_center(width, height);
    GrayImage::from_fn(width, height, |x, y| {
        let r = (x as f64 - cx).hypot(y as f64 - cy);
        ((r - radius) / halo).clamp(0.0, 1.0)
    })
}

/// Center used by [`halo_disk`].
pub fn disk_center(width: usize, height: usize) -> (f64, f64) {
    (width as f64 / 2.0 - 0.5, height as f64 / 2.0 - 0.5)
}

/// `n` points evenly spaced on a circle, counter-clockwise from +x.
pub fn circle(center: (f64, f64), radius: f64, n: usize) -> Vec<Point2<f64>> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Point2::new(center.0 + radius * t.cos(), center.1 + radius * t.sin())
        })
        .collect()
}

/// White image with `cols × rows` dark elliptical rings, 1.5 px wide at
/// the 0.5 level with a one-pixel antialiasing ramp.
pub fn ring_sketch(width: usize, height: usize, cols: usize, rows: usize) -> GrayImage {
    let (cw, ch) = (width as f64 / cols as f64, height as f64 / rows as f64);
    let (rx, ry) = (0.3 * cw, 0.3 * ch);
    GrayImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let (i, j) = ((fx / cw).floor(), (fy / ch).floor());
        let (cx, cy) = ((i + 0.5) * cw, (j + 0.5) * ch);
        let (u, v) = ((fx - cx) / rx, (fy - cy) / ry);
        let r = (u * u + v * v).sqrt();
        let px = (r - 1.0).abs() * rx.min(ry);
        (px - 0.25).clamp(0.0, 1.0)
    })
}

/// [`uv_sphere`] pushed inward around the +X direction: vertices within
/// `half_angle` radians of +X move toward the center by up to
/// `depth·radius`, with a cosine profile.
pub fn dented_sphere(radius: f64, segments: usize, rings: usize, depth: f64, half_angle: f64) -> Mesh {
    let sphere = uv_sphere(radius, segments, rings);
    displaced(&sphere, |p| {
        let angle = (p.x / radius).clamp(-1.0, 1.0).acos();
        if angle >= half_angle {
            return Vector3::zeros();
        }
        let w = 0.5 * (1.0 + (PI * angle / half_angle).cos());
        -p.coords * depth * w
    })
}

/// Line drawing of a render's silhouette: covered pixels (darker than the
/// white background) with an uncovered 4-neighbor become black, all else
/// white.
pub fn silhouette_outline(render: &GrayImage) -> GrayImage {
    let (w, h) = (render.width() as isize, render.height() as isize);
    let covered = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && render.get(x as usize, y as usize) < 1.0;
    GrayImage::from_fn(render.width(), render.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let edge = covered(x, y) && [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| !covered(x + dx, y + dy));
        if edge {
            0.0
        } else {
            1.0
        }
    })
}
