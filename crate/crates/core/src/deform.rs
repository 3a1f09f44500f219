//! Snake motion → per-pixel deltas → per-vertex displacements → soft-select
//! mesh edit.

use crate::image::GrayImage;
use crate::mesh::{bounding_box, mirror_average, Mesh, MeshError};
use crate::raster::{nearest_vertex_for_pixel, CameraFront, VertexPixelMap};
use crate::snake::SnakePair;
use crate::tweakables::Tweakables;
use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("contour {contour}: input has {input} points, output has {output}")]
    LengthMismatch {
        contour: usize,
        input: usize,
        output: usize,
    },
    #[error("vertex-pixel map is empty")]
    EmptyMap,
    #[error("soft select distance must be positive, got {0}")]
    BadRadius(f64),
    #[error("displacement refers to vertex {vertex} of a {count}-vertex mesh")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("displacement for vertex {0} is not finite")]
    NonFinite(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// One snake sample: where the output point landed and how far it must go
/// to reach the sketch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDelta {
    pub target: Point2<f64>,
    /// Input point minus output point, in pixels.
    pub delta: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEntry {
    pub delta: Vector2<f64>,
    pub count: usize,
}

/// Averaged deltas keyed by integer pixel `(x, y)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaField {
    entries: BTreeMap<(i64, i64), DeltaEntry>,
}

impl DeltaField {
    /// Builds a field from precomputed entries; later duplicates win.
    pub fn from_entries(entries: impl IntoIterator<Item = ((i64, i64), DeltaEntry)>) -> Self {
        DeltaField {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<(i64, i64), DeltaEntry> {
        &self.entries
    }

    pub fn get(&self, x: i64, y: i64) -> Option<&DeltaEntry> {
        self.entries.get(&(x, y))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of samples that went into the field.
    pub fn sample_count(&self) -> usize {
        self.entries.values().map(|e| e.count).sum()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.entries.values().map(|e| e.delta.norm()).fold(0.0, f64::max)
    }

    /// Intensity image of delta magnitudes, `max_delta` mapping to white.
    pub fn magnitude_image(&self, width: usize, height: usize, max_delta: f64) -> GrayImage {
        let mut img = GrayImage::filled(width, height, 0.0);
        let scale = if max_delta > 0.0 { max_delta } else { 1.0 };
        for (&(x, y), e) in &self.entries {
            if (0..width as i64).contains(&x) && (0..height as i64).contains(&y) {
                img.set(x as usize, y as usize, (e.delta.norm() / scale).min(1.0));
            }
        }
        img
    }
}

/// A discarded sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub contour: usize,
    pub point: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaCollection {
    pub field: DeltaField,
    pub rejections: Vec<Rejection>,
    /// Samples seen, accepted or not.
    pub samples: usize,
}

/// Groups accepted samples by rounded target pixel and averages them.
/// Samples are `(contour, point index, delta)`.
pub fn field_from_samples(
    samples: impl IntoIterator<Item = (usize, usize, PointDelta)>,
    max_delta_px: f64,
) -> DeltaCollection {
    let mut groups: BTreeMap<(i64, i64), Vec<Vector2<f64>>> = BTreeMap::new();
    let mut rejections = Vec::new();
    let mut total = 0;
    for (contour, point, s) in samples {
        total += 1;
        let magnitude = s.delta.norm();
        let finite = magnitude.is_finite() && s.target.x.is_finite() && s.target.y.is_finite();
        if !finite || magnitude > max_delta_px {
            rejections.push(Rejection {
                contour,
                point,
                magnitude,
            });
            continue;
        }
        let key = (s.target.x.round() as i64, s.target.y.round() as i64);
        groups.entry(key).or_default().push(s.delta);
    }
    let entries = groups
        .into_iter()
        .map(|(key, mut deltas)| {
            // fixed summation order, so the mean does not depend on input order
            deltas.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
            let sum = deltas.iter().fold(Vector2::zeros(), |acc, d| acc + d);
            let count = deltas.len();
            (
                key,
                DeltaEntry {
                    delta: sum / count as f64,
                    count,
                },
            )
        })
        .collect();
    DeltaCollection {
        field: DeltaField { entries },
        rejections,
        samples: total,
    }
}

pub fn collect_deltas(pairs: &[SnakePair], tw: &Tweakables) -> Result<DeltaCollection, DeformError> {
    for pair in pairs {
        if pair.input.len() != pair.output.len() {
            return Err(DeformError::LengthMismatch {
                contour: pair.contour,
                input: pair.input.len(),
                output: pair.output.len(),
            });
        }
    }
    let samples = pairs.iter().flat_map(|pair| {
        pair.input
            .points
            .iter()
            .zip(&pair.output.points)
            .enumerate()
            .map(move |(i, (a, b))| {
                (
                    pair.contour,
                    i,
                    PointDelta {
                        target: *b,
                        delta: a - b,
                    },
                )
            })
    });
    Ok(field_from_samples(samples, tw.max_delta_px))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexDisplacement {
    pub vertex: usize,
    /// Model units; z is always 0.
    pub displacement: Vector3<f64>,
}

/// Maps every field entry to its vertex and converts pixels to model units.
/// Entries landing on the same vertex are averaged. Output is sorted by
/// vertex.
pub fn resolve_vertex_displacements(
    field: &DeltaField,
    map: &VertexPixelMap,
    cam: &CameraFront,
    tw: &Tweakables,
) -> Result<Vec<VertexDisplacement>, DeformError> {
    if map.is_empty() {
        return Err(DeformError::EmptyMap);
    }
    let s = cam.scale();
    let mut per_vertex: BTreeMap<usize, (Vector3<f64>, usize)> = BTreeMap::new();
    for (&(x, y), entry) in field.entries() {
        let vertex = nearest_vertex_for_pixel(map, (x as f64, y as f64), tw.low_depth_preference)
            .ok_or(DeformError::EmptyMap)?;
        let d = Vector3::new(entry.delta.x / s, -entry.delta.y / s, 0.0);
        let slot = per_vertex.entry(vertex).or_insert((Vector3::zeros(), 0));
        slot.0 += d;
        slot.1 += 1;
    }
    Ok(per_vertex
        .into_iter()
        .map(|(vertex, (sum, n))| VertexDisplacement {
            vertex,
            displacement: sum / n as f64,
        })
        .collect())
}

/// Buckets vertices into cubes of side `cell` for radius queries.
struct VertexGrid {
    cell: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl VertexGrid {
    fn new(points: &[Point3<f64>], cell: f64) -> Self {
        let mut buckets: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        VertexGrid { cell, buckets }
    }

    fn key(p: &Point3<f64>, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    fn near(&self, p: &Point3<f64>) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky, kz) = Self::key(p, self.cell);
        (-1..=1).flat_map(move |dz| {
            (-1..=1).flat_map(move |dy| {
                (-1..=1).flat_map(move |dx| {
                    self.buckets
                        .get(&(kx + dx, ky + dy, kz + dz))
                        .into_iter()
                        .flatten()
                        .copied()
                })
            })
        })
    }
}

/// Applies every displacement as a soft selection around its vertex.
///
/// Weights use the undeformed positions: a vertex at distance `r < ssd`
/// from the center receives `curve(1 − r/ssd)·d`, and contributions from all
/// entries add up. The result does not depend on the order of `disps`.
pub fn apply_soft_transforms(
    mesh: &Mesh,
    disps: &[VertexDisplacement],
    tw: &Tweakables,
) -> Result<Mesh, DeformError> {
    let ssd = tw.soft_select_distance;
    if !(ssd > 0.0 && ssd.is_finite()) {
        return Err(DeformError::BadRadius(ssd));
    }
    let count = mesh.vertices.len();
    let mut ordered = disps.to_vec();
    for d in &ordered {
        if d.vertex >= count {
            return Err(DeformError::VertexOutOfRange {
                vertex: d.vertex,
                count,
            });
        }
        if !d.displacement.iter().all(|v| v.is_finite()) {
            return Err(DeformError::NonFinite(d.vertex));
        }
    }
    let bits = |d: &VertexDisplacement| d.displacement.map(f64::to_bits);
    ordered.sort_by(|a, b| a.vertex.cmp(&b.vertex).then_with(|| bits(a).as_slice().cmp(bits(b).as_slice())));

    let original = &mesh.vertices;
    let mut offsets = vec![Vector3::zeros(); count];
    if !ordered.is_empty() {
        let grid = VertexGrid::new(original, ssd);
        let mut hits = Vec::new();
        for d in &ordered {
            let center = original[d.vertex];
            hits.clear();
            hits.extend(grid.near(&center));
            hits.sort_unstable();
            for &v in &hits {
                let r = (original[v] - center).norm();
                if r < ssd {
                    offsets[v] += d.displacement * tw.soft_select_curve.weight(1.0 - r / ssd);
                }
            }
        }
    }
    let vertices: Vec<Point3<f64>> = original.iter().zip(&offsets).map(|(p, o)| p + o).collect();
    let moved = Mesh {
        vertices,
        faces: mesh.faces.clone(),
    };
    if tw.mirror_output && !moved.is_empty() {
        let plane = bounding_box(mesh)?.center().x;
        return Ok(mirror_average(&moved, plane)?);
    }
    Ok(moved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::uv_sphere;
    use crate::raster::project_vertices;
    use crate::snake::Snake;
    use crate::tweakables::SnakeMode;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(contour: usize, input: &[(f64, f64)], output: &[(f64, f64)]) -> SnakePair {
        let snake = |pts: &[(f64, f64)]| Snake {
            points: pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            mode: SnakeMode::Free,
        };
        SnakePair {
            contour,
            input: snake(input),
            output: snake(output),
            iterations: 1,
            converged: true,
        }
    }

    #[test]
    fn stationary_snake_gives_zero_deltas() {
        let pts = [(1.0, 2.0), (3.0, 4.0), (5.5, 6.2)];
        let c = collect_deltas(&[pair(0, &pts, &pts)], &Tweakables::default()).unwrap();
        assert_eq!(c.field.len(), 3);
        assert!(c.field.entries().values().all(|e| e.delta == Vector2::zeros() && e.count == 1));
        assert!(c.rejections.is_empty());
    }

    #[test]
    fn samples_on_one_pixel_are_averaged() {
        let c = collect_deltas(
            &[pair(0, &[(12.0, 5.0), (14.1, 5.2)], &[(10.0, 5.0), (10.1, 5.2)])],
            &Tweakables::default(),
        )
        .unwrap();
        let e = c.field.get(10, 5).unwrap();
        assert_eq!(e.count, 2);
        assert!((e.delta - Vector2::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn large_delta_is_rejected_and_reported() {
        let c = collect_deltas(
            &[pair(4, &[(0.0, 0.0), (30.0, 16.0)], &[(1.0, 0.0), (30.0, 36.0)])],
            &Tweakables::default(),
        )
        .unwrap();
        assert_eq!(c.field.len(), 1);
        assert_eq!(
            c.rejections,
            vec![Rejection {
                contour: 4,
                point: 1,
                magnitude: 20.0
            }]
        );
        assert_eq!(c.samples, 2);
    }

    #[test]
    fn mismatched_pair_is_an_error() {
        let p = pair(0, &[(0.0, 0.0), (1.0, 1.0)], &[(0.0, 0.0)]);
        assert!(matches!(
            collect_deltas(&[p], &Tweakables::default()),
            Err(DeformError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn permutation_invariant_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut samples: Vec<_> = (0..500)
            .map(|i| {
                (
                    0,
                    i,
                    PointDelta {
                        target: Point2::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)),
                        delta: Vector2::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)),
                    },
                )
            })
            .collect();
        let a = field_from_samples(samples.clone(), 15.0);
        samples.shuffle(&mut rng);
        let b = field_from_samples(samples, 15.0);
        assert_eq!(a.field, b.field);
    }

    fn grid_mesh(n: usize, spacing: f64) -> Mesh {
        let vertices = (0..n * n)
            .map(|i| Point3::new((i % n) as f64 * spacing, (i / n) as f64 * spacing, 0.0))
            .collect();
        let mut faces = Vec::new();
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let i = y * n + x;
                faces.push(vec![i, i + 1, i + n + 1, i + n]);
            }
        }
        Mesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn resolve_converts_units_and_averages() {
        let mesh = grid_mesh(5, 1.0);
        let cam = CameraFront::for_mesh(&mesh, 40, 40).unwrap();
        let map = project_vertices(&mesh, &cam).unwrap();
        let s = cam.scale();
        let tw = Tweakables::default();
        assert!(resolve_vertex_displacements(&DeltaField::default(), &map, &cam, &tw)
            .unwrap()
            .is_empty());

        // center vertex (2, 2) projects to the image center
        let [px, py, _] = cam.project(&mesh.vertices[12]);
        let single = field_from_samples(
            [(0, 0, PointDelta { target: Point2::new(px, py), delta: Vector2::new(s, 0.0) })],
            f64::INFINITY,
        );
        let d = resolve_vertex_displacements(&single.field, &map, &cam, &tw).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].vertex, 12);
        assert!((d[0].displacement - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);

        let two = field_from_samples(
            [
                (0, 0, PointDelta { target: Point2::new(px, py), delta: Vector2::new(2.0, 0.0) }),
                (0, 1, PointDelta { target: Point2::new(px + 1.0, py), delta: Vector2::new(0.0, 2.0) }),
            ],
            15.0,
        );
        assert_eq!(two.field.len(), 2);
        let d = resolve_vertex_displacements(&two.field, &map, &cam, &tw).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].displacement - Vector3::new(1.0 / s, -1.0 / s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn linear_falloff_endpoints() {
        let mesh = Mesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 0.5, 0.0)],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let d = Vector3::new(0.25, -0.5, 0.0);
        let out = apply_soft_transforms(
            &mesh,
            &[VertexDisplacement {
                vertex: 0,
                displacement: d,
            }],
            &Tweakables::default(),
        )
        .unwrap();
        assert_eq!(out.vertices[0], mesh.vertices[0] + d);
        assert_eq!(out.vertices[1], mesh.vertices[1]);
        assert!((out.vertices[2] - (mesh.vertices[2] + d / 2.0)).norm() < 1e-15);
        assert_eq!(out.faces, mesh.faces);
    }

    #[test]
    fn empty_and_zero_displacements_are_identity() {
        let mesh = uv_sphere(1.0, 16, 8);
        let tw = Tweakables::default();
        assert_eq!(apply_soft_transforms(&mesh, &[], &tw).unwrap(), mesh);
        let zeros: Vec<_> = (0..mesh.vertices.len())
            .map(|vertex| VertexDisplacement {
                vertex,
                displacement: Vector3::zeros(),
            })
            .collect();
        assert_eq!(apply_soft_transforms(&mesh, &zeros, &tw).unwrap(), mesh);
    }

    #[test]
    fn bad_radius_and_vertex() {
        let mesh = uv_sphere(1.0, 8, 4);
        let tw = Tweakables {
            soft_select_distance: 0.0,
            ..Tweakables::default()
        };
        assert!(matches!(apply_soft_transforms(&mesh, &[], &tw), Err(DeformError::BadRadius(_))));
        let bad = VertexDisplacement {
            vertex: 10_000,
            displacement: Vector3::zeros(),
        };
        assert!(apply_soft_transforms(&mesh, &[bad], &Tweakables::default()).is_err());
    }

    #[test]
    fn mirror_output_symmetrizes() {
        let mesh = grid_mesh(5, 1.0);
        let tw = Tweakables {
            mirror_output: true,
            soft_select_distance: 0.5,
            ..Tweakables::default()
        };
        let d = VertexDisplacement {
            vertex: 10,
            displacement: Vector3::new(0.0, 0.2, 0.0),
        };
        let out = apply_soft_transforms(&mesh, &[d], &tw).unwrap();
        assert!((out.vertices[10].y - 2.1).abs() < 1e-12);
        assert!((out.vertices[14].y - 2.1).abs() < 1e-12);
    }

    fn brute_force(mesh: &Mesh, disps: &[VertexDisplacement], ssd: f64) -> Vec<Point3<f64>> {
        mesh.vertices
            .iter()
            .map(|v| {
                let mut p = *v;
                for d in disps {
                    let r = (v - mesh.vertices[d.vertex]).norm();
                    if r < ssd {
                        p += d.displacement * (1.0 - r / ssd);
                    }
                }
                p
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn soft_select_matches_brute_force_and_keeps_z(
            seed in 0u64..1000,
            ssd in 0.2f64..1.5,
            k in 0usize..12,
        ) {
            let mesh = uv_sphere(1.0, 12, 8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let disps: Vec<_> = (0..k)
                .map(|_| VertexDisplacement {
                    vertex: rng.random_range(0..mesh.vertices.len()),
                    displacement: Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0),
                })
                .collect();
            let tw = Tweakables { soft_select_distance: ssd, ..Tweakables::default() };
            let out = apply_soft_transforms(&mesh, &disps, &tw).unwrap();
            let expected = brute_force(&mesh, &disps, ssd);
            for (i, (a, b)) in out.vertices.iter().zip(&expected).enumerate() {
                prop_assert!((a - b).norm() < 1e-12);
                prop_assert_eq!(a.z, mesh.vertices[i].z);
                if a != &mesh.vertices[i] {
                    let inside = disps.iter().any(|d| (mesh.vertices[i] - mesh.vertices[d.vertex]).norm() < ssd);
                    prop_assert!(inside);
                }
            }
        }
    }
}
