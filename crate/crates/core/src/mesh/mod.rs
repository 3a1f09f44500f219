//! Indexed polygon meshes, OBJ persistence, blendshape posing and
//! mirror-averaging.

mod obj;
mod rig;

pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use rig::{
    apply_blendshapes, load_activations, load_rig, parse_activations, parse_rig, ActivationVector,
    BlendshapeRig,
};

use nalgebra::{Point3, Vector3};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("face {face} must have 3 or 4 distinct vertex indices")]
    BadFace { face: usize },
    #[error("mesh has no vertices")]
    Empty,
    #[error("target `{name}` does not match the base topology")]
    TopologyMismatch { name: String },
    #[error("max_level must be positive, got {0}")]
    BadMaxLevel(f64),
    #[error("unknown activation `{0}`")]
    UnknownActivation(String),
    #[error("activation `{name}` level {level} outside [0, {max}]")]
    LevelOutOfRange { name: String, level: f64, max: f64 },
}

/// Polygon mesh with triangle and quad faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh, checking face arity and index bounds.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let mesh = Mesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let count = self.vertices.len();
        for (fi, face) in self.faces.iter().enumerate() {
            if face.len() != 3 && face.len() != 4 {
                return Err(MeshError::BadFace { face: fi });
            }
            for (k, &index) in face.iter().enumerate() {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index,
                        count,
                    });
                }
                if face[..k].contains(&index) {
                    return Err(MeshError::BadFace { face: fi });
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Triangle fan over every face, used only for rasterization.
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.faces.iter().flat_map(|face| {
            (1..face.len() - 1).map(move |k| [face[0], face[k], face[k + 1]])
        })
    }

    /// Newell normal of a face, normalized. Zero for degenerate faces.
    pub fn face_normal(&self, face: &[usize]) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        for (k, &i) in face.iter().enumerate() {
            let a = self.vertices[i];
            let b = self.vertices[face[(k + 1) % face.len()]];
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl BoundingBox {
    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

pub fn bounding_box(mesh: &Mesh) -> Result<BoundingBox, MeshError> {
    let first = *mesh.vertices.first().ok_or(MeshError::Empty)?;
    let (min, max) = mesh
        .vertices
        .iter()
        .fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v)));
    Ok(BoundingBox { min, max })
}

fn reflect_x(p: &Point3<f64>, plane_x: f64) -> Point3<f64> {
    Point3::new(2.0 * plane_x - p.x, p.y, p.z)
}

/// Symmetrizes a mesh about the plane `x = plane_x`.
///
/// Every vertex is averaged with the reflection of its mirror partner, the
/// vertex nearest to its own reflection (lowest index on ties). Topology is
/// untouched.
pub fn mirror_average(mesh: &Mesh, plane_x: f64) -> Result<Mesh, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| {
            let target = reflect_x(v, plane_x);
            let partner = nearest_vertex(&mesh.vertices, &target);
            let mirrored = reflect_x(&mesh.vertices[partner], plane_x);
            nalgebra::center(v, &mirrored)
        })
        .collect();
    Ok(Mesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

fn nearest_vertex(vertices: &[Point3<f64>], target: &Point3<f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, v) in vertices.iter().enumerate() {
        let d = (v - target).norm_squared();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Largest distance between a vertex and the reflection of its partner.
pub fn mirror_asymmetry(mesh: &Mesh, plane_x: f64) -> f64 {
    mesh.vertices
        .iter()
        .map(|v| {
            let partner = nearest_vertex(&mesh.vertices, &reflect_x(v, plane_x));
            (v - reflect_x(&mesh.vertices[partner], plane_x)).norm()
        })
        .fold(0.0, f64::max)
}
