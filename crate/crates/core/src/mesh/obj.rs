use super::{Mesh, MeshError};
use nalgebra::Point3;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Reads the `v` and `f` records of a Wavefront OBJ file.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text)
}

pub fn parse_obj(text: &str) -> Result<Mesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        let err = |message: String| MeshError::Parse {
            line: lineno + 1,
            message,
        };
        match fields.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    let field = fields
                        .next()
                        .ok_or_else(|| err("vertex needs three coordinates".into()))?;
                    *c = field
                        .parse()
                        .map_err(|_| err(format!("bad coordinate `{field}`")))?;
                }
                vertices.push(Point3::from(xyz));
            }
            Some("f") => {
                let mut face = Vec::new();
                for field in fields {
                    let index = field.split('/').next().unwrap_or("");
                    let index: i64 = index
                        .parse()
                        .map_err(|_| err(format!("bad face index `{field}`")))?;
                    let resolved = match index {
                        0 => return Err(err("face index 0 is invalid".into())),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 {
                        return Err(err(format!("face index {index} precedes the first vertex")));
                    }
                    face.push(resolved as usize);
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(MeshError::Empty);
    }
    Mesh::new(vertices, faces)
}

/// Serializes a mesh as ASCII OBJ text.
pub fn write_obj(mesh: &Mesh) -> Result<String, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    mesh.validate()?;
    let mut out = String::with_capacity(mesh.vertices.len() * 40);
    for v in &mesh.vertices {
        // shortest representation that parses back to the same f64
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for face in &mesh.faces {
        out.push('f');
        for i in face {
            write!(out, " {}", i + 1).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let text = write_obj(mesh)?;
    fs::write(path, text).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })
}
