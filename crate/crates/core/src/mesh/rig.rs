use super::{load_obj, Mesh, MeshError};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Base mesh plus same-topology morph targets.
#[derive(Debug, Clone)]
pub struct BlendshapeRig {
    base: Mesh,
    targets: Vec<(String, Mesh)>,
    max_level: f64,
}

impl BlendshapeRig {
    pub fn new(base: Mesh, targets: Vec<(String, Mesh)>, max_level: f64) -> Result<Self, MeshError> {
        if !(max_level > 0.0 && max_level.is_finite()) {
            return Err(MeshError::BadMaxLevel(max_level));
        }
        if base.is_empty() {
            return Err(MeshError::Empty);
        }
        base.validate()?;
        for (name, target) in &targets {
            if target.vertices.len() != base.vertices.len() || target.faces != base.faces {
                return Err(MeshError::TopologyMismatch { name: name.clone() });
            }
        }
        Ok(BlendshapeRig {
            base,
            targets,
            max_level,
        })
    }

    pub fn base(&self) -> &Mesh {
        &self.base
    }

    pub fn targets(&self) -> &[(String, Mesh)] {
        &self.targets
    }

    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    pub fn target(&self, name: &str) -> Option<&Mesh> {
        self.targets.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }
}

/// Named activation levels in `[0, max_level]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivationVector {
    pub entries: BTreeMap<String, f64>,
}

impl ActivationVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, level: f64) -> Self {
        self.entries.insert(name.into(), level);
        self
    }
}

/// Poses the rig: `base + Σ (level / max_level) · (target − base)`.
pub fn apply_blendshapes(rig: &BlendshapeRig, act: &ActivationVector) -> Result<Mesh, MeshError> {
    let mut weighted = Vec::with_capacity(act.entries.len());
    for (name, &level) in &act.entries {
        let target = rig
            .target(name)
            .ok_or_else(|| MeshError::UnknownActivation(name.clone()))?;
        if !(level.is_finite() && (0.0..=rig.max_level).contains(&level)) {
            return Err(MeshError::LevelOutOfRange {
                name: name.clone(),
                level,
                max: rig.max_level,
            });
        }
        if level != 0.0 {
            weighted.push((level / rig.max_level, target));
        }
    }
    let vertices = rig
        .base
        .vertices
        .iter()
        .enumerate()
        .map(|(i, base)| {
            let offset = weighted
                .iter()
                .fold(nalgebra::Vector3::zeros(), |acc, (w, target)| {
                    acc + (target.vertices[i] - base) * *w
                });
            base + offset
        })
        .collect();
    Ok(Mesh {
        vertices,
        faces: rig.base.faces.clone(),
    })
}

fn key_values(text: &str) -> impl Iterator<Item = (usize, Result<(&str, &str), String>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let kv = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| format!("expected `key = value`, got `{line}`"));
        Some((i + 1, kv))
    })
}

pub fn parse_activations(text: &str) -> Result<ActivationVector, MeshError> {
    let mut act = ActivationVector::new();
    for (line, kv) in key_values(text) {
        let (name, value) = kv.map_err(|message| MeshError::Parse { line, message })?;
        let level = value.parse().map_err(|_| MeshError::Parse {
            line,
            message: format!("bad level `{value}`"),
        })?;
        act.entries.insert(name.to_string(), level);
    }
    Ok(act)
}

pub fn load_activations(path: impl AsRef<Path>) -> Result<ActivationVector, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_activations(&text)
}

/// Loads a rig manifest: `base = <obj>`, `max_level = <number>` and one
/// `<name> = <obj>` line per target. Paths are relative to the manifest.
pub fn load_rig(path: impl AsRef<Path>) -> Result<BlendshapeRig, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_rig(&text, |file| load_obj(dir.join(file)))
}

/// Parses manifest text, fetching each referenced mesh through `load`.
pub fn parse_rig(
    text: &str,
    mut load: impl FnMut(&str) -> Result<Mesh, MeshError>,
) -> Result<BlendshapeRig, MeshError> {
    let mut base = None;
    let mut max_level = None;
    let mut targets = Vec::new();
    for (line, kv) in key_values(text) {
        let (key, value) = kv.map_err(|message| MeshError::Parse { line, message })?;
        match key {
            "base" => base = Some(load(value)?),
            "max_level" => {
                max_level = Some(value.parse().map_err(|_| MeshError::Parse {
                    line,
                    message: format!("bad max_level `{value}`"),
                })?)
            }
            name => targets.push((name.to_string(), load(value)?)),
        }
    }
    let base = base.ok_or(MeshError::Parse {
        line: 0,
        message: "manifest has no `base` entry".into(),
    })?;
    let max_level = max_level.ok_or(MeshError::Parse {
        line: 0,
        message: "manifest has no `max_level` entry".into(),
    })?;
    BlendshapeRig::new(base, targets, max_level)
}
