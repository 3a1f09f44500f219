//! Run configuration: the tweakables plus frame size, alignment, render
//! settings and input paths, stored as flat `key = value` text.

use super::alignment::AlignmentTransform;
use crate::image::ImageFormat;
use crate::tweakables::{key_value_lines, ConfigError, Tweakables};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticFormat {
    Pgm,
    Png,
}

impl DiagnosticFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            DiagnosticFormat::Pgm => "pgm",
            DiagnosticFormat::Png => "png",
        }
    }

    pub fn image_format(&self) -> ImageFormat {
        match self {
            DiagnosticFormat::Pgm => ImageFormat::Pgm,
            DiagnosticFormat::Png => ImageFormat::Png,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tweakables: Tweakables,
    pub alignment: AlignmentTransform,
    /// Working resolution. `max_delta` is in pixels of this frame, so it
    /// should scale with it.
    pub width: usize,
    pub height: usize,
    /// Pixels darker than this count as ink.
    pub binarize_threshold: f64,
    pub ambient: f64,
    pub diagnostic_format: DiagnosticFormat,
    pub sketch: Option<PathBuf>,
    pub rig: Option<PathBuf>,
    pub activations: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tweakables: Tweakables::default(),
            alignment: AlignmentTransform::default(),
            width: 91,
            height: 200,
            binarize_threshold: 0.5,
            ambient: 0.1,
            diagnostic_format: DiagnosticFormat::Png,
            sketch: None,
            rig: None,
            activations: None,
            out_dir: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tweakables.validate()?;
        self.alignment
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.width < 3 || self.height < 3 {
            return Err(ConfigError::Invalid("width and height must be at least 3".into()));
        }
        if !(0.0..=1.0).contains(&self.binarize_threshold) || !(0.0..=1.0).contains(&self.ambient) {
            return Err(ConfigError::Invalid(
                "binarize_threshold and ambient must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Sets one key; unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if self.tweakables.set(key, value)? {
            return Ok(());
        }
        match key {
            "width" => self.width = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "binarize_threshold" => self.binarize_threshold = parse(key, value)?,
            "ambient" => self.ambient = parse(key, value)?,
            "align_translate_x" => self.alignment.translate[0] = parse(key, value)?,
            "align_translate_y" => self.alignment.translate[1] = parse(key, value)?,
            "align_scale" => self.alignment.scale = parse(key, value)?,
            "diagnostic_format" => {
                self.diagnostic_format = match value.to_ascii_lowercase().as_str() {
                    "pgm" => DiagnosticFormat::Pgm,
                    "png" => DiagnosticFormat::Png,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "sketch" => self.sketch = Some(value.into()),
            "rig" => self.rig = Some(value.into()),
            "activations" => self.activations = Some(value.into()),
            "out_dir" => self.out_dir = Some(value.into()),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for kv in key_value_lines(text) {
            let (line, key, value) = kv?;
            cfg.set(key, value).map_err(|e| ConfigError::Syntax {
                line,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.sketch, &mut cfg.rig, &mut cfg.activations, &mut cfg.out_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.tweakables.to_text();
        out.push_str(&format!("width = {}\n", self.width));
        out.push_str(&format!("height = {}\n", self.height));
        out.push_str(&format!("binarize_threshold = {}\n", self.binarize_threshold));
        out.push_str(&format!("ambient = {}\n", self.ambient));
        out.push_str(&format!("align_translate_x = {}\n", self.alignment.translate[0]));
        out.push_str(&format!("align_translate_y = {}\n", self.alignment.translate[1]));
        out.push_str(&format!("align_scale = {}\n", self.alignment.scale));
        out.push_str(&format!("diagnostic_format = {}\n", self.diagnostic_format.extension()));
        let paths = [
            ("sketch", &self.sketch),
            ("rig", &self.rig),
            ("activations", &self.activations),
            ("out_dir", &self.out_dir),
        ];
        for (key, p) in paths {
            if let Some(p) = p {
                out.push_str(&format!("{key} = {}\n", p.display()));
            }
        }
        out
    }
}
