//! User-tunable parameters for contour matching and mesh deformation.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// Boundary behavior of a snake's end points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnakeMode {
    /// Ends move freely.
    #[default]
    Free,
    /// Ends are held in place.
    Fixed,
    /// The chain wraps: the last point neighbors the first.
    Periodic,
}

impl FromStr for SnakeMode {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(SnakeMode::Free),
            "fixed" => Ok(SnakeMode::Fixed),
            "periodic" => Ok(SnakeMode::Periodic),
            _ => Err(()),
        }
    }
}

impl fmt::Display for SnakeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnakeMode::Free => "free",
            SnakeMode::Fixed => "fixed",
            SnakeMode::Periodic => "periodic",
        })
    }
}

/// Soft-select falloff profile, evaluated on `t = 1 − distance/radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FalloffCurve {
    #[default]
    Linear,
}

impl FalloffCurve {
    pub fn weight(self, t: f64) -> f64 {
        match self {
            FalloffCurve::Linear => t,
        }
    }
}

impl FromStr for FalloffCurve {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(FalloffCurve::Linear),
            _ => Err(()),
        }
    }
}

impl fmt::Display for FalloffCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("linear")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tweakables {
    /// Side of the square structuring element used to close gaps.
    pub gap_close_side: usize,
    pub thin_iterations: usize,
    pub snake_mode: SnakeMode,
    /// Thin-plate (curvature) weight β.
    pub smoothness: f64,
    /// Membrane (spacing) weight α.
    pub continuity: f64,
    /// Semi-implicit step parameter γ.
    pub time_step: f64,
    pub max_step_px: f64,
    pub max_iterations: usize,
    pub convergence: f64,
    pub w_brightness: f64,
    pub w_edge: f64,
    pub max_delta_px: f64,
    pub low_depth_preference: f64,
    /// Soft-select radius in model units.
    pub soft_select_distance: f64,
    pub soft_select_curve: FalloffCurve,
    pub mirror_output: bool,
}

impl Default for Tweakables {
    fn default() -> Self {
        Tweakables {
            gap_close_side: 2,
            thin_iterations: 1,
            snake_mode: SnakeMode::Free,
            smoothness: 1.0,
            continuity: 0.1,
            time_step: 2.0,
            max_step_px: 1.0,
            max_iterations: 3000,
            convergence: 0.1,
            w_brightness: -5.0,
            w_edge: 1.0,
            max_delta_px: 15.0,
            low_depth_preference: 0.0,
            soft_select_distance: 1.0,
            soft_select_curve: FalloffCurve::Linear,
            mirror_output: false,
        }
    }
}

/// Config-file keys, in file order.
pub const KEYS: &[&str] = &[
    "gap_closing_side",
    "thinning_iterations",
    "snake_type",
    "snake_smoothness",
    "snake_continuity",
    "snake_time_stepping",
    "snake_max_step",
    "snake_max_iterations",
    "snake_convergence",
    "snake_brightness_weight",
    "snake_edge_weight",
    "max_delta",
    "low_depth_preference",
    "soft_select_distance",
    "soft_select_curve",
    "mirror_output",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl Tweakables {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.max_iterations < 1 {
            return fail("snake_max_iterations must be at least 1");
        }
        if !(self.max_step_px > 0.0) {
            return fail("snake_max_step must be positive");
        }
        if !(self.convergence > 0.0) {
            return fail("snake_convergence must be positive");
        }
        if !(self.time_step > 0.0) {
            return fail("snake_time_stepping must be positive");
        }
        if !(self.max_delta_px > 0.0) {
            return fail("max_delta must be positive");
        }
        if !(self.soft_select_distance > 0.0) {
            return fail("soft_select_distance must be positive");
        }
        if !(0.0..=1.0).contains(&self.low_depth_preference) {
            return fail("low_depth_preference must lie in [0, 1]");
        }
        if self.gap_close_side < 1 {
            return fail("gap_closing_side must be at least 1");
        }
        let finite = [
            self.smoothness,
            self.continuity,
            self.w_brightness,
            self.w_edge,
            self.max_delta_px,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("snake weights and max_delta must be finite");
        }
        Ok(())
    }

    /// Sets one field from its config key. Returns `Ok(false)` for keys this
    /// type does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "gap_closing_side" => self.gap_close_side = parse(key, value)?,
            "thinning_iterations" => self.thin_iterations = parse(key, value)?,
            "snake_type" => self.snake_mode = parse(key, value)?,
            "snake_smoothness" => self.smoothness = parse(key, value)?,
            "snake_continuity" => self.continuity = parse(key, value)?,
            "snake_time_stepping" => self.time_step = parse(key, value)?,
            "snake_max_step" => self.max_step_px = parse(key, value)?,
            "snake_max_iterations" => self.max_iterations = parse(key, value)?,
            "snake_convergence" => self.convergence = parse(key, value)?,
            "snake_brightness_weight" => self.w_brightness = parse(key, value)?,
            "snake_edge_weight" => self.w_edge = parse(key, value)?,
            "max_delta" => self.max_delta_px = parse(key, value)?,
            "low_depth_preference" => self.low_depth_preference = parse(key, value)?,
            "soft_select_distance" => self.soft_select_distance = parse(key, value)?,
            "soft_select_curve" => self.soft_select_curve = parse(key, value)?,
            "mirror_output" => {
                self.mirror_output = match value.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "gap_closing_side" => self.gap_close_side.to_string(),
            "thinning_iterations" => self.thin_iterations.to_string(),
            "snake_type" => self.snake_mode.to_string(),
            "snake_smoothness" => self.smoothness.to_string(),
            "snake_continuity" => self.continuity.to_string(),
            "snake_time_stepping" => self.time_step.to_string(),
            "snake_max_step" => self.max_step_px.to_string(),
            "snake_max_iterations" => self.max_iterations.to_string(),
            "snake_convergence" => self.convergence.to_string(),
            "snake_brightness_weight" => self.w_brightness.to_string(),
            "snake_edge_weight" => self.w_edge.to_string(),
            "max_delta" => self.max_delta_px.to_string(),
            "low_depth_preference" => self.low_depth_preference.to_string(),
            "soft_select_distance" => self.soft_select_distance.to_string(),
            "soft_select_curve" => self.soft_select_curve.to_string(),
            "mirror_output" => self.mirror_output.to_string(),
            _ => return None,
        })
    }

    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("known key")))
            .collect()
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn key_value_lines(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str), ConfigError>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        Some(
            line.split_once('=')
                .map(|(k, v)| (i + 1, k.trim(), v.trim()))
                .ok_or(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                }),
        )
    })
}
