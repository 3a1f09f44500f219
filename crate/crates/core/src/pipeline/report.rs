use crate::deform::Rejection;
use serde::{Deserialize, Serialize};

/// Wall-clock seconds per stage group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub pose_render: f64,
    pub preprocess: f64,
    pub snakes_deltas: f64,
    pub deform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSnake {
    pub contour: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub timings: StageTimings,
    pub contours: usize,
    pub snakes_run: usize,
    pub snakes_converged: usize,
    pub skipped: Vec<SkippedSnake>,
    pub samples: usize,
    pub samples_rejected: usize,
    pub delta_pixels: usize,
    /// Vertices that received a displacement directly.
    pub displaced_vertices: usize,
    /// Vertices whose position changed after soft selection.
    pub moved_vertices: usize,
    pub max_vertex_move: f64,
    pub rejections: Vec<Rejection>,
    pub outputs: Vec<String>,
}

impl RunReport {
    /// The report with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> RunReport {
        RunReport {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }
}
