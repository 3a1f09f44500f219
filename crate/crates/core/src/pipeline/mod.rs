//! End-to-end runs: pose, render, align, extract contours, evolve snakes,
//! collect deltas and deform, writing diagnostics along the way.

pub mod alignment;
pub mod config;
pub mod overlay;
pub mod report;
pub mod textio;

pub use alignment::{apply_alignment, AlignError, AlignmentTransform};
pub use config::{DiagnosticFormat, PipelineConfig};
pub use report::{RunReport, SkippedSnake, StageTimings};

use crate::deform::{
    apply_soft_transforms, collect_deltas, resolve_vertex_displacements, DeltaCollection, VertexDisplacement,
};
use crate::image::{encode_gray, load_gray, BinaryImage, GrayImage};
use crate::imageproc::{binarize, close_gaps, extract_contours, thin, Contour};
use crate::mesh::{
    apply_blendshapes, load_activations, load_rig, save_obj, write_obj, ActivationVector, BlendshapeRig, Mesh,
};
use crate::raster::{project_vertices, shade_render, CameraFront, ShadeSettings};
use crate::snake::{build_force_field, run_snakes_on_field, SnakeBatch, SnakeError};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Pose,
    Render,
    Align,
    Preprocess,
    Snakes,
    Deltas,
    Resolve,
    Deform,
    Save,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Load => "load",
            Stage::Pose => "pose",
            Stage::Render => "render",
            Stage::Align => "align",
            Stage::Preprocess => "preprocess",
            Stage::Snakes => "snakes",
            Stage::Deltas => "deltas",
            Stage::Resolve => "resolve",
            Stage::Deform => "deform",
            Stage::Save => "save",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError {
            stage,
            source: source.into(),
        }
    }

    pub fn is_cancelled(&self) -> bool {
        matches!(self.source.downcast_ref::<SnakeError>(), Some(SnakeError::Cancelled))
    }
}

fn at<E>(stage: Stage) -> impl FnOnce(E) -> PipelineError
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    move |e| PipelineError::new(stage, e)
}

fn check_cancel(cancel: Option<&AtomicBool>, stage: Stage) -> Result<(), PipelineError> {
    if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
        return Err(PipelineError::new(stage, SnakeError::Cancelled));
    }
    Ok(())
}

/// Writes diagnostics into an optional directory and remembers their names.
pub struct Diagnostics {
    dir: Option<PathBuf>,
    format: DiagnosticFormat,
    written: Vec<String>,
}

impl Diagnostics {
    pub fn new(dir: Option<&Path>, format: DiagnosticFormat) -> Self {
        Diagnostics {
            dir: dir.map(Path::to_path_buf),
            format,
            written: Vec::new(),
        }
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn bytes(&mut self, name: String, data: &[u8], stage: Stage) -> Result<(), PipelineError> {
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir).map_err(at(stage))?;
            std::fs::write(dir.join(&name), data).map_err(at(stage))?;
            self.written.push(name);
        }
        Ok(())
    }

    pub fn image(&mut self, stem: &str, img: &GrayImage, stage: Stage) -> Result<(), PipelineError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let data = encode_gray(img, self.format.image_format()).map_err(at(stage))?;
        self.bytes(format!("{stem}.{}", self.format.extension()), &data, stage)
    }

    pub fn binary(&mut self, stem: &str, img: &BinaryImage, stage: Stage) -> Result<(), PipelineError> {
        self.image(stem, &img.to_gray(), stage)
    }

    pub fn text(&mut self, name: &str, text: &str, stage: Stage) -> Result<(), PipelineError> {
        self.bytes(name.to_string(), text.as_bytes(), stage)
    }

    pub fn mesh(&mut self, name: &str, mesh: &Mesh, stage: Stage) -> Result<(), PipelineError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let text = write_obj(mesh).map_err(at(stage))?;
        self.text(name, &text, stage)
    }
}

/// Intermediate images and contours of sketch preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub binary: BinaryImage,
    pub closed: BinaryImage,
    pub thinned: BinaryImage,
    pub contours: Vec<Contour>,
}

pub fn preprocess(aligned: &GrayImage, cfg: &PipelineConfig) -> Preprocessed {
    let binary = binarize(aligned, cfg.binarize_threshold);
    let closed = close_gaps(&binary, cfg.tweakables.gap_close_side);
    let thinned = thin(&closed, cfg.tweakables.thin_iterations);
    let contours = extract_contours(&thinned);
    Preprocessed {
        binary,
        closed,
        thinned,
        contours,
    }
}

/// Front render of `mesh` at the configured resolution.
pub fn render_mesh(mesh: &Mesh, cfg: &PipelineConfig) -> Result<(CameraFront, GrayImage), PipelineError> {
    let cam = CameraFront::for_mesh(mesh, cfg.width, cfg.height).map_err(at(Stage::Render))?;
    let img = shade_render(mesh, &cam, ShadeSettings { ambient: cfg.ambient });
    Ok((cam, img))
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub posed: Mesh,
    pub camera: CameraFront,
    pub render: GrayImage,
    pub aligned: GrayImage,
    pub preprocessed: Preprocessed,
    pub batch: SnakeBatch,
    pub deltas: DeltaCollection,
    pub displacements: Vec<VertexDisplacement>,
    pub mesh: Mesh,
    pub report: RunReport,
}

/// Runs every stage on in-memory inputs. Diagnostics go to `out_dir` when
/// given, each written as soon as its stage finishes.
pub fn run(
    sketch: &GrayImage,
    rig: &BlendshapeRig,
    act: &ActivationVector,
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
    cancel: Option<&AtomicBool>,
) -> Result<RunOutput, PipelineError> {
    cfg.validate().map_err(at(Stage::Load))?;
    let tw = &cfg.tweakables;
    let mut diag = Diagnostics::new(out_dir, cfg.diagnostic_format.clone());
    let mut timings = StageTimings::default();

    check_cancel(cancel, Stage::Pose)?;
    let clock = Instant::now();
    let posed = apply_blendshapes(rig, act).map_err(at(Stage::Pose))?;
    let (camera, render) = render_mesh(&posed, cfg)?;
    let map = project_vertices(&posed, &camera).map_err(at(Stage::Render))?;
    let map_checksum = map.checksum();
    timings.pose_render = clock.elapsed().as_secs_f64();
    diag.mesh("posed.obj", &posed, Stage::Pose)?;
    diag.image("render", &render, Stage::Render)?;

    check_cancel(cancel, Stage::Align)?;
    let clock = Instant::now();
    let aligned = apply_alignment(sketch, &cfg.alignment, (cfg.width, cfg.height)).map_err(at(Stage::Align))?;
    let pre = preprocess(&aligned, cfg);
    timings.preprocess = clock.elapsed().as_secs_f64();
    diag.image("aligned", &aligned, Stage::Align)?;
    diag.binary("binary", &pre.binary, Stage::Preprocess)?;
    diag.binary("closed", &pre.closed, Stage::Preprocess)?;
    diag.binary("thinned", &pre.thinned, Stage::Preprocess)?;
    diag.text("contours.txt", &textio::contours_to_text(&pre.contours), Stage::Preprocess)?;

    check_cancel(cancel, Stage::Snakes)?;
    let clock = Instant::now();
    let field = build_force_field(&render, tw).map_err(at(Stage::Snakes))?;
    let batch = run_snakes_on_field(&pre.contours, &field, tw, cancel);
    check_cancel(cancel, Stage::Snakes)?;
    let deltas = collect_deltas(&batch.pairs, tw).map_err(at(Stage::Deltas))?;
    timings.snakes_deltas = clock.elapsed().as_secs_f64();
    let (snakes_in, snakes_out) = textio::snakes_to_text(&batch.pairs);
    diag.text("snakes_in.txt", &snakes_in, Stage::Snakes)?;
    diag.text("snakes_out.txt", &snakes_out, Stage::Snakes)?;
    diag.image("overlay", &overlay::snake_overlay(&render, &batch.pairs), Stage::Snakes)?;
    diag.text("deltas.txt", &textio::deltas_to_text(&deltas.field), Stage::Deltas)?;
    diag.image(
        "deltas",
        &deltas.field.magnitude_image(cfg.width, cfg.height, tw.max_delta_px),
        Stage::Deltas,
    )?;
    diag.text("rejections.txt", &textio::rejections_to_text(&deltas.rejections), Stage::Deltas)?;

    check_cancel(cancel, Stage::Deform)?;
    let clock = Instant::now();
    let displacements =
        resolve_vertex_displacements(&deltas.field, &map, &camera, tw).map_err(at(Stage::Resolve))?;
    let mesh = apply_soft_transforms(&posed, &displacements, tw).map_err(at(Stage::Deform))?;
    timings.deform = clock.elapsed().as_secs_f64();
    debug_assert_eq!(map.checksum(), map_checksum);
    diag.mesh("output.obj", &mesh, Stage::Save)?;

    let moves: Vec<f64> = posed
        .vertices
        .iter()
        .zip(&mesh.vertices)
        .map(|(a, b)| (b - a).norm())
        .collect();
    let mut report = RunReport {
        timings,
        contours: pre.contours.len(),
        snakes_run: batch.pairs.len(),
        snakes_converged: batch.pairs.iter().filter(|p| p.converged).count(),
        skipped: batch
            .skipped
            .iter()
            .map(|s| SkippedSnake {
                contour: s.contour,
                reason: s.reason.to_string(),
            })
            .collect(),
        samples: deltas.samples,
        samples_rejected: deltas.rejections.len(),
        delta_pixels: deltas.field.len(),
        displaced_vertices: displacements.len(),
        moved_vertices: moves.iter().filter(|&&m| m > 0.0).count(),
        max_vertex_move: moves.iter().cloned().fold(0.0, f64::max),
        rejections: deltas.rejections.clone(),
        outputs: Vec::new(),
    };
    if out_dir.is_some() {
        report.outputs = diag.written().to_vec();
        report.outputs.push("report.json".into());
        let json = serde_json::to_string_pretty(&report).map_err(at(Stage::Save))?;
        diag.text("report.json", &json, Stage::Save)?;
    }
    Ok(RunOutput {
        posed,
        camera,
        render,
        aligned,
        preprocessed: pre,
        batch,
        deltas,
        displacements,
        mesh,
        report,
    })
}

/// File-based run. Without an activation file the rig's base pose is used.
pub fn run_pipeline(
    sketch: &Path,
    rig: &Path,
    activations: Option<&Path>,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<RunReport, PipelineError> {
    let sketch = load_gray(sketch).map_err(at(Stage::Load))?;
    let rig = load_rig(rig).map_err(at(Stage::Load))?;
    let act = match activations {
        Some(p) => load_activations(p).map_err(at(Stage::Load))?,
        None => ActivationVector::new(),
    };
    Ok(run(&sketch, &rig, &act, cfg, Some(out_dir), None)?.report)
}

/// Poses a rig and writes the result.
pub fn pose_only(rig: &Path, activations: Option<&Path>, out: &Path) -> Result<Mesh, PipelineError> {
    let rig = load_rig(rig).map_err(at(Stage::Load))?;
    let act = match activations {
        Some(p) => load_activations(p).map_err(at(Stage::Load))?,
        None => ActivationVector::new(),
    };
    let posed = apply_blendshapes(&rig, &act).map_err(at(Stage::Pose))?;
    save_obj(&posed, out).map_err(at(Stage::Save))?;
    Ok(posed)
}
