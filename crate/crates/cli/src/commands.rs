//! Subcommands of the `snakemorph` binary.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use snakemorph::deform::{apply_soft_transforms, collect_deltas, resolve_vertex_displacements};
use snakemorph::image::{load_gray, save_gray};
use snakemorph::mesh::{apply_blendshapes, load_activations, load_rig, save_obj};
use snakemorph::pipeline::overlay::snake_overlay;
use snakemorph::pipeline::textio;
use snakemorph::pipeline::{apply_alignment, preprocess, render_mesh, run_pipeline, Diagnostics, Stage};
use snakemorph::raster::project_vertices;
use snakemorph::snake::run_snakes;
use snakemorph::{ActivationVector, Mesh, PipelineConfig};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "snakemorph", version, about = "Deform a blendshape rig toward a line drawing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pose the rig and write the mesh.
    Pose {
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render the posed rig at the working resolution.
    Render {
        #[command(flatten)]
        rig: RigArgs,
        /// Output image; `.pgm` writes PGM, anything else PNG.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Align, binarize, close, thin and extract contours from a sketch.
    Preprocess {
        #[arg(long)]
        sketch: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evolve contours as snakes over the posed rig's render.
    Snakes {
        #[command(flatten)]
        rig: RigArgs,
        /// Contour file written by `preprocess`.
        #[arg(long)]
        contours: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Average snake motion into a per-pixel delta field.
    Deltas {
        #[arg(long)]
        snakes_in: PathBuf,
        #[arg(long)]
        snakes_out: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Map a delta field onto the posed rig and write the deformed mesh.
    Deform {
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long)]
        deltas: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run every stage and write diagnostics, the mesh and a report.
    Run {
        #[arg(long)]
        sketch: Option<PathBuf>,
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Serve the `/v1/` session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.set {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RigArgs {
    /// Rig manifest; falls back to `rig` in the config.
    #[arg(long)]
    pub rig: Option<PathBuf>,
    /// Activation file; falls back to `activations` in the config.
    #[arg(long)]
    pub activations: Option<PathBuf>,
}

fn pick(flag: &Option<PathBuf>, from_config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| from_config.clone())
        .ok_or_else(|| anyhow!("no {what} given; pass --{what} or set it in the config"))
}

fn posed_mesh(args: &RigArgs, cfg: &PipelineConfig) -> Result<Mesh> {
    let rig_path = pick(&args.rig, &cfg.rig, "rig")?;
    let rig = load_rig(&rig_path).with_context(|| format!("loading {}", rig_path.display()))?;
    let act = match args.activations.as_ref().or(cfg.activations.as_ref()) {
        Some(p) => load_activations(p).with_context(|| format!("loading {}", p.display()))?,
        None => ActivationVector::new(),
    };
    Ok(apply_blendshapes(&rig, &act)?)
}

fn out_dir(flag: &Option<PathBuf>, cfg: &PipelineConfig) -> Result<PathBuf> {
    let dir = flag.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Pose { rig, out, config } => {
            let cfg = config.load()?;
            let posed = posed_mesh(&rig, &cfg)?;
            save_obj(&posed, &out)?;
            println!("wrote {} ({} vertices)", out.display(), posed.vertices.len());
        }
        Command::Render { rig, out, config } => {
            let cfg = config.load()?;
            let posed = posed_mesh(&rig, &cfg)?;
            let (_, img) = render_mesh(&posed, &cfg)?;
            save_gray(&img, &out)?;
            println!("wrote {} ({}x{})", out.display(), img.width(), img.height());
        }
        Command::Preprocess { sketch, out_dir: dir, config } => {
            let cfg = config.load()?;
            let sketch = load_gray(pick(&sketch, &cfg.sketch, "sketch")?)?;
            let dir = out_dir(&dir, &cfg)?;
            let aligned = apply_alignment(&sketch, &cfg.alignment, (cfg.width, cfg.height))?;
            let pre = preprocess(&aligned, &cfg);
            let mut diag = Diagnostics::new(Some(&dir), cfg.diagnostic_format.clone());
            diag.image("aligned", &aligned, Stage::Align)?;
            diag.binary("binary", &pre.binary, Stage::Preprocess)?;
            diag.binary("closed", &pre.closed, Stage::Preprocess)?;
            diag.binary("thinned", &pre.thinned, Stage::Preprocess)?;
            diag.text("contours.txt", &textio::contours_to_text(&pre.contours), Stage::Preprocess)?;
            println!("{} contours", pre.contours.len());
        }
        Command::Snakes { rig, contours, out_dir: dir, config } => {
            let cfg = config.load()?;
            let posed = posed_mesh(&rig, &cfg)?;
            let (_, render) = render_mesh(&posed, &cfg)?;
            let contours = textio::contours_from_text(&read(&contours)?)?;
            let batch = run_snakes(&contours, &render, &cfg.tweakables)?;
            let dir = out_dir(&dir, &cfg)?;
            let mut diag = Diagnostics::new(Some(&dir), cfg.diagnostic_format.clone());
            let (input, output) = textio::snakes_to_text(&batch.pairs);
            diag.text("snakes_in.txt", &input, Stage::Snakes)?;
            diag.text("snakes_out.txt", &output, Stage::Snakes)?;
            diag.image("overlay", &snake_overlay(&render, &batch.pairs), Stage::Snakes)?;
            let converged = batch.pairs.iter().filter(|p| p.converged).count();
            println!(
                "{} snakes, {} converged, {} skipped",
                batch.pairs.len(),
                converged,
                batch.skipped.len()
            );
            for s in &batch.skipped {
                println!("skipped contour {}: {}", s.contour, s.reason);
            }
        }
        Command::Deltas { snakes_in, snakes_out, out_dir: dir, config } => {
            let cfg = config.load()?;
            let pairs = textio::snakes_from_text(&read(&snakes_in)?, &read(&snakes_out)?)?;
            let deltas = collect_deltas(&pairs, &cfg.tweakables)?;
            let dir = out_dir(&dir, &cfg)?;
            let mut diag = Diagnostics::new(Some(&dir), cfg.diagnostic_format.clone());
            diag.text("deltas.txt", &textio::deltas_to_text(&deltas.field), Stage::Deltas)?;
            let magnitude = deltas.field.magnitude_image(cfg.width, cfg.height, cfg.tweakables.max_delta_px);
            diag.image("deltas", &magnitude, Stage::Deltas)?;
            diag.text("rejections.txt", &textio::rejections_to_text(&deltas.rejections), Stage::Deltas)?;
            println!(
                "{} samples, {} rejected, {} pixels",
                deltas.samples,
                deltas.rejections.len(),
                deltas.field.len()
            );
        }
        Command::Deform { rig, deltas, out, config } => {
            let cfg = config.load()?;
            let posed = posed_mesh(&rig, &cfg)?;
            let (camera, _) = render_mesh(&posed, &cfg)?;
            let map = project_vertices(&posed, &camera)?;
            let field = textio::deltas_from_text(&read(&deltas)?)?;
            let displacements = resolve_vertex_displacements(&field, &map, &camera, &cfg.tweakables)?;
            let mesh = apply_soft_transforms(&posed, &displacements, &cfg.tweakables)?;
            save_obj(&mesh, &out)?;
            println!("wrote {} ({} displaced vertices)", out.display(), displacements.len());
        }
        Command::Run { sketch, rig, out_dir: dir, config } => {
            let cfg = config.load()?;
            let sketch = pick(&sketch, &cfg.sketch, "sketch")?;
            let rig_path = pick(&rig.rig, &cfg.rig, "rig")?;
            let activations = rig.activations.clone().or_else(|| cfg.activations.clone());
            let dir = out_dir(&dir, &cfg)?;
            let report = run_pipeline(&sketch, &rig_path, activations.as_deref(), &cfg, &dir)?;
            let t = &report.timings;
            println!(
                "{} contours, {} snakes ({} converged), {} of {} samples rejected, {} displaced vertices",
                report.contours,
                report.snakes_run,
                report.snakes_converged,
                report.samples_rejected,
                report.samples,
                report.displaced_vertices
            );
            println!(
                "pose+render {:.3} s, preprocess {:.3} s, snakes+deltas {:.3} s, deform {:.3} s",
                t.pose_render, t.preprocess, t.snakes_deltas, t.deform
            );
            println!("outputs in {}", dir.display());
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::server::serve(addr))?;
        }
    }
    Ok(())
}
