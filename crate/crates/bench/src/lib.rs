//! Shared inputs for the benchmarks.

use snakemorph::fixtures::{face_rig, ring_sketch};
use snakemorph::mesh::apply_blendshapes;
use snakemorph::pipeline::{preprocess, render_mesh, PipelineConfig};
use snakemorph::{ActivationVector, Contour, GrayImage, Mesh};

/// Posed face, its render, and contours of a ring sketch at 91×200.
pub struct Scene {
    pub posed: Mesh,
    pub render: GrayImage,
    pub sketch: GrayImage,
    pub contours: Vec<Contour>,
    pub config: PipelineConfig,
}

pub fn scene() -> Scene {
    let config = PipelineConfig::default();
    let act = ActivationVector::new().with("jaw_open", 40.0).with("smile", 30.0);
    let posed = apply_blendshapes(&face_rig(), &act).expect("known targets");
    let (_, render) = render_mesh(&posed, &config).expect("non-degenerate mesh");
    let sketch = ring_sketch(config.width, config.height, 2, 5);
    let contours = preprocess(&sketch, &config).contours;
    Scene {
        posed,
        render,
        sketch,
        contours,
        config,
    }
}
