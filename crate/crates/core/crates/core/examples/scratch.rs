use snakemorph::fixtures::*;
use snakemorph::pipeline::{render_mesh, run, PipelineConfig};
use snakemorph::{ActivationVector, BlendshapeRig};
fn main() {
    let rig = BlendshapeRig::new(uv_sphere(1.0, 96, 48), vec![], 1.0).unwrap();
    let dented = dented_sphere(1.0, 96, 48, 0.08, 0.6);
    let mut cfg = PipelineConfig { width: 200, height: 200, ..PipelineConfig::default() };
    let (_, sketch) = render_mesh(&dented, &cfg).unwrap();
    cfg.tweakables.soft_select_distance = 0.6;
    let out = run(&sketch, &rig, &ActivationVector::new(), &cfg, Some(std::path::Path::new("/tmp/scratch/sphere")), None).unwrap();
    println!("{}", serde_json::to_string_pretty(&out.report).unwrap().lines().take(30).collect::<Vec<_>>().join("\n"));
    for d in out.displacements.iter().filter(|d| d.displacement.norm() > 0.02) {
        let p = out.camera.project(&out.posed.vertices[d.vertex]);
        println!("{} {:?} {:?}", d.vertex, p, d.displacement);
    }
}
