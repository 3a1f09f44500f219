#![allow(dead_code)]

use snakemorph::fixtures::{dented_sphere, silhouette_outline, uv_sphere};
use snakemorph::image::{encode_gray, ImageFormat};
use snakemorph::mesh::write_obj;
use snakemorph::raster::{shade_render, CameraFront, ShadeSettings};
use snakemorph::{GrayImage, Mesh};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SIZE: usize = 100;
pub const SEGMENTS: usize = 48;
pub const RINGS: usize = 24;

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn sphere() -> Mesh {
    uv_sphere(1.0, SEGMENTS, RINGS)
}

/// The dented sphere, used as the rig's one target.
pub fn dent_target() -> Mesh {
    dented_sphere(1.0, SEGMENTS, RINGS, 0.08, 0.6)
}

pub fn manifest() -> String {
    "base = sphere.obj\ndent = dent.obj\nmax_level = 100\n".to_string()
}

pub fn obj(mesh: &Mesh) -> String {
    write_obj(mesh).unwrap()
}

/// Outline of the dented sphere drawn in the plain sphere's frame.
pub fn dent_sketch() -> GrayImage {
    let cam = CameraFront::for_mesh(&sphere(), SIZE, SIZE).unwrap();
    silhouette_outline(&shade_render(&dent_target(), &cam, ShadeSettings::default()))
}

pub fn png(img: &GrayImage) -> Vec<u8> {
    encode_gray(img, ImageFormat::Png).unwrap()
}

/// Rig files, a dent sketch, a blank sketch and activations on disk.
pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("sphere.obj"), obj(&sphere())).unwrap();
    std::fs::write(p.join("dent.obj"), obj(&dent_target())).unwrap();
    std::fs::write(p.join("rig.txt"), manifest()).unwrap();
    std::fs::write(p.join("sketch.png"), png(&dent_sketch())).unwrap();
    std::fs::write(p.join("blank.png"), png(&GrayImage::filled(SIZE, SIZE, 1.0))).unwrap();
    std::fs::write(p.join("half.txt"), "dent = 50\n").unwrap();
    std::fs::write(p.join("full.txt"), "dent = 100\n").unwrap();
    Fixture { dir }
}

pub fn size_args() -> Vec<String> {
    vec![
        "--set".into(),
        format!("width={SIZE}"),
        "--set".into(),
        format!("height={SIZE}"),
    ]
}

pub fn cli(args: &[&str], extra: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snakemorph"))
        .args(args)
        .args(extra)
        .output()
        .expect("spawn snakemorph")
}

pub fn cli_ok(args: &[&str], extra: &[String]) -> String {
    let out = cli(args, extra);
    assert!(
        out.status.success(),
        "snakemorph {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
