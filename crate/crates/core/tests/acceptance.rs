//! Acceptance suite. Each check prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any check fails.

use nalgebra::{Point2, Point3, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snakemorph::deform::{apply_soft_transforms, collect_deltas, field_from_samples, PointDelta, VertexDisplacement};
use snakemorph::fixtures::{circle, dented_sphere, disk_center, face_rig, halo_disk, ring_sketch, silhouette_outline, uv_sphere};
use snakemorph::imageproc::extract_contours;
use snakemorph::mesh::{apply_blendshapes, bounding_box, parse_obj, write_obj};
use snakemorph::pipeline::{render_mesh, run, PipelineConfig};
use snakemorph::raster::{shade_render, CameraFront, ShadeSettings};
use snakemorph::snake::{build_force_field, evolve_snake};
use snakemorph::{ActivationVector, BinaryImage, BlendshapeRig, Mesh, Snake, SnakeMode, SnakePair, Tweakables};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn disk_convergence() -> Check {
    let (w, h) = (91, 200);
    let radius = 30.0;
    let img = halo_disk(w, h, radius, 20.0);
    let tw = Tweakables::default();
    let center = disk_center(w, h);
    let start = Instant::now();
    let field = build_force_field(&img, &tw).map_err(|e| e.to_string())?;
    let snake = Snake::new(circle(center, radius + 15.0, 120), SnakeMode::Periodic).map_err(|e| e.to_string())?;
    let out = evolve_snake(&snake, &field, &tw).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let err = out
        .snake
        .points
        .iter()
        .map(|p| ((p.x - center.0).hypot(p.y - center.1) - radius).abs())
        .sum::<f64>()
        / out.snake.len() as f64;
    let detail = format!(
        "mean radial error {err:.3} px, {} iterations, converged={}, {secs:.3} s",
        out.iterations, out.converged
    );
    ensure(out.converged && out.iterations < tw.max_iterations, format!("did not converge: {detail}"))?;
    ensure(err <= 1.5, format!("error too large: {detail}"))?;
    ensure(secs <= 1.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

fn face_pose() -> (BlendshapeRig, ActivationVector) {
    let act = ActivationVector::new().with("jaw_open", 40.0).with("smile", 30.0);
    (face_rig(), act)
}

fn timing_at_working_resolution() -> Check {
    let (rig, act) = face_pose();
    let cfg = PipelineConfig::default();
    let sketch = ring_sketch(cfg.width, cfg.height, 2, 5);
    let out = run(&sketch, &rig, &act, &cfg, None, None).map_err(|e| e.to_string())?;
    let t = &out.report.timings;
    let detail = format!(
        "{}x{}, {} contours, snakes+deltas {:.3} s, deform {:.3} s",
        cfg.width, cfg.height, out.report.contours, t.snakes_deltas, t.deform
    );
    ensure((15..=30).contains(&out.report.contours), format!("unexpected contour count: {detail}"))?;
    ensure(t.snakes_deltas <= 10.0 && t.deform <= 20.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

fn self_consistency() -> Check {
    let (rig, act) = face_pose();
    let cfg = PipelineConfig::default();
    let posed = apply_blendshapes(&rig, &act).map_err(|e| e.to_string())?;
    let (_, render) = render_mesh(&posed, &cfg).map_err(|e| e.to_string())?;
    let out = run(&render, &rig, &act, &cfg, None, None).map_err(|e| e.to_string())?;
    let n = posed.vertices.len() as f64;
    let rms = (posed
        .vertices
        .iter()
        .zip(&out.mesh.vertices)
        .map(|(a, b)| (b - a).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    let height = bounding_box(&posed).map_err(|e| e.to_string())?.height();
    let ratio = rms / height;
    let detail = format!(
        "{} contours, RMS vertex displacement {:.4}% of bbox height",
        out.report.contours,
        100.0 * ratio
    );
    ensure(out.report.contours > 0, format!("render produced no contours: {detail}"))?;
    ensure(ratio <= 0.02, detail.clone())?;
    Ok(detail)
}

fn ssd_sweep() -> Check {
    let size = 200;
    let rig = BlendshapeRig::new(uv_sphere(1.0, 96, 48), vec![], 1.0).map_err(|e| e.to_string())?;
    let dented = dented_sphere(1.0, 96, 48, 0.08, 0.6);
    let base_cfg = PipelineConfig {
        width: size,
        height: size,
        ..PipelineConfig::default()
    };
    // drawn in the undented sphere's frame so only the +X rim differs
    let sphere = rig.base();
    let cam = CameraFront::for_mesh(sphere, size, size).map_err(|e| e.to_string())?;
    let sketch = silhouette_outline(&shade_render(&dented, &cam, ShadeSettings::default()));
    // the dent sits on the +X rim
    let [dent_x, dent_y, _] = cam.project(&Point3::new(1.0, 0.0, 0.0));
    let mut previous: Option<BTreeSet<usize>> = None;
    let mut sizes = Vec::new();
    for ssd in [0.6, 0.8, 1.0] {
        let mut cfg = base_cfg.clone();
        cfg.tweakables.soft_select_distance = ssd;
        let out = run(&sketch, &rig, &ActivationVector::new(), &cfg, None, None).map_err(|e| e.to_string())?;
        ensure(out.report.contours >= 1 && out.report.displaced_vertices >= 1, "nothing matched")?;
        let moves: Vec<f64> = out
            .posed
            .vertices
            .iter()
            .zip(&out.mesh.vertices)
            .map(|(a, b)| (b - a).norm())
            .collect();
        let moved: BTreeSet<usize> = (0..moves.len()).filter(|&i| moves[i] > 0.0).collect();
        if let Some(prev) = &previous {
            ensure(prev.is_subset(&moved), format!("displaced set shrank at ssd {ssd}"))?;
        }
        let (argmax, _) = moves
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
        let peak = out.posed.vertices[argmax];
        let mapped = out.displacements.iter().any(|d| (out.posed.vertices[d.vertex] - peak).norm() < ssd);
        ensure(mapped, format!("ssd {ssd}: largest move outside every soft-select ball"))?;
        let [px, py, _] = out.camera.project(&peak);
        let dist = (px - dent_x).hypot(py - dent_y);
        ensure(
            dist <= 0.6 * cam.scale(),
            format!("ssd {ssd}: largest move at ({px:.1}, {py:.1}), {dist:.1} px from the dent"),
        )?;
        sizes.push(moved.len());
        previous = Some(moved);
    }
    Ok(format!("displaced vertices at ssd 0.6/0.8/1.0: {sizes:?}; peaks at the dent"))
}

fn component_labels(img: &BinaryImage, value: bool, eight: bool) -> Vec<Option<usize>> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut labels = vec![None; (w * h) as usize];
    let mut next = 0;
    for start in 0..(w * h) as usize {
        if img.bits()[start] != value || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y) = ((i as isize) % w, (i as isize) / w);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if img.bits()[j] == value && labels[j].is_none() {
                        labels[j] = Some(next);
                        stack.push(j);
                    }
                }
            }
        }
        next += 1;
    }
    labels
}

/// Boundary oracle for one padded image: contours are closed, their
/// even-odd fill reproduces the mask, and there is one contour per adjacent
/// (8-connected ink, 4-connected background) component pair.
fn marching_squares_case(img: &BinaryImage) -> Result<(), String> {
    let contours = extract_contours(img);
    ensure(contours.iter().all(|c| c.closed), "open contour in padded image")?;
    let (w, h) = (img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            // nudged off the lattice so the ray never grazes a vertex
            let (qx, qy) = (x as f64 + 0.1, y as f64 + 0.13);
            let mut inside = false;
            for c in &contours {
                let n = c.points.len();
                for i in 0..n {
                    let (a, b) = (c.points[i], c.points[(i + 1) % n]);
                    if (a.y > qy) != (b.y > qy) {
                        let t = (qy - a.y) / (b.y - a.y);
                        if a.x + t * (b.x - a.x) > qx {
                            inside = !inside;
                        }
                    }
                }
            }
            ensure(inside == img.get(x, y), format!("fill mismatch at ({x}, {y})"))?;
        }
    }
    let fg = component_labels(img, true, true);
    let bg = component_labels(img, false, false);
    let mut pairs = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx >= w || ny >= h {
                    continue;
                }
                let (i, j) = (y * w + x, ny * w + nx);
                match (fg[i], bg[j], bg[i], fg[j]) {
                    (Some(f), Some(b), _, _) | (_, _, Some(b), Some(f)) => {
                        pairs.insert((f, b));
                    }
                    _ => {}
                }
            }
        }
    }
    ensure(
        pairs.len() == contours.len(),
        format!("{} contours for {} boundaries", contours.len(), pairs.len()),
    )
}

fn oracle_marching_squares(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..100 {
        let density = rng.random_range(0.2..0.7);
        let mut img = BinaryImage::new(18, 18);
        for y in 1..17 {
            for x in 1..17 {
                img.set(x, y, rng.random_bool(density));
            }
        }
        marching_squares_case(&img).map_err(|e| format!("marching squares case {case}: {e}"))?;
    }
    Ok(())
}

fn oracle_delta_averaging(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let samples: Vec<(usize, usize, PointDelta)> = (0..1000)
        .map(|i| {
            (
                i % 7,
                i,
                PointDelta {
                    target: Point2::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0)),
                    delta: Vector2::new(rng.random_range(-14.0..14.0), rng.random_range(-14.0..14.0)),
                },
            )
        })
        .collect();
    let c = field_from_samples(samples.clone(), 15.0);
    let mut groups: HashMap<(i64, i64), Vec<Vector2<f64>>> = HashMap::new();
    let mut rejected = 0;
    for (_, _, s) in &samples {
        if (s.delta.x * s.delta.x + s.delta.y * s.delta.y).sqrt() > 15.0 {
            rejected += 1;
            continue;
        }
        groups
            .entry((s.target.x.round() as i64, s.target.y.round() as i64))
            .or_default()
            .push(s.delta);
    }
    ensure(c.rejections.len() == rejected, "rejection count differs")?;
    ensure(c.field.len() == groups.len(), "pixel count differs")?;
    for (key, deltas) in &groups {
        let e = c.field.get(key.0, key.1).ok_or("missing pixel")?;
        let mean = deltas.iter().sum::<Vector2<f64>>() / deltas.len() as f64;
        ensure(e.count == deltas.len(), "count differs")?;
        ensure((e.delta - mean).norm() < 1e-12, format!("mean differs at {key:?}"))?;
    }
    Ok(())
}

fn random_mesh(rng: &mut ChaCha8Rng, n: usize) -> Mesh {
    let vertices = (0..n)
        .map(|_| Point3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        .collect();
    let faces = (0..n / 2)
        .map(|_| rand::seq::index::sample(rng, n, 3).into_vec())
        .collect();
    Mesh::new(vertices, faces).expect("valid random mesh")
}

fn oracle_blendshape_linearity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let base = random_mesh(rng, 200);
    let targets: Vec<(String, Mesh)> = (0..4)
        .map(|k| {
            let mut t = base.clone();
            for v in &mut t.vertices {
                *v += Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            (format!("t{k}"), t)
        })
        .collect();
    let rig = BlendshapeRig::new(base.clone(), targets.clone(), 100.0).map_err(|e| e.to_string())?;
    let levels: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..50.0)).collect();
    let half: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..50.0)).collect();
    let act = |ls: &[f64]| {
        ls.iter()
            .enumerate()
            .fold(ActivationVector::new(), |a, (k, &l)| a.with(format!("t{k}"), l))
    };
    let pose = |ls: &[f64]| apply_blendshapes(&rig, &act(ls)).map_err(|e| e.to_string());
    let a = pose(&levels)?;
    let b = pose(&half)?;
    let sum: Vec<f64> = levels.iter().zip(&half).map(|(x, y)| x + y).collect();
    let ab = pose(&sum)?;
    for i in 0..base.vertices.len() {
        let o = base.vertices[i];
        let lhs = ab.vertices[i] - o;
        let rhs = (a.vertices[i] - o) + (b.vertices[i] - o);
        ensure((lhs - rhs).norm() <= 1e-9, format!("superposition fails at vertex {i}"))?;
        let direct = targets
            .iter()
            .zip(&levels)
            .fold(o.coords, |acc, ((_, t), l)| acc + (t.vertices[i] - o) * (l / 100.0));
        ensure((a.vertices[i].coords - direct).norm() <= 1e-9, format!("pose differs at vertex {i}"))?;
    }
    Ok(())
}

fn oracle_obj_round_trip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..20 {
        let mesh = random_mesh(rng, 50);
        let text = write_obj(&mesh).map_err(|e| e.to_string())?;
        let back = parse_obj(&text).map_err(|e| e.to_string())?;
        ensure(back == mesh, "OBJ round trip changed the mesh")?;
    }
    Ok(())
}

fn oracle_projection_inverse(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..20 {
        let mesh = random_mesh(rng, 30);
        let cam = CameraFront::for_mesh(&mesh, rng.random_range(16..300), rng.random_range(16..300))
            .map_err(|e| e.to_string())?;
        for v in &mesh.vertices {
            let [px, py, depth] = cam.project(v);
            let (x, y) = cam.unproject(px, py);
            ensure((x - v.x).abs() <= 1e-9 && (y - v.y).abs() <= 1e-9, "unproject does not invert project")?;
            ensure(depth == -v.z, "depth is not -z")?;
        }
    }
    Ok(())
}

fn oracle_soft_select_order(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mesh = uv_sphere(1.0, 48, 24);
    let mut disps: Vec<VertexDisplacement> = (0..200)
        .map(|_| VertexDisplacement {
            vertex: rng.random_range(0..mesh.vertices.len()),
            displacement: Vector3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), 0.0),
        })
        .collect();
    let tw = Tweakables::default();
    let reference = apply_soft_transforms(&mesh, &disps, &tw).map_err(|e| e.to_string())?;
    let bits = |m: &Mesh| -> Vec<u64> { m.vertices.iter().flat_map(|p| p.coords.iter().map(|c| c.to_bits()).collect::<Vec<_>>()).collect() };
    for _ in 0..10 {
        disps.shuffle(rng);
        let again = apply_soft_transforms(&mesh, &disps, &tw).map_err(|e| e.to_string())?;
        ensure(bits(&again) == bits(&reference), "shuffled displacements changed the mesh")?;
    }
    Ok(())
}

fn oracle_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    oracle_marching_squares(&mut rng)?;
    oracle_delta_averaging(&mut rng)?;
    oracle_blendshape_linearity(&mut rng)?;
    oracle_obj_round_trip(&mut rng)?;
    oracle_projection_inverse(&mut rng)?;
    oracle_soft_select_order(&mut rng)?;
    Ok("marching squares (100 images), delta averaging (1000 samples), blendshape linearity, \
        OBJ round trip, projection inverse, soft-select order"
        .into())
}

fn rejection_accounting() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let tw = Tweakables::default();
    let mut injected = BTreeSet::new();
    let mut pairs = Vec::new();
    for contour in 0..12 {
        let n = rng.random_range(20..60);
        let output: Vec<Point2<f64>> = (0..n)
            .map(|_| Point2::new(rng.random_range(0.0..90.0), rng.random_range(0.0..199.0)))
            .collect();
        let input: Vec<Point2<f64>> = output
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let magnitude = if rng.random_bool(0.2) {
                    injected.insert((contour, i));
                    rng.random_range(15.001..60.0)
                } else {
                    rng.random_range(0.0..15.0)
                };
                p + Vector2::new(angle.cos(), angle.sin()) * magnitude
            })
            .collect();
        pairs.push(SnakePair {
            contour,
            input: Snake {
                points: input,
                mode: SnakeMode::Free,
            },
            output: Snake {
                points: output,
                mode: SnakeMode::Free,
            },
            iterations: 0,
            converged: true,
        });
    }
    let c = collect_deltas(&pairs, &tw).map_err(|e| e.to_string())?;
    let reported: BTreeSet<(usize, usize)> = c.rejections.iter().map(|r| (r.contour, r.point)).collect();
    ensure(reported == injected, "rejection report differs from the injected outliers")?;
    ensure(
        c.field.sample_count() + injected.len() == c.samples,
        "field holds rejected samples",
    )?;
    ensure(
        c.field.entries().values().all(|e| e.delta.norm() <= tw.max_delta_px),
        "stored delta above the limit",
    )?;
    // rebuild the field from the accepted samples only; it must match exactly
    let accepted = pairs.iter().flat_map(|p| {
        p.input
            .points
            .iter()
            .zip(&p.output.points)
            .enumerate()
            .filter(|(i, _)| !injected.contains(&(p.contour, *i)))
            .map(|(i, (a, b))| (p.contour, i, PointDelta { target: *b, delta: a - b }))
            .collect::<Vec<_>>()
    });
    let clean = field_from_samples(accepted, f64::INFINITY);
    ensure(clean.field == c.field, "outliers leaked into the field")?;
    Ok(format!("{} outliers among {} samples, all reported, none stored", injected.len(), c.samples))
}

fn main() {
    let checks: [(&str, fn() -> Check); 6] = [
        ("disk convergence", disk_convergence),
        ("timing at 91x200", timing_at_working_resolution),
        ("self-consistency", self_consistency),
        ("ssd sweep", ssd_sweep),
        ("oracle suites", oracle_suites),
        ("rejection accounting", rejection_accounting),
    ];
    let mut failed = 0;
    let mut summary = BTreeMap::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
        summary.insert(name, ());
    }
    println!("acceptance: {} passed, {failed} failed", summary.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
