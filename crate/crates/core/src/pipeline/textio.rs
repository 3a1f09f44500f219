//! Plain-text exchange formats.
//!
//! Point sets are `x y` rows, one block per contour or snake, blocks
//! separated by blank lines. Each block may start with a `#` header such as
//! `# snake 3 periodic`. Delta fields are `x y dx dy count` rows.

use crate::deform::{DeltaEntry, DeltaField, Rejection};
use crate::imageproc::Contour;
use crate::snake::{Snake, SnakePair};
use crate::tweakables::SnakeMode;
use nalgebra::{Point2, Vector2};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TextError {
    TextError {
        line,
        message: message.into(),
    }
}

/// One block of a point-set file.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBlock {
    /// Header words after `#`, if any.
    pub header: Vec<String>,
    pub points: Vec<Point2<f64>>,
}

pub fn write_blocks(blocks: &[PointBlock]) -> String {
    let mut out = String::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if !b.header.is_empty() {
            let _ = writeln!(out, "# {}", b.header.join(" "));
        }
        for p in &b.points {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
    }
    out
}

pub fn parse_blocks(text: &str) -> Result<Vec<PointBlock>, TextError> {
    let mut blocks = Vec::new();
    let mut current: Option<PointBlock> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            blocks.extend(current.take());
            continue;
        }
        let block = current.get_or_insert_with(|| PointBlock {
            header: Vec::new(),
            points: Vec::new(),
        });
        if let Some(rest) = line.strip_prefix('#') {
            if !block.points.is_empty() {
                return Err(err(i + 1, "header after points; separate blocks with a blank line"));
            }
            block.header = rest.split_whitespace().map(str::to_string).collect();
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(i + 1, format!("bad number `{t}`"))))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [x, y] if x.is_finite() && y.is_finite() => block.points.push(Point2::new(x, y)),
            _ => return Err(err(i + 1, "expected `x y`")),
        }
    }
    blocks.extend(current);
    Ok(blocks)
}

pub fn contours_to_text(contours: &[Contour]) -> String {
    let blocks: Vec<_> = contours
        .iter()
        .enumerate()
        .map(|(i, c)| PointBlock {
            header: vec![
                "contour".into(),
                i.to_string(),
                if c.closed { "closed" } else { "open" }.into(),
            ],
            points: c.points.clone(),
        })
        .collect();
    write_blocks(&blocks)
}

/// Reads contours; a block is closed only if its header says `closed`.
pub fn contours_from_text(text: &str) -> Result<Vec<Contour>, TextError> {
    Ok(parse_blocks(text)?
        .into_iter()
        .map(|b| Contour {
            closed: b.header.iter().any(|w| w == "closed"),
            points: b.points,
        })
        .collect())
}

fn snake_block(index: usize, s: &Snake) -> PointBlock {
    PointBlock {
        header: vec!["snake".into(), index.to_string(), s.mode.to_string()],
        points: s.points.clone(),
    }
}

/// Input and output snake files for a batch, keyed by contour index.
pub fn snakes_to_text(pairs: &[SnakePair]) -> (String, String) {
    let input: Vec<_> = pairs.iter().map(|p| snake_block(p.contour, &p.input)).collect();
    let output: Vec<_> = pairs.iter().map(|p| snake_block(p.contour, &p.output)).collect();
    (write_blocks(&input), write_blocks(&output))
}

/// Rebuilds snake pairs from matching input/output files.
pub fn snakes_from_text(input: &str, output: &str) -> Result<Vec<SnakePair>, TextError> {
    let a = parse_blocks(input)?;
    let b = parse_blocks(output)?;
    if a.len() != b.len() {
        return Err(err(0, format!("{} input snakes but {} output snakes", a.len(), b.len())));
    }
    a.into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (a, b))| {
            let contour = a
                .header
                .get(1)
                .and_then(|w| w.parse().ok())
                .unwrap_or(i);
            let mode = a
                .header
                .get(2)
                .and_then(|w| w.parse().ok())
                .unwrap_or(SnakeMode::Free);
            Ok(SnakePair {
                contour,
                input: Snake {
                    points: a.points,
                    mode,
                },
                output: Snake {
                    points: b.points,
                    mode,
                },
                iterations: 0,
                converged: false,
            })
        })
        .collect()
}

pub fn deltas_to_text(field: &DeltaField) -> String {
    let mut out = String::from("# x y dx dy count\n");
    for (&(x, y), e) in field.entries() {
        let _ = writeln!(out, "{x} {y} {} {} {}", e.delta.x, e.delta.y, e.count);
    }
    out
}

pub fn deltas_from_text(text: &str) -> Result<DeltaField, TextError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || err(i + 1, "expected `x y dx dy count`");
        if t.len() != 5 {
            return Err(bad());
        }
        let x: i64 = t[0].parse().map_err(|_| bad())?;
        let y: i64 = t[1].parse().map_err(|_| bad())?;
        let dx: f64 = t[2].parse().map_err(|_| bad())?;
        let dy: f64 = t[3].parse().map_err(|_| bad())?;
        let count: usize = t[4].parse().map_err(|_| bad())?;
        if count == 0 || !dx.is_finite() || !dy.is_finite() {
            return Err(bad());
        }
        entries.push((
            (x, y),
            DeltaEntry {
                delta: Vector2::new(dx, dy),
                count,
            },
        ));
    }
    Ok(DeltaField::from_entries(entries))
}

pub fn rejections_to_text(rejections: &[Rejection]) -> String {
    let mut out = String::from("# contour point magnitude\n");
    for r in rejections {
        let _ = writeln!(out, "{} {} {}", r.contour, r.point, r.magnitude);
    }
    out
}
