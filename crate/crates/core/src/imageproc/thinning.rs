//! Zhang-Suen parallel thinning.
//!
//! Neighbors are numbered clockwise from north:
//!
//! ```text
//!  P9 P2 P3
//!  P8 P1 P4
//!  P7 P6 P5
//! ```

use crate::image::BinaryImage;

const NEIGHBORS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn neighborhood(img: &BinaryImage, x: usize, y: usize) -> [bool; 8] {
    NEIGHBORS.map(|(dx, dy)| img.get_or_bg(x as isize + dx, y as isize + dy))
}

/// Whether the center pixel of neighborhood `n` (P2..P9) is deletable in
/// the given sub-iteration.
pub(crate) fn deletable(n: &[bool; 8], first: bool) -> bool {
    let b = n.iter().filter(|v| **v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *n;
    if first {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

fn sub_iteration(img: &mut BinaryImage, first: bool) -> bool {
    let mut doomed = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) && deletable(&neighborhood(img, x, y), first) {
                doomed.push((x, y));
            }
        }
    }
    for &(x, y) in &doomed {
        img.set(x, y, false);
    }
    !doomed.is_empty()
}

/// One full pass (both sub-iterations). Returns whether anything changed.
pub fn thin_pass(img: &mut BinaryImage) -> bool {
    let a = sub_iteration(img, true);
    let b = sub_iteration(img, false);
    a || b
}

/// Applies up to `iterations` thinning passes, stopping early once stable.
pub fn thin(img: &BinaryImage, iterations: usize) -> BinaryImage {
    let mut out = img.clone();
    for _ in 0..iterations {
        if !thin_pass(&mut out) {
            break;
        }
    }
    out
}

#[cfg(test)]
pub(crate) fn component_count(img: &BinaryImage, eight: bool) -> usize {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !img.bits()[start] || seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    if img.get_or_bg(x + dx, y + dy) {
                        let j = (y + dy) as usize * w + (x + dx) as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    count
}
