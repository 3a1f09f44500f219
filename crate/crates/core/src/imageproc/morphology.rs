use crate::image::BinaryImage;

/// Offsets of a square structuring element of the given side. Even sides are
/// anchored so the extra row/column lies on the positive side.
fn square_offsets(side: usize) -> std::ops::RangeInclusive<isize> {
    let side = side.max(1) as isize;
    let lo = -((side - 1) / 2);
    lo..=lo + side - 1
}

/// `out(p) = ∃ b ∈ B: in(p − b)`.
pub fn dilate(img: &BinaryImage, side: usize) -> BinaryImage {
    let mut out = BinaryImage::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let hit = square_offsets(side).any(|dy| {
                square_offsets(side).any(|dx| img.get_or_bg(x as isize - dx, y as isize - dy))
            });
            out.set(x, y, hit);
        }
    }
    out
}

/// `out(p) = ∀ b ∈ B: in(p + b)`, with background beyond the border.
pub fn erode(img: &BinaryImage, side: usize) -> BinaryImage {
    let mut out = BinaryImage::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let all = square_offsets(side).all(|dy| {
                square_offsets(side).all(|dx| img.get_or_bg(x as isize + dx, y as isize + dy))
            });
            out.set(x, y, all);
        }
    }
    out
}

/// Morphological closing (dilation, then erosion) with a square of side
/// `se_side`.
pub fn close_gaps(img: &BinaryImage, se_side: usize) -> BinaryImage {
    erode(&dilate(img, se_side), se_side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    type PixelSet = HashSet<(isize, isize)>;

    fn to_set(img: &BinaryImage) -> PixelSet {
        let mut s = HashSet::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y) {
                    s.insert((x as isize, y as isize));
                }
            }
        }
        s
    }

    /// Minkowski closing on point sets, clipped to the frame after dilation.
    fn set_closing(set: &PixelSet, side: isize, w: isize, h: isize) -> PixelSet {
        let lo = -((side - 1) / 2);
        let offs: Vec<(isize, isize)> = (lo..lo + side)
            .flat_map(|dy| (lo..lo + side).map(move |dx| (dx, dy)))
            .collect();
        let inside = |&(x, y): &(isize, isize)| x >= 0 && y >= 0 && x < w && y < h;
        let dilated: PixelSet = set
            .iter()
            .flat_map(|&(x, y)| offs.iter().map(move |&(dx, dy)| (x + dx, y + dy)))
            .filter(inside)
            .collect();
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| offs.iter().all(|&(dx, dy)| dilated.contains(&(x + dx, y + dy))))
            .collect()
    }

    #[test]
    fn solid_block_unchanged() {
        let mut img = BinaryImage::new(9, 9);
        for y in 2..7 {
            for x in 2..7 {
                img.set(x, y, true);
            }
        }
        assert_eq!(close_gaps(&img, 2), img);
        assert_eq!(close_gaps(&img, 3), img);
    }

    #[test]
    fn one_pixel_gap_is_filled() {
        let img = BinaryImage::from_rows(&[
            "0000000", "0000000", "0000000", "0110110", "0000000", "0000000", "0000000",
        ]);
        let closed = close_gaps(&img, 2);
        assert!(closed.get(3, 3));
        assert_eq!(to_set(&closed), set_closing(&to_set(&img), 2, 7, 7));
        assert_eq!(closed.count(), 5);
    }

    #[test]
    fn empty_stays_empty() {
        let img = BinaryImage::new(5, 4);
        assert_eq!(close_gaps(&img, 2), img);
    }

    fn arb_image() -> impl Strategy<Value = BinaryImage> {
        (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            prop::collection::vec(prop::bool::weighted(0.35), w * h)
                .prop_map(move |bits| BinaryImage::from_bits(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn closing_matches_set_oracle(img in arb_image(), side in 1usize..5) {
            let closed = close_gaps(&img, side);
            let oracle = set_closing(&to_set(&img), side as isize, img.width() as isize, img.height() as isize);
            prop_assert_eq!(to_set(&closed), oracle);
        }

        #[test]
        fn closing_is_idempotent(img in arb_image(), side in 1usize..5) {
            let once = close_gaps(&img, side);
            prop_assert_eq!(close_gaps(&once, side), once);
        }
    }
}
