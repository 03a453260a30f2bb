//! Binary erosion and dilation with a square structuring element.
//!
//! Out-of-bounds positions read as 0. A square window is the product of a
//! horizontal and a vertical interval, so both operators are computed as a
//! row pass followed by a column pass.

use super::{BinaryMask, ImagingError, Workers};

/// Square structuring element of side `2 * radius + 1`, origin at its center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
}

impl StructuringElement {
    pub fn square(radius: usize) -> Result<Self, ImagingError> {
        if radius == 0 {
            return Err(ImagingError::ZeroRadius);
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self { radius: 1 }
    }
}

#[derive(Clone, Copy)]
enum Op {
    Erode,
    Dilate,
}

impl Op {
    #[inline]
    fn keep(self, count: usize, side: usize) -> u8 {
        match self {
            Op::Erode => u8::from(count == side),
            Op::Dilate => u8::from(count > 0),
        }
    }
}

fn apply(mask: &BinaryMask, se: StructuringElement, op: Op, workers: &Workers) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = se.radius();
    let side = se.side();
    let src = mask.as_bytes();

    let mut horizontal = vec![0u8; w * h];
    workers.for_each_row(&mut horizontal, w, |y, out| {
        let row = &src[y * w..(y + 1) * w];
        // prefix[i] = number of ones in row[..i]
        let mut prefix = Vec::with_capacity(w + 1);
        prefix.push(0usize);
        let mut acc = 0usize;
        for &b in row {
            acc += b as usize;
            prefix.push(acc);
        }
        for (x, o) in out.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            *o = op.keep(prefix[hi] - prefix[lo], side);
        }
    });

    let mut out = vec![0u8; w * h];
    workers.for_each_row(&mut out, w, |y, out_row| {
        let lo = y.saturating_sub(r);
        let hi = (y + r + 1).min(h);
        let mut counts = vec![0u16; w];
        for yy in lo..hi {
            for (c, &b) in counts.iter_mut().zip(&horizontal[yy * w..(yy + 1) * w]) {
                *c += b as u16;
            }
        }
        for (o, &c) in out_row.iter_mut().zip(&counts) {
            *o = op.keep(c as usize, side);
        }
    });

    BinaryMask::from_raw(w, h, out)
}

/// Output pixel is 1 iff every in-bounds position under the element is 1 and
/// the element lies fully inside the raster.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    erode_with(mask, se, &Workers::sequential())
}

pub fn erode_with(mask: &BinaryMask, se: StructuringElement, workers: &Workers) -> BinaryMask {
    apply(mask, se, Op::Erode, workers)
}

/// Output pixel is 1 iff any in-bounds position under the element is 1.
pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    dilate_with(mask, se, &Workers::sequential())
}

pub fn dilate_with(mask: &BinaryMask, se: StructuringElement, workers: &Workers) -> BinaryMask {
    apply(mask, se, Op::Dilate, workers)
}

/// Opening (erode then dilate) followed by closing (dilate then erode).
pub fn open_close(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    open_close_with(mask, se, &Workers::sequential())
}

pub fn open_close_with(mask: &BinaryMask, se: StructuringElement, workers: &Workers) -> BinaryMask {
    let opened = dilate_with(&erode_with(mask, se, workers), se, workers);
    erode_with(&dilate_with(&opened, se, workers), se, workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se1() -> StructuringElement {
        StructuringElement::square(1).unwrap()
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert_eq!(StructuringElement::square(0), Err(ImagingError::ZeroRadius));
        assert_eq!(StructuringElement::square(2).unwrap().side(), 5);
    }

    #[test]
    fn erode_all_ones_keeps_interior() {
        let out = erode(&BinaryMask::ones(5, 5), se1());
        let expected = BinaryMask::from_fn(5, 5, |x, y| (1..=3).contains(&x) && (1..=3).contains(&y));
        assert_eq!(out, expected);
    }

    #[test]
    fn erode_removes_isolated_pixel() {
        let mut m = BinaryMask::zeros(5, 5);
        m.set(2, 2, true);
        assert!(erode(&m, se1()).is_empty());
    }

    #[test]
    fn dilate_empty_and_single() {
        assert!(dilate(&BinaryMask::zeros(5, 5), se1()).is_empty());
        let mut m = BinaryMask::zeros(5, 5);
        m.set(2, 2, true);
        let expected = BinaryMask::from_fn(5, 5, |x, y| (1..=3).contains(&x) && (1..=3).contains(&y));
        assert_eq!(dilate(&m, se1()), expected);
    }

    #[test]
    fn open_close_removes_salt() {
        let mut m = BinaryMask::zeros(12, 12);
        for (x, y) in [(1, 1), (5, 9), (10, 3)] {
            m.set(x, y, true);
        }
        // a solid 4x4 block survives
        for y in 4..8 {
            for x in 4..8 {
                m.set(x, y, true);
            }
        }
        let out = open_close(&m, se1());
        assert!(!out.get(1, 1) && !out.get(5, 9) && !out.get(10, 3));
        assert_eq!(out.count_ones(), 16);
    }

    #[test]
    fn open_close_on_all_ones_is_the_sequential_composition() {
        let m = BinaryMask::ones(7, 6);
        let se = se1();
        let opened = dilate(&erode(&m, se), se);
        let expected = erode(&dilate(&opened, se), se);
        assert_eq!(open_close(&m, se), expected);
        // zero padding erodes the border back away after the closing pass
        assert!(!expected.get(0, 0) && expected.get(3, 3));
    }
}
