use super::{FrameRgb, Workers};

/// Per-pixel hue in degrees `[0, 360)` plus an achromatic flag.
///
/// Achromatic pixels (all three channels equal) have no defined hue; they
/// carry `hue = 0` and `achromatic = true` so that no later stage confuses
/// them with red.
#[derive(Clone, Debug, PartialEq)]
pub struct HueField {
    width: usize,
    height: usize,
    hue: Vec<f64>,
    achromatic: Vec<bool>,
}

impl HueField {
    pub fn from_parts(width: usize, height: usize, hue: Vec<f64>, achromatic: Vec<bool>) -> Self {
        assert_eq!(hue.len(), width * height);
        assert_eq!(achromatic.len(), width * height);
        Self {
            width,
            height,
            hue,
            achromatic,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn hue(&self) -> &[f64] {
        &self.hue
    }

    pub fn achromatic(&self) -> &[bool] {
        &self.achromatic
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        (!self.achromatic[i]).then_some(self.hue[i])
    }
}

/// Hexagonal hue of one pixel, or `None` when the pixel is achromatic.
#[inline]
pub fn hue_of(r: u8, g: u8, b: u8) -> Option<f64> {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    if max == min {
        return None;
    }
    let c = f64::from(max - min);
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let sector = if max as f64 == r {
        ((g - b) / c).rem_euclid(6.0)
    } else if max as f64 == g {
        (b - r) / c + 2.0
    } else {
        (r - g) / c + 4.0
    };
    let h = 60.0 * sector;
    // rem_euclid can round up to exactly 6.0 for tiny negative inputs
    Some(if h >= 360.0 { h - 360.0 } else { h })
}

pub fn rgb_to_hue(frame: &FrameRgb) -> HueField {
    rgb_to_hue_with(frame, &Workers::sequential())
}

pub fn rgb_to_hue_with(frame: &FrameRgb, workers: &Workers) -> HueField {
    let (w, h) = frame.dims();
    let mut packed = vec![(0.0f64, false); w * h];
    workers.for_each_row(&mut packed, w, |y, row| {
        for (out, px) in row.iter_mut().zip(frame.row(y).chunks_exact(3)) {
            *out = match hue_of(px[0], px[1], px[2]) {
                Some(hue) => (hue, false),
                None => (0.0, true),
            };
        }
    });
    let (hue, achromatic) = packed.into_iter().unzip();
    HueField::from_parts(w, h, hue, achromatic)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference evaluation of the hexagonal hue written independently of
    /// `hue_of`: sector selection by explicit comparison chain and a manual
    /// modulo.
    fn reference_hue(r: u8, g: u8, b: u8) -> Option<f64> {
        let (r, g, b) = (r as f64, g as f64, b as f64);
        let hi = if r >= g && r >= b {
            r
        } else if g >= b {
            g
        } else {
            b
        };
        let lo = r.min(g.min(b));
        let c = hi - lo;
        if c == 0.0 {
            return None;
        }
        let deg = if hi == r {
            let mut t = (g - b) / c;
            while t < 0.0 {
                t += 6.0;
            }
            while t >= 6.0 {
                t -= 6.0;
            }
            60.0 * t
        } else if hi == g {
            60.0 * ((b - r) / c + 2.0)
        } else {
            60.0 * ((r - g) / c + 4.0)
        };
        Some(deg % 360.0)
    }

    #[test]
    fn primaries_and_gray() {
        assert_eq!(hue_of(255, 0, 0), Some(0.0));
        assert_eq!(hue_of(0, 255, 0), Some(120.0));
        assert_eq!(hue_of(0, 0, 255), Some(240.0));
        assert_eq!(hue_of(77, 77, 77), None);
    }

    #[test]
    fn green_dominant_sample_matches_reference() {
        // (10,200,30): M = g, C = 190, hue = 60 * ((30 - 10) / 190 + 2)
        let expected = reference_hue(10, 200, 30).unwrap();
        assert!((expected - 126.315_789_473_684_2).abs() < 1e-9);
        assert!((hue_of(10, 200, 30).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn field_flags_achromatic() {
        let frame = FrameRgb::new(2, 1, vec![77, 77, 77, 255, 0, 0]).unwrap();
        let field = rgb_to_hue(&frame);
        assert_eq!(field.achromatic(), &[true, false]);
        assert_eq!(field.hue(), &[0.0, 0.0]);
        assert_eq!(field.get(0, 0), None);
        assert_eq!(field.get(1, 0), Some(0.0));
    }

    #[test]
    fn exhaustive_agreement_on_a_lattice() {
        for r in (0..=255u16).step_by(5) {
            for g in (0..=255u16).step_by(7) {
                for b in (0..=255u16).step_by(3) {
                    let (r, g, b) = (r as u8, g as u8, b as u8);
                    match (hue_of(r, g, b), reference_hue(r, g, b)) {
                        (Some(a), Some(e)) => {
                            assert!((0.0..360.0).contains(&a));
                            assert!((a - e).abs() < 1e-9, "{r},{g},{b}: {a} vs {e}");
                        }
                        (None, None) => {}
                        other => panic!("{r},{g},{b}: {other:?}"),
                    }
                }
            }
        }
    }
}
