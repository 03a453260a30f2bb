//! Hand segmentation: luminosity normalization, three independent threshold
//! branches (background envelope, gray rejection, skin hue band), AND-merge,
//! morphological cleanup and small-blob removal.

use std::borrow::Cow;

use thiserror::Error;

use crate::background::BackgroundModel;
use crate::imaging::{
    components, open_close_with, rgb_to_hue_with, BinaryMask, FrameRgb, HueField, ImagingError,
    StructuringElement, Workers,
};

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid segmentation parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
}

impl From<ImagingError> for SegmentationError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::DimensionMismatch { left, right } => {
                SegmentationError::DimensionMismatch { left, right }
            }
            other => SegmentationError::InvalidParams {
                name: "raster",
                reason: other.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationParams {
    /// Channel-spread tolerance: pixels with `max - min <= S` are gray.
    pub gray_tolerance: u8,
    /// Lower hue bound in degrees; may exceed `hue_hi` for a band through 0°.
    pub hue_lo: f64,
    pub hue_hi: f64,
    pub se_radius: usize,
    /// Components smaller than this fraction of the frame are dropped.
    pub min_blob_fraction: f64,
    pub luma_target: u8,
    pub luma_lo: u8,
    pub luma_hi: u8,
    /// `(min, max)` bounds on the correction exponent.
    pub gamma_clamp: (f64, f64),
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            gray_tolerance: 30,
            hue_lo: 340.0,
            hue_hi: 25.0,
            se_radius: 1,
            min_blob_fraction: 0.005,
            luma_target: 128,
            luma_lo: 60,
            luma_hi: 190,
            gamma_clamp: (0.4, 2.5),
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        let bad = |name, reason: String| Err(SegmentationError::InvalidParams { name, reason });
        for (name, v) in [("hue_lo", self.hue_lo), ("hue_hi", self.hue_hi)] {
            if !(0.0..360.0).contains(&v) {
                return bad(name, format!("{v} is outside [0, 360)"));
            }
        }
        if self.se_radius == 0 {
            return bad("se_radius", "must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.min_blob_fraction) {
            return bad(
                "min_blob_fraction",
                format!("{} is outside [0, 1]", self.min_blob_fraction),
            );
        }
        if !(self.luma_lo < self.luma_target && self.luma_target < self.luma_hi) {
            return bad(
                "luma_target",
                format!(
                    "need luma_lo < luma_target < luma_hi, got {} / {} / {}",
                    self.luma_lo, self.luma_target, self.luma_hi
                ),
            );
        }
        let (g0, g1) = self.gamma_clamp;
        if !(g0 > 0.0 && g0 <= g1 && g1.is_finite()) {
            return bad("gamma_clamp", format!("invalid range [{g0}, {g1}]"));
        }
        Ok(())
    }

    pub fn structuring_element(&self) -> StructuringElement {
        StructuringElement::square(self.se_radius.max(1)).expect("radius is at least 1")
    }
}

/// Rec.601 mean luma of a frame, computed with exact integer sums.
pub fn mean_luma(frame: &FrameRgb, workers: &Workers) -> f64 {
    let (w, h) = frame.dims();
    let mut row_sums = vec![0u64; h];
    workers.for_each_row(&mut row_sums, 1, |y, out| {
        out[0] = frame
            .row(y)
            .chunks_exact(3)
            .map(|p| 299 * u64::from(p[0]) + 587 * u64::from(p[1]) + 114 * u64::from(p[2]))
            .sum();
    });
    let total: u64 = row_sums.iter().sum();
    total as f64 / (1000.0 * (w * h) as f64)
}

/// Exponent that maps `mean` onto `target`, clamped; `None` when the frame
/// is already inside `[luma_lo, luma_hi]`.
pub fn correction_gamma(mean: f64, p: &SegmentationParams) -> Option<f64> {
    if (f64::from(p.luma_lo)..=f64::from(p.luma_hi)).contains(&mean) {
        return None;
    }
    let (lo, hi) = p.gamma_clamp;
    if mean >= 255.0 {
        return Some(hi);
    }
    let gamma = (f64::from(p.luma_target) / 255.0).ln() / (mean / 255.0).ln();
    // NaN only arises for degenerate means; treat it as the strongest brightening
    Some(if gamma.is_nan() { lo } else { gamma.clamp(lo, hi) })
}

pub fn gamma_lut(gamma: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (x, out) in lut.iter_mut().enumerate() {
        let v = 255.0 * (x as f64 / 255.0).powf(gamma);
        *out = v.round().clamp(0.0, 255.0) as u8;
    }
    lut
}

#[derive(Clone, Debug)]
pub struct Normalized<'a> {
    pub frame: Cow<'a, FrameRgb>,
    /// Mean luma of the input frame, before correction.
    pub mean_luma: f64,
    pub gamma: Option<f64>,
}

pub fn normalize_luminosity<'a>(
    frame: &'a FrameRgb,
    p: &SegmentationParams,
    workers: &Workers,
) -> Normalized<'a> {
    let mean = mean_luma(frame, workers);
    let Some(gamma) = correction_gamma(mean, p) else {
        return Normalized {
            frame: Cow::Borrowed(frame),
            mean_luma: mean,
            gamma: None,
        };
    };
    let lut = gamma_lut(gamma);
    let (w, h) = frame.dims();
    let mut data = vec![0u8; w * h * 3];
    workers.for_each_row(&mut data, w * 3, |y, out| {
        for (o, &v) in out.iter_mut().zip(frame.row(y)) {
            *o = lut[v as usize];
        }
    });
    Normalized {
        frame: Cow::Owned(FrameRgb::new(w, h, data).expect("same dimensions")),
        mean_luma: mean,
        gamma: Some(gamma),
    }
}

/// Foreground (1) unless all three channels lie inside the envelope.
pub fn branch_background(
    frame: &FrameRgb,
    bg: &BackgroundModel,
    workers: &Workers,
) -> Result<BinaryMask, SegmentationError> {
    frame.ensure_same_dims(bg.dims())?;
    let (w, h) = frame.dims();
    let (lo, hi) = (bg.min_rgb(), bg.max_rgb());
    let mut bits = vec![0u8; w * h];
    workers.for_each_row(&mut bits, w, |y, out| {
        let off = y * w * 3;
        let px = frame.row(y);
        let lo = &lo[off..off + w * 3];
        let hi = &hi[off..off + w * 3];
        for (x, o) in out.iter_mut().enumerate() {
            let i = x * 3;
            let inside = (lo[i] <= px[i] && px[i] <= hi[i])
                & (lo[i + 1] <= px[i + 1] && px[i + 1] <= hi[i + 1])
                & (lo[i + 2] <= px[i + 2] && px[i + 2] <= hi[i + 2]);
            *o = u8::from(!inside);
        }
    });
    Ok(BinaryMask::from_raw(w, h, bits))
}

/// Keeps pixels whose channel spread strictly exceeds `tolerance`.
pub fn branch_gray(frame: &FrameRgb, tolerance: u8, workers: &Workers) -> BinaryMask {
    let (w, h) = frame.dims();
    let mut bits = vec![0u8; w * h];
    workers.for_each_row(&mut bits, w, |y, out| {
        for (o, p) in out.iter_mut().zip(frame.row(y).chunks_exact(3)) {
            let spread = p[0].max(p[1]).max(p[2]) - p[0].min(p[1]).min(p[2]);
            *o = u8::from(spread > tolerance);
        }
    });
    BinaryMask::from_raw(w, h, bits)
}

/// Membership of `hue` in the closed circular band from `lo` to `hi`.
/// `lo > hi` denotes a band passing through 0°.
#[inline]
pub fn hue_band_contains(hue: f64, lo: f64, hi: f64) -> bool {
    if lo <= hi {
        lo <= hue && hue <= hi
    } else {
        hue >= lo || hue <= hi
    }
}

/// Skin mask from hue; achromatic pixels are never skin.
pub fn branch_skin(hue: &HueField, lo: f64, hi: f64, workers: &Workers) -> BinaryMask {
    let (w, h) = hue.dims();
    let (values, gray) = (hue.hue(), hue.achromatic());
    let mut bits = vec![0u8; w * h];
    workers.for_each_row(&mut bits, w, |y, out| {
        let row = y * w..(y + 1) * w;
        for ((o, &v), &a) in out.iter_mut().zip(&values[row.clone()]).zip(&gray[row]) {
            *o = u8::from(!a && hue_band_contains(v, lo, hi));
        }
    });
    BinaryMask::from_raw(w, h, bits)
}

pub fn merge(
    r1: &BinaryMask,
    r2: &BinaryMask,
    r3: &BinaryMask,
) -> Result<BinaryMask, SegmentationError> {
    r1.ensure_same_dims(r2.dims())?;
    r1.ensure_same_dims(r3.dims())?;
    let bits = r1
        .as_bytes()
        .iter()
        .zip(r2.as_bytes())
        .zip(r3.as_bytes())
        .map(|((a, b), c)| a & b & c)
        .collect();
    Ok(BinaryMask::from_raw(r1.width(), r1.height(), bits))
}

/// Every intermediate raster of one segmentation pass.
#[derive(Clone, Debug)]
pub struct SegmentStages {
    pub mean_luma: f64,
    pub gamma: Option<f64>,
    pub background: BinaryMask,
    pub gray: BinaryMask,
    pub skin: BinaryMask,
    pub merged: BinaryMask,
    pub cleaned: BinaryMask,
}

impl SegmentStages {
    /// `(suffix, mask)` pairs in pipeline order, for debug dumps.
    pub fn named(&self) -> [(&'static str, &BinaryMask); 5] {
        [
            ("r1", &self.background),
            ("r2", &self.gray),
            ("r3", &self.skin),
            ("merged", &self.merged),
            ("final", &self.cleaned),
        ]
    }
}

/// The full pipeline bound to a parameter snapshot and an executor.
#[derive(Clone, Debug)]
pub struct Segmenter {
    params: SegmentationParams,
    workers: Workers,
}

impl Segmenter {
    pub fn new(params: SegmentationParams, workers: Workers) -> Result<Self, SegmentationError> {
        params.validate()?;
        Ok(Self { params, workers })
    }

    pub fn params(&self) -> &SegmentationParams {
        &self.params
    }

    pub fn workers(&self) -> &Workers {
        &self.workers
    }

    pub fn normalize<'a>(&self, frame: &'a FrameRgb) -> Normalized<'a> {
        normalize_luminosity(frame, &self.params, &self.workers)
    }

    pub fn segment(
        &self,
        frame: &FrameRgb,
        bg: &BackgroundModel,
    ) -> Result<BinaryMask, SegmentationError> {
        Ok(self.stages(frame, bg)?.cleaned)
    }

    pub fn stages(
        &self,
        frame: &FrameRgb,
        bg: &BackgroundModel,
    ) -> Result<SegmentStages, SegmentationError> {
        let normalized = self.normalize(frame);
        self.stages_normalized(&normalized.frame, normalized.mean_luma, normalized.gamma, bg)
    }

    /// Runs the branches on a frame that has already been through
    /// [`Segmenter::normalize`].
    pub fn stages_normalized(
        &self,
        frame: &FrameRgb,
        mean_luma: f64,
        gamma: Option<f64>,
        bg: &BackgroundModel,
    ) -> Result<SegmentStages, SegmentationError> {
        frame.ensure_same_dims(bg.dims())?;
        let p = &self.params;
        let workers = &self.workers;
        let (background, (gray, skin)) = workers.join(
            || branch_background(frame, bg, workers),
            || {
                workers.join(
                    || branch_gray(frame, p.gray_tolerance, workers),
                    || branch_skin(&rgb_to_hue_with(frame, workers), p.hue_lo, p.hue_hi, workers),
                )
            },
        );
        let background = background?;
        let merged = merge(&background, &gray, &skin)?;
        let morphed = open_close_with(&merged, p.structuring_element(), workers);
        let min_area = (p.min_blob_fraction * frame.pixel_count() as f64).ceil() as usize;
        let cleaned = components::remove_small_components(&morphed, min_area);
        Ok(SegmentStages {
            mean_luma,
            gamma,
            background,
            gray,
            skin,
            merged,
            cleaned,
        })
    }
}
