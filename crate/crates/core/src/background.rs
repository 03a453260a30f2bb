//! Per-pixel RGB min/max envelope of the empty scene.
//!
//! A pixel whose three channels all fall inside the learned envelope is
//! background. The envelope is the per-channel min and max over the learning
//! frames, widened by a margin with saturating arithmetic.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::imaging::FrameRgb;

pub const MODEL_MAGIC: &[u8; 8] = b"FIZIBG1\0";
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 1 + 3;

pub const DEFAULT_LEARN_FRAMES: usize = 30;
pub const DEFAULT_MARGIN: u8 = 10;
pub const DEFAULT_RELEARN_THRESHOLD: f64 = 40.0;

#[derive(Debug, Error)]
pub enum BackgroundError {
    #[error("cannot learn a background from an empty frame sequence")]
    NoFrames,

    #[error("frame {index} is {found:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("model format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("model truncated at byte {offset}: expected {expected} bytes, got {actual}")]
    Truncated {
        offset: usize,
        expected: usize,
        actual: usize,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    min_rgb: Vec<u8>,
    max_rgb: Vec<u8>,
    frames_learned: u32,
    margin: u8,
}

/// Incremental min/max fold; `learn` is this fold over a slice.
#[derive(Clone, Debug)]
pub struct BackgroundLearner {
    dims: Option<(usize, usize)>,
    min_rgb: Vec<u8>,
    max_rgb: Vec<u8>,
    frames: u32,
}

impl Default for BackgroundLearner {
    fn default() -> Self {
        Self::new()
    }
}

impl BackgroundLearner {
    pub fn new() -> Self {
        Self {
            dims: None,
            min_rgb: Vec::new(),
            max_rgb: Vec::new(),
            frames: 0,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames as usize
    }

    pub fn push(&mut self, frame: &FrameRgb) -> Result<(), BackgroundError> {
        match self.dims {
            None => {
                self.dims = Some(frame.dims());
                self.min_rgb = frame.data().to_vec();
                self.max_rgb = frame.data().to_vec();
            }
            Some(expected) if expected != frame.dims() => {
                return Err(BackgroundError::DimensionMismatch {
                    index: self.frames as usize,
                    expected,
                    found: frame.dims(),
                });
            }
            Some(_) => {
                for ((lo, hi), &v) in self
                    .min_rgb
                    .iter_mut()
                    .zip(self.max_rgb.iter_mut())
                    .zip(frame.data())
                {
                    *lo = (*lo).min(v);
                    *hi = (*hi).max(v);
                }
            }
        }
        self.frames += 1;
        Ok(())
    }

    pub fn finish(self, margin: u8) -> Result<BackgroundModel, BackgroundError> {
        let (width, height) = self.dims.ok_or(BackgroundError::NoFrames)?;
        Ok(BackgroundModel {
            width,
            height,
            min_rgb: self.min_rgb.iter().map(|v| v.saturating_sub(margin)).collect(),
            max_rgb: self.max_rgb.iter().map(|v| v.saturating_add(margin)).collect(),
            frames_learned: self.frames,
            margin,
        })
    }
}

/// Learns the envelope from a nonempty sequence of equally sized frames.
pub fn learn<'a, I>(frames: I, margin: u8) -> Result<BackgroundModel, BackgroundError>
where
    I: IntoIterator<Item = &'a FrameRgb>,
{
    let mut learner = BackgroundLearner::new();
    for frame in frames {
        learner.push(frame)?;
    }
    learner.finish(margin)
}

/// True when the mean luma moved by strictly more than `threshold`.
pub fn relearn_trigger(prev_mean_luma: f64, cur_mean_luma: f64, threshold: f64) -> bool {
    (cur_mean_luma - prev_mean_luma).abs() > threshold
}

impl BackgroundModel {
    /// Assembles a model from already-widened planes.
    pub fn from_planes(
        width: usize,
        height: usize,
        min_rgb: Vec<u8>,
        max_rgb: Vec<u8>,
        frames_learned: u32,
        margin: u8,
    ) -> Result<Self, BackgroundError> {
        let plane = width * height * 3;
        if width == 0 || height == 0 {
            return Err(BackgroundError::Format {
                offset: 0,
                reason: format!("zero dimensions {width}x{height}"),
            });
        }
        if min_rgb.len() != plane || max_rgb.len() != plane {
            return Err(BackgroundError::Format {
                offset: 0,
                reason: format!(
                    "plane lengths {}/{} do not match {width}x{height}",
                    min_rgb.len(),
                    max_rgb.len()
                ),
            });
        }
        Ok(Self {
            width,
            height,
            min_rgb,
            max_rgb,
            frames_learned,
            margin,
        })
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

    pub fn min_rgb(&self) -> &[u8] {
        &self.min_rgb
    }

    pub fn max_rgb(&self) -> &[u8] {
        &self.max_rgb
    }

    pub fn frames_learned(&self) -> u32 {
        self.frames_learned
    }

    pub fn margin(&self) -> u8 {
        self.margin
    }

    pub fn contains(&self, x: usize, y: usize, rgb: [u8; 3]) -> bool {
        let i = (y * self.width + x) * 3;
        (0..3).all(|c| self.min_rgb[i + c] <= rgb[c] && rgb[c] <= self.max_rgb[i + c])
    }

    /// Mean of `max - min` per channel over all pixels.
    pub fn mean_envelope_width(&self) -> [f64; 3] {
        let mut sums = [0u64; 3];
        for (i, (&lo, &hi)) in self.min_rgb.iter().zip(&self.max_rgb).enumerate() {
            sums[i % 3] += u64::from(hi - lo);
        }
        let n = (self.width * self.height) as f64;
        sums.map(|s| s as f64 / n)
    }

    /// FNV-1a over the serialized model, as 16 hex digits.
    pub fn checksum(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * self.min_rgb.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.frames_learned.to_le_bytes());
        out.push(self.margin);
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&self.min_rgb);
        out.extend_from_slice(&self.max_rgb);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BackgroundError> {
        if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
            return Err(BackgroundError::Format {
                offset: 0,
                reason: "bad magic, expected \"FIZIBG1\\0\"".into(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(BackgroundError::Truncated {
                offset: bytes.len(),
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let width = u32_at(8) as usize;
        let height = u32_at(12) as usize;
        let frames_learned = u32_at(16);
        let margin = bytes[20];
        if width == 0 || height == 0 {
            return Err(BackgroundError::Format {
                offset: 8,
                reason: format!("zero dimensions {width}x{height}"),
            });
        }
        if frames_learned == 0 {
            return Err(BackgroundError::Format {
                offset: 16,
                reason: "frames_learned is 0".into(),
            });
        }
        let plane = width * height * 3;
        let expected = HEADER_LEN + 2 * plane;
        if bytes.len() < expected {
            return Err(BackgroundError::Truncated {
                offset: bytes.len(),
                expected,
                actual: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(BackgroundError::Format {
                offset: expected,
                reason: format!("{} trailing bytes", bytes.len() - expected),
            });
        }
        let min_rgb = bytes[HEADER_LEN..HEADER_LEN + plane].to_vec();
        let max_rgb = bytes[HEADER_LEN + plane..expected].to_vec();
        if let Some(i) = min_rgb.iter().zip(&max_rgb).position(|(lo, hi)| lo > hi) {
            return Err(BackgroundError::Format {
                offset: HEADER_LEN + i,
                reason: "min exceeds max".into(),
            });
        }
        Ok(Self {
            width,
            height,
            min_rgb,
            max_rgb,
            frames_learned,
            margin,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), BackgroundError> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, BackgroundError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BackgroundError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackgroundError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
