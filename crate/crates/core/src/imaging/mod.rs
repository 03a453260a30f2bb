//! Raster primitives shared by every pipeline stage: RGB frames, binary
//! masks, hue conversion, morphology, connected components and Netpbm I/O.

pub(crate) mod components;
mod frame;
mod hue;
mod mask;
mod morphology;
mod parallel;
pub mod pnm;

pub use components::{connected_components, ConnectedComponent};
pub use frame::FrameRgb;
pub use hue::{hue_of, rgb_to_hue, rgb_to_hue_with, HueField};
pub use mask::BinaryMask;
pub use morphology::{
    dilate, dilate_with, erode, erode_with, open_close, open_close_with, StructuringElement,
};
pub use parallel::Workers;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImagingError {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimensions { width: usize, height: usize },

    #[error("buffer length {actual} does not match {width}x{height} (expected {expected})")]
    BufferLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("structuring element radius must be >= 1")]
    ZeroRadius,
}
