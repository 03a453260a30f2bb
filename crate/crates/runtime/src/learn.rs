//! Offline background learning from a frame source.

use fizi_core::{BackgroundError, BackgroundLearner, BackgroundModel, SegmentationParams, Segmenter, Workers};
use thiserror::Error;

use crate::source::{FrameSource, SourceError};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("not enough frames to learn the background: expected {expected}, got {got}")]
    Insufficient { expected: usize, got: usize },

    #[error(transparent)]
    Source(#[from] SourceError),

    #[error(transparent)]
    Background(#[from] BackgroundError),

    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Learns from the first `n_frames` frames of `source`, after the same
/// luminosity normalization the frame loop applies.
pub fn learn_background(
    source: &mut dyn FrameSource,
    n_frames: usize,
    margin: u8,
    params: &SegmentationParams,
) -> Result<BackgroundModel, LearnError> {
    let segmenter = Segmenter::new(params.clone(), Workers::sequential())
        .map_err(|e| LearnError::Params(e.to_string()))?;
    let mut learner = BackgroundLearner::new();
    while learner.frames() < n_frames {
        let Some(frame) = source.next_frame()? else {
            break;
        };
        learner.push(&segmenter.normalize(&frame).frame)?;
    }
    if learner.frames() < n_frames || n_frames == 0 {
        return Err(LearnError::Insufficient {
            expected: n_frames,
            got: learner.frames(),
        });
    }
    Ok(learner.finish(margin)?)
}
