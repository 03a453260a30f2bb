//! Per-frame processing: luminosity normalization, relearn check,
//! segmentation, tracking, hit testing and command generation.
//!
//! The pipeline is either learning the background (no commands are produced
//! while it does) or running. It starts learning when no model is supplied,
//! when the mean luma drifts from the learned reference by more than the
//! relearn threshold, or on request.

use fizi_core::background::BackgroundLearner;
use fizi_core::interface::ZoneKind;
use fizi_core::segmentation::SegmentStages;
use fizi_core::{
    hit_test, load_layout, make_command, relearn_trigger, steering_from_cursor, BackgroundError,
    BackgroundModel, CursorState, DriveCommand, DriveState, FrameRgb, HitState, InterfaceEvent,
    Layout, SegmentationError, Segmenter, Tracker, Workers,
};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::config::Settings;
use crate::engine::{self, Action};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),

    #[error(transparent)]
    Background(#[from] BackgroundError),

    #[error("invalid settings: {0}")]
    Settings(String),

    #[error("invalid layout: {0}")]
    Layout(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Learning,
    Running,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Learning => "learning",
            Mode::Running => "running",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Notice {
    RelearnStarted { reason: String },
    BackgroundLearned { checksum: String, frames: u32 },
}

/// Everything one frame produced.
#[derive(Debug)]
pub struct FrameReport {
    pub t: u64,
    pub mode: Mode,
    pub mean_luma: f64,
    pub gamma: Option<f64>,
    /// Present on running frames.
    pub stages: Option<SegmentStages>,
    pub cursor: CursorState,
    pub events: Vec<InterfaceEvent>,
    pub command: Option<DriveCommand>,
    pub actions: Vec<(Action, InterfaceEvent)>,
    pub notices: Vec<Notice>,
}

impl FrameReport {
    pub fn quit(&self) -> bool {
        self.actions.iter().any(|(a, _)| *a == Action::Quit)
    }
}

struct Learning {
    learner: BackgroundLearner,
    luma_sum: f64,
}

pub struct Pipeline {
    settings: Settings,
    base_layout: Layout,
    layout: Layout,
    workers: Workers,
    segmenter: Segmenter,
    tracker: Tracker,
    hit: HitState,
    drive: DriveState,
    last_command: Option<DriveCommand>,
    background: Option<BackgroundModel>,
    reference_luma: Option<f64>,
    learning: Option<Learning>,
    relearn_requested: bool,
}

impl Pipeline {
    pub fn new(
        settings: Settings,
        layout: Layout,
        background: Option<BackgroundModel>,
    ) -> Result<Pipeline, PipelineError> {
        settings.validate().map_err(PipelineError::Settings)?;
        engine::check_layout(&layout).map_err(PipelineError::Layout)?;
        let workers = Workers::new(settings.workers);
        let segmenter = Segmenter::new(settings.segmentation.clone(), workers.clone())?;
        let mut effective = layout.clone();
        settings.wheel.apply(&mut effective);
        check_wheels(&effective)?;
        let learning = background.is_none().then(new_learning);
        Ok(Pipeline {
            tracker: Tracker::new(settings.tracker.clone()),
            settings,
            base_layout: layout,
            layout: effective,
            workers,
            segmenter,
            hit: HitState::default(),
            drive: DriveState::default(),
            last_command: None,
            background,
            reference_luma: None,
            learning,
            relearn_requested: false,
        })
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn background(&self) -> Option<&BackgroundModel> {
        self.background.as_ref()
    }

    pub fn mode(&self) -> Mode {
        if self.learning.is_some() {
            Mode::Learning
        } else {
            Mode::Running
        }
    }

    pub fn last_command(&self) -> Option<&DriveCommand> {
        self.last_command.as_ref()
    }

    /// Swaps in a patched parameter set; nothing changes if the patch is invalid.
    pub fn apply_params(&mut self, patch: &Map<String, Value>) -> Result<(), PipelineError> {
        let next = self.settings.patched(patch).map_err(PipelineError::Settings)?;
        let segmenter = Segmenter::new(next.segmentation.clone(), self.workers.clone())?;
        let mut layout = self.base_layout.clone();
        next.wheel.apply(&mut layout);
        check_wheels(&layout)?;
        self.tracker.set_params(next.tracker.clone());
        self.segmenter = segmenter;
        self.layout = layout;
        self.settings = next;
        Ok(())
    }

    pub fn set_layout_xml(&mut self, xml: &str) -> Result<(), PipelineError> {
        let base = load_layout(xml).map_err(|e| PipelineError::Layout(e.to_string()))?;
        engine::check_layout(&base).map_err(PipelineError::Layout)?;
        let mut layout = base.clone();
        self.settings.wheel.apply(&mut layout);
        check_wheels(&layout)?;
        self.base_layout = base;
        self.layout = layout;
        self.hit = HitState::default();
        Ok(())
    }

    /// Relearning starts with the next processed frame.
    pub fn request_relearn(&mut self) {
        self.relearn_requested = true;
    }

    pub fn process(&mut self, frame: &FrameRgb, t: u64) -> Result<FrameReport, PipelineError> {
        let normalized = self.segmenter.normalize(frame);
        let mean_luma = normalized.mean_luma;
        let mut notices = Vec::new();

        if self.learning.is_none() {
            let drifted = self.reference_luma.is_some_and(|r| {
                relearn_trigger(r, mean_luma, self.settings.background.relearn_threshold)
            });
            if self.relearn_requested || drifted {
                let reason = if self.relearn_requested {
                    "requested".to_string()
                } else {
                    format!(
                        "mean luma moved from {:.1} to {:.1}",
                        self.reference_luma.unwrap_or_default(),
                        mean_luma
                    )
                };
                log::info!("relearning background: {reason}");
                notices.push(Notice::RelearnStarted { reason });
                self.learning = Some(new_learning());
                self.tracker.reset();
                self.hit = HitState::default();
            }
            self.relearn_requested = false;
        }

        if let Some(learning) = &mut self.learning {
            learning.learner.push(&normalized.frame)?;
            learning.luma_sum += mean_luma;
            if learning.learner.frames() >= self.settings.background.frames {
                let learning = self.learning.take().expect("learning");
                let n = learning.learner.frames();
                let model = learning.learner.finish(self.settings.background.margin)?;
                notices.push(Notice::BackgroundLearned {
                    checksum: model.checksum(),
                    frames: model.frames_learned(),
                });
                log::info!("background learned from {n} frames, checksum {}", model.checksum());
                self.reference_luma = Some(learning.luma_sum / n as f64);
                self.background = Some(model);
            }
            return Ok(FrameReport {
                t,
                mode: Mode::Learning,
                mean_luma,
                gamma: normalized.gamma,
                stages: None,
                cursor: self.tracker.state().clone(),
                events: Vec::new(),
                command: None,
                actions: Vec::new(),
                notices,
            });
        }

        let bg = self.background.as_ref().expect("running implies a model");
        self.reference_luma.get_or_insert(mean_luma);
        let stages =
            self.segmenter
                .stages_normalized(&normalized.frame, mean_luma, normalized.gamma, bg)?;
        let cursor = self.tracker.update(&stages.cleaned, t).clone();
        let (events, hit) = hit_test(&self.layout.zones, &cursor, &self.hit, t);
        self.hit = hit;

        let steering = self
            .layout
            .first_of(ZoneKind::Wheel)
            .and_then(|z| z.wheel())
            .and_then(|w| steering_from_cursor(&cursor, w));
        let throttle = self
            .layout
            .zones
            .iter()
            .filter(|z| z.kind == ZoneKind::Slider)
            .find(|z| cursor.visible && z.contains(cursor.position))
            .and_then(|z| z.slider_value(cursor.position.1));
        self.drive = make_command(steering, throttle, &self.drive, t, self.settings.hold_ms);
        self.last_command = Some(self.drive.command);

        let actions = engine::dispatch(&self.layout, &events)
            .into_iter()
            .map(|(a, e)| (a, e.clone()))
            .collect();
        Ok(FrameReport {
            t,
            mode: Mode::Running,
            mean_luma,
            gamma: normalized.gamma,
            stages: Some(stages),
            cursor,
            events,
            command: Some(self.drive.command),
            actions,
            notices,
        })
    }
}

fn new_learning() -> Learning {
    Learning {
        learner: BackgroundLearner::new(),
        luma_sum: 0.0,
    }
}

fn check_wheels(layout: &Layout) -> Result<(), PipelineError> {
    for zone in &layout.zones {
        if let Some(w) = zone.wheel() {
            w.validate()
                .map_err(|e| PipelineError::Layout(format!("wheel {:?}: {e}", zone.id)))?;
        }
    }
    Ok(())
}
