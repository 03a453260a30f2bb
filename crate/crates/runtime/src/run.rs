//! The frame loop: acquire, process, emit, publish.
//!
//! Exit statuses: 0 for a clean end of stream or a quit action, 1 for
//! configuration errors, 3 when the source fails mid-stream and 4 when the
//! sink fails twice in a row.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fizi_core::imaging::pnm;
use fizi_core::interface::serialize_layout;
use fizi_core::{load_layout, BackgroundModel, FrameRgb};
use thiserror::Error;

use crate::config::Settings;
use crate::engine::Action;
use crate::pipeline::{FrameReport, Pipeline, PipelineError};
use crate::protocol::{self, BackgroundView, Inbound, Outbound};
use crate::service::{serve_ui, ServiceError, ServiceHandle};
use crate::sink::{command_record, event_record, Sink, SinkError, SinkSpec};
use crate::source::{FrameSource, Paced, SourceError, SourceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOURCE: i32 = 3;
pub const EXIT_SINK: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Source(#[from] SourceError),

    #[error(transparent)]
    Sink(#[from] SinkError),

    #[error(transparent)]
    Pipeline(#[from] PipelineError),

    #[error(transparent)]
    Service(#[from] ServiceError),

    #[error("cannot write debug dump {path}: {source}")]
    Dump {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Source(_) => EXIT_SOURCE,
            RunError::Sink(_) => EXIT_SINK,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: SourceSpec,
    pub layout_path: PathBuf,
    /// Learned at start when absent.
    pub background_path: Option<PathBuf>,
    pub settings: Settings,
    pub sink: SinkSpec,
    pub serve: Option<SocketAddr>,
    pub ui_dir: Option<PathBuf>,
    /// Directory receiving per-frame stage masks.
    pub debug_dump: Option<PathBuf>,
    /// Deliver frames no faster than `source.fps`.
    pub pace: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub frames: u64,
    pub commands: u64,
    pub quit: bool,
}

/// Loads the layout and background model named by `config`.
pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline, RunError> {
    let xml = std::fs::read_to_string(&config.layout_path).map_err(|e| {
        RunError::Config(format!("cannot read layout {}: {e}", config.layout_path.display()))
    })?;
    let layout = load_layout(&xml).map_err(|e| RunError::Config(e.to_string()))?;
    let background = match &config.background_path {
        Some(path) => Some(BackgroundModel::load(path).map_err(|e| {
            RunError::Config(format!("cannot load background {}: {e}", path.display()))
        })?),
        None => None,
    };
    Ok(Pipeline::new(config.settings.clone(), layout, background)?)
}

pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let pipeline = build_pipeline(config)?;
    let source = config.source.open().map_err(|e| match e {
        e @ (SourceError::Io { .. } | SourceError::Spec(_)) => RunError::Config(e.to_string()),
        e => RunError::Source(e),
    })?;
    let mut sink = Sink::open(&config.sink)
        .map_err(|e| RunError::Config(format!("cannot open sink: {e}")))?;
    let service = config
        .serve
        .map(|addr| serve_ui(addr, config.ui_dir.clone()))
        .transpose()?;
    let mut frame_loop = FrameLoop::new(pipeline, config.source.fps);
    frame_loop.dump_dir = config.debug_dump.clone();
    if config.pace {
        let mut paced = Paced::new(source, config.source.fps);
        frame_loop.run(&mut paced, &mut sink, service.as_ref())
    } else {
        let mut source = source;
        frame_loop.run(&mut source, &mut sink, service.as_ref())
    }
}

/// The single owner of mutable per-run state.
pub struct FrameLoop {
    pub pipeline: Pipeline,
    pub fps: u32,
    pub dump_dir: Option<PathBuf>,
    measured_fps: f64,
    last_frame_at: Option<Instant>,
}

impl FrameLoop {
    pub fn new(pipeline: Pipeline, fps: u32) -> FrameLoop {
        FrameLoop {
            pipeline,
            fps: fps.max(1),
            dump_dir: None,
            measured_fps: 0.0,
            last_frame_at: None,
        }
    }

    pub fn run(
        &mut self,
        source: &mut dyn FrameSource,
        sink: &mut Sink,
        service: Option<&ServiceHandle>,
    ) -> Result<RunSummary, RunError> {
        if let Some(dir) = &self.dump_dir {
            std::fs::create_dir_all(dir).map_err(|source| RunError::Dump {
                path: dir.clone(),
                source,
            })?;
        }
        if let Some(svc) = service {
            svc.hub().broadcast(&Outbound::Layout {
                xml: serialize_layout(self.pipeline.layout()),
            });
        }
        let mut summary = RunSummary::default();
        while let Some(frame) = source.next_frame()? {
            if let Some(svc) = service {
                self.apply_controls(svc);
            }
            let index = summary.frames;
            let t = index * 1000 / u64::from(self.fps);
            let report = self.pipeline.process(&frame, t)?;
            summary.frames += 1;

            if let Some(cmd) = &report.command {
                sink.write_line(&command_record(cmd))?;
                summary.commands += 1;
            }
            for (action, ev) in &report.actions {
                match action {
                    Action::EmitCommand => sink.write_line(&event_record(ev))?,
                    Action::Log => log::info!(
                        "zone {} {} value {:.4} at {} ms",
                        ev.zone_id,
                        ev.kind.as_str(),
                        ev.value,
                        ev.timestamp_ms
                    ),
                    Action::Quit => {}
                }
            }
            if let Some(dir) = &self.dump_dir {
                dump_stages(dir, index, &report)?;
            }
            if let Some(svc) = service {
                self.publish(svc, index, &frame, &report);
            }
            if report.quit() {
                log::info!("quit action at frame {index}");
                summary.quit = true;
                break;
            }
        }
        Ok(summary)
    }

    fn apply_controls(&mut self, svc: &ServiceHandle) {
        for control in svc.drain_controls() {
            let result = match &control.message {
                Inbound::SetParams { params } => self.pipeline.apply_params(params),
                Inbound::RelearnBackground => {
                    self.pipeline.request_relearn();
                    Ok(())
                }
                Inbound::SetLayout { xml } => self.pipeline.set_layout_xml(xml).map(|()| {
                    svc.hub().broadcast(&Outbound::Layout {
                        xml: serialize_layout(self.pipeline.layout()),
                    })
                }),
            };
            if let Err(e) = result {
                svc.hub().send_to(control.client, &Outbound::error(e.to_string()));
            }
        }
    }

    fn publish(&mut self, svc: &ServiceHandle, index: u64, frame: &FrameRgb, report: &FrameReport) {
        let now = Instant::now();
        if let Some(prev) = self.last_frame_at {
            let dt = now.duration_since(prev).as_secs_f64();
            if dt > 0.0 {
                let instant = 1.0 / dt;
                self.measured_fps = if self.measured_fps == 0.0 {
                    instant
                } else {
                    0.9 * self.measured_fps + 0.1 * instant
                };
            }
        }
        self.last_frame_at = Some(now);

        let hub = svc.hub();
        for notice in &report.notices {
            hub.broadcast(&Outbound::notice(notice));
        }
        for ev in &report.events {
            hub.broadcast(&Outbound::event(ev));
        }
        let mask = report.stages.as_ref().map(|s| &s.cleaned);
        hub.broadcast(&Outbound::State {
            frame: index,
            t: report.t,
            mode: self.pipeline.mode().as_str().to_string(),
            params: self.pipeline.settings().live_values(),
            fps: self.measured_fps,
            cursor: (&report.cursor).into(),
            command: self.pipeline.last_command().map(Into::into),
            background: self.pipeline.background().map(|bg| BackgroundView {
                checksum: bg.checksum(),
                frames_learned: bg.frames_learned(),
                width: bg.width(),
                height: bg.height(),
            }),
            mask_pixels: mask.map(|m| m.count_ones()),
        });
        if hub.client_count() > 0 {
            let annotated = protocol::annotate(frame, self.pipeline.layout(), &report.cursor);
            hub.offer_video(protocol::frame_message(&annotated));
            if let Some(mask) = mask {
                hub.offer_video(protocol::mask_message(mask));
            }
        }
    }
}

fn dump_stages(dir: &Path, index: u64, report: &FrameReport) -> Result<(), RunError> {
    let Some(stages) = &report.stages else {
        return Ok(());
    };
    for (name, mask) in stages.named() {
        let path = dir.join(format!("{index:05}_{name}.pgm"));
        std::fs::write(&path, pnm::encode_pgm_mask(mask))
            .map_err(|source| RunError::Dump { path, source })?;
    }
    Ok(())
}
