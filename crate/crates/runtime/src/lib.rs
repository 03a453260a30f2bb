//! Runtime for the gesture-steering toolkit: frame sources, the frame loop
//! that wires segmentation, tracking, hit testing and command generation,
//! command sinks, the `fizi` command line and the WebSocket service used by
//! the browser UI.

pub mod config;
pub mod engine;
pub mod learn;
pub mod pipeline;
pub mod protocol;
pub mod run;
pub mod service;
pub mod sink;
pub mod source;
pub mod synth;

pub use config::Settings;
pub use pipeline::{FrameReport, Mode, Pipeline};
pub use run::{run, RunConfig, RunError, RunSummary};
pub use service::{serve_ui, ServiceHandle};
pub use sink::{Sink, SinkSpec};
pub use source::{FrameSource, SourceSpec};
