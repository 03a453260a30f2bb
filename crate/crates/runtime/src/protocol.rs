//! Messages exchanged with UI clients over the `/ws` WebSocket.
//!
//! Outbound text messages are JSON objects tagged by `"type"`:
//!
//! * `state`: mode, current parameters, measured fps, cursor, last command
//!   and background checksum, sent once per processed frame;
//! * `event`: one interface event;
//! * `notice`: learning started or finished;
//! * `layout`: the active layout XML, sent on connect and after a change;
//! * `error`: a rejected inbound message.
//!
//! Outbound binary messages carry a tag byte: `0x01` followed by a
//! `FIZIRAW1` frame (header plus one frame of pixels, annotated with zones
//! and cursor), or `0x02` followed by the hand mask as binary PGM.
//!
//! Inbound text messages: `{"type":"set_params","params":{"S":40}}`,
//! `{"type":"relearn_background"}` and `{"type":"set_layout","xml":"..."}`.

use fizi_core::imaging::pnm;
use fizi_core::interface::Geometry;
use fizi_core::{BinaryMask, CursorState, DriveCommand, FrameRgb, InterfaceEvent, Layout};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::pipeline::Notice;
use crate::source::encode_raw_frame;

pub const TAG_FRAME: u8 = 0x01;
pub const TAG_MASK: u8 = 0x02;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    SetParams { params: Map<String, Value> },
    RelearnBackground,
    SetLayout { xml: String },
}

impl Inbound {
    pub fn parse(text: &str) -> Result<Inbound, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CursorView {
    pub x: f64,
    pub y: f64,
    pub visible: bool,
    pub clicked: bool,
    pub dwell_ms: u64,
}

impl From<&CursorState> for CursorView {
    fn from(c: &CursorState) -> Self {
        CursorView {
            x: c.position.0,
            y: c.position.1,
            visible: c.visible,
            clicked: c.clicked,
            dwell_ms: c.dwell_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandView {
    pub t: u64,
    pub steering: f64,
    pub throttle: f64,
}

impl From<&DriveCommand> for CommandView {
    fn from(c: &DriveCommand) -> Self {
        CommandView {
            t: c.timestamp_ms,
            steering: c.steering,
            throttle: c.throttle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundView {
    pub checksum: String,
    pub frames_learned: u32,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    State {
        frame: u64,
        t: u64,
        mode: String,
        params: Map<String, Value>,
        fps: f64,
        cursor: CursorView,
        command: Option<CommandView>,
        background: Option<BackgroundView>,
        mask_pixels: Option<usize>,
    },
    Event {
        zone: String,
        kind: String,
        value: f64,
        t: u64,
    },
    Notice {
        kind: String,
        message: String,
        checksum: Option<String>,
    },
    Layout {
        xml: String,
    },
    Error {
        message: String,
    },
}

impl Outbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages always serialize")
    }

    pub fn error(message: impl Into<String>) -> Outbound {
        Outbound::Error {
            message: message.into(),
        }
    }

    pub fn event(ev: &InterfaceEvent) -> Outbound {
        Outbound::Event {
            zone: ev.zone_id.clone(),
            kind: ev.kind.as_str().to_string(),
            value: ev.value,
            t: ev.timestamp_ms,
        }
    }

    pub fn notice(n: &Notice) -> Outbound {
        match n {
            Notice::RelearnStarted { reason } => Outbound::Notice {
                kind: "learning".into(),
                message: format!("relearning background: {reason}"),
                checksum: None,
            },
            Notice::BackgroundLearned { checksum, frames } => Outbound::Notice {
                kind: "learned".into(),
                message: format!("background learned from {frames} frames"),
                checksum: Some(checksum.clone()),
            },
        }
    }
}

pub fn frame_message(frame: &FrameRgb) -> Vec<u8> {
    let raw = encode_raw_frame(frame);
    let mut out = Vec::with_capacity(raw.len() + 1);
    out.push(TAG_FRAME);
    out.extend_from_slice(&raw);
    out
}

pub fn mask_message(mask: &BinaryMask) -> Vec<u8> {
    let pgm = pnm::encode_pgm_mask(mask);
    let mut out = Vec::with_capacity(pgm.len() + 1);
    out.push(TAG_MASK);
    out.extend_from_slice(&pgm);
    out
}

/// Copy of `frame` with zone outlines, wheel circle and cursor drawn in.
pub fn annotate(frame: &FrameRgb, layout: &Layout, cursor: &CursorState) -> FrameRgb {
    let (w, h) = frame.dims();
    let mut data = frame.data().to_vec();
    let mut put = |x: i64, y: i64, c: [u8; 3]| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            let i = (y as usize * w + x as usize) * 3;
            data[i..i + 3].copy_from_slice(&c);
        }
    };
    const ZONE: [u8; 3] = [255, 255, 0];
    const WHEEL: [u8; 3] = [0, 200, 255];
    for zone in &layout.zones {
        match &zone.geometry {
            Geometry::Rect { x, y, w, h } => {
                let (x0, y0) = (x.round() as i64, y.round() as i64);
                let (x1, y1) = ((x + w).round() as i64, (y + h).round() as i64);
                for x in x0..=x1 {
                    put(x, y0, ZONE);
                    put(x, y1, ZONE);
                }
                for y in y0..=y1 {
                    put(x0, y, ZONE);
                    put(x1, y, ZONE);
                }
            }
            Geometry::Wheel(wheel) => {
                let steps = (wheel.radius * 8.0).ceil().max(16.0) as usize;
                for i in 0..steps {
                    let a = i as f64 / steps as f64 * std::f64::consts::TAU;
                    put(
                        (wheel.center.0 + wheel.radius * a.sin()).round() as i64,
                        (wheel.center.1 - wheel.radius * a.cos()).round() as i64,
                        WHEEL,
                    );
                }
            }
        }
    }
    if cursor.visible {
        let color = if cursor.clicked { [255, 0, 0] } else { [0, 255, 0] };
        let (cx, cy) = (cursor.position.0.round() as i64, cursor.position.1.round() as i64);
        for d in -3..=3 {
            put(cx + d, cy, color);
            put(cx, cy + d, color);
        }
    }
    FrameRgb::new(w, h, data).expect("same dimensions")
}
