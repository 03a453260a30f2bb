//! Tunable settings, the optional XML config file and live parameter patches.
//!
//! Every tunable has a short key that is shared by the config file
//! attributes, the `set_params` protocol message and the `state` echo:
//!
//! ```xml
//! <config>
//!   <segmentation S="30" hue_lo="340" hue_hi="25" se_radius="1"
//!                 min_blob_fraction="0.005" luma_target="128" luma_lo="60"
//!                 luma_hi="190" gamma_min="0.4" gamma_max="2.5"/>
//!   <tracker smoothing="0.5" dwell_radius="15" dwell_time_ms="800" lost_timeout_ms="500"/>
//!   <wheel theta_max="90" dead_zone="3" inner="0.6" outer="1.4"/>
//!   <background frames="30" margin="10" relearn_threshold="40"/>
//!   <drive hold_ms="200"/>
//!   <runtime workers="1" fps="30"/>
//! </config>
//! ```
//!
//! Elements and attributes are all optional; omitted values keep their
//! defaults. Wheel keys override the corresponding attributes of every wheel
//! zone in the layout.

use std::path::Path;

use fizi_core::background::{DEFAULT_LEARN_FRAMES, DEFAULT_MARGIN, DEFAULT_RELEARN_THRESHOLD};
use fizi_core::drive::DEFAULT_HOLD_MS;
use fizi_core::{Layout, SegmentationParams, TrackerParams};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::source::DEFAULT_FPS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("config is not well-formed XML: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("config line {line}: {message}")]
    Invalid { line: u32, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Segmentation,
    Tracker,
    Wheel,
    Background,
    Drive,
    Runtime,
}

impl Section {
    fn element(self) -> &'static str {
        match self {
            Section::Segmentation => "segmentation",
            Section::Tracker => "tracker",
            Section::Wheel => "wheel",
            Section::Background => "background",
            Section::Drive => "drive",
            Section::Runtime => "runtime",
        }
    }

    fn from_element(name: &str) -> Option<Self> {
        [
            Section::Segmentation,
            Section::Tracker,
            Section::Wheel,
            Section::Background,
            Section::Drive,
            Section::Runtime,
        ]
        .into_iter()
        .find(|s| s.element() == name)
    }
}

/// `(key, section, adjustable while running)`.
const KEYS: &[(&str, Section, bool)] = &[
    ("S", Section::Segmentation, true),
    ("hue_lo", Section::Segmentation, true),
    ("hue_hi", Section::Segmentation, true),
    ("se_radius", Section::Segmentation, true),
    ("min_blob_fraction", Section::Segmentation, true),
    ("luma_target", Section::Segmentation, true),
    ("luma_lo", Section::Segmentation, true),
    ("luma_hi", Section::Segmentation, true),
    ("gamma_min", Section::Segmentation, true),
    ("gamma_max", Section::Segmentation, true),
    ("smoothing", Section::Tracker, true),
    ("dwell_radius", Section::Tracker, true),
    ("dwell_time_ms", Section::Tracker, true),
    ("lost_timeout_ms", Section::Tracker, true),
    ("theta_max", Section::Wheel, true),
    ("dead_zone", Section::Wheel, true),
    ("inner", Section::Wheel, true),
    ("outer", Section::Wheel, true),
    ("frames", Section::Background, true),
    ("margin", Section::Background, true),
    ("relearn_threshold", Section::Background, true),
    ("hold_ms", Section::Drive, true),
    ("workers", Section::Runtime, false),
    ("fps", Section::Runtime, false),
];

fn section_of(key: &str) -> Option<(Section, bool)> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map(|&(_, s, live)| (s, live))
}

/// Overrides applied on top of each layout wheel; `None` keeps the layout's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WheelOverrides {
    pub theta_max: Option<f64>,
    pub dead_zone: Option<f64>,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
}

impl WheelOverrides {
    pub fn apply(&self, layout: &mut Layout) {
        layout.tune_wheels(|w| {
            if let Some(v) = self.theta_max {
                w.theta_max = v;
            }
            if let Some(v) = self.dead_zone {
                w.dead_zone = v;
            }
            if let Some(v) = self.inner {
                w.annulus.0 = v;
            }
            if let Some(v) = self.outer {
                w.annulus.1 = v;
            }
        });
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundSettings {
    pub frames: usize,
    pub margin: u8,
    pub relearn_threshold: f64,
}

impl Default for BackgroundSettings {
    fn default() -> Self {
        Self {
            frames: DEFAULT_LEARN_FRAMES,
            margin: DEFAULT_MARGIN,
            relearn_threshold: DEFAULT_RELEARN_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub segmentation: SegmentationParams,
    pub tracker: TrackerParams,
    pub wheel: WheelOverrides,
    pub background: BackgroundSettings,
    pub hold_ms: u64,
    pub workers: usize,
    pub fps: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            segmentation: SegmentationParams::default(),
            tracker: TrackerParams::default(),
            wheel: WheelOverrides::default(),
            background: BackgroundSettings::default(),
            hold_ms: DEFAULT_HOLD_MS,
            workers: 1,
            fps: DEFAULT_FPS,
        }
    }
}

fn integer<T: TryFrom<u64>>(key: &str, v: f64) -> Result<T, String> {
    if v.fract() != 0.0 || v < 0.0 {
        return Err(format!("{key} must be a non-negative integer, got {v}"));
    }
    T::try_from(v as u64).map_err(|_| format!("{key} is out of range: {v}"))
}

impl Settings {
    /// Sets one key without validating the combination.
    pub fn set(&mut self, key: &str, v: f64) -> Result<(), String> {
        if !v.is_finite() {
            return Err(format!("{key} must be finite"));
        }
        let seg = &mut self.segmentation;
        let tr = &mut self.tracker;
        match key {
            "S" => seg.gray_tolerance = integer(key, v)?,
            "hue_lo" => seg.hue_lo = v,
            "hue_hi" => seg.hue_hi = v,
            "se_radius" => seg.se_radius = integer(key, v)?,
            "min_blob_fraction" => seg.min_blob_fraction = v,
            "luma_target" => seg.luma_target = integer(key, v)?,
            "luma_lo" => seg.luma_lo = integer(key, v)?,
            "luma_hi" => seg.luma_hi = integer(key, v)?,
            "gamma_min" => seg.gamma_clamp.0 = v,
            "gamma_max" => seg.gamma_clamp.1 = v,
            "smoothing" => tr.smoothing = v,
            "dwell_radius" => tr.dwell_radius = v,
            "dwell_time_ms" => tr.dwell_time_ms = integer(key, v)?,
            "lost_timeout_ms" => tr.lost_timeout_ms = integer(key, v)?,
            "theta_max" => self.wheel.theta_max = Some(v),
            "dead_zone" => self.wheel.dead_zone = Some(v),
            "inner" => self.wheel.inner = Some(v),
            "outer" => self.wheel.outer = Some(v),
            "frames" => self.background.frames = integer(key, v)?,
            "margin" => self.background.margin = integer(key, v)?,
            "relearn_threshold" => self.background.relearn_threshold = v,
            "hold_ms" => self.hold_ms = integer(key, v)?,
            "workers" => self.workers = integer(key, v)?,
            "fps" => self.fps = integer(key, v)?,
            _ => return Err(format!("unknown parameter {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.segmentation.validate().map_err(|e| e.to_string())?;
        self.tracker.validate()?;
        if self.background.frames == 0 {
            return Err("background frames must be >= 1".into());
        }
        if !(self.background.relearn_threshold > 0.0) {
            return Err("relearn_threshold must be > 0".into());
        }
        if self.workers == 0 {
            return Err("workers must be >= 1".into());
        }
        if self.fps == 0 {
            return Err("fps must be > 0".into());
        }
        let mut probe = fizi_core::WheelModel::new((0.0, 0.0), 1.0);
        if let Some(v) = self.wheel.theta_max {
            probe.theta_max = v;
        }
        if let Some(v) = self.wheel.dead_zone {
            probe.dead_zone = v;
        }
        if let Some(v) = self.wheel.inner {
            probe.annulus.0 = v;
        }
        if let Some(v) = self.wheel.outer {
            probe.annulus.1 = v;
        }
        probe.validate()
    }

    /// Applies a `set_params` patch atomically: either every key is applied
    /// and the result is valid, or `self` is left untouched.
    pub fn patched(&self, patch: &Map<String, Value>) -> Result<Settings, String> {
        let mut next = self.clone();
        for (key, value) in patch {
            match section_of(key) {
                None => return Err(format!("unknown parameter {key:?}")),
                Some((_, false)) => return Err(format!("{key} cannot be changed while running")),
                Some(_) => {}
            }
            let v = value
                .as_f64()
                .ok_or_else(|| format!("{key} must be a number, got {value}"))?;
            next.set(key, v)?;
        }
        next.validate()?;
        Ok(next)
    }

    /// Current value of every adjustable key, as echoed in `state` messages.
    pub fn live_values(&self) -> Map<String, Value> {
        let seg = &self.segmentation;
        let tr = &self.tracker;
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("S", seg.gray_tolerance.into());
        put("hue_lo", seg.hue_lo.into());
        put("hue_hi", seg.hue_hi.into());
        put("se_radius", seg.se_radius.into());
        put("min_blob_fraction", seg.min_blob_fraction.into());
        put("luma_target", seg.luma_target.into());
        put("luma_lo", seg.luma_lo.into());
        put("luma_hi", seg.luma_hi.into());
        put("gamma_min", seg.gamma_clamp.0.into());
        put("gamma_max", seg.gamma_clamp.1.into());
        put("smoothing", tr.smoothing.into());
        put("dwell_radius", tr.dwell_radius.into());
        put("dwell_time_ms", tr.dwell_time_ms.into());
        put("lost_timeout_ms", tr.lost_timeout_ms.into());
        let opt = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        put("theta_max", opt(self.wheel.theta_max));
        put("dead_zone", opt(self.wheel.dead_zone));
        put("inner", opt(self.wheel.inner));
        put("outer", opt(self.wheel.outer));
        put("frames", self.background.frames.into());
        put("margin", self.background.margin.into());
        put("relearn_threshold", self.background.relearn_threshold.into());
        put("hold_ms", self.hold_ms.into());
        m
    }

    pub fn from_xml(xml: &str) -> Result<Settings, ConfigError> {
        let doc = roxmltree::Document::parse(xml)?;
        let line_of = |node: roxmltree::Node| doc.text_pos_at(node.range().start).row;
        let root = doc.root_element();
        if root.tag_name().name() != "config" {
            return Err(ConfigError::Invalid {
                line: line_of(root),
                message: format!("root element must be <config>, found <{}>", root.tag_name().name()),
            });
        }
        let mut settings = Settings::default();
        for el in root.children().filter(|n| n.is_element()) {
            let line = line_of(el);
            let invalid = |message: String| ConfigError::Invalid { line, message };
            let name = el.tag_name().name();
            let section =
                Section::from_element(name).ok_or_else(|| invalid(format!("unknown element <{name}>")))?;
            for attr in el.attributes() {
                let key = attr.name();
                if section_of(key).map(|(s, _)| s) != Some(section) {
                    return Err(invalid(format!("<{name}> has no attribute {key:?}")));
                }
                let v: f64 = attr
                    .value()
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("{key}={:?} is not a number", attr.value())))?;
                settings.set(key, v).map_err(invalid)?;
            }
        }
        settings.validate().map_err(|message| ConfigError::Invalid { line: 1, message })?;
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let xml = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Settings::from_xml(&xml)
    }
}
