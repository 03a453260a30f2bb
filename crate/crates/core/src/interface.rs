//! XML-described interface zones, cursor hit-testing and zone events.
//!
//! Layout schema (UTF-8):
//!
//! ```xml
//! <interface>
//!   <background image="wheel.png"/>
//!   <zone id="quit" type="button" x="10" y="10" w="60" h="30" on_click="action:quit"/>
//!   <zone id="gas" type="slider" x="560" y="40" w="40" h="300" on_change="emit_command"/>
//!   <zone id="wheel" type="wheel" cx="320" cy="260" r="140" theta_max="90"/>
//! </interface>
//! ```
//!
//! Buttons and sliders take `x y w h`; wheels take `cx cy r` plus optional
//! `theta_max dead_zone inner outer`. Bindings (`on_enter on_leave on_click
//! on_change`) name actions; the runtime decides what an action does.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::drive::{steering_from_cursor, WheelModel};
use crate::tracker::CursorState;

/// Minimum change before a slider or wheel reports a new value.
pub const VALUE_EPSILON: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("layout error in <{element}> at line {line}: {message}")]
pub struct LayoutError {
    pub element: String,
    pub line: u32,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ZoneKind {
    Button,
    Slider,
    Wheel,
}

impl ZoneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ZoneKind::Button => "button",
            ZoneKind::Slider => "slider",
            ZoneKind::Wheel => "wheel",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Rect { x: f64, y: f64, w: f64, h: f64 },
    Wheel(WheelModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Enter,
    Leave,
    Click,
    ValueChanged,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::Enter,
        EventKind::Leave,
        EventKind::Click,
        EventKind::ValueChanged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Enter => "enter",
            EventKind::Leave => "leave",
            EventKind::Click => "click",
            EventKind::ValueChanged => "value_changed",
        }
    }

    /// XML attribute carrying the binding for this event.
    pub fn binding_attr(self) -> &'static str {
        match self {
            EventKind::Enter => "on_enter",
            EventKind::Leave => "on_leave",
            EventKind::Click => "on_click",
            EventKind::ValueChanged => "on_change",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Zone {
    pub id: String,
    pub kind: ZoneKind,
    pub geometry: Geometry,
    pub bindings: BTreeMap<EventKind, String>,
}

impl Zone {
    pub fn contains(&self, (px, py): (f64, f64)) -> bool {
        match &self.geometry {
            Geometry::Rect { x, y, w, h } => *x <= px && px <= x + w && *y <= py && py <= y + h,
            Geometry::Wheel(wheel) => {
                let (dx, dy) = (px - wheel.center.0, py - wheel.center.1);
                dx * dx + dy * dy <= wheel.radius * wheel.radius
            }
        }
    }

    pub fn wheel(&self) -> Option<&WheelModel> {
        match &self.geometry {
            Geometry::Wheel(w) => Some(w),
            Geometry::Rect { .. } => None,
        }
    }

    pub fn action_for(&self, kind: EventKind) -> Option<&str> {
        self.bindings.get(&kind).map(String::as_str)
    }

    /// Slider reading for a cursor at height `py`: 1 at the top edge, 0 at
    /// the bottom, clamped.
    pub fn slider_value(&self, py: f64) -> Option<f64> {
        match (&self.geometry, self.kind) {
            (Geometry::Rect { y, h, .. }, ZoneKind::Slider) => {
                Some((1.0 - (py - y) / h).clamp(0.0, 1.0))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layout {
    pub background: Option<String>,
    pub zones: Vec<Zone>,
}

impl Layout {
    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn first_of(&self, kind: ZoneKind) -> Option<&Zone> {
        self.zones.iter().find(|z| z.kind == kind)
    }

    /// Every action name referenced by a binding, in document order.
    pub fn actions(&self) -> impl Iterator<Item = (&Zone, EventKind, &str)> {
        self.zones
            .iter()
            .flat_map(|z| z.bindings.iter().map(move |(k, a)| (z, *k, a.as_str())))
    }

    /// Applies wheel tuning to every wheel zone.
    pub fn tune_wheels(&mut self, f: impl Fn(&mut WheelModel)) {
        for zone in &mut self.zones {
            if let Geometry::Wheel(w) = &mut zone.geometry {
                f(w);
            }
        }
    }
}

fn err(node: &roxmltree::Node, message: impl Into<String>) -> LayoutError {
    let pos = node.document().text_pos_at(node.range().start);
    LayoutError {
        element: node.tag_name().name().to_string(),
        line: pos.row,
        message: message.into(),
    }
}

fn number(node: &roxmltree::Node, name: &str) -> Result<Option<f64>, LayoutError> {
    node.attribute(name)
        .map(|raw| {
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(node, format!("attribute {name}={raw:?} is not a number")))
        })
        .transpose()
}

fn required(node: &roxmltree::Node, name: &str) -> Result<f64, LayoutError> {
    number(node, name)?.ok_or_else(|| err(node, format!("missing required attribute {name}")))
}

const RECT_ATTRS: [&str; 4] = ["x", "y", "w", "h"];
const WHEEL_ATTRS: [&str; 7] = ["cx", "cy", "r", "theta_max", "dead_zone", "inner", "outer"];

fn parse_zone(node: &roxmltree::Node) -> Result<Zone, LayoutError> {
    let id = node
        .attribute("id")
        .ok_or_else(|| err(node, "missing required attribute id"))?;
    if id.is_empty() {
        return Err(err(node, "zone id must not be empty"));
    }
    let kind = match node.attribute("type") {
        Some("button") => ZoneKind::Button,
        Some("slider") => ZoneKind::Slider,
        Some("wheel") => ZoneKind::Wheel,
        Some(other) => return Err(err(node, format!("zone {id:?} has unknown type {other:?}"))),
        None => return Err(err(node, format!("zone {id:?}: missing required attribute type"))),
    };

    let geometry_attrs: &[&str] = match kind {
        ZoneKind::Wheel => &WHEEL_ATTRS,
        _ => &RECT_ATTRS,
    };
    for attr in node.attributes() {
        let name = attr.name();
        let known = name == "id"
            || name == "type"
            || geometry_attrs.contains(&name)
            || EventKind::ALL.iter().any(|k| k.binding_attr() == name);
        if !known {
            return Err(err(node, format!("zone {id:?}: unknown attribute {name}")));
        }
    }

    let geometry = match kind {
        ZoneKind::Wheel => {
            let mut wheel = WheelModel::new((required(node, "cx")?, required(node, "cy")?), required(node, "r")?);
            if let Some(t) = number(node, "theta_max")? {
                wheel.theta_max = t;
            }
            if let Some(d) = number(node, "dead_zone")? {
                wheel.dead_zone = d;
            }
            if let Some(i) = number(node, "inner")? {
                wheel.annulus.0 = i;
            }
            if let Some(o) = number(node, "outer")? {
                wheel.annulus.1 = o;
            }
            wheel
                .validate()
                .map_err(|m| err(node, format!("zone {id:?}: {m}")))?;
            Geometry::Wheel(wheel)
        }
        _ => {
            let [x, y, w, h] = RECT_ATTRS.map(|a| required(node, a));
            let (x, y, w, h) = (x?, y?, w?, h?);
            if w <= 0.0 || h <= 0.0 {
                return Err(err(node, format!("zone {id:?}: w and h must be > 0")));
            }
            Geometry::Rect { x, y, w, h }
        }
    };

    let mut bindings = BTreeMap::new();
    for kind in EventKind::ALL {
        if let Some(action) = node.attribute(kind.binding_attr()) {
            if action.trim().is_empty() {
                return Err(err(
                    node,
                    format!("zone {id:?}: empty {}", kind.binding_attr()),
                ));
            }
            bindings.insert(kind, action.trim().to_string());
        }
    }

    Ok(Zone {
        id: id.to_string(),
        kind,
        geometry,
        bindings,
    })
}

/// Parses and validates a layout document; zones keep document order.
pub fn load_layout(xml: &str) -> Result<Layout, LayoutError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| LayoutError {
        element: "document".into(),
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "interface" {
        return Err(err(&root, "root element must be <interface>"));
    }

    let mut layout = Layout::default();
    for node in root.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "background" => {
                if layout.background.is_some() {
                    return Err(err(&node, "more than one <background>"));
                }
                let image = node
                    .attribute("image")
                    .ok_or_else(|| err(&node, "missing required attribute image"))?;
                layout.background = Some(image.to_string());
            }
            "zone" => {
                let zone = parse_zone(&node)?;
                if layout.zones.iter().any(|z| z.id == zone.id) {
                    return Err(err(&node, format!("duplicate zone id {:?}", zone.id)));
                }
                layout.zones.push(zone);
            }
            other => return Err(err(&node, format!("unexpected element <{other}>"))),
        }
    }
    Ok(layout)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes a layout back out in the schema `load_layout` accepts.
pub fn serialize_layout(layout: &Layout) -> String {
    let mut out = String::from("<interface>\n");
    if let Some(image) = &layout.background {
        let _ = writeln!(out, "  <background image=\"{}\"/>", escape(image));
    }
    for zone in &layout.zones {
        let _ = write!(
            out,
            "  <zone id=\"{}\" type=\"{}\"",
            escape(&zone.id),
            zone.kind.as_str()
        );
        match &zone.geometry {
            Geometry::Rect { x, y, w, h } => {
                let _ = write!(out, " x=\"{x}\" y=\"{y}\" w=\"{w}\" h=\"{h}\"");
            }
            Geometry::Wheel(wh) => {
                let _ = write!(
                    out,
                    " cx=\"{}\" cy=\"{}\" r=\"{}\" theta_max=\"{}\" dead_zone=\"{}\" inner=\"{}\" outer=\"{}\"",
                    wh.center.0, wh.center.1, wh.radius, wh.theta_max, wh.dead_zone, wh.annulus.0, wh.annulus.1
                );
            }
        }
        for (kind, action) in &zone.bindings {
            let _ = write!(out, " {}=\"{}\"", kind.binding_attr(), escape(action));
        }
        out.push_str("/>\n");
    }
    out.push_str("</interface>\n");
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceEvent {
    pub zone_id: String,
    pub kind: EventKind,
    /// Slider: `[0, 1]`; wheel: steering `[-1, 1]`; otherwise 0.
    pub value: f64,
    pub timestamp_ms: u64,
}

/// Per-zone membership and last reported value, indexed like the layout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HitState {
    inside: Vec<bool>,
    last_value: Vec<Option<f64>>,
}

impl HitState {
    pub fn is_inside(&self, zone_index: usize) -> bool {
        self.inside.get(zone_index).copied().unwrap_or(false)
    }

    pub fn last_value(&self, zone_index: usize) -> Option<f64> {
        self.last_value.get(zone_index).copied().flatten()
    }
}

fn changed(last: Option<f64>, value: f64) -> bool {
    last.is_none_or(|l| (value - l).abs() >= VALUE_EPSILON)
}

/// Events produced by moving from `prev` to `cursor`.
///
/// Per zone, in document order: enter/leave, then click, then
/// value_changed. Overlapping zones each receive their own events.
pub fn hit_test(
    zones: &[Zone],
    cursor: &CursorState,
    prev: &HitState,
    now: u64,
) -> (Vec<InterfaceEvent>, HitState) {
    let mut events = Vec::new();
    let mut next = HitState {
        inside: Vec::with_capacity(zones.len()),
        last_value: Vec::with_capacity(zones.len()),
    };
    let emit = |events: &mut Vec<InterfaceEvent>, zone: &Zone, kind, value| {
        events.push(InterfaceEvent {
            zone_id: zone.id.clone(),
            kind,
            value,
            timestamp_ms: now,
        })
    };

    for (i, zone) in zones.iter().enumerate() {
        let was_inside = prev.is_inside(i);
        let inside = cursor.visible && zone.contains(cursor.position);
        let mut last = prev.last_value(i);

        match (was_inside, inside) {
            (false, true) => emit(&mut events, zone, EventKind::Enter, 0.0),
            (true, false) => emit(&mut events, zone, EventKind::Leave, 0.0),
            _ => {}
        }
        if inside && cursor.clicked {
            emit(&mut events, zone, EventKind::Click, 0.0);
        }

        let reading = match zone.kind {
            ZoneKind::Slider if inside => zone.slider_value(cursor.position.1),
            ZoneKind::Wheel => zone.wheel().and_then(|w| steering_from_cursor(cursor, w)),
            _ => None,
        };
        match reading {
            Some(v) if changed(last, v) => {
                emit(&mut events, zone, EventKind::ValueChanged, v);
                last = Some(v);
            }
            Some(_) => {}
            None => last = None,
        }

        next.inside.push(inside);
        next.last_value.push(last);
    }
    (events, next)
}
