//! Turns the hand mask into a smoothed cursor with visibility and a
//! dwell-to-click gesture.
//!
//! The cursor follows the centroid of the largest connected component,
//! exponentially smoothed while the hand stays visible. Holding the cursor
//! within `dwell_radius` of the point where it settled for `dwell_time_ms`
//! produces exactly one `clicked` frame; the hand has to move away (or be
//! lost) before another click can fire.

use crate::imaging::{connected_components, BinaryMask};

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerParams {
    /// Weight of the new centroid in the exponential filter, `[0, 1]`.
    pub smoothing: f64,
    pub dwell_radius: f64,
    pub dwell_time_ms: u64,
    pub lost_timeout_ms: u64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            smoothing: 0.5,
            dwell_radius: 15.0,
            dwell_time_ms: 800,
            lost_timeout_ms: 500,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(format!("smoothing {} is outside [0, 1]", self.smoothing));
        }
        if !(self.dwell_radius >= 0.0 && self.dwell_radius.is_finite()) {
            return Err(format!("dwell_radius {} must be >= 0", self.dwell_radius));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CursorState {
    pub position: (f64, f64),
    pub visible: bool,
    /// True on exactly one frame per dwell episode.
    pub clicked: bool,
    pub dwell_ms: u64,
    pub last_seen_ms: u64,
    /// Where the current dwell episode started.
    pub dwell_anchor: Option<(f64, f64)>,
    /// Timestamp of the previous update, for dwell accumulation.
    pub updated_ms: Option<u64>,
    click_fired: bool,
}

impl CursorState {
    /// A visible cursor at `position`, used by callers that synthesize
    /// cursors (hit-testing, steering) without running the tracker.
    pub fn at(x: f64, y: f64) -> Self {
        Self {
            position: (x, y),
            visible: true,
            ..Self::default()
        }
    }

    pub fn with_click(mut self, clicked: bool) -> Self {
        self.clicked = clicked && self.visible;
        self
    }
}

/// Position of the hand in `mask`: centroid of the largest component,
/// ties going to the lower label.
pub fn hand_centroid(mask: &BinaryMask) -> Option<(f64, f64)> {
    connected_components(mask).first().map(|c| c.centroid)
}

/// One tracker step. `now` must not precede the previous update.
pub fn update(prev: &CursorState, mask: &BinaryMask, now: u64, p: &TrackerParams) -> CursorState {
    update_with_target(prev, hand_centroid(mask), now, p)
}

/// Tracker step given an already-extracted hand position.
pub fn update_with_target(
    prev: &CursorState,
    target: Option<(f64, f64)>,
    now: u64,
    p: &TrackerParams,
) -> CursorState {
    let dt = prev.updated_ms.map_or(0, |t| now.saturating_sub(t));
    let mut next = CursorState {
        clicked: false,
        updated_ms: Some(now),
        ..prev.clone()
    };

    let Some(target) = target else {
        if prev.visible && now.saturating_sub(prev.last_seen_ms) > p.lost_timeout_ms {
            next.visible = false;
            next.dwell_ms = 0;
            next.dwell_anchor = None;
            next.click_fired = false;
        }
        // dwell neither accumulates nor resets while the hand is briefly missing
        return next;
    };

    next.position = if prev.visible {
        let b = p.smoothing;
        (
            b * target.0 + (1.0 - b) * prev.position.0,
            b * target.1 + (1.0 - b) * prev.position.1,
        )
    } else {
        target
    };
    next.visible = true;
    next.last_seen_ms = now;

    let within = next.dwell_anchor.is_some_and(|(ax, ay)| {
        let (dx, dy) = (next.position.0 - ax, next.position.1 - ay);
        dx * dx + dy * dy <= p.dwell_radius * p.dwell_radius
    });
    if prev.visible && within {
        next.dwell_ms = prev.dwell_ms + dt;
    } else {
        next.dwell_anchor = Some(next.position);
        next.dwell_ms = 0;
        next.click_fired = false;
    }
    if !next.click_fired && next.dwell_ms >= p.dwell_time_ms {
        next.clicked = true;
        next.click_fired = true;
    }
    next
}

/// Stateful wrapper that owns the current cursor.
#[derive(Clone, Debug, Default)]
pub struct Tracker {
    params: TrackerParams,
    state: CursorState,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            state: CursorState::default(),
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn set_params(&mut self, params: TrackerParams) {
        self.params = params;
    }

    pub fn state(&self) -> &CursorState {
        &self.state
    }

    pub fn update(&mut self, mask: &BinaryMask, now: u64) -> &CursorState {
        self.state = update(&self.state, mask, now, &self.params);
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = CursorState::default();
    }
}
