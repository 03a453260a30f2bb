//! Virtual steering wheel: cursor angle on the wheel becomes signed steering,
//! a slider supplies throttle, and both are folded into a command stream.

use crate::tracker::CursorState;

/// Decay applied to steering on each frame once the hold time has elapsed.
pub const STEERING_DECAY: f64 = 0.8;
pub const DEFAULT_HOLD_MS: u64 = 200;

/// Values below this magnitude are flushed to zero so the decay terminates
/// and printed records never show `-0.0000`.
const STEERING_EPSILON: f64 = 5e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct WheelModel {
    pub center: (f64, f64),
    pub radius: f64,
    /// Angle from 12 o'clock that maps to full lock, degrees in `(0, 180]`.
    pub theta_max: f64,
    /// Accepted radial band as fractions of `radius`.
    pub annulus: (f64, f64),
    /// Half-width of the neutral band around 12 o'clock, degrees.
    pub dead_zone: f64,
}

impl WheelModel {
    pub fn new(center: (f64, f64), radius: f64) -> Self {
        Self {
            center,
            radius,
            theta_max: 90.0,
            annulus: (0.6, 1.4),
            dead_zone: 3.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(format!("radius {} must be > 0", self.radius));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= 180.0) {
            return Err(format!("theta_max {} must be in (0, 180]", self.theta_max));
        }
        let (inner, outer) = self.annulus;
        if !(0.0 <= inner && inner < 1.0 && 1.0 < outer && outer.is_finite()) {
            return Err(format!("annulus [{inner}, {outer}] must satisfy inner < 1 < outer"));
        }
        if !(0.0..180.0).contains(&self.dead_zone) {
            return Err(format!("dead_zone {} must be in [0, 180)", self.dead_zone));
        }
        Ok(())
    }

    /// Angle of `point` from 12 o'clock, clockwise positive (image y grows
    /// downward), in `(-180, 180]`. `None` at the exact center.
    pub fn angle_of(&self, point: (f64, f64)) -> Option<f64> {
        let dx = point.0 - self.center.0;
        let dy = point.1 - self.center.1;
        if dx == 0.0 && dy == 0.0 {
            return None;
        }
        let theta = dx.atan2(-dy).to_degrees();
        Some(if theta == -180.0 { 180.0 } else { theta })
    }

    pub fn in_annulus(&self, point: (f64, f64)) -> bool {
        let d = (point.0 - self.center.0).hypot(point.1 - self.center.1);
        d > 0.0 && self.annulus.0 * self.radius <= d && d <= self.annulus.1 * self.radius
    }
}

/// Steering in `[-1, 1]` for a cursor on the wheel, or `None` when the
/// cursor is hidden or off the wheel's annulus.
pub fn steering_from_cursor(cursor: &CursorState, wheel: &WheelModel) -> Option<f64> {
    if !cursor.visible || !wheel.in_annulus(cursor.position) {
        return None;
    }
    let theta = wheel.angle_of(cursor.position)?;
    if theta.abs() <= wheel.dead_zone {
        return Some(0.0);
    }
    Some((theta / wheel.theta_max).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveCommand {
    /// Negative is left.
    pub steering: f64,
    pub throttle: f64,
    pub timestamp_ms: u64,
}

impl DriveCommand {
    pub fn new(steering: f64, throttle: f64, timestamp_ms: u64) -> Self {
        Self {
            steering: clamp_or_zero(steering, -1.0, 1.0),
            throttle: clamp_or_zero(throttle, 0.0, 1.0),
            timestamp_ms,
        }
    }
}

fn clamp_or_zero(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(lo, hi)
    }
}

/// The command fold's carried state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveState {
    pub command: DriveCommand,
    /// Time of the last steering reading, if any.
    pub last_steering_ms: Option<u64>,
}

/// Next command from this frame's readings.
///
/// A fresh steering reading replaces the previous value. Without one, the
/// previous value is held for `hold_ms` after the last reading and then
/// multiplied by [`STEERING_DECAY`] every frame. Throttle keeps its previous
/// value until the slider reports again.
pub fn make_command(
    steering: Option<f64>,
    throttle: Option<f64>,
    prev: &DriveState,
    now: u64,
    hold_ms: u64,
) -> DriveState {
    let (steering_value, last_steering_ms) = match steering {
        Some(s) => (s, Some(now)),
        None => {
            let held = prev
                .last_steering_ms
                .is_some_and(|t| now.saturating_sub(t) <= hold_ms);
            let s = if held {
                prev.command.steering
            } else {
                prev.command.steering * STEERING_DECAY
            };
            (s, prev.last_steering_ms)
        }
    };
    let steering_value = if steering_value.abs() < STEERING_EPSILON {
        0.0
    } else {
        steering_value
    };
    DriveState {
        command: DriveCommand::new(
            steering_value,
            throttle.unwrap_or(prev.command.throttle),
            now,
        ),
        last_steering_ms,
    }
}
