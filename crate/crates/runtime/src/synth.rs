//! Deterministic synthetic scenes: a textured, noisy background with an
//! optional skin-colored disc standing in for the hand.
//!
//! The bundled sequence is 90 frames of 120×90 pixels: the hand rests at
//! 12 o'clock on the wheel, swings right, then left, back to the top, leaves
//! the frame for longer than the tracker's lost timeout and finally climbs
//! the throttle slider.

use fizi_core::FrameRgb;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SKIN: [u8; 3] = [200, 130, 110];

pub const BUNDLED_LAYOUT: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<interface>
  <zone id="wheel" type="wheel" cx="45" cy="50" r="28" theta_max="90"/>
  <zone id="throttle" type="slider" x="98" y="8" w="16" h="74"/>
</interface>
"#;

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    /// Per-channel noise amplitude: each channel is perturbed uniformly in
    /// `[-noise, noise]`.
    pub noise: u8,
    pub blob_radius: f64,
    pub blob_color: [u8; 3],
    pub seed: u64,
}

impl Scene {
    pub fn bundled() -> Scene {
        Scene {
            width: 120,
            height: 90,
            noise: 4,
            blob_radius: 6.5,
            blob_color: SKIN,
            seed: 0x_F121,
        }
    }

    pub fn with_size(width: usize, height: usize) -> Scene {
        Scene {
            width,
            height,
            ..Scene::bundled()
        }
    }

    /// Noise-free background texture: bluish grays, far from the skin band.
    pub fn background_pixel(x: usize, y: usize) -> [u8; 3] {
        [
            (80 + (x * 5 + y * 3) % 31) as u8,
            (90 + (x * 2 + y * 7) % 29) as u8,
            (120 + (x * 3 + y * 5) % 37) as u8,
        ]
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, c: [u8; 3]) -> [u8; 3] {
        if self.noise == 0 {
            return c;
        }
        let n = i16::from(self.noise);
        c.map(|v| (i16::from(v) + rng.random_range(-n..=n)).clamp(0, 255) as u8)
    }

    fn render(&self, rng: &mut ChaCha8Rng, blob: Option<(f64, f64)>) -> FrameRgb {
        let r2 = self.blob_radius * self.blob_radius;
        FrameRgb::from_fn(self.width, self.height, |x, y| {
            let inside = blob.is_some_and(|(cx, cy)| {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                dx * dx + dy * dy <= r2
            });
            let base = if inside {
                self.blob_color
            } else {
                Self::background_pixel(x, y)
            };
            self.perturb(rng, base)
        })
        .expect("scene dimensions are nonzero")
    }

    /// Hand-free frames for learning the background.
    pub fn learning_frames(&self, n: usize) -> Vec<FrameRgb> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n).map(|_| self.render(&mut rng, None)).collect()
    }

    /// One frame per entry: a disc at the given center, or no hand.
    pub fn sequence(&self, centers: &[Option<(f64, f64)>]) -> Vec<FrameRgb> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        centers.iter().map(|c| self.render(&mut rng, *c)).collect()
    }
}

/// Point on a circle at `deg` clockwise from 12 o'clock, snapped to 1/16 px.
fn on_circle(center: (f64, f64), r: f64, deg: f64) -> (f64, f64) {
    let snap = |v: f64| (v * 16.0).round() / 16.0;
    let t = deg.to_radians();
    (snap(center.0 + r * t.sin()), snap(center.1 - r * t.cos()))
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

/// Hand position for each of the 90 bundled frames.
pub fn bundled_path() -> Vec<Option<(f64, f64)>> {
    let wheel = ((45.0, 50.0), 28.0);
    (0..90)
        .map(|i| {
            let angle = match i {
                0..=9 => Some(0.0),
                10..=24 => Some(lerp(0.0, 110.0, (i - 10) as f64 / 15.0)),
                25..=44 => Some(lerp(110.0, -110.0, (i - 25) as f64 / 20.0)),
                45..=52 => Some(lerp(-110.0, 0.0, (i - 45) as f64 / 7.0)),
                _ => None,
            };
            if let Some(a) = angle {
                return Some(on_circle(wheel.0, wheel.1, a));
            }
            match i {
                53..=72 => None,
                _ => Some((106.0, lerp(76.0, 14.0, (i - 73) as f64 / 16.0))),
            }
        })
        .collect()
}

pub fn bundled_frames() -> Vec<FrameRgb> {
    Scene::bundled().sequence(&bundled_path())
}
