//! Contactless gesture steering: segment a hand from camera frames, track it
//! as a cursor, hit-test it against XML-described zones and turn its position
//! on a virtual wheel into steering and throttle commands.
//!
//! The per-frame data flow is
//! [`segmentation`] → [`tracker`] → [`interface`] → [`drive`], with
//! [`background`] providing the learned empty-scene envelope and
//! [`imaging`] the raster primitives everything is built on.

pub mod background;
pub mod drive;
pub mod imaging;
pub mod interface;
pub mod segmentation;
pub mod tracker;

pub use background::{learn, relearn_trigger, BackgroundError, BackgroundLearner, BackgroundModel};
pub use drive::{make_command, steering_from_cursor, DriveCommand, DriveState, WheelModel};
pub use imaging::{BinaryMask, FrameRgb, Workers};
pub use interface::{hit_test, load_layout, EventKind, HitState, InterfaceEvent, Layout, Zone};
pub use segmentation::{SegmentationError, SegmentationParams, Segmenter};
pub use tracker::{CursorState, Tracker, TrackerParams};
