//! Core algorithms for an automatic page turner that works directly on sheet
//! images.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`layout`]: page image to system geometry (binarization, row projection,
//!   staff-line bands, staff and system grouping).
//! * [`filter`]: reading-order constraints applied to raw tracker predictions.
//! * [`policy`]: page-turn triggers (fixed fraction into the last system, or
//!   tempo extrapolation).
//! * [`sim`]: synthetic tracker trajectories, synthetic score pages and the
//!   dense-scan oracle for turn times.
//! * [`device`] and [`session`]: the turning-device contract and the
//!   deterministic session loop with its event log and evaluation.
//!
//! IO, file formats, the serial device driver and the CLI live in the
//! `pageflip` crate.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod device;
pub mod filter;
pub mod image;
pub mod layout;
pub mod policy;
pub mod session;
pub mod sim;

pub use device::{Ack, DeviceError, MockDevice, TurnDevice};
pub use filter::{FilterConfig, FilterOutcome, FilterState, ReadingPosition, RejectReason, TrackerPrediction};
pub use image::{BinaryImage, GrayImage, ImageError, RgbImage};
pub use layout::{analyze_page, LayoutConfig, LayoutError, PageLayout, System};
pub use policy::{PolicyConfig, PolicyKind, PolicyState, TurnDecision};
pub use session::{run_session, evaluate_turns, SessionConfig, SessionEvent, SessionLog, TurnMetrics};
pub use sim::{oracle_turn_time, synth_trajectory, SyntheticConfig, SyntheticSample};
