//! IO side of the page turner: image loading, the JSON/JSONL file formats,
//! the serial turning device, layout overlays and the `pageflip` CLI.
//!
//! All algorithms live in [`pageflip_core`]; this crate only moves data in
//! and out of them.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod overlay;
pub mod serial;

pub use error::Error;
pub use pageflip_core as core;
