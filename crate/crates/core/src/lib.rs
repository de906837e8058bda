//! Electricity-theft detection from smart-meter load profiles.
//!
//! Each consumer's daily profile is scored two ways: by its maximal
//! information coefficient with the area's non-technical loss, and by its
//! density-peak abnormality among all profiles. Per-consumer suspicion
//! ranks from both scores are combined into a single ranking.

pub mod correlate;
pub mod densepeaks;
pub mod error;
pub mod evaluate;
pub mod fdi;
pub mod meterdata;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
