//! Temporal display simulation and motion-blur metrology.
//!
//! The crate is `no_std` and only needs `alloc`. It covers four stages:
//!
//! * [`waveform`]: uniformly sampled luminance traces, box filtering and
//!   threshold-crossing detection.
//! * [`display`]: parametric temporal-response models (hold, liquid crystal,
//!   impulse, blinking backlight, black-frame insertion).
//! * [`blur`]: the pursuit-eye route to motion blur (MPRC, BEW, N-BET, MPRT)
//!   and the retinal integration it is derived from.
//! * [`rig`]: a virtual stationary photometer watching a scrolling block,
//!   producing moving-block-width (MBW) sweeps.
//! * [`analysis`]: regression, z-scores and cross-method ranking.
//!
//! File formats, configuration parsing and the command line live in the
//! companion `mbwkit` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod blur;
pub mod display;
mod error;
mod math;
pub mod rig;
pub mod waveform;

pub use error::{Error, Result};
