use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in the core pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A waveform violated its construction invariants.
    InvalidWaveform(&'static str),
    /// Normalization references with `high <= low`.
    InvalidReference { low: f64, high: f64 },
    /// Filter window does not fit inside the trace.
    WindowTooLong { window_s: f64, duration_s: f64 },
    /// Filter window is not positive or rounds to zero taps.
    InvalidWindow { window_s: f64 },
    /// A threshold level was never crossed.
    NoCrossing { level: f64 },
    /// Sample rate too low for the requested simulation.
    Resolution { sample_rate: f64, required: f64 },
    /// A model or rig parameter is out of range.
    Config(String),
    /// Pixel position outside the screen.
    OutOfBounds { pixel_x: u32, screen_width_px: u32 },
    /// Trace too short for the requested operation.
    InsufficientData { needed: usize, available: usize },
    /// A 10% or 90% edge point is missing from an MPRC.
    NoEdge { level: f64 },
    /// A gray transition produced no measurable edge.
    Transition { from: f64, to: f64, source: alloc::boxed::Box<Error> },
    /// The block passage never rose above and fell back below threshold.
    NoPassage { velocity_ppf: u32 },
    /// A per-velocity failure inside a sweep.
    AtVelocity { velocity_ppf: u32, source: alloc::boxed::Box<Error> },
    /// Standardization of a constant column.
    ZeroVariance,
    /// Regression with fewer than two distinct abscissae.
    DegenerateRegression,
    /// Methods compared over different device sets.
    DeviceMismatch { only_left: Vec<String>, only_right: Vec<String> },
    /// Empty input where at least one element is required.
    Empty(&'static str),
}

impl Error {
    /// True for failures of a measurement (no edge, no passage, zero variance,
    /// degenerate fit) as opposed to bad input or configuration.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NoCrossing { .. }
            | Error::NoEdge { .. }
            | Error::NoPassage { .. }
            | Error::ZeroVariance
            | Error::DegenerateRegression => true,
            Error::Transition { source, .. } | Error::AtVelocity { source, .. } => {
                source.is_numeric()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidWaveform(why) => write!(f, "invalid waveform: {why}"),
            Error::InvalidReference { low, high } => {
                write!(f, "invalid normalization references: high {high} must exceed low {low}")
            }
            Error::WindowTooLong { window_s, duration_s } => write!(
                f,
                "filter window {window_s} s is longer than the {duration_s} s trace"
            ),
            Error::InvalidWindow { window_s } => {
                write!(f, "filter window {window_s} s does not cover a single sample")
            }
            Error::NoCrossing { level } => write!(f, "level {level} is never crossed"),
            Error::Resolution { sample_rate, required } => write!(
                f,
                "sample rate {sample_rate} Hz is below the required {required} Hz"
            ),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::OutOfBounds { pixel_x, screen_width_px } => write!(
                f,
                "pixel {pixel_x} lies outside a {screen_width_px} px wide screen"
            ),
            Error::InsufficientData { needed, available } => write!(
                f,
                "insufficient data: need {needed} samples, have {available}"
            ),
            Error::NoEdge { level } => write!(f, "no edge: relative level {level} is never reached"),
            Error::Transition { from, to, source } => {
                write!(f, "transition {from}->{to}: {source}")
            }
            Error::NoPassage { velocity_ppf } => write!(
                f,
                "no block passage at {velocity_ppf} ppf: threshold not crossed twice"
            ),
            Error::AtVelocity { velocity_ppf, source } => {
                write!(f, "velocity {velocity_ppf} ppf: {source}")
            }
            Error::ZeroVariance => f.write_str("zero variance: values are all equal"),
            Error::DegenerateRegression => {
                f.write_str("degenerate regression: all x values are identical")
            }
            Error::DeviceMismatch { only_left, only_right } => write!(
                f,
                "device sets differ: only in first [{}], only in second [{}]",
                only_left.join(", "),
                only_right.join(", ")
            ),
            Error::Empty(what) => write!(f, "{what} must not be empty"),
        }
    }
}

impl core::error::Error for Error {}
