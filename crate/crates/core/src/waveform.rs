//! Uniformly sampled luminance traces and the primitives shared by every
//! other module: normalization, centered box filtering, threshold crossings,
//! edge/envelope widths and linear resampling.

use alloc::vec::Vec;

use crate::math::{floor, round};
use crate::{Error, Result};

/// A luminance trace on a uniform time grid.
///
/// Sample `i` sits at `start_time + i / sample_rate`. Values are usually
/// relative luminance but nothing here assumes a range.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    start_time: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidWaveform("sample rate must be positive and finite"));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidWaveform("start time must be finite"));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidWaveform("at least two samples are required"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWaveform("samples must be finite"));
        }
        Ok(Self { samples, sample_rate, start_time })
    }

    /// Builds a trace of `len` samples by evaluating `f` at each sample time.
    pub fn from_fn(
        len: usize,
        sample_rate: f64,
        start_time: f64,
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        let samples = (0..len)
            .map(|i| f(start_time + i as f64 / sample_rate))
            .collect();
        Self::new(samples, sample_rate, start_time)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    #[inline]
    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() - 1)
    }

    /// Time between the first and last sample.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }

    /// Linear interpolation at time `t`, clamped to the end samples.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = (t - self.start_time) * self.sample_rate;
        let last = self.samples.len() - 1;
        if pos <= 0.0 {
            return self.samples[0];
        }
        if pos >= last as f64 {
            return self.samples[last];
        }
        let i = floor(pos) as usize;
        let frac = pos - i as f64;
        if frac == 0.0 {
            return self.samples[i];
        }
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    /// Applies `f` to every sample, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|&v| f(v)).collect(), self.sample_rate, self.start_time)
    }

    /// Samples `[from, to)` as a new trace on the same grid.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        let to = to.min(self.samples.len());
        if from >= to {
            return Err(Error::InsufficientData { needed: 2, available: 0 });
        }
        Self::new(self.samples[from..to].to_vec(), self.sample_rate, self.time_at(from))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

/// One crossing of a threshold level, located by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub time: f64,
    pub direction: Direction,
    pub level: f64,
}

/// Affine map `(y - low) / (high - low)` of every sample.
pub fn normalize(w: &Waveform, low_ref: f64, high_ref: f64) -> Result<Waveform> {
    if !(high_ref > low_ref) || !low_ref.is_finite() || !high_ref.is_finite() {
        return Err(Error::InvalidReference { low: low_ref, high: high_ref });
    }
    let span = high_ref - low_ref;
    w.map(|y| (y - low_ref) / span)
}

/// Number of taps a box window of `window` seconds occupies at `sample_rate`.
pub fn window_taps(window: f64, sample_rate: f64) -> Result<usize> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidWindow { window_s: window });
    }
    let taps = round(window * sample_rate);
    if taps < 1.0 {
        return Err(Error::InvalidWindow { window_s: window });
    }
    Ok(taps as usize)
}

/// Centered moving average (box filter) of `window` seconds.
///
/// Only outputs with full support are produced, so the trace shortens by
/// `taps - 1` samples. Output sample `k` is stamped at the center of its
/// window, which for an even tap count falls half a sample between input
/// samples; the filter never shifts features in time.
pub fn moving_average_filter(w: &Waveform, window: f64) -> Result<Waveform> {
    let taps = window_taps(window, w.sample_rate)?;
    if taps + 1 > w.len() {
        return Err(Error::WindowTooLong { window_s: window, duration_s: w.duration() });
    }
    let inv = 1.0 / taps as f64;
    let out: Vec<f64> = w
        .samples
        .windows(taps)
        .map(|win| win.iter().sum::<f64>() * inv)
        .collect();
    let shift = (taps - 1) as f64 / (2.0 * w.sample_rate);
    Waveform::new(out, w.sample_rate, w.start_time + shift)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Above,
}

/// Every crossing of `level`, in time order.
///
/// A crossing is located by linear interpolation between the bracketing
/// samples. Samples exactly at `level` never form a crossing on their own;
/// a run of them between a sample below and a sample above yields a single
/// crossing at the midpoint of the run. Rising and falling events therefore
/// always alternate.
pub fn threshold_crossings(w: &Waveform, level: f64) -> Vec<CrossingEvent> {
    let mut events = Vec::new();
    // last strictly-off-level sample: (index, side)
    let mut last: Option<(usize, Side)> = None;
    for (i, &y) in w.samples.iter().enumerate() {
        let side = if y > level {
            Side::Above
        } else if y < level {
            Side::Below
        } else {
            continue;
        };
        if let Some((j, prev)) = last {
            if prev != side {
                let time = if j + 1 == i {
                    let y0 = w.samples[j];
                    let frac = (level - y0) / (y - y0);
                    w.time_at(j) + frac / w.sample_rate
                } else {
                    0.5 * (w.time_at(j + 1) + w.time_at(i - 1))
                };
                let direction = match side {
                    Side::Above => Direction::Rising,
                    Side::Below => Direction::Falling,
                };
                events.push(CrossingEvent { time, direction, level });
            }
        }
        last = Some((i, side));
    }
    events
}

/// How [`width_between`] measures a width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthMode {
    /// Time from the first crossing of either level to the next crossing of
    /// the other level in the same direction: a single monotone edge, rising
    /// or falling.
    Edge { low: f64, high: f64 },
    /// Time from the first rising crossing of `level` to the last falling
    /// crossing. Ripple inside the envelope does not split it.
    Envelope { level: f64 },
}

pub fn width_between(w: &Waveform, mode: WidthMode) -> Result<f64> {
    match mode {
        WidthMode::Edge { low, high } => edge_width(w, low, high),
        WidthMode::Envelope { level } => envelope_span(w, level).map(|(a, b)| b - a),
    }
}

fn edge_width(w: &Waveform, low: f64, high: f64) -> Result<f64> {
    let lo = threshold_crossings(w, low);
    let hi = threshold_crossings(w, high);
    let first_lo = lo.first().ok_or(Error::NoCrossing { level: low })?;
    let first_hi = hi.first().ok_or(Error::NoCrossing { level: high })?;
    let (start, others, other_level) = if first_lo.time <= first_hi.time {
        (first_lo, &hi, high)
    } else {
        (first_hi, &lo, low)
    };
    let end = others
        .iter()
        .find(|e| e.time >= start.time && e.direction == start.direction)
        .ok_or(Error::NoCrossing { level: other_level })?;
    Ok(end.time - start.time)
}

/// First rising and last falling crossing times of `level`.
pub fn envelope_span(w: &Waveform, level: f64) -> Result<(f64, f64)> {
    let events = threshold_crossings(w, level);
    let rise = events
        .iter()
        .find(|e| e.direction == Direction::Rising)
        .ok_or(Error::NoCrossing { level })?;
    let fall = events
        .iter()
        .rev()
        .find(|e| e.direction == Direction::Falling && e.time > rise.time)
        .ok_or(Error::NoCrossing { level })?;
    Ok((rise.time, fall.time))
}

/// Linear interpolation onto a uniform grid at `new_rate` starting at the
/// same instant; the grid extends as far as the original span allows.
pub fn resample(w: &Waveform, new_rate: f64) -> Result<Waveform> {
    if !(new_rate.is_finite() && new_rate > 0.0) {
        return Err(Error::InvalidWaveform("resample rate must be positive and finite"));
    }
    if new_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let n = floor(w.duration() * new_rate + 1e-9) as usize + 1;
    let step = w.sample_rate / new_rate;
    let last = w.len() - 1;
    let samples = (0..n)
        .map(|j| {
            let pos = j as f64 * step;
            let i = (floor(pos) as usize).min(last);
            let frac = pos - i as f64;
            if i == last || frac <= 0.0 {
                w.samples[i]
            } else {
                w.samples[i] + frac * (w.samples[i + 1] - w.samples[i])
            }
        })
        .collect();
    Waveform::new(samples, new_rate, w.start_time)
}
