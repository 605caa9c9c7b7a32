//! Motion blur as seen by a pursuing eye.
//!
//! The retina integrates, over one frame, the light of the pixels it sweeps
//! across. For a display whose pixels all share one temporal response this
//! collapses to a one-frame box average of the response curve (the MPRC),
//! from which the blurred edge width and its normalized forms follow:
//!
//! * BEW: 10–90% edge width in pixels,
//! * N-BEW = BEW / velocity (frames),
//! * N-BET = N-BEW × frame period (seconds),
//! * MPRT = mean N-BET over a set of gray transitions.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::display::{lcrc, DisplayModel, GrayLevel, PixelDrive, PixelSignal};
use crate::math::{ceil, floor, median, round};
use crate::waveform::{moving_average_filter, width_between, WidthMode, Waveform};
use crate::{Error, Result};

/// Relative levels bounding a blurred edge.
pub const EDGE_LOW: f64 = 0.1;
pub const EDGE_HIGH: f64 = 0.9;

/// Screen width used to place pixels on the raster when scan delay is on.
pub const DEFAULT_SCREEN_WIDTH_PX: u32 = 1024;

/// Samples per frame, rounded to the nearest integer.
fn samples_per_frame(sample_rate: f64, frame_period: f64) -> usize {
    round(sample_rate * frame_period) as usize
}

/// Moving picture response curve: a forward one-frame box average.
///
/// Output `k` is the mean of input samples `k .. k + N` (N samples, one
/// frame) and keeps the time stamp of input sample `k`. The output is
/// `N - 1` samples shorter than the input.
pub fn mprc(lcrc: &Waveform, frame_period: f64) -> Result<Waveform> {
    let n = samples_per_frame(lcrc.sample_rate(), frame_period);
    if n < 10 {
        return Err(Error::Resolution {
            sample_rate: lcrc.sample_rate(),
            required: 10.0 / frame_period,
        });
    }
    if lcrc.len() < 3 * n {
        return Err(Error::InsufficientData { needed: 3 * n, available: lcrc.len() });
    }
    let inv = 1.0 / n as f64;
    let out = lcrc
        .samples()
        .windows(n)
        .map(|w| w.iter().sum::<f64>() * inv)
        .collect();
    Waveform::new(out, lcrc.sample_rate(), lcrc.start_time())
}

/// Blurred-edge metrics for one transition at one velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionMetrics {
    pub bew_px: f64,
    pub n_bew_frames: f64,
    pub n_bet_s: f64,
    pub velocity_ppf: u32,
}

impl MotionMetrics {
    /// Fills the chain from the temporal 10–90% width of an MPRC edge.
    pub fn from_edge_time(edge_s: f64, velocity_ppf: u32, frame_period: f64) -> Self {
        let n_bew_frames = edge_s / frame_period;
        Self {
            bew_px: n_bew_frames * velocity_ppf as f64,
            n_bew_frames,
            n_bet_s: n_bew_frames * frame_period,
            velocity_ppf,
        }
    }
}

/// Settled levels at the start and end of an MPRC: medians over the first
/// and last frame.
pub fn settled_levels(mprc: &Waveform, frame_period: f64) -> (f64, f64) {
    let n = samples_per_frame(mprc.sample_rate(), frame_period).clamp(1, mprc.len());
    let s = mprc.samples();
    (median(&s[..n]), median(&s[s.len() - n..]))
}

/// BEW, N-BEW and N-BET from an MPRC.
///
/// The curve is normalized to its own settled levels, so rising and falling
/// transitions are handled alike. N-BET does not depend on the velocity.
pub fn metrics_from_mprc(mprc: &Waveform, velocity_ppf: u32, frame_period: f64) -> Result<MotionMetrics> {
    if velocity_ppf < 1 {
        return Err(Error::Config("velocity must be at least 1 ppf".into()));
    }
    let (start, end) = settled_levels(mprc, frame_period);
    let span = end - start;
    if !(span.abs() > 1e-12) {
        return Err(Error::NoEdge { level: EDGE_LOW });
    }
    let normalized = mprc.map(|y| (y - start) / span)?;
    let edge = width_between(&normalized, WidthMode::Edge { low: EDGE_LOW, high: EDGE_HIGH })
        .map_err(|e| match e {
            Error::NoCrossing { level } => Error::NoEdge { level },
            other => other,
        })?;
    Ok(MotionMetrics::from_edge_time(edge, velocity_ppf, frame_period))
}

/// Metrics for a single gray transition, optionally box-filtering the
/// response curve first with a window of `prefilter_window` seconds (the
/// modulation-matched "improved" curve).
pub fn transition_metrics(
    model: &DisplayModel,
    from: GrayLevel,
    to: GrayLevel,
    velocity_ppf: u32,
    sample_rate: f64,
    prefilter_window: Option<f64>,
) -> Result<MotionMetrics> {
    let curve = lcrc(model, from, to, sample_rate)?;
    let trace = match prefilter_window {
        Some(window) => moving_average_filter(&curve.trace, window)?,
        None => curve.trace,
    };
    let frame_period = model.frame_period();
    metrics_from_mprc(&mprc(&trace, frame_period)?, velocity_ppf, frame_period)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMetrics {
    pub from: GrayLevel,
    pub to: GrayLevel,
    pub metrics: MotionMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MprtResult {
    pub mprt_s: f64,
    /// Sorted by `(from, to)`.
    pub per_transition: Vec<TransitionMetrics>,
}

/// Black-to-white and white-to-black.
pub fn default_transitions() -> Vec<(GrayLevel, GrayLevel)> {
    alloc::vec![(GrayLevel::BLACK, GrayLevel::WHITE), (GrayLevel::WHITE, GrayLevel::BLACK)]
}

/// Every ordered pair of distinct levels.
pub fn gray_to_gray(levels: &[GrayLevel]) -> Vec<(GrayLevel, GrayLevel)> {
    let mut out = Vec::new();
    for &a in levels {
        for &b in levels {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn mprt(
    model: &DisplayModel,
    transitions: &[(GrayLevel, GrayLevel)],
    velocity_ppf: u32,
    sample_rate: f64,
) -> Result<MprtResult> {
    mprt_with_prefilter(model, transitions, velocity_ppf, sample_rate, None)
}

/// [`mprt`] with an optional box prefilter on every response curve.
pub fn mprt_with_prefilter(
    model: &DisplayModel,
    transitions: &[(GrayLevel, GrayLevel)],
    velocity_ppf: u32,
    sample_rate: f64,
    prefilter_window: Option<f64>,
) -> Result<MprtResult> {
    if transitions.is_empty() {
        return Err(Error::Empty("transition set"));
    }
    let mut pairs: Vec<(GrayLevel, GrayLevel)> = transitions.to_vec();
    pairs.sort_by(|a, b| {
        a.0.value()
            .total_cmp(&b.0.value())
            .then(a.1.value().total_cmp(&b.1.value()))
    });
    pairs.dedup();
    let mut per_transition = Vec::with_capacity(pairs.len());
    for (from, to) in pairs {
        let metrics = transition_metrics(model, from, to, velocity_ppf, sample_rate, prefilter_window)
            .map_err(|e| Error::Transition { from: from.value(), to: to.value(), source: Box::new(e) })?;
        per_transition.push(TransitionMetrics { from, to, metrics });
    }
    let mprt_s =
        per_transition.iter().map(|t| t.metrics.n_bet_s).sum::<f64>() / per_transition.len() as f64;
    Ok(MprtResult { mprt_s, per_transition })
}

/// Perceived luminance along the retina for a tracked, scrolling block.
#[derive(Debug, Clone, PartialEq)]
pub struct RetinalProfile {
    /// Retinal coordinate in pixels; 0 is the block's leading edge, the block
    /// body lies at negative positions.
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl RetinalProfile {
    pub fn value_at_position(&self, x: f64) -> Option<f64> {
        let i = self.positions.iter().position(|&p| p == x)?;
        Some(self.values[i])
    }

    /// 10–90% width of the leading (right-hand) edge in pixels, measured on
    /// positions `>= -(block_width_px / 2)`.
    pub fn leading_edge_width(&self, block_width_px: u32) -> Result<f64> {
        let half = -(block_width_px as f64) / 2.0;
        let start = self.positions.iter().position(|&p| p >= half).unwrap_or(0);
        let inner = self.values[start];
        let outer = *self.values.last().unwrap_or(&0.0);
        let span = inner - outer;
        if !(span.abs() > 1e-12) {
            return Err(Error::NoEdge { level: EDGE_LOW });
        }
        // positions are unit spaced, so a waveform at 1 "sample per pixel"
        // measures widths in pixels
        let w = Waveform::new(
            self.values[start..].iter().map(|&v| (v - outer) / span).collect(),
            1.0,
            self.positions[start],
        )?;
        width_between(&w, WidthMode::Edge { low: EDGE_LOW, high: EDGE_HIGH }).map_err(|e| match e {
            Error::NoCrossing { level } => Error::NoEdge { level },
            other => other,
        })
    }
}

/// Retinal image of a block of `block_width_px` scrolling right at
/// `velocity_ppf`, integrated over one frame by a perfectly tracking eye.
///
/// Each pixel is simulated individually from its own drive history, so
/// pixels need not share a response (scan delay breaks that symmetry). In
/// sub-interval `m` of the frame the eye rests on pixel `x_R + m`; the light
/// it collects there is the integral of the sample-and-hold reconstruction
/// of that pixel's sampled trace.
pub fn retinal_profile(
    model: &DisplayModel,
    block_width_px: u32,
    velocity_ppf: u32,
    sample_rate: f64,
) -> Result<RetinalProfile> {
    retinal_profile_on_screen(model, block_width_px, velocity_ppf, sample_rate, DEFAULT_SCREEN_WIDTH_PX)
}

/// [`retinal_profile`] with an explicit raster width for scan delay.
pub fn retinal_profile_on_screen(
    model: &DisplayModel,
    block_width_px: u32,
    velocity_ppf: u32,
    sample_rate: f64,
    screen_width_px: u32,
) -> Result<RetinalProfile> {
    if velocity_ppf < 1 {
        return Err(Error::Config("velocity must be at least 1 ppf".into()));
    }
    if block_width_px < 1 || screen_width_px < 1 {
        return Err(Error::Config("block and screen widths must be positive".into()));
    }
    model.check_resolution(sample_rate)?;
    let period = model.frame_period();
    let v = velocity_ppf as i64;
    let w = block_width_px as i64;
    let per_sub = sample_rate * period / velocity_ppf as f64;
    if per_sub < 2.0 {
        return Err(Error::Resolution {
            sample_rate,
            required: 2.0 * velocity_ppf as f64 / period,
        });
    }

    let settle = model.settling_frames() as i64 + 2;
    let margin = v * (settle + 2);
    let r_min = -(w + v + margin);
    let r_max = margin;
    // observation frame: every pixel involved has been at the background
    // level for at least `settle` frames before the block reaches it
    let n0 = (settle * v - r_min + v - 1).div_euclid(v) + 1;
    let frame_start = n0 as f64 * period;

    let mut positions = Vec::with_capacity((r_max - r_min + 1) as usize);
    let mut values = Vec::with_capacity(positions.capacity());
    // pixels are shared between neighbouring retinal positions
    let x_lo = r_min + n0 * v;
    let x_hi = r_max + n0 * v + v - 1;
    let signals: Vec<PixelSignal> = (x_lo..=x_hi)
        .map(|x| {
            let levels = (0..=n0)
                .map(|n| {
                    let lead = n * v;
                    if x >= lead - w && x < lead {
                        GrayLevel::WHITE
                    } else {
                        GrayLevel::BLACK
                    }
                })
                .collect();
            let scan = x.rem_euclid(screen_width_px as i64) as f64 / screen_width_px as f64;
            let drive = PixelDrive::new(levels, model.frame_rate())?.with_scan_position(scan);
            PixelSignal::new(model, &drive)
        })
        .collect::<Result<_>>()?;

    let dt = 1.0 / sample_rate;
    for r in r_min..=r_max {
        let mut acc = 0.0;
        for m in 0..v {
            let signal = &signals[(r + n0 * v + m - x_lo) as usize];
            let a = frame_start + m as f64 * period / velocity_ppf as f64;
            let b = frame_start + (m + 1) as f64 * period / velocity_ppf as f64;
            acc += hold_integral(signal, a, b, sample_rate, dt);
        }
        positions.push(r as f64);
        values.push(acc / period);
    }
    Ok(RetinalProfile { positions, values })
}

/// Integral over `[a, b)` of the zero-order-hold reconstruction of `signal`
/// sampled at `i / sample_rate`.
fn hold_integral(signal: &PixelSignal, a: f64, b: f64, sample_rate: f64, dt: f64) -> f64 {
    let first = floor(a * sample_rate) as i64;
    let last = ceil(b * sample_rate) as i64;
    let mut acc = 0.0;
    for i in first..last {
        let t = i as f64 / sample_rate;
        let lo = t.max(a);
        let hi = (t + dt).min(b);
        if hi > lo {
            acc += signal.value_at(t) * (hi - lo);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::display::{LcResponse, DEFAULT_DECAY_TAU, DEFAULT_PULSE_WIDTH};
    use approx::assert_abs_diff_eq;

    const FRAME: f64 = 1.0 / 60.0;

    fn step(rate: f64, frames: usize, switch_frame: usize) -> Waveform {
        let n = (rate * FRAME) as usize;
        let samples = (0..frames * n).map(|i| if i >= switch_frame * n { 1.0 } else { 0.0 }).collect();
        Waveform::new(samples, rate, 0.0).unwrap()
    }

    #[test]
    fn mprc_of_step_is_one_frame_ramp() {
        let rate = 24_000.0;
        let m = mprc(&step(rate, 8, 4), FRAME).unwrap();
        let switch = 4.0 * FRAME;
        for (k, &y) in m.samples().iter().enumerate() {
            let t = m.time_at(k);
            // window [t, t + T) overlaps the step by (t + T - switch)
            let expect = ((t + FRAME - switch) / FRAME).clamp(0.0, 1.0);
            assert_abs_diff_eq!(y, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn mprc_preserves_constant() {
        let w = Waveform::new(alloc::vec![0.37; 2000], 20_000.0, 0.0).unwrap();
        let m = mprc(&w, FRAME).unwrap();
        assert!(m.samples().iter().all(|&y| (y - 0.37).abs() < 1e-12));
    }

    #[test]
    fn mprc_rejects_short_or_coarse_input() {
        let w = Waveform::new(alloc::vec![0.0; 500], 20_000.0, 0.0).unwrap();
        assert!(matches!(mprc(&w, FRAME), Err(Error::InsufficientData { .. })));
        let w = Waveform::new(alloc::vec![0.0; 500], 500.0, 0.0).unwrap();
        assert!(matches!(mprc(&w, FRAME), Err(Error::Resolution { .. })));
    }

    #[test]
    fn ramp_metrics_chain() {
        let rate = 24_000.0;
        let m = mprc(&step(rate, 8, 4), FRAME).unwrap();
        let a = metrics_from_mprc(&m, 10, FRAME).unwrap();
        assert_abs_diff_eq!(a.bew_px, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.n_bew_frames, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(a.n_bet_s, 0.8 / 60.0, epsilon = 1e-12);
        let b = metrics_from_mprc(&m, 20, FRAME).unwrap();
        assert_abs_diff_eq!(b.bew_px, 16.0, epsilon = 1e-9);
        assert_eq!(a.n_bet_s, b.n_bet_s);
    }

    #[test]
    fn step_mprc_has_vanishing_edge() {
        // an MPRC that is itself a step: edge spans less than one sample
        let w = step(20_000.0, 6, 3);
        let m = metrics_from_mprc(&w, 10, FRAME).unwrap();
        assert!(m.n_bet_s < 1.0 / 20_000.0);
        assert!(m.bew_px < 0.05);
    }

    #[test]
    fn flat_mprc_has_no_edge() {
        let w = Waveform::new(alloc::vec![0.5; 4000], 20_000.0, 0.0).unwrap();
        assert!(matches!(metrics_from_mprc(&w, 10, FRAME), Err(Error::NoEdge { .. })));
    }

    #[test]
    fn impulse_mprc_edge_is_short() {
        let model = DisplayModel::impulse(60.0, DEFAULT_PULSE_WIDTH, DEFAULT_DECAY_TAU).unwrap();
        let m = transition_metrics(&model, GrayLevel::BLACK, GrayLevel::WHITE, 10, 20_000.0, None).unwrap();
        // light of one flash arrives within ~pulse + 2.3 decay constants
        assert!(m.n_bet_s < 0.2 * FRAME, "{}", m.n_bet_s);
    }

    #[test]
    fn ideal_hold_mprt() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let one = mprt(&model, &[(GrayLevel::BLACK, GrayLevel::WHITE)], 10, 20_000.0).unwrap();
        assert!((one.mprt_s - 0.8 / 60.0).abs() <= 1.0 / 20_000.0);
        let both = mprt(&model, &default_transitions(), 10, 20_000.0).unwrap();
        assert_abs_diff_eq!(both.mprt_s, one.mprt_s, epsilon = 1e-12);
        assert_eq!(both.per_transition.len(), 2);
        assert_eq!(both.per_transition[0].from, GrayLevel::BLACK);
    }

    #[test]
    fn mprt_orders_lc_speed() {
        let slow = DisplayModel::exponential_lc(60.0, 8e-3, 8e-3).unwrap();
        let fast = DisplayModel::exponential_lc(60.0, 2e-3, 2e-3).unwrap();
        let t = default_transitions();
        let a = mprt(&slow, &t, 10, 20_000.0).unwrap().mprt_s;
        let b = mprt(&fast, &t, 10, 20_000.0).unwrap().mprt_s;
        assert!(a > b);
    }

    #[test]
    fn mprt_names_failing_transition() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let err = mprt(&model, &[(GrayLevel::WHITE, GrayLevel::WHITE)], 10, 20_000.0).unwrap_err();
        assert!(matches!(err, Error::Transition { from, to, .. } if from == 1.0 && to == 1.0));
        assert!(err.is_numeric());
        assert_eq!(mprt(&model, &[], 10, 20_000.0), Err(Error::Empty("transition set")));
    }

    #[test]
    fn gtg_pairs_skip_diagonal() {
        let levels: Vec<GrayLevel> = [0.0, 0.5, 1.0].iter().map(|&v| GrayLevel::new(v).unwrap()).collect();
        assert_eq!(gray_to_gray(&levels).len(), 6);
    }

    #[test]
    fn retinal_profile_hold_v1_blurs_one_pixel() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let p = retinal_profile(&model, 32, 1, 24_000.0).unwrap();
        // leading edge: V(0) = 0, V(-1) = 1
        assert_abs_diff_eq!(p.value_at_position(0.0).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value_at_position(-1.0).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value_at_position(-16.0).unwrap(), 1.0, epsilon = 1e-9);
        // trailing edge sits one block width further left
        assert_abs_diff_eq!(p.value_at_position(-33.0).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value_at_position(-32.0).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn retinal_profile_hold_is_v_pixel_ramp() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let v = 8;
        let p = retinal_profile(&model, 64, v, 24_000.0).unwrap();
        for k in 0..=v {
            let got = p.value_at_position(-(k as f64)).unwrap();
            assert_abs_diff_eq!(got, k as f64 / v as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn retinal_profile_of_impulse_is_sharp() {
        let model = DisplayModel::impulse(60.0, 0.05e-3, 0.02e-3).unwrap();
        for v in [5, 10, 20] {
            let p = retinal_profile(&model, 64, v, 24_000.0).unwrap();
            let width = p.leading_edge_width(64).unwrap();
            assert!(width <= 1.0, "v={v} width={width}");
        }
    }

    #[test]
    fn blink_duty_one_profile_matches_base() {
        let base = LcResponse::symmetric(4e-3);
        let a = DisplayModel::backlight_blink(60.0, base, 120.0, 1.0, 0.0).unwrap();
        let b = DisplayModel::exponential_lc(60.0, 4e-3, 4e-3).unwrap();
        assert_eq!(
            retinal_profile(&a, 48, 6, 24_000.0).unwrap(),
            retinal_profile(&b, 48, 6, 24_000.0).unwrap()
        );
    }

    #[test]
    fn retinal_profile_needs_two_samples_per_subinterval() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        assert!(matches!(
            retinal_profile(&model, 64, 20, 1_200.0),
            Err(Error::Resolution { .. })
        ));
    }
}
