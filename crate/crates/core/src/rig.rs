//! A virtual photometer watching a block scroll past.
//!
//! A stationary detector with a finite aperture, centered on the screen,
//! records luminance while a block crosses it. The time the reading stays
//! above a threshold, times the velocity, is the moving block width (MBW);
//! the excess over the static block width is ΔMBW.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::analysis::{linear_fit, RegressionFit};
use crate::display::{DisplayModel, GrayLevel, LcResponse, PixelDrive, PixelSignal, DEFAULT_DECAY_TAU, DEFAULT_PULSE_WIDTH};
use crate::math::median;
use crate::waveform::{envelope_span, moving_average_filter, Waveform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApertureProfile {
    /// Every pixel under the aperture weighs the same.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    BrightOnDark,
    DarkOnBright,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigConfig {
    pub screen_width_px: u32,
    pub frame_rate: f64,
    pub block_width_px: u32,
    pub aperture_px: u32,
    pub aperture_profile: ApertureProfile,
    pub lmd_sample_rate: f64,
    pub threshold: f64,
    pub polarity: Polarity,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            screen_width_px: 1024,
            frame_rate: 60.0,
            block_width_px: 512,
            aperture_px: 500,
            aperture_profile: ApertureProfile::Uniform,
            lmd_sample_rate: 20_000.0,
            threshold: 0.10,
            polarity: Polarity::BrightOnDark,
        }
    }
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.block_width_px < 1 || self.block_width_px >= self.screen_width_px {
            return fail(alloc::format!(
                "block_width_px {} must be in [1, screen_width_px {})",
                self.block_width_px, self.screen_width_px
            ));
        }
        if self.aperture_px < 1 || self.aperture_px > self.screen_width_px {
            return fail(alloc::format!(
                "aperture_px {} must be in [1, screen_width_px {}]",
                self.aperture_px, self.screen_width_px
            ));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return fail(alloc::format!("frame_rate {} must be positive", self.frame_rate));
        }
        if !(self.lmd_sample_rate.is_finite() && self.lmd_sample_rate >= 10.0 * self.frame_rate) {
            return fail(alloc::format!(
                "lmd_sample_rate {} must be at least ten times the frame rate",
                self.lmd_sample_rate
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 0.5) {
            return fail(alloc::format!("threshold {} outside (0, 0.5)", self.threshold));
        }
        Ok(())
    }

    /// Leftmost pixel under the aperture.
    pub fn aperture_start(&self) -> u32 {
        self.screen_width_px / 2 - self.aperture_px / 2
    }

    /// Geometric ΔMBW of a uniform aperture: the threshold crossings sit
    /// `threshold` of the way into the aperture at each end.
    pub fn aperture_bias_px(&self) -> f64 {
        (1.0 - 2.0 * self.threshold) * (self.aperture_px as f64 - 1.0)
    }

    fn levels(&self) -> (GrayLevel, GrayLevel) {
        match self.polarity {
            Polarity::BrightOnDark => (GrayLevel::BLACK, GrayLevel::WHITE),
            Polarity::DarkOnBright => (GrayLevel::WHITE, GrayLevel::BLACK),
        }
    }
}

fn check_velocity(rig: &RigConfig, velocity_ppf: u32) -> Result<()> {
    if velocity_ppf < 1 || velocity_ppf >= rig.block_width_px {
        return Err(Error::Config(alloc::format!(
            "velocity {velocity_ppf} ppf outside [1, block_width_px {})",
            rig.block_width_px
        )));
    }
    Ok(())
}

/// Detector reading while the block makes one pass across the aperture.
///
/// The block's leading edge sits at `n * v` in frame `n`, so it enters from
/// the left edge of the screen at frame 0; pixel `x` is covered while
/// `n v - w <= x < n v`. Only the first pass is simulated: on the real
/// wrapping pattern the next block arrives `W - w` pixels later, which with
/// the default geometry is too soon for slow responses to settle in between.
/// The trace runs until every aperture pixel has settled again.
pub fn simulate_scroll(rig: &RigConfig, model: &DisplayModel, velocity_ppf: u32) -> Result<Waveform> {
    rig.validate()?;
    check_velocity(rig, velocity_ppf)?;
    if model.frame_rate() != rig.frame_rate {
        return Err(Error::Config(alloc::format!(
            "model frame rate {} Hz differs from rig frame rate {} Hz",
            model.frame_rate(),
            rig.frame_rate
        )));
    }
    let v = velocity_ppf as u64;
    let w = rig.block_width_px as u64;
    let x0 = rig.aperture_start() as u64;
    let x_max = x0 + rig.aperture_px as u64 - 1;
    let n_frames = ((x_max + w) / v + 1) as usize + model.settling_frames() + 4;
    let (background, block) = rig.levels();

    // frames during which pixel x is covered: first = floor(x / v) + 1,
    // last = floor((x + w) / v)
    let span = |x: u64| (x / v + 1, (x + w) / v);
    // pixels with the same covered range and no scan offset emit the same
    // light, so each distinct range is simulated once
    let mut groups: BTreeMap<(u64, u64, u64), u32> = BTreeMap::new();
    for x in x0..=x_max {
        let (first, last) = span(x);
        let key = if model.scan_delay() { (first, last, x) } else { (first, last, 0) };
        *groups.entry(key).or_insert(0) += 1;
    }

    let n_samples = crate::math::round(n_frames as f64 * rig.lmd_sample_rate / rig.frame_rate) as usize;
    let mut acc = alloc::vec![0.0; n_samples];
    for (&(first, last, x), &count) in &groups {
        let levels = (0..n_frames as u64)
            .map(|n| if n >= first && n <= last { block } else { background })
            .collect();
        let drive = PixelDrive::new(levels, rig.frame_rate)?
            .with_scan_position(x as f64 / rig.screen_width_px as f64);
        let signal = PixelSignal::new(model, &drive)?;
        let weight = count as f64;
        for (i, a) in acc.iter_mut().enumerate() {
            *a += weight * signal.value_at(i as f64 / rig.lmd_sample_rate);
        }
    }
    let inv = 1.0 / rig.aperture_px as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Waveform::new(acc, rig.lmd_sample_rate, 0.0)
}

/// One velocity's moving-block-width measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbwPoint {
    pub velocity_ppf: u32,
    pub crossing_time_s: f64,
    pub crossing_time_frames: f64,
    pub mbw_px: f64,
    pub delta_mbw_px: f64,
    /// ΔMBW minus the geometric bias of the uniform aperture.
    pub delta_mbw_debiased_px: f64,
}

impl MbwPoint {
    pub fn new(rig: &RigConfig, velocity_ppf: u32, crossing_time_s: f64) -> Self {
        let crossing_time_frames = crossing_time_s * rig.frame_rate;
        let mbw_px = crossing_time_frames * velocity_ppf as f64;
        let delta_mbw_px = mbw_px - rig.block_width_px as f64;
        Self {
            velocity_ppf,
            crossing_time_s,
            crossing_time_frames,
            mbw_px,
            delta_mbw_px,
            delta_mbw_debiased_px: delta_mbw_px - rig.aperture_bias_px(),
        }
    }
}

/// Measures how long the block stays above threshold in a detector trace.
///
/// The background level is the median of the first and last frame, the
/// block level is the extreme reading, and the passage runs from the first
/// upward to the last downward crossing of the threshold in between, so
/// ripple and flashes do not split it. For a dark block the trace is
/// inverted first, which puts the crossings at the complementary level of
/// the luminance.
pub fn measure_mbw(trace: &Waveform, rig: &RigConfig, velocity_ppf: u32) -> Result<MbwPoint> {
    let per_frame = crate::math::round(trace.sample_rate() / rig.frame_rate).max(1.0) as usize;
    let s = trace.samples();
    let edge = per_frame.min(s.len() / 2).max(1);
    let mut ends: Vec<f64> = s[..edge].to_vec();
    ends.extend_from_slice(&s[s.len() - edge..]);
    let base = median(&ends);
    let signal = match rig.polarity {
        Polarity::BrightOnDark => trace.map(|y| y - base)?,
        Polarity::DarkOnBright => trace.map(|y| base - y)?,
    };
    let peak = signal.samples().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 1e-12) {
        return Err(Error::NoPassage { velocity_ppf });
    }
    let level = rig.threshold * peak;
    let (rise, fall) = envelope_span(&signal, level).map_err(|_| Error::NoPassage { velocity_ppf })?;
    Ok(MbwPoint::new(rig, velocity_ppf, fall - rise))
}

/// ΔMBW over a set of velocities with the fitted MBW-vs-velocity line.
#[derive(Debug, Clone, PartialEq)]
pub struct MbwSweep {
    pub rig: RigConfig,
    pub model: String,
    /// Strictly increasing velocity.
    pub points: Vec<MbwPoint>,
    /// `None` for a single velocity.
    pub fit: Option<RegressionFit>,
}

pub fn sweep(rig: &RigConfig, model: &DisplayModel, name: &str, velocities: &[u32]) -> Result<MbwSweep> {
    sweep_with_prefilter(rig, model, name, velocities, None)
}

/// [`sweep`] where each detector trace is first box-filtered over
/// `prefilter_window` seconds.
pub fn sweep_with_prefilter(
    rig: &RigConfig,
    model: &DisplayModel,
    name: &str,
    velocities: &[u32],
    prefilter_window: Option<f64>,
) -> Result<MbwSweep> {
    let mut vs = velocities.to_vec();
    vs.sort_unstable();
    vs.dedup();
    if vs.is_empty() {
        return Err(Error::Empty("velocity set"));
    }
    let mut points = Vec::with_capacity(vs.len());
    for &v in &vs {
        let point = measure_at(rig, model, v, prefilter_window)
            .map_err(|e| Error::AtVelocity { velocity_ppf: v, source: Box::new(e) })?;
        points.push(point);
    }
    let fit = if points.len() >= 2 {
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.velocity_ppf as f64, p.mbw_px)).collect();
        Some(linear_fit(&xy)?)
    } else {
        None
    };
    Ok(MbwSweep { rig: *rig, model: name.into(), points, fit })
}

/// Simulates and measures a single velocity.
pub fn measure_at(
    rig: &RigConfig,
    model: &DisplayModel,
    velocity_ppf: u32,
    prefilter_window: Option<f64>,
) -> Result<MbwPoint> {
    let trace = simulate_scroll(rig, model, velocity_ppf)?;
    let trace = match prefilter_window {
        Some(window) => moving_average_filter(&trace, window)?,
        None => trace,
    };
    measure_mbw(&trace, rig, velocity_ppf)
}

/// Window of the box filter matched to the backlight modulation, if the
/// model has a blinking backlight. Impulse and black-frame-insertion models
/// flash once per frame; a one-frame filter would smear their passage by
/// about a frame, so they are left unfiltered.
pub fn matched_window(model: &DisplayModel) -> Option<f64> {
    model.backlight_frequency().map(|f| 1.0 / f)
}

/// Built-in models at the given refresh rate, by name.
pub fn presets(frame_rate: f64) -> Result<Vec<(&'static str, DisplayModel)>> {
    let lc = LcResponse { tau_rise: 4e-3, tau_fall: 4e-3 };
    Ok(alloc::vec![
        ("ideal-hold", DisplayModel::ideal_hold(frame_rate)?),
        ("lc-fast", DisplayModel::exponential_lc(frame_rate, 2e-3, 2e-3)?),
        ("lc-slow", DisplayModel::exponential_lc(frame_rate, 8e-3, 8e-3)?),
        ("lc-asymmetric", DisplayModel::exponential_lc(frame_rate, 3e-3, 9e-3)?),
        ("crt", DisplayModel::impulse(frame_rate, DEFAULT_PULSE_WIDTH, DEFAULT_DECAY_TAU)?),
        ("blink", DisplayModel::backlight_blink(frame_rate, lc, BLINK_FREQ_HZ, 0.5, 0.0)?),
        ("bfi", DisplayModel::black_frame_insertion(frame_rate, lc, 0.5)?),
    ])
}

/// Backlight rate of the `blink` preset.
pub const BLINK_FREQ_HZ: f64 = 500.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn point_rig() -> RigConfig {
        RigConfig { aperture_px: 1, ..RigConfig::default() }
    }

    #[test]
    fn default_rig_is_valid() {
        let rig = RigConfig::default();
        rig.validate().unwrap();
        assert_eq!(rig.aperture_start(), 262);
        assert!((rig.aperture_bias_px() - 399.2).abs() < 1e-12);
    }

    #[test]
    fn invalid_rigs() {
        let bad = [
            RigConfig { block_width_px: 1024, ..RigConfig::default() },
            RigConfig { aperture_px: 0, ..RigConfig::default() },
            RigConfig { threshold: 0.5, ..RigConfig::default() },
            RigConfig { lmd_sample_rate: 100.0, ..RigConfig::default() },
        ];
        for rig in bad {
            assert!(matches!(rig.validate(), Err(Error::Config(_))), "{rig:?}");
        }
    }

    #[test]
    fn velocity_range() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        assert!(simulate_scroll(&point_rig(), &model, 0).is_err());
        assert!(simulate_scroll(&point_rig(), &model, 512).is_err());
        let model = DisplayModel::ideal_hold(50.0).unwrap();
        assert!(simulate_scroll(&point_rig(), &model, 8).is_err());
    }

    #[test]
    fn point_aperture_sees_64_frame_pulse() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let trace = simulate_scroll(&point_rig(), &model, 8).unwrap();
        let on = trace.samples().iter().filter(|&&y| y == 1.0).count() as f64;
        let frames = on / (20_000.0 / 60.0);
        assert!((frames - 64.0).abs() < 0.01, "{frames}");
        let p = measure_mbw(&trace, &point_rig(), 8).unwrap();
        assert!(p.delta_mbw_px.abs() <= 8.0, "{p:?}");
    }

    #[test]
    fn point_fields_are_consistent() {
        let rig = RigConfig::default();
        let p = MbwPoint::new(&rig, 10, 1.5);
        assert_eq!(p.crossing_time_frames, 1.5 * 60.0);
        assert_eq!(p.mbw_px, 900.0);
        assert_eq!(p.delta_mbw_px, 388.0);
        assert_eq!(p.delta_mbw_debiased_px, 388.0 - rig.aperture_bias_px());
    }

    #[test]
    fn dark_block_mirrors_bright_block() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let bright = point_rig();
        let dark = RigConfig { polarity: Polarity::DarkOnBright, ..bright };
        let a = measure_at(&bright, &model, 8, None).unwrap();
        let b = measure_at(&dark, &model, 8, None).unwrap();
        assert!((a.delta_mbw_px - b.delta_mbw_px).abs() < 1e-9);
    }

    #[test]
    fn flat_trace_has_no_passage() {
        let w = Waveform::new(alloc::vec![0.2; 5000], 20_000.0, 0.0).unwrap();
        assert_eq!(measure_mbw(&w, &RigConfig::default(), 7), Err(Error::NoPassage { velocity_ppf: 7 }));
    }

    #[test]
    fn sweep_orders_and_fits() {
        let model = DisplayModel::ideal_hold(60.0).unwrap();
        let s = sweep(&point_rig(), &model, "ideal-hold", &[20, 5, 10, 10]).unwrap();
        let vs: Vec<u32> = s.points.iter().map(|p| p.velocity_ppf).collect();
        assert_eq!(vs, [5, 10, 20]);
        assert!(s.fit.unwrap().slope_b.abs() <= 1.0);
        assert!(matches!(
            sweep(&point_rig(), &model, "x", &[600]),
            Err(Error::AtVelocity { velocity_ppf: 600, .. })
        ));
    }

    #[test]
    fn presets_are_distinct() {
        let p = presets(60.0).unwrap();
        let mut names: Vec<_> = p.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), p.len());
    }
}
