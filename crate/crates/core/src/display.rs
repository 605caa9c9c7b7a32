//! Parametric temporal light-output models.
//!
//! A [`DisplayModel`] turns a frame-by-frame drive sequence ([`PixelDrive`])
//! into a luminance trace. All luminance is relative: gray level 1 settles to
//! luminance 1 and the gray-to-luminance transfer is the identity.
//!
//! Liquid-crystal kinds use a first-order response with separate rise and
//! fall constants that carries its state across frame boundaries. The
//! impulse kind flashes once per frame and decays exponentially.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{ceil, exp, floor, gcd, round};
use crate::waveform::Waveform;
use crate::{Error, Result};

/// A drive level in `[0, 1]` (an 8-bit code maps by `/ 255`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GrayLevel(f64);

impl GrayLevel {
    pub const BLACK: GrayLevel = GrayLevel(0.0);
    pub const WHITE: GrayLevel = GrayLevel(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Config(alloc::format!("gray level {value} outside [0, 1]")))
        }
    }

    pub fn from_code(code: u8) -> Self {
        Self(code as f64 / 255.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// First-order liquid-crystal response: time constants in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcResponse {
    pub tau_rise: f64,
    pub tau_fall: f64,
}

impl LcResponse {
    pub fn symmetric(tau: f64) -> Self {
        Self { tau_rise: tau, tau_fall: tau }
    }

    fn validate(&self) -> Result<()> {
        positive("tau_rise", self.tau_rise)?;
        positive("tau_fall", self.tau_fall)
    }

    #[inline]
    fn step(&self, from: f64, target: f64, dt: f64) -> f64 {
        if target == from {
            return target;
        }
        let tau = if target > from { self.tau_rise } else { self.tau_fall };
        target + (from - target) * exp(-dt / tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Instantaneous transition, full-frame hold.
    IdealHold,
    /// First-order response toward the driven level.
    ExponentialLc(LcResponse),
    /// A rectangular flash of `pulse_width` at each frame start followed by
    /// exponential phosphor decay.
    Impulse { pulse_width: f64, decay_tau: f64 },
    /// Liquid crystal behind a backlight that is on for the fraction `duty`
    /// of each blink period, starting `phase` periods after t = 0.
    BacklightBlink { base: LcResponse, blink_freq: f64, duty: f64, phase: f64 },
    /// Liquid crystal driven to black for the trailing `black_fraction` of
    /// every frame.
    BlackFrameInsertion { base: LcResponse, black_fraction: f64 },
}

/// Defaults for the impulse (CRT-like) kind.
pub const DEFAULT_PULSE_WIDTH: f64 = 0.1e-3;
pub const DEFAULT_DECAY_TAU: f64 = 1.0e-3;

/// A display's temporal response at a given refresh rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayModel {
    frame_rate: f64,
    kind: ModelKind,
    scan_delay: bool,
}

impl DisplayModel {
    pub fn new(frame_rate: f64, kind: ModelKind, scan_delay: bool) -> Result<Self> {
        positive("frame_rate", frame_rate)?;
        let period = 1.0 / frame_rate;
        match kind {
            ModelKind::IdealHold => {}
            ModelKind::ExponentialLc(lc) => lc.validate()?,
            ModelKind::Impulse { pulse_width, decay_tau } => {
                positive("pulse_width", pulse_width)?;
                positive("decay_tau", decay_tau)?;
                if pulse_width >= period {
                    return Err(Error::Config(alloc::format!(
                        "pulse_width {pulse_width} s must be shorter than the frame period {period} s"
                    )));
                }
            }
            ModelKind::BacklightBlink { base, blink_freq, duty, phase } => {
                base.validate()?;
                positive("blink_freq", blink_freq)?;
                if !(duty > 0.0 && duty <= 1.0) {
                    return Err(Error::Config(alloc::format!("duty {duty} outside (0, 1]")));
                }
                if !phase.is_finite() {
                    return Err(Error::Config(alloc::format!("phase {phase} is not finite")));
                }
            }
            ModelKind::BlackFrameInsertion { base, black_fraction } => {
                base.validate()?;
                if !(0.0..1.0).contains(&black_fraction) {
                    return Err(Error::Config(alloc::format!(
                        "black_fraction {black_fraction} outside [0, 1)"
                    )));
                }
            }
        }
        Ok(Self { frame_rate, kind, scan_delay })
    }

    pub fn ideal_hold(frame_rate: f64) -> Result<Self> {
        Self::new(frame_rate, ModelKind::IdealHold, false)
    }

    pub fn exponential_lc(frame_rate: f64, tau_rise: f64, tau_fall: f64) -> Result<Self> {
        Self::new(frame_rate, ModelKind::ExponentialLc(LcResponse { tau_rise, tau_fall }), false)
    }

    pub fn impulse(frame_rate: f64, pulse_width: f64, decay_tau: f64) -> Result<Self> {
        Self::new(frame_rate, ModelKind::Impulse { pulse_width, decay_tau }, false)
    }

    pub fn backlight_blink(
        frame_rate: f64,
        base: LcResponse,
        blink_freq: f64,
        duty: f64,
        phase: f64,
    ) -> Result<Self> {
        Self::new(frame_rate, ModelKind::BacklightBlink { base, blink_freq, duty, phase }, false)
    }

    pub fn black_frame_insertion(frame_rate: f64, base: LcResponse, black_fraction: f64) -> Result<Self> {
        Self::new(frame_rate, ModelKind::BlackFrameInsertion { base, black_fraction }, false)
    }

    /// Same model with raster scan delay switched on or off.
    pub fn with_scan_delay(mut self, enabled: bool) -> Self {
        self.scan_delay = enabled;
        self
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn scan_delay(&self) -> bool {
        self.scan_delay
    }

    /// Frequency at which the emitted light is modulated independently of
    /// content: the blink rate for a blinking backlight, the refresh rate for
    /// impulse and black-frame-insertion displays, `None` for hold types.
    pub fn modulation_frequency(&self) -> Option<f64> {
        match self.kind {
            ModelKind::BacklightBlink { blink_freq, duty, .. } if duty < 1.0 => Some(blink_freq),
            ModelKind::Impulse { .. } => Some(self.frame_rate),
            ModelKind::BlackFrameInsertion { black_fraction, .. } if black_fraction > 0.0 => {
                Some(self.frame_rate)
            }
            _ => None,
        }
    }

    /// Blink rate of a modulated backlight, if the model has one.
    pub fn backlight_frequency(&self) -> Option<f64> {
        match self.kind {
            ModelKind::BacklightBlink { blink_freq, duty, .. } if duty < 1.0 => Some(blink_freq),
            _ => None,
        }
    }

    /// Longest time constant of the model (zero for an ideal hold).
    pub fn slowest_time_constant(&self) -> f64 {
        match self.kind {
            ModelKind::IdealHold => 0.0,
            ModelKind::ExponentialLc(lc)
            | ModelKind::BacklightBlink { base: lc, .. }
            | ModelKind::BlackFrameInsertion { base: lc, .. } => lc.tau_rise.max(lc.tau_fall),
            ModelKind::Impulse { decay_tau, .. } => decay_tau,
        }
    }

    /// Frames needed for the response to settle to within `exp(-10)`.
    pub fn settling_frames(&self) -> usize {
        ceil(10.0 * self.slowest_time_constant() * self.frame_rate) as usize
    }

    pub(crate) fn check_resolution(&self, sample_rate: f64) -> Result<()> {
        let required = 10.0 * self.frame_rate;
        if !(sample_rate >= required) {
            return Err(Error::Resolution { sample_rate, required });
        }
        Ok(())
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(alloc::format!("{name} must be positive, got {value}")))
    }
}

/// The gray levels one pixel displays, one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDrive {
    levels: Vec<GrayLevel>,
    frame_rate: f64,
    /// Horizontal position as a fraction of the screen width; only used when
    /// the model has scan delay enabled.
    scan_position: f64,
}

impl PixelDrive {
    pub fn new(levels: Vec<GrayLevel>, frame_rate: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty("pixel drive"));
        }
        positive("frame_rate", frame_rate)?;
        Ok(Self { levels, frame_rate, scan_position: 0.0 })
    }

    pub fn with_scan_position(mut self, fraction: f64) -> Self {
        self.scan_position = fraction;
        self
    }

    pub fn levels(&self) -> &[GrayLevel] {
        &self.levels
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn scan_position(&self) -> f64 {
        self.scan_position
    }

    pub fn n_frames(&self) -> usize {
        self.levels.len()
    }
}

/// Continuous-time luminance of one pixel, evaluable at any instant.
///
/// Liquid-crystal kinds are tracked analytically segment by segment, so the
/// value at `t` is exact rather than integrated numerically.
#[derive(Debug, Clone)]
pub(crate) struct PixelSignal {
    kind: ModelKind,
    period: f64,
    delay: f64,
    levels: Vec<f64>,
    // piecewise-constant drive target: segment starts, targets, and the
    // response value at each segment start
    seg_start: Vec<f64>,
    seg_target: Vec<f64>,
    seg_value: Vec<f64>,
}

impl PixelSignal {
    pub(crate) fn new(model: &DisplayModel, drive: &PixelDrive) -> Result<Self> {
        if drive.frame_rate != model.frame_rate {
            return Err(Error::Config(alloc::format!(
                "drive frame rate {} Hz differs from model frame rate {} Hz",
                drive.frame_rate,
                model.frame_rate
            )));
        }
        let period = model.frame_period();
        let delay = if model.scan_delay { drive.scan_position * period } else { 0.0 };
        let levels: Vec<f64> = drive.levels.iter().map(|g| g.0).collect();

        let mut seg_start = Vec::with_capacity(levels.len() * 2);
        let mut seg_target = Vec::with_capacity(levels.len() * 2);
        let black_fraction = match model.kind {
            ModelKind::BlackFrameInsertion { black_fraction, .. } => black_fraction,
            _ => 0.0,
        };
        for (n, &level) in levels.iter().enumerate() {
            let start = n as f64 * period + delay;
            seg_start.push(start);
            seg_target.push(level);
            if black_fraction > 0.0 {
                seg_start.push(start + (1.0 - black_fraction) * period);
                seg_target.push(0.0);
            }
        }
        let lc = match model.kind {
            ModelKind::ExponentialLc(lc)
            | ModelKind::BacklightBlink { base: lc, .. }
            | ModelKind::BlackFrameInsertion { base: lc, .. } => Some(lc),
            _ => None,
        };
        let mut seg_value = Vec::with_capacity(seg_start.len());
        let mut y = levels[0];
        for k in 0..seg_start.len() {
            if k > 0 {
                y = match lc {
                    Some(lc) => lc.step(y, seg_target[k - 1], seg_start[k] - seg_start[k - 1]),
                    None => seg_target[k - 1],
                };
            }
            seg_value.push(y);
        }
        Ok(Self { kind: model.kind, period, delay, levels, seg_start, seg_target, seg_value })
    }

    /// Luminance at time `t` (seconds from the start of frame 0).
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::IdealHold => {
                let k = self.seg_start.partition_point(|&s| s <= t);
                if k == 0 {
                    self.levels[0]
                } else {
                    self.seg_target[k - 1]
                }
            }
            ModelKind::ExponentialLc(lc) | ModelKind::BlackFrameInsertion { base: lc, .. } => {
                self.lc_value(&lc, t)
            }
            ModelKind::BacklightBlink { base, blink_freq, duty, phase } => {
                // snap to a fine grid so sample instants that land on a
                // blink edge are not split by rounding
                let x = round((t * blink_freq - phase) * 1e9) / 1e9;
                let on = x - floor(x) < duty;
                if on {
                    self.lc_value(&base, t)
                } else {
                    0.0
                }
            }
            ModelKind::Impulse { pulse_width, decay_tau } => self.impulse_value(t, pulse_width, decay_tau),
        }
    }

    fn lc_value(&self, lc: &LcResponse, t: f64) -> f64 {
        let k = self.seg_start.partition_point(|&s| s <= t);
        if k == 0 {
            return self.levels[0];
        }
        let k = k - 1;
        lc.step(self.seg_value[k], self.seg_target[k], t - self.seg_start[k])
    }

    fn impulse_value(&self, t: f64, pulse_width: f64, decay_tau: f64) -> f64 {
        // frame index relative to the (possibly delayed) frame grid; frames
        // before 0 repeat the first level
        let rel = t - self.delay;
        let n = floor(rel / self.period) as i64;
        let level = |i: i64| -> f64 {
            if i < 0 {
                self.levels[0]
            } else {
                self.levels[(i as usize).min(self.levels.len() - 1)]
            }
        };
        let since = rel - n as f64 * self.period;
        // glow left by the previous flash when this frame starts
        let residual = level(n - 1) * exp(-(self.period - pulse_width) / decay_tau);
        if since < pulse_width {
            level(n).max(residual * exp(-since / decay_tau))
        } else {
            let at_end = level(n).max(residual * exp(-pulse_width / decay_tau));
            at_end * exp(-(since - pulse_width) / decay_tau)
        }
    }
}

/// Samples the luminance of one pixel over its whole drive sequence.
///
/// The trace starts at the beginning of frame 0, with the pixel settled at
/// the first drive level, and spans `n_frames / frame_rate` seconds.
pub fn pixel_response(model: &DisplayModel, drive: &PixelDrive, sample_rate: f64) -> Result<Waveform> {
    model.check_resolution(sample_rate)?;
    let signal = PixelSignal::new(model, drive)?;
    let n = round(drive.n_frames() as f64 * sample_rate / model.frame_rate) as usize;
    Waveform::from_fn(n.max(2), sample_rate, 0.0, |t| signal.value_at(t))
}

/// A gray-to-gray response curve with the instant of the drive switch.
#[derive(Debug, Clone, PartialEq)]
pub struct Lcrc {
    pub trace: Waveform,
    pub switch_time: f64,
}

/// Frames held at the starting level before the switch.
pub const LCRC_PRE_FRAMES: usize = 4;

/// Response curve for a single `from -> to` transition.
///
/// The drive holds `from` for [`LCRC_PRE_FRAMES`] frames, then `to` long
/// enough for the slowest time constant to settle plus four more frames.
pub fn lcrc(model: &DisplayModel, from: GrayLevel, to: GrayLevel, sample_rate: f64) -> Result<Lcrc> {
    let post = 4 + model.settling_frames();
    let mut levels = vec![from; LCRC_PRE_FRAMES];
    levels.extend(core::iter::repeat_n(to, post));
    let drive = PixelDrive::new(levels, model.frame_rate)?;
    let trace = pixel_response(model, &drive, sample_rate)?;
    Ok(Lcrc { trace, switch_time: LCRC_PRE_FRAMES as f64 * model.frame_period() })
}

/// A block scrolling horizontally across the screen, wrapping around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrollPattern {
    pub pattern_width_px: u32,
    pub screen_width_px: u32,
    pub velocity_ppf: u32,
    pub background: GrayLevel,
    pub block: GrayLevel,
}

impl ScrollPattern {
    /// Whether `pixel_x` lies inside the block at frame `n`. The block's
    /// leading edge sits at `(n * v) mod W` and its body trails to the left.
    pub fn covers(&self, n: u64, pixel_x: u32) -> bool {
        let w = self.screen_width_px as u64;
        let lead = (n * self.velocity_ppf as u64) % w;
        let d = (lead + w - pixel_x as u64) % w;
        d >= 1 && d <= self.pattern_width_px as u64
    }

    /// Frames after which the drive of every pixel repeats.
    pub fn period_frames(&self) -> u64 {
        let w = self.screen_width_px as u64;
        w / gcd(w, self.velocity_ppf as u64)
    }
}

/// Frame-by-frame content seen by one pixel as the block scrolls.
pub fn scrolling_drive(
    pattern: &ScrollPattern,
    n_frames: usize,
    pixel_x: u32,
    frame_rate: f64,
) -> Result<PixelDrive> {
    if pixel_x >= pattern.screen_width_px {
        return Err(Error::OutOfBounds { pixel_x, screen_width_px: pattern.screen_width_px });
    }
    if pattern.velocity_ppf < 1 {
        return Err(Error::Config("velocity must be at least 1 ppf".into()));
    }
    if pattern.pattern_width_px >= pattern.screen_width_px {
        return Err(Error::Config("block must be narrower than the screen".into()));
    }
    let levels = (0..n_frames as u64)
        .map(|n| if pattern.covers(n, pixel_x) { pattern.block } else { pattern.background })
        .collect();
    Ok(PixelDrive::new(levels, frame_rate)?
        .with_scan_position(pixel_x as f64 / pattern.screen_width_px as f64))
}
