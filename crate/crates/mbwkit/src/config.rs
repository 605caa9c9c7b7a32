//! Flat `key = value` configuration files for display models and the rig.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! once; unknown keys are rejected by name.

use std::collections::BTreeMap;

use mbwkit_core::display::{DisplayModel, LcResponse, ModelKind, DEFAULT_DECAY_TAU, DEFAULT_PULSE_WIDTH};
use mbwkit_core::rig::{ApertureProfile, Polarity, RigConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { key: String, line: usize },
    #[error("missing key `{key}`")]
    Missing { key: String },
    #[error("key `{key}`: cannot use `{value}`: {reason}")]
    Invalid { key: String, value: String, reason: String },
    #[error("key `{key}` does not apply to kind `{kind}`")]
    Inapplicable { key: String, kind: String },
    #[error("{0}")]
    Model(#[from] mbwkit_core::Error),
}

pub const MODEL_KEYS: &[&str] = &[
    "kind",
    "frame_rate_hz",
    "tau_rise_ms",
    "tau_fall_ms",
    "pulse_width_ms",
    "decay_tau_ms",
    "blink_freq_hz",
    "duty",
    "phase",
    "black_fraction",
    "scan_delay",
];

pub const RIG_KEYS: &[&str] = &[
    "screen_width_px",
    "frame_rate",
    "block_width_px",
    "aperture_px",
    "aperture_profile",
    "lmd_sample_rate",
    "threshold",
    "polarity",
];

/// Validated entries of one file.
struct Entries {
    values: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !allowed.contains(&key) {
                return Err(ConfigError::UnknownKey { key: key.into(), line });
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey { key: key.into(), line });
            }
        }
        Ok(Self { values })
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.str(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.into(),
                    value: v.into(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parse_as(key)?.unwrap_or(default))
    }

    fn required_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.parse_as(key)?.ok_or_else(|| ConfigError::Missing { key: key.into() })
    }
}

/// Reads a display model description.
///
/// `kind` is one of `ideal_hold`, `exponential_lc`, `impulse`,
/// `backlight_blink`, `black_frame_insertion`. Times are in milliseconds;
/// `tau_fall_ms` defaults to `tau_rise_ms`.
pub fn parse_model(text: &str) -> Result<DisplayModel, ConfigError> {
    let e = Entries::parse(text, MODEL_KEYS)?;
    let kind_name = e.str("kind").ok_or_else(|| ConfigError::Missing { key: "kind".into() })?;
    let frame_rate = e.f64_or("frame_rate_hz", 60.0)?;
    let scan_delay = e.parse_as::<bool>("scan_delay")?.unwrap_or(false);

    let applicable: &[&str] = match kind_name {
        "ideal_hold" => &[],
        "exponential_lc" => &["tau_rise_ms", "tau_fall_ms"],
        "impulse" => &["pulse_width_ms", "decay_tau_ms"],
        "backlight_blink" => &["tau_rise_ms", "tau_fall_ms", "blink_freq_hz", "duty", "phase"],
        "black_frame_insertion" => &["tau_rise_ms", "tau_fall_ms", "black_fraction"],
        other => {
            return Err(ConfigError::Invalid {
                key: "kind".into(),
                value: other.into(),
                reason: "expected ideal_hold, exponential_lc, impulse, backlight_blink or black_frame_insertion"
                    .into(),
            })
        }
    };
    for key in &MODEL_KEYS[2..MODEL_KEYS.len() - 1] {
        if e.has(key) && !applicable.contains(key) {
            return Err(ConfigError::Inapplicable { key: (*key).into(), kind: kind_name.into() });
        }
    }
    if e.has("tau_fall_ms") && !e.has("tau_rise_ms") {
        return Err(ConfigError::Missing { key: "tau_rise_ms".into() });
    }

    let lc = |e: &Entries| -> Result<LcResponse, ConfigError> {
        let rise = e.required_f64("tau_rise_ms")?;
        let fall = e.f64_or("tau_fall_ms", rise)?;
        Ok(LcResponse { tau_rise: rise / 1e3, tau_fall: fall / 1e3 })
    };
    let kind = match kind_name {
        "ideal_hold" => ModelKind::IdealHold,
        "exponential_lc" => ModelKind::ExponentialLc(lc(&e)?),
        "impulse" => ModelKind::Impulse {
            pulse_width: e.f64_or("pulse_width_ms", ms(DEFAULT_PULSE_WIDTH))? / 1e3,
            decay_tau: e.f64_or("decay_tau_ms", ms(DEFAULT_DECAY_TAU))? / 1e3,
        },
        "backlight_blink" => ModelKind::BacklightBlink {
            base: lc(&e)?,
            blink_freq: e.required_f64("blink_freq_hz")?,
            duty: e.required_f64("duty")?,
            phase: e.f64_or("phase", 0.0)?,
        },
        _ => ModelKind::BlackFrameInsertion { base: lc(&e)?, black_fraction: e.required_f64("black_fraction")? },
    };
    Ok(DisplayModel::new(frame_rate, kind, scan_delay)?)
}

/// Reads rig settings; absent keys keep their defaults.
pub fn parse_rig(text: &str) -> Result<RigConfig, ConfigError> {
    let e = Entries::parse(text, RIG_KEYS)?;
    let d = RigConfig::default();
    let aperture_profile = match e.str("aperture_profile") {
        None | Some("uniform") => ApertureProfile::Uniform,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "aperture_profile".into(),
                value: other.into(),
                reason: "only `uniform` is supported".into(),
            })
        }
    };
    let polarity = match e.str("polarity") {
        None | Some("bright-block-on-dark") => Polarity::BrightOnDark,
        Some("dark-block-on-bright") => Polarity::DarkOnBright,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "polarity".into(),
                value: other.into(),
                reason: "expected bright-block-on-dark or dark-block-on-bright".into(),
            })
        }
    };
    let rig = RigConfig {
        screen_width_px: e.parse_as("screen_width_px")?.unwrap_or(d.screen_width_px),
        frame_rate: e.f64_or("frame_rate", d.frame_rate)?,
        block_width_px: e.parse_as("block_width_px")?.unwrap_or(d.block_width_px),
        aperture_px: e.parse_as("aperture_px")?.unwrap_or(d.aperture_px),
        aperture_profile,
        lmd_sample_rate: e.f64_or("lmd_sample_rate", d.lmd_sample_rate)?,
        threshold: e.f64_or("threshold", d.threshold)?,
        polarity,
    };
    rig.validate()?;
    Ok(rig)
}

/// Seconds to milliseconds such that `ms(s) / 1e3 == s`, which is how the
/// parser converts back. Moving the decimal point of the shortest form is
/// usually exact; otherwise a neighbour a few ulps away is.
fn ms(seconds: f64) -> f64 {
    let text = format!("{seconds:e}");
    let (mantissa, exponent) = text.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let shifted: f64 = format!("{mantissa}e{}", exponent + 3).parse().expect("valid float");
    if !seconds.is_finite() || shifted / 1e3 == seconds {
        return shifted;
    }
    (1..=4i64)
        .flat_map(|k| [k, -k])
        .map(|k| f64::from_bits((shifted.to_bits() as i64 + k) as u64))
        .find(|c| c / 1e3 == seconds)
        .unwrap_or(shifted)
}

/// The model as config keys, for manifests; parsing the rendered text gives
/// the model back.
pub fn model_parameters(model: &DisplayModel) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        p.insert(k.to_string(), v);
    };
    put("frame_rate_hz", model.frame_rate().to_string());
    put("scan_delay", model.scan_delay().to_string());
    let lc = |put: &mut dyn FnMut(&str, String), lc: &LcResponse| {
        put("tau_rise_ms", ms(lc.tau_rise).to_string());
        put("tau_fall_ms", ms(lc.tau_fall).to_string());
    };
    match model.kind() {
        ModelKind::IdealHold => put("kind", "ideal_hold".into()),
        ModelKind::ExponentialLc(base) => {
            put("kind", "exponential_lc".into());
            lc(&mut put, base);
        }
        ModelKind::Impulse { pulse_width, decay_tau } => {
            put("kind", "impulse".into());
            put("pulse_width_ms", ms(*pulse_width).to_string());
            put("decay_tau_ms", ms(*decay_tau).to_string());
        }
        ModelKind::BacklightBlink { base, blink_freq, duty, phase } => {
            put("kind", "backlight_blink".into());
            lc(&mut put, base);
            put("blink_freq_hz", blink_freq.to_string());
            put("duty", duty.to_string());
            put("phase", phase.to_string());
        }
        ModelKind::BlackFrameInsertion { base, black_fraction } => {
            put("kind", "black_frame_insertion".into());
            lc(&mut put, base);
            put("black_fraction", black_fraction.to_string());
        }
    }
    p
}

pub fn rig_parameters(rig: &RigConfig) -> BTreeMap<String, String> {
    let polarity = match rig.polarity {
        Polarity::BrightOnDark => "bright-block-on-dark",
        Polarity::DarkOnBright => "dark-block-on-bright",
    };
    [
        ("screen_width_px", rig.screen_width_px.to_string()),
        ("frame_rate", rig.frame_rate.to_string()),
        ("block_width_px", rig.block_width_px.to_string()),
        ("aperture_px", rig.aperture_px.to_string()),
        ("aperture_profile", "uniform".to_string()),
        ("lmd_sample_rate", rig.lmd_sample_rate.to_string()),
        ("threshold", rig.threshold.to_string()),
        ("polarity", polarity.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Renders parameters back into config text.
pub fn render(params: &BTreeMap<String, String>) -> String {
    params.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
