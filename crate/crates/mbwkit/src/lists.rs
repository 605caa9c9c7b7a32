//! Velocity and gray-transition lists given on the command line.

use mbwkit_core::blur::gray_to_gray;
use mbwkit_core::display::GrayLevel;

/// Gray levels of the `all` transition set.
pub const GTG_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Comma-separated velocities and inclusive ranges, e.g. `5-20` or
/// `5,10,12-14`. The result is sorted and free of duplicates.
pub fn parse_velocities(text: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty entry in velocity list `{text}`"));
        }
        let parse = |s: &str| -> Result<u32, String> {
            let v: u32 = s.trim().parse().map_err(|_| format!("`{s}` is not a whole number of ppf"))?;
            if v == 0 {
                return Err("velocity must be at least 1 ppf".into());
            }
            Ok(v)
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse(part)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `all`, or comma-separated `from-to` pairs of relative gray levels such as
/// `0-1,1-0`.
pub fn parse_transitions(text: &str) -> Result<Vec<(GrayLevel, GrayLevel)>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("no transitions given".into());
    }
    if text == "all" {
        let levels: Vec<GrayLevel> = GTG_LEVELS.iter().map(|&v| GrayLevel::new(v).expect("in range")).collect();
        return Ok(gray_to_gray(&levels));
    }
    let level = |s: &str| -> Result<GrayLevel, String> {
        let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a gray level"))?;
        GrayLevel::new(v).map_err(|e| e.to_string())
    };
    text.split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once('-')
                .ok_or_else(|| format!("`{pair}` is not a `from-to` pair"))?;
            let (a, b) = (level(a)?, level(b)?);
            if a == b {
                return Err(format!("`{pair}` is not a transition"));
            }
            Ok((a, b))
        })
        .collect()
}
