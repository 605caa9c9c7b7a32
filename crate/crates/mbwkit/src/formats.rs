//! CSV formats read and written by the command line.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::io::{BufRead, Read, Write};

use mbwkit_core::analysis::{ComparisonTable, MethodScores, Orientation};
use mbwkit_core::blur::{MotionMetrics, MprtResult};
use mbwkit_core::rig::MbwSweep;
use mbwkit_core::waveform::Waveform;

pub const WAVEFORM_HEADER: [&str; 2] = ["time_s", "luminance"];
pub const SCORES_HEADER: [&str; 2] = ["device", "value"];
pub const MPRT_HEADER: &str = "from_gray,to_gray,velocity_ppf,bew_px,n_bew_frames,n_bet_ms";
pub const SWEEP_HEADER: &str =
    "velocity_ppf,crossing_time_s,crossing_time_frames,mbw_px,delta_mbw_px,delta_mbw_debiased_px";

/// Relative tolerance on the spacing of waveform time stamps.
pub const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: time stamps are not on a uniform grid")]
    NonUniform { line: u64 },
    #[error("bad directive line `{0}`: expected `# method=<name> orientation=<higher|lower>`")]
    Directive(String),
    #[error(transparent)]
    Data(#[from] mbwkit_core::Error),
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), FormatError> {
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(FormatError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn number(record: &csv::StringRecord, field: usize, line: u64) -> Result<f64, FormatError> {
    let raw = record.get(field).ok_or_else(|| FormatError::Row {
        line,
        message: format!("expected {} fields, found {}", field + 1, record.len()),
    })?;
    let value: f64 = raw.trim().parse().map_err(|_| FormatError::Row {
        line,
        message: format!("`{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(FormatError::Row { line, message: format!("`{raw}` is not finite") });
    }
    Ok(value)
}

/// Reads a `time_s,luminance` trace. Time stamps must increase in equal
/// steps to within one part per million; the first row that breaks the grid
/// is reported.
pub fn read_waveform(reader: impl Read) -> Result<Waveform, FormatError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(csv.headers()?, &WAVEFORM_HEADER)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut step = None;
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(FormatError::Row { line, message: format!("expected 2 fields, found {}", record.len()) });
        }
        let t = number(&record, 0, line)?;
        let y = number(&record, 1, line)?;
        if let Some(&prev) = times.last() {
            let dt: f64 = t - prev;
            let reference = *step.get_or_insert(dt);
            if !(dt > 0.0) || (dt - reference).abs() > GRID_TOLERANCE * reference {
                return Err(FormatError::NonUniform { line });
            }
        }
        times.push(t);
        values.push(y);
    }
    if times.len() < 2 {
        return Err(mbwkit_core::Error::InsufficientData { needed: 2, available: times.len() }.into());
    }
    let span = times[times.len() - 1] - times[0];
    let mut rate = (times.len() - 1) as f64 / span;
    // rates are normally whole numbers of hertz; undo the rounding of the
    // printed time stamps
    if (rate - rate.round()).abs() <= GRID_TOLERANCE * rate {
        rate = rate.round();
    }
    Ok(Waveform::new(values, rate, times[0])?)
}

pub fn write_waveform(w: &Waveform, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", WAVEFORM_HEADER.join(","))?;
    for (i, y) in w.samples().iter().enumerate() {
        writeln!(out, "{},{}", w.time_at(i), y)?;
    }
    Ok(())
}

/// Reads one method's scores: a directive line, then `device,value` rows.
pub fn read_scores(reader: impl BufRead) -> Result<MethodScores, FormatError> {
    let mut lines = reader.lines();
    let directive = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(FormatError::Directive(String::new())),
        }
    };
    let (method, orientation) = parse_directive(&directive)?;
    let rest: String = lines.map(|l| l.map(|l| l + "\n")).collect::<Result<_, _>>()?;
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    check_header(csv.headers()?, &SCORES_HEADER)?;
    let mut values = Vec::new();
    for record in csv.records() {
        let record = record?;
        // the directive line precedes the CSV body
        let line = record.position().map_or(0, |p| p.line()) + 1;
        if record.len() != 2 {
            return Err(FormatError::Row { line, message: format!("expected 2 fields, found {}", record.len()) });
        }
        let device = record[0].trim().to_string();
        if device.is_empty() {
            return Err(FormatError::Row { line, message: "empty device name".into() });
        }
        values.push((device, number(&record, 1, line)?));
    }
    Ok(MethodScores::new(method, orientation, values)?)
}

fn parse_directive(line: &str) -> Result<(String, Orientation), FormatError> {
    let bad = || FormatError::Directive(line.to_string());
    let body = line.trim().strip_prefix('#').ok_or_else(bad)?;
    let mut method = None;
    let mut orientation = None;
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("method", name)) if !name.is_empty() => method = Some(name.to_string()),
            Some(("orientation", "higher")) => orientation = Some(Orientation::HigherIsBetter),
            Some(("orientation", "lower")) => orientation = Some(Orientation::LowerIsBetter),
            _ => return Err(bad()),
        }
    }
    Ok((method.ok_or_else(bad)?, orientation.ok_or_else(bad)?))
}

pub fn write_scores(scores: &MethodScores, mut out: impl Write) -> std::io::Result<()> {
    let orientation = match scores.orientation {
        Orientation::HigherIsBetter => "higher",
        Orientation::LowerIsBetter => "lower",
    };
    writeln!(out, "# method={} orientation={orientation}", scores.method)?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(SCORES_HEADER)?;
    for (device, value) in &scores.values {
        csv.write_record([device.as_str(), &value.to_string()])?;
    }
    csv.flush()
}

pub fn write_mprt(result: &MprtResult, out: impl Write) -> std::io::Result<()> {
    let rows = result.per_transition.iter().map(|t| (t.from.value(), t.to.value(), t.metrics));
    write_mprt_rows(rows, out)
}

/// Rows of an MPRT report from explicit start and end levels, for traces
/// that were not produced from a gray-level drive.
pub fn write_mprt_rows(
    rows: impl IntoIterator<Item = (f64, f64, MotionMetrics)>,
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "{MPRT_HEADER}")?;
    for (from, to, m) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            from,
            to,
            m.velocity_ppf,
            m.bew_px,
            m.n_bew_frames,
            m.n_bet_s * 1e3
        )?;
    }
    Ok(())
}

/// The summary printed next to an MPRT report.
pub fn mprt_summary(mprt_s: f64) -> String {
    format!("mprt_ms={}", mprt_s * 1e3)
}

pub fn write_sweep(sweep: &MbwSweep, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for p in &sweep.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.velocity_ppf,
            p.crossing_time_s,
            p.crossing_time_frames,
            p.mbw_px,
            p.delta_mbw_px,
            p.delta_mbw_debiased_px
        )?;
    }
    if let Some(fit) = &sweep.fit {
        writeln!(out, "# a={} b={} r2={}", fit.intercept_a, fit.slope_b, fit.r_squared)?;
    }
    Ok(())
}

/// Columns `device,<method>_z...,<method>_rank...`, followed by comment lines
/// for tied ranks, rank correlations between methods and excluded devices.
pub fn write_comparison(table: &ComparisonTable, out: impl Write) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    let mut header = vec!["device".to_string()];
    header.extend(table.columns.iter().map(|c| format!("{}_z", c.method)));
    header.extend(table.columns.iter().map(|c| format!("{}_rank", c.method)));
    csv.write_record(&header)?;
    for (i, device) in table.devices.iter().enumerate() {
        let mut row = vec![device.clone()];
        row.extend(table.columns.iter().map(|c| c.z[i].to_string()));
        row.extend(table.columns.iter().map(|c| c.rank[i].to_string()));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    let mut out = csv.into_inner().map_err(|e| e.into_error())?;
    for c in &table.columns {
        let tied: Vec<&str> = table
            .devices
            .iter()
            .zip(&c.tied)
            .filter(|(_, &t)| t)
            .map(|(d, _)| d.as_str())
            .collect();
        if !tied.is_empty() {
            writeln!(out, "# tie method={} devices={}", c.method, tied.join(";"))?;
        }
    }
    for r in &table.correlations {
        writeln!(out, "# spearman {},{}={}", r.left, r.right, r.spearman)?;
    }
    if !table.excluded.is_empty() {
        writeln!(out, "# excluded devices={}", table.excluded.join(";"))?;
    }
    Ok(())
}
