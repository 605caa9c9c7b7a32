use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mbwkit::config::{self, model_parameters, rig_parameters};
use mbwkit::formats;
use mbwkit::lists::{parse_transitions, parse_velocities};
use mbwkit::manifest::{manifest_path, RunManifest};
use mbwkit::CliError;
use mbwkit_core::analysis::{compare, compare_overlap};
use mbwkit_core::blur::{metrics_from_mprc, mprc, mprt_with_prefilter, settled_levels};
use mbwkit_core::display::{lcrc, DisplayModel, GrayLevel};
use mbwkit_core::rig::{self, RigConfig};
use mbwkit_core::waveform::{moving_average_filter, normalize};

#[derive(Parser)]
#[command(name = "mbwkit", version, about = "Display motion-blur simulation and moving-block-width measurement")]
struct Cli {
    /// Write the result to this file, with a `.manifest.json` beside it,
    /// instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Do not print summary lines
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Display model config file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Built-in model (ideal-hold, lc-fast, lc-slow, lc-asymmetric, crt, blink, bfi)
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Response curve of one gray transition, as a waveform CSV
    Lcrc {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 20_000.0)]
        sample_rate: f64,
    },
    /// Blurred edge metrics and MPRT for a set of transitions
    Mprt {
        #[command(flatten)]
        source: MprtSource,
        /// `all`, or pairs such as `0-1,1-0`
        #[arg(long, default_value = "0-1,1-0")]
        transitions: String,
        #[arg(long, default_value_t = 10)]
        velocity: u32,
        #[arg(long, default_value_t = 20_000.0)]
        sample_rate: f64,
        /// Frame rate of a `--waveform` trace
        #[arg(long, default_value_t = 60.0)]
        frame_rate: f64,
        /// Box-filter response curves over one backlight blink period first
        #[arg(long, conflicts_with = "filter_window_ms")]
        improved: bool,
        /// Box-filter response curves over this window first
        #[arg(long)]
        filter_window_ms: Option<f64>,
    },
    /// Moving block width over a set of velocities, with a fitted line
    MbwSweep {
        #[command(flatten)]
        source: ModelSource,
        /// Rig config file; defaults apply to missing keys
        #[arg(long)]
        rig: Option<PathBuf>,
        /// e.g. `5-20` or `5,10,20`
        #[arg(long, default_value = "5-20")]
        velocities: String,
        /// Box-filter detector traces over one backlight blink period first
        #[arg(long)]
        improved: bool,
    },
    /// Standardize and rank per-device scores from several methods
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Use only devices every method scored instead of failing
        #[arg(long)]
        intersect: bool,
    },
    /// Normalize a measured trace, optionally box-filtering it first
    Ingest {
        file: PathBuf,
        #[arg(long)]
        filter_window_ms: Option<f64>,
        /// Level mapped to 0; defaults to the trace minimum
        #[arg(long, allow_hyphen_values = true)]
        low: Option<f64>,
        /// Level mapped to 1; defaults to the trace maximum
        #[arg(long, allow_hyphen_values = true)]
        high: Option<f64>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MprtSource {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Use a measured response curve (waveform CSV) instead of a model
    #[arg(long)]
    waveform: Option<PathBuf>,
}

struct Output {
    bytes: Vec<u8>,
    summary: Option<String>,
    manifest: RunManifest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let output = match &cli.command {
        Command::Lcrc { source, from, to, sample_rate } => cmd_lcrc(source, *from, *to, *sample_rate)?,
        Command::Mprt { source, transitions, velocity, sample_rate, frame_rate, improved, filter_window_ms } => {
            cmd_mprt(source, transitions, *velocity, *sample_rate, *frame_rate, *improved, *filter_window_ms)?
        }
        Command::MbwSweep { source, rig, velocities, improved } => {
            cmd_mbw_sweep(source, rig.as_deref(), velocities, *improved)?
        }
        Command::Compare { files, intersect } => cmd_compare(files, *intersect)?,
        Command::Ingest { file, filter_window_ms, low, high } => cmd_ingest(file, *filter_window_ms, *low, *high)?,
    };
    emit(cli, output)
}

fn emit(cli: &Cli, output: Output) -> Result<(), CliError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &output.bytes).map_err(io_err(path))?;
            let mpath = manifest_path(path);
            fs::write(&mpath, output.manifest.to_json()).map_err(io_err(&mpath))?;
            if let (Some(line), false) = (&output.summary, cli.quiet) {
                println!("{line}");
            }
        }
        None => {
            let stdout = Path::new("<stdout>");
            io::stdout().write_all(&output.bytes).map_err(io_err(stdout))?;
            if let (Some(line), false) = (&output.summary, cli.quiet) {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn preset(name: &str, frame_rate: f64) -> Result<DisplayModel, CliError> {
    let all = rig::presets(frame_rate)?;
    all.iter().find(|(n, _)| *n == name).map(|(_, m)| *m).ok_or_else(|| {
        let names: Vec<&str> = all.iter().map(|(n, _)| *n).collect();
        CliError::Usage(format!("unknown preset `{name}`; choose one of {}", names.join(", ")))
    })
}

fn load_model(
    model: Option<&Path>,
    preset_name: Option<&str>,
    frame_rate: f64,
    manifest: &mut RunManifest,
) -> Result<DisplayModel, CliError> {
    let m = match (model, preset_name) {
        (Some(path), _) => {
            manifest.config_paths.push(path.display().to_string());
            config::parse_model(&read_text(path)?)
                .map_err(|source| CliError::Config { path: path.into(), source })?
        }
        (None, Some(name)) => {
            manifest.param("preset", name);
            preset(name, frame_rate)?
        }
        (None, None) => return Err(CliError::Usage("a model is required".into())),
    };
    manifest.params("model", &model_parameters(&m));
    Ok(m)
}

fn gray(value: f64, flag: &str) -> Result<GrayLevel, CliError> {
    GrayLevel::new(value).map_err(|_| CliError::Usage(format!("--{flag} {value} is outside [0, 1]")))
}

fn cmd_lcrc(source: &ModelSource, from: f64, to: f64, sample_rate: f64) -> Result<Output, CliError> {
    let mut manifest = RunManifest::new("lcrc");
    let model = load_model(source.model.as_deref(), source.preset.as_deref(), 60.0, &mut manifest)?;
    manifest.param("from", from).param("to", to).param("sample_rate", sample_rate);
    let curve = lcrc(&model, gray(from, "from")?, gray(to, "to")?, sample_rate)?;
    manifest.param("switch_time_s", curve.switch_time);
    let mut bytes = Vec::new();
    formats::write_waveform(&curve.trace, &mut bytes).expect("writing to memory");
    Ok(Output { bytes, summary: None, manifest })
}

fn cmd_mprt(
    source: &MprtSource,
    transitions: &str,
    velocity: u32,
    sample_rate: f64,
    frame_rate: f64,
    improved: bool,
    filter_window_ms: Option<f64>,
) -> Result<Output, CliError> {
    if velocity < 1 {
        return Err(CliError::Usage("--velocity must be at least 1".into()));
    }
    let mut manifest = RunManifest::new("mprt");
    manifest.param("velocity_ppf", velocity);
    if let Some(ms) = filter_window_ms {
        manifest.param("filter_window_ms", ms);
    }
    let mut bytes = Vec::new();

    if let Some(path) = &source.waveform {
        if improved {
            return Err(CliError::Usage("--improved needs a model; use --filter-window-ms".into()));
        }
        manifest.config_paths.push(path.display().to_string());
        manifest.param("frame_rate", frame_rate);
        let file = fs::File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let trace = formats::read_waveform(BufReader::new(file))
            .map_err(|source| CliError::Format { path: path.clone(), source })?;
        let trace = match filter_window_ms {
            Some(ms) => moving_average_filter(&trace, ms * 1e-3)?,
            None => trace,
        };
        let period = 1.0 / frame_rate;
        let (from, to) = settled_levels(&trace, period);
        let metrics = metrics_from_mprc(&mprc(&trace, period)?, velocity, period)?;
        formats::write_mprt_rows([(from, to, metrics)], &mut bytes).expect("writing to memory");
        let summary = Some(formats::mprt_summary(metrics.n_bet_s));
        return Ok(Output { bytes, summary, manifest });
    }

    let pairs = parse_transitions(transitions).map_err(CliError::Usage)?;
    manifest.param("transitions", transitions).param("sample_rate", sample_rate);
    let model = load_model(source.model.as_deref(), source.preset.as_deref(), 60.0, &mut manifest)?;
    let window = match (improved, filter_window_ms) {
        (true, _) => rig::matched_window(&model),
        (false, ms) => ms.map(|ms| ms * 1e-3),
    };
    if let Some(w) = window {
        manifest.param("filter_window_s", w);
    }
    let result = mprt_with_prefilter(&model, &pairs, velocity, sample_rate, window)?;
    formats::write_mprt(&result, &mut bytes).expect("writing to memory");
    Ok(Output { bytes, summary: Some(formats::mprt_summary(result.mprt_s)), manifest })
}

fn cmd_mbw_sweep(
    source: &ModelSource,
    rig_path: Option<&Path>,
    velocities: &str,
    improved: bool,
) -> Result<Output, CliError> {
    let mut manifest = RunManifest::new("mbw-sweep");
    let rig = match rig_path {
        Some(path) => {
            manifest.config_paths.push(path.display().to_string());
            config::parse_rig(&read_text(path)?).map_err(|source| CliError::Config { path: path.into(), source })?
        }
        None => RigConfig::default(),
    };
    manifest.params("rig", &rig_parameters(&rig));
    let model = load_model(source.model.as_deref(), source.preset.as_deref(), rig.frame_rate, &mut manifest)?;
    let vs = parse_velocities(velocities).map_err(CliError::Usage)?;
    manifest.param("velocities", velocities);
    let window = if improved { rig::matched_window(&model) } else { None };
    if let Some(w) = window {
        manifest.param("filter_window_s", w);
    }
    let name = source.preset.clone().unwrap_or_else(|| "model".into());
    let sweep = rig::sweep_with_prefilter(&rig, &model, &name, &vs, window)?;
    let mut bytes = Vec::new();
    formats::write_sweep(&sweep, &mut bytes).expect("writing to memory");
    let summary = sweep.fit.map(|f| format!("slope_b={}", f.slope_b));
    Ok(Output { bytes, summary, manifest })
}

fn cmd_compare(files: &[PathBuf], intersect: bool) -> Result<Output, CliError> {
    let mut manifest = RunManifest::new("compare");
    manifest.param("intersect", intersect);
    let mut methods = Vec::with_capacity(files.len());
    for path in files {
        manifest.config_paths.push(path.display().to_string());
        let file = fs::File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let scores = formats::read_scores(BufReader::new(file))
            .map_err(|source| CliError::Format { path: path.clone(), source })?;
        methods.push(scores);
    }
    let table = if intersect { compare_overlap(&methods)? } else { compare(&methods)? };
    let mut bytes = Vec::new();
    formats::write_comparison(&table, &mut bytes).expect("writing to memory");
    Ok(Output { bytes, summary: None, manifest })
}

fn cmd_ingest(
    path: &Path,
    filter_window_ms: Option<f64>,
    low: Option<f64>,
    high: Option<f64>,
) -> Result<Output, CliError> {
    let mut manifest = RunManifest::new("ingest");
    manifest.config_paths.push(path.display().to_string());
    let file = fs::File::open(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let trace = formats::read_waveform(BufReader::new(file))
        .map_err(|source| CliError::Format { path: path.into(), source })?;
    let trace = match filter_window_ms {
        Some(ms) => {
            manifest.param("filter_window_ms", ms);
            moving_average_filter(&trace, ms * 1e-3)?
        }
        None => trace,
    };
    let s = trace.samples();
    let low = low.unwrap_or_else(|| s.iter().copied().fold(f64::INFINITY, f64::min));
    let high = high.unwrap_or_else(|| s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    manifest.param("low", low).param("high", high);
    let normalized = normalize(&trace, low, high)?;
    let mut bytes = Vec::new();
    formats::write_waveform(&normalized, &mut bytes).expect("writing to memory");
    Ok(Output { bytes, summary: None, manifest })
}
