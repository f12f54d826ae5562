//! Command implementations behind the `mcoke` binary. Each command reads
//! its inputs, writes its outputs plus a `manifest.json` into the output
//! directory, and reports failures as [`Error`] (see [`Error::exit_code`]).

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytics;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::model::EngineConfig;
use crate::stream::{self, FrameReader, ValidationReport};
use crate::synth::{self, ScenarioConfig};
use crate::tracker::{self, Tracker};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const STREAM_FILE: &str = "stream.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

/// Values given on the command line; they win over the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfigOverrides {
    pub frame_duration: Option<f64>,
    pub mindist: Option<f64>,
    pub garment_weight: Option<f64>,
    pub customer_weight: Option<f64>,
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// ignored; keys are the [`EngineConfig`] field names.
pub fn parse_config(text: &str) -> Result<EngineConfig> {
    let mut cfg = EngineConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Config(format!("line {}: {m}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("{key}: not a number: {value:?}")))
        };
        match key {
            "garment_weight" => cfg.garment_weight = num()?,
            "customer_weight" => cfg.customer_weight = num()?,
            "mindist" => cfg.mindist = num()?,
            "frame_duration" => cfg.frame_duration = num()?,
            "wkm_tol" => cfg.wkm_tol = num()?,
            "wkm_max_iters" => {
                cfg.wkm_max_iters = value
                    .parse()
                    .map_err(|_| err(format!("{key}: not a positive integer: {value:?}")))?
            }
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<EngineConfig> {
    let mut cfg = match path {
        Some(p) => parse_config(&read_text(p)?)?,
        None => EngineConfig::default(),
    };
    if let Some(v) = overrides.frame_duration {
        cfg.frame_duration = v;
    }
    if let Some(v) = overrides.mindist {
        cfg.mindist = v;
    }
    if let Some(v) = overrides.garment_weight {
        cfg.garment_weight = v;
    }
    if let Some(v) = overrides.customer_weight {
        cfg.customer_weight = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes)
        .map_err(|_| Error::Validation(format!("{}: not valid UTF-8", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    fn new(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// Provenance written next to every output set. Timestamps are only
/// recorded on request so that reruns stay byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<InputRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<EngineConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

struct Run {
    started: Option<u128>,
}

impl Run {
    fn start(record_time: bool) -> Self {
        Self {
            started: record_time.then(now_ms),
        }
    }

    fn finish(self, dir: &Path, mut manifest: RunManifest) -> Result<()> {
        manifest.timestamps = self.started.map(|s| Timestamps {
            started_unix_ms: s,
            finished_unix_ms: now_ms(),
        });
        let mut json =
            serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Invariant(e.to_string()))?;
        json.push(b'\n');
        write_file(&dir.join(MANIFEST_FILE), &json)
    }
}

#[derive(Debug, Clone)]
pub struct TrackSummary {
    pub frames: usize,
    pub clusterings: usize,
    pub intervals: usize,
    pub output: PathBuf,
}

/// Replays an annotation stream through the tracker and writes the
/// interval log.
pub fn cmd_track(
    input: &Path,
    config: &EngineConfig,
    out: &Path,
    record_time: bool,
) -> Result<TrackSummary> {
    let run = Run::start(record_time);
    let bytes = read_bytes(input)?;
    let mut tracker = Tracker::new(*config)?.with_parallelism(Parallelism::Sequential);
    let mut frames = 0;
    for frame in FrameReader::new(BufReader::new(&bytes[..])) {
        tracker.process_frame(&frame?)?;
        frames += 1;
    }
    if frames == 0 {
        return Err(Error::NoFrames);
    }
    let clusterings = tracker.clusterings();
    let intervals = tracker.finalize();

    ensure_dir(out)?;
    let mut csv = Vec::new();
    tracker::write_intervals(&mut csv, &intervals, config.frame_duration)?;
    let output = out.join(INTERVALS_FILE);
    write_file(&output, &csv)?;
    run.finish(
        out,
        RunManifest {
            command: "track".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: vec![InputRecord::new(input, &bytes)],
            config: Some(*config),
            scenario: None,
            outputs: vec![INTERVALS_FILE.into()],
            timestamps: None,
        },
    )?;
    Ok(TrackSummary {
        frames,
        clusterings,
        intervals: intervals.len(),
        output,
    })
}

/// Builds the report bundle from an interval log and its source stream.
pub fn cmd_analyze(
    intervals_path: &Path,
    stream_path: &Path,
    config: &EngineConfig,
    out: &Path,
    record_time: bool,
) -> Result<Vec<String>> {
    let run = Run::start(record_time);
    let stream_bytes = read_bytes(stream_path)?;
    let log_bytes = read_bytes(intervals_path)?;
    let stream = stream::read_stream(BufReader::new(&stream_bytes[..]))?;
    let intervals = tracker::read_intervals(&log_bytes[..])?;
    let bundle = analytics::build_reports(&stream.frames, &intervals, config.frame_duration)?;

    ensure_dir(out)?;
    let written = bundle.write_files(out)?;
    run.finish(
        out,
        RunManifest {
            command: "analyze".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: vec![
                InputRecord::new(intervals_path, &log_bytes),
                InputRecord::new(stream_path, &stream_bytes),
            ],
            config: Some(*config),
            scenario: None,
            outputs: written.clone(),
            timestamps: None,
        },
    )?;
    Ok(written)
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioConfig, Vec<u8>)> {
    let bytes = read_bytes(path)?;
    let cfg: ScenarioConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, bytes))
}

/// Generates a synthetic stream and its ground-truth interval log.
pub fn cmd_synth(scenario_path: &Path, out: &Path, record_time: bool) -> Result<usize> {
    let run = Run::start(record_time);
    let (scenario, bytes) = load_scenario(scenario_path)?;
    let (stream, truth) = synth::generate(&scenario)?;

    ensure_dir(out)?;
    let mut buf = Vec::new();
    stream::write_stream(&mut buf, &stream)?;
    write_file(&out.join(STREAM_FILE), &buf)?;
    let mut csv = Vec::new();
    tracker::write_intervals(&mut csv, &truth.intervals, scenario.frame_duration)?;
    write_file(&out.join(GROUND_TRUTH_FILE), &csv)?;
    run.finish(
        out,
        RunManifest {
            command: "synth".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: vec![InputRecord::new(scenario_path, &bytes)],
            config: None,
            scenario: Some(scenario),
            outputs: vec![STREAM_FILE.into(), GROUND_TRUTH_FILE.into()],
            timestamps: None,
        },
    )?;
    Ok(stream.frames.len())
}

pub fn cmd_validate(input: &Path) -> Result<ValidationReport> {
    let bytes = read_bytes(input)?;
    stream::validate_stream(BufReader::new(&bytes[..]))
}

/// Renders a validation report as printed by `mcoke validate`.
pub fn format_validation(report: &ValidationReport, limit: usize) -> String {
    if report.is_ok() {
        return format!(
            "OK, {} frames, {} customers, {} garments",
            report.frames, report.customers, report.garments
        );
    }
    let mut out = format!("{} violation(s)", report.violations.len());
    for v in report.violations.iter().take(limit) {
        out.push_str(&format!("\nline {}: {}", v.line, v.message));
    }
    out
}
