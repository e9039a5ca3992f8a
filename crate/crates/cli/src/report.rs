//! Files written by `forecast` and `compare`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use episodic_koopman::{
    median, median_relative_error, metrics::DEFAULT_REL_FLOOR, ErrorSummary, ForecastConfig, ForecastRecord,
    ForecastRun, Mode, Source, TimeSeries,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct PredictionRow {
    t: usize,
    target_t: usize,
    truth: f64,
    prediction: f64,
    source: Source,
    d_lambda: Option<f64>,
    d_v: Option<f64>,
    flags: String,
}

pub fn write_predictions(path: &Path, series: &TimeSeries, records: &[ForecastRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in records {
        w.serialize(PredictionRow {
            t: r.t,
            target_t: r.target_t,
            truth: series.get(r.target_t).unwrap_or(f64::NAN),
            prediction: r.prediction,
            source: r.source,
            d_lambda: r.matched.map(|m| m.d_lambda),
            d_v: r.matched.map(|m| m.d_v),
            flags: r.flags.label(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ComparisonRow {
    t: usize,
    target_t: usize,
    truth: f64,
    baseline: f64,
    candidate: f64,
    baseline_abs_error: f64,
    candidate_abs_error: f64,
    candidate_source: Source,
}

/// Per-step truth and both predictions, for plotting.
pub fn write_comparison(path: &Path, series: &TimeSeries, baseline: &[ForecastRecord], candidate: &[ForecastRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for (b, c) in baseline.iter().zip(candidate) {
        let truth = series.get(b.target_t).unwrap_or(f64::NAN);
        w.serialize(ComparisonRow {
            t: b.t,
            target_t: b.target_t,
            truth,
            baseline: b.prediction,
            candidate: c.prediction,
            baseline_abs_error: (truth - b.prediction).abs(),
            candidate_abs_error: (truth - c.prediction).abs(),
            candidate_source: c.source,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FlagCounts {
    pub overflow: usize,
    pub anchor_guard: usize,
    pub fallback: usize,
}

#[derive(Debug, Serialize)]
pub struct MatchStats {
    pub n_matched: usize,
    pub match_rate: f64,
    pub bank_size: usize,
    pub median_d_lambda: Option<f64>,
    pub median_d_v: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub manifest: &'static str,
    pub mode: Mode,
    pub n_records: usize,
    /// `None` when every target was too close to zero to score.
    pub error: Option<ErrorSummary>,
    pub flags: FlagCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches: Option<MatchStats>,
}

impl RunSummary {
    pub fn new(mode: Mode, series: &TimeSeries, run: &ForecastRun) -> Result<Self> {
        let records = &run.records;
        let error = match median_relative_error(series, records, DEFAULT_REL_FLOOR) {
            Ok(s) => Some(s),
            Err(episodic_koopman::Error::EmptyEvaluation) => None,
            Err(e) => return Err(e.into()),
        };
        let count = |f: fn(&ForecastRecord) -> bool| records.iter().filter(|r| f(r)).count();
        let flags = FlagCounts {
            overflow: count(|r| r.flags.overflow),
            anchor_guard: count(|r| r.flags.anchor_guard),
            fallback: count(|r| r.flags.fallback),
        };
        let matches = (mode == Mode::Memory).then(|| {
            let d_lambda: Vec<f64> = records.iter().filter_map(|r| r.matched.map(|m| m.d_lambda)).collect();
            let d_v: Vec<f64> = records.iter().filter_map(|r| r.matched.map(|m| m.d_v)).collect();
            MatchStats {
                n_matched: d_lambda.len(),
                match_rate: run.match_rate(),
                bank_size: run.bank.len(),
                median_d_lambda: median(&d_lambda),
                median_d_v: median(&d_v),
            }
        });
        Ok(Self {
            manifest: MANIFEST,
            mode,
            n_records: records.len(),
            error,
            flags,
            matches,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub column: String,
    pub rows: usize,
    /// Number of leading rows dropped because they were missing.
    pub start_index: usize,
}

impl InputInfo {
    pub fn new(path: &Path, column: &str, series: &TimeSeries) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            column: column.to_string(),
            rows: series.len(),
            start_index: series.start_index(),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: &'a ForecastConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_mode: Option<Mode>,
    pub input: InputInfo,
    pub outputs: Vec<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
