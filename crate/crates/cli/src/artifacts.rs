//! Artifact files. Each one opens with a header giving the tool version,
//! config hash and seed: a `{"header": ...}` first line for JSONL, a
//! `header` field for JSON, and a `#` comment line for text and CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nbdoc_core::metrics::{format_metric, MetricVector, METRIC_COLUMNS, METRIC_COUNT};
use nbdoc_core::ingest::PairId;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PAIRS: &str = "pairs.jsonl";
pub const CURATED: &str = "curated.jsonl";
pub const CURATION_REPORT_TXT: &str = "curation_report.txt";
pub const CURATION_REPORT_JSON: &str = "curation_report.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const POPULARITY: &str = "popularity.json";
pub const SPLITS: &str = "splits.json";
pub const INDEX: &str = "index.bin";
pub const PROMPTS: &str = "prompts.jsonl";
pub const GENERATIONS: &str = "generations.jsonl";
pub const EVAL_REPORT: &str = "eval_report.jsonl";
pub const EVAL_SUMMARY: &str = "eval_summary.txt";
pub const JUDGE_SCORES: &str = "judge_scores.jsonl";
pub const DEMO: &str = "demo.txt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactHeader {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Self { tool_version: TOOL_VERSION.to_string(), config_hash: config_hash.to_string(), seed }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# nbdoc tool_version={} config_hash={} seed={}\n",
            self.tool_version, self.config_hash, self.seed
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io { path: path.to_path_buf(), source }
}

/// Writes through a temporary file so readers never see half an artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_jsonl<T: Serialize>(path: &Path, header: &ArtifactHeader, rows: &[T]) -> Result<(), ArtifactError> {
    let mut out = serde_json::to_string(&serde_json::json!({ "header": header })).expect("header");
    out.push('\n');
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a JSONL artifact; the header line is returned separately.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(ArtifactHeader, Vec<T>), ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fmt = |line: usize, msg: String| ArtifactError::Format { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| fmt(1, "empty file".into()))?;
    let v: Value = serde_json::from_str(first).map_err(|e| fmt(1, e.to_string()))?;
    let header: ArtifactHeader =
        serde_json::from_value(v["header"].clone()).map_err(|e| fmt(1, format!("header: {e}")))?;
    let mut rows = Vec::new();
    for (i, l) in lines {
        rows.push(serde_json::from_str(l).map_err(|e| fmt(i + 1, e.to_string()))?);
    }
    Ok((header, rows))
}

/// `{"header": ..., key: value}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, header: &ArtifactHeader, key: &str, value: &T) -> Result<(), ArtifactError> {
    let mut map = serde_json::Map::new();
    map.insert("header".into(), serde_json::to_value(header).expect("header"));
    map.insert(key.into(), serde_json::to_value(value).expect("value serializes"));
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fmt = |msg: String| ArtifactError::Format { path: path.to_path_buf(), line: 1, msg };
    let v: Value = serde_json::from_str(&text).map_err(|e| fmt(e.to_string()))?;
    serde_json::from_value(v[key].clone()).map_err(|e| fmt(format!("{key}: {e}")))
}

pub fn write_text(path: &Path, header: &ArtifactHeader, body: &str) -> Result<(), ArtifactError> {
    let mut s = header.comment_line();
    s.push_str(body);
    write_atomic(path, s.as_bytes())
}

pub fn write_metrics_csv(
    path: &Path,
    header: &ArtifactHeader,
    rows: &[(PairId, MetricVector)],
) -> Result<(), ArtifactError> {
    let mut s = header.comment_line();
    s.push_str("pair_id,");
    s.push_str(&METRIC_COLUMNS.join(","));
    s.push('\n');
    for (id, m) in rows {
        s.push_str(&id.to_string());
        for (col, v) in m.to_array().iter().enumerate() {
            s.push(',');
            s.push_str(&format_metric(col, *v));
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<(PairId, MetricVector)>, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fmt = |line: usize, msg: String| ArtifactError::Format { path: path.to_path_buf(), line, msg };
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !seen_columns {
            if fields.first() != Some(&"pair_id") || fields[1..] != METRIC_COLUMNS {
                return Err(fmt(i + 1, "unexpected column header".into()));
            }
            seen_columns = true;
            continue;
        }
        if fields.len() != METRIC_COUNT + 1 {
            return Err(fmt(i + 1, format!("{} fields, expected {}", fields.len(), METRIC_COUNT + 1)));
        }
        let id: PairId = fields[0].parse().map_err(|e| fmt(i + 1, format!("pair_id: {e}")))?;
        let mut a = [0.0; METRIC_COUNT];
        for (k, f) in fields[1..].iter().enumerate() {
            a[k] = f.parse().map_err(|e| fmt(i + 1, format!("{}: {e}", METRIC_COLUMNS[k])))?;
        }
        rows.push((id, MetricVector::from_array(&a)));
    }
    Ok(rows)
}
