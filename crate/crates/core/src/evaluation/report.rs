//! Per-record scores and run-level aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::text::{bleu, rouge, tokenize_for_eval, Prf, RougeVariant};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::ingest::PairId;
use crate::par::Execution;

/// One generated documentation and its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub pair_id: PairId,
    pub run_id: String,
    pub sampler: String,
    pub template_id: String,
    pub prompt_hash: String,
    pub generated: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub pair_id: PairId,
    pub run_id: String,
    pub bleu: [f64; 4],
    pub rouge1: Prf,
    pub rouge2: Prf,
    pub rouge_l: Prf,
}

pub const SCORE_NAMES: [&str; 13] = [
    "bleu1", "bleu2", "bleu3", "bleu4", "rouge1_f1", "rouge1_p", "rouge1_r", "rouge2_f1", "rouge2_p",
    "rouge2_r", "rougeL_f1", "rougeL_p", "rougeL_r",
];

impl ScoredRecord {
    pub fn values(&self) -> [f64; 13] {
        let b = self.bleu;
        let (r1, r2, rl) = (self.rouge1, self.rouge2, self.rouge_l);
        [
            b[0], b[1], b[2], b[3], r1.f1, r1.precision, r1.recall, r2.f1, r2.precision, r2.recall, rl.f1,
            rl.precision, rl.recall,
        ]
    }
}

pub fn score_record(record: &GenerationRecord) -> ScoredRecord {
    let cand = tokenize_for_eval(&record.generated);
    let reference = tokenize_for_eval(&record.reference);
    let b = bleu(&cand, &reference, 4);
    ScoredRecord {
        pair_id: record.pair_id,
        run_id: record.run_id.clone(),
        bleu: [b[0], b[1], b[2], b[3]],
        rouge1: rouge(&cand, &reference, RougeVariant::One),
        rouge2: rouge(&cand, &reference, RougeVariant::Two),
        rouge_l: rouge(&cand, &reference, RougeVariant::L),
    }
}

pub fn score_records(records: &[GenerationRecord], exec: Execution) -> Vec<ScoredRecord> {
    exec.map(records, score_record)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("run has no records")]
    EmptyRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Significance {
    Tested(WilcoxonResult),
    NoTest { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub baseline_mean: Option<f64>,
    pub baseline_std: Option<f64>,
    pub significance: Option<Significance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<ScoredRecord>,
    pub summary: Vec<MetricSummary>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates a run; with a baseline, each metric also gets a paired
/// Wilcoxon test over the pair ids both runs share.
pub fn aggregate_report(
    records: &[ScoredRecord],
    baseline: Option<&[ScoredRecord]>,
    alpha: f64,
) -> Result<EvalReport, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyRun);
    }
    if baseline.is_some_and(<[ScoredRecord]>::is_empty) {
        return Err(ReportError::EmptyRun);
    }
    let rows: Vec<[f64; 13]> = records.iter().map(ScoredRecord::values).collect();
    let base_rows: Option<Vec<[f64; 13]>> = baseline.map(|b| b.iter().map(ScoredRecord::values).collect());
    let paired: Vec<([f64; 13], [f64; 13])> = match baseline {
        None => Vec::new(),
        Some(b) => {
            let by_id: BTreeMap<PairId, [f64; 13]> = b.iter().map(|r| (r.pair_id, r.values())).collect();
            let mut ours: Vec<&ScoredRecord> = records.iter().collect();
            ours.sort_by_key(|r| r.pair_id);
            ours.iter().filter_map(|r| by_id.get(&r.pair_id).map(|bv| (r.values(), *bv))).collect()
        }
    };
    let summary = SCORE_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (mean, std) = mean_std(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
            let (baseline_mean, baseline_std, significance) = match &base_rows {
                None => (None, None, None),
                Some(b) => {
                    let (bm, bs) = mean_std(&b.iter().map(|r| r[k]).collect::<Vec<_>>());
                    let x: Vec<f64> = paired.iter().map(|p| p.0[k]).collect();
                    let y: Vec<f64> = paired.iter().map(|p| p.1[k]).collect();
                    let sig = match wilcoxon_signed_rank(&x, &y, alpha) {
                        Ok(r) => Significance::Tested(r),
                        Err(e) => Significance::NoTest { reason: e.to_string() },
                    };
                    (Some(bm), Some(bs), Some(sig))
                }
            };
            MetricSummary { metric: name.to_string(), mean, std, baseline_mean, baseline_std, significance }
        })
        .collect();
    Ok(EvalReport { records: records.to_vec(), summary })
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|m| m.metric == name)
    }

    /// Plain-text table: avg and std per metric, baseline alongside when present.
    pub fn summary_text(&self) -> String {
        let with_base = self.summary.iter().any(|m| m.baseline_mean.is_some());
        let mut out = String::new();
        if with_base {
            out.push_str(&format!(
                "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
                "metric", "base avg", "base std", "avg", "std", "p"
            ));
        } else {
            out.push_str(&format!("{:<10} {:>9} {:>9}\n", "metric", "avg", "std"));
        }
        for m in &self.summary {
            if with_base {
                let p = match &m.significance {
                    Some(Significance::Tested(r)) => format!("{:.4}", r.p_value),
                    _ => "no test".to_string(),
                };
                out.push_str(&format!(
                    "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
                    m.metric,
                    m.baseline_mean.unwrap_or(f64::NAN),
                    m.baseline_std.unwrap_or(f64::NAN),
                    m.mean,
                    m.std,
                    p
                ));
            } else {
                out.push_str(&format!("{:<10} {:>9.4} {:>9.4}\n", m.metric, m.mean, m.std));
            }
        }
        out.push_str(&format!("records: {}\n", self.records.len()));
        out
    }
}
