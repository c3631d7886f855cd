//! Synthetic retrieval corpus and a brute-force ranker over it.

#![allow(dead_code)]

use nbdoc_core::curation::{EmbeddingProvider, StubEmbeddingProvider};
use nbdoc_core::metrics::{METRIC_COUNT, REAL_COLUMNS};
use nbdoc_core::retrieval::{MetricRow, SamplerKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["df", "plot", "mean", "groupby", "read_csv", "fit", "model", "x", "hist", "sum"];

pub fn random_row(rng: &mut ChaCha8Rng) -> MetricRow {
    let mut r = [0.0; METRIC_COUNT];
    for (j, v) in r.iter_mut().enumerate() {
        *v = if j == 5 {
            2.0 // constant column
        } else if j == METRIC_COUNT - 1 {
            rng.random_range(0..2) as f64 // executed flag
        } else if REAL_COLUMNS.contains(&j) {
            rng.random_range(0.0..10.0)
        } else {
            rng.random_range(0..6) as f64
        };
    }
    r
}

pub fn random_code(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..5);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" = ")
}

pub struct Corpus {
    pub ids: Vec<u64>,
    pub rows: Vec<MetricRow>,
    pub codes: Vec<String>,
    pub normalized: Vec<Vec<f64>>,
    pub embedded: Vec<Vec<f64>>,
}

pub fn corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut c = Corpus {
        ids: Vec::new(),
        rows: Vec::new(),
        codes: Vec::new(),
        normalized: Vec::new(),
        embedded: Vec::new(),
    };
    for i in 0..1000u64 {
        // ids out of order, and every tenth row copies an earlier one to force ties
        c.ids.push((i * 7919) % 1000 + 1);
        if i % 10 == 9 {
            let k = rng.random_range(0..c.rows.len());
            c.rows.push(c.rows[k]);
            c.codes.push(c.codes[k].clone());
        } else {
            c.rows.push(random_row(&mut rng));
            c.codes.push(random_code(&mut rng));
        }
    }
    c.normalized = c.rows.iter().map(|r| naive_norm(r, &c.rows)).collect();
    let stub = StubEmbeddingProvider::default();
    c.embedded = c.codes.iter().map(|code| stub.embed(&[code.as_str()]).unwrap().remove(0)).collect();
    c
}

pub fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if aa == 0.0 || bb == 0.0 { 0.0 } else { ab / (aa.sqrt() * bb.sqrt()) }
}

pub fn naive_norm(row: &MetricRow, rows: &[MetricRow]) -> Vec<f64> {
    (0..METRIC_COUNT)
        .map(|j| {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            if hi == lo { 0.0 } else { ((row[j] - lo) / (hi - lo)).clamp(0.0, 1.0) }
        })
        .collect()
}

/// Brute-force scores for every corpus entry, then argsort.
pub fn brute_force(c: &Corpus, q_row: &MetricRow, q_code: &str, kind: SamplerKind, alpha: f64, exclude: Option<u64>) -> Vec<(u64, f64)> {
    let stub = StubEmbeddingProvider::default();
    let qe = stub.embed(&[q_code]).unwrap().remove(0);
    let qn = naive_norm(q_row, &c.rows);
    let mut scored: Vec<(u64, f64)> = Vec::new();
    for i in 0..c.ids.len() {
        if Some(c.ids[i]) == exclude {
            continue;
        }
        let cm = naive_cos(&qn, &c.normalized[i]);
        let em = naive_cos(&qe, &c.embedded[i]);
        let s = match kind {
            SamplerKind::CmIr => cm,
            SamplerKind::EmbeddingIr => em,
            _ => alpha * em + (1.0 - alpha) * cm,
        };
        scored.push((c.ids[i], s));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

