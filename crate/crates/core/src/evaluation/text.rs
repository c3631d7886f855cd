//! BLEU and ROUGE over evaluation tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Lowercases, splits on whitespace and detaches every character that is
/// neither alphanumeric nor `_` as its own token.
pub fn tokenize_for_eval(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut cur = String::new();
        for c in word.chars() {
            if c.is_alphanumeric() || c == '_' {
                cur.extend(c.to_lowercase());
            } else {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_lowercase().collect());
            }
        }
        if !cur.is_empty() {
            tokens.push(cur);
        }
    }
    tokens
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate's total n-gram count.
fn overlap<T: AsRef<str>>(cand: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let matches = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
    (matches, cand.len().saturating_sub(n - 1))
}

pub const MAX_BLEU_ORDER: usize = 4;

/// Sentence-level BLEU-1..=`max_n`.
///
/// Orders of two and above with no matching n-gram are smoothed to
/// `1 / (total + 1)`; a zero unigram precision makes every order 0. The
/// brevity penalty is `exp(1 - r/c)` when the candidate is not longer than
/// the reference. An empty candidate scores 0.
pub fn bleu<T: AsRef<str>>(cand: &[T], reference: &[T], max_n: usize) -> Vec<f64> {
    assert!((1..=MAX_BLEU_ORDER).contains(&max_n), "max_n must be in 1..=4");
    if cand.is_empty() {
        return vec![0.0; max_n];
    }
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    let mut out = Vec::with_capacity(max_n);
    let mut log_sum = 0.0;
    let mut dead = false;
    for n in 1..=max_n {
        let (m, total) = overlap(cand, reference, n);
        if m == 0 && n == 1 {
            dead = true;
        }
        let p = if m > 0 { m as f64 / total as f64 } else { 1.0 / (total as f64 + 1.0) };
        log_sum += p.ln();
        out.push(if dead { 0.0 } else { bp * (log_sum / n as f64).exp() });
    }
    out
}

/// F1, precision and recall.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Prf {
    fn from_counts(matches: usize, cand_units: usize, ref_units: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matches, cand_units);
        let recall = ratio(matches, ref_units);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { f1, precision, recall }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

fn lcs_len<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge<T: AsRef<str>>(cand: &[T], reference: &[T], variant: RougeVariant) -> Prf {
    match variant {
        RougeVariant::L => Prf::from_counts(lcs_len(cand, reference), cand.len(), reference.len()),
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let (m, total) = overlap(cand, reference, n);
            Prf::from_counts(m, total, reference.len().saturating_sub(n - 1))
        }
    }
}
