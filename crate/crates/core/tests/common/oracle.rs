//! Deliberately naive reference scorers used as test oracles. Nothing here
//! shares code with the library.

#![allow(dead_code)]

/// All contiguous n-grams, in order, as owned vectors.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(tokens[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn occurrences(list: &[Vec<String>], gram: &[String]) -> usize {
    list.iter().filter(|g| g.as_slice() == gram).count()
}

/// Clipped matches: for each distinct candidate n-gram, min of the two counts.
pub fn clipped_matches(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cg = ngrams(cand, n);
    let rg = ngrams(reference, n);
    let mut seen: Vec<Vec<String>> = Vec::new();
    let mut matches = 0;
    for g in &cg {
        if seen.contains(g) {
            continue;
        }
        seen.push(g.clone());
        matches += occurrences(&cg, g).min(occurrences(&rg, g));
    }
    (matches, cg.len())
}

/// Sentence BLEU-k for k = 1..=max_n. Order 1 is never smoothed; orders
/// >= 2 with no match use (0 + 1) / (total + 1).
pub fn bleu(cand: &[String], reference: &[String], max_n: usize) -> Vec<f64> {
    let c = cand.len() as f64;
    let r = reference.len() as f64;
    let mut out = Vec::new();
    for k in 1..=max_n {
        if cand.is_empty() {
            out.push(0.0);
            continue;
        }
        let mut log_sum = 0.0;
        let mut zero = false;
        for n in 1..=k {
            let (m, total) = clipped_matches(cand, reference, n);
            let p = if m > 0 {
                m as f64 / total as f64
            } else if n == 1 {
                zero = true;
                0.0
            } else {
                1.0 / (total as f64 + 1.0)
            };
            if !zero {
                log_sum += p.ln();
            }
        }
        if zero {
            out.push(0.0);
            continue;
        }
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        out.push(bp * (log_sum / k as f64).exp());
    }
    out
}

fn prf(matches: f64, cand_units: f64, ref_units: f64) -> (f64, f64, f64) {
    let p = if cand_units > 0.0 { matches / cand_units } else { 0.0 };
    let r = if ref_units > 0.0 { matches / ref_units } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (f, p, r)
}

pub fn rouge_n(cand: &[String], reference: &[String], n: usize) -> (f64, f64, f64) {
    let (m, total) = clipped_matches(cand, reference, n);
    prf(m as f64, total as f64, ngrams(reference, n).len() as f64)
}

/// LCS by the textbook full table.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

pub fn rouge_l(cand: &[String], reference: &[String]) -> (f64, f64, f64) {
    prf(lcs(cand, reference) as f64, cand.len() as f64, reference.len() as f64)
}

/// Two-sided exact signed-rank p-value by enumerating every sign
/// assignment: the share of the 2^n assignments whose min(W+, W-) is at
/// most the observed one. Zero differences are dropped; tied magnitudes get
/// average ranks.
pub fn wilcoxon_enumerated(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let below = d.iter().filter(|o| o.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|o| o.abs() == d[i].abs()).count();
        ranks[i] = below as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let w_of = |positive: &dyn Fn(usize) -> bool| {
        let mut wp = 0.0;
        let mut wm = 0.0;
        for i in 0..n {
            if positive(i) {
                wp += ranks[i];
            } else {
                wm += ranks[i];
            }
        }
        if wp < wm { wp } else { wm }
    };
    let observed = w_of(&|i| d[i] > 0.0);
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        if w_of(&|i| mask >> i & 1 == 1) <= observed {
            hits += 1;
        }
    }
    (observed, hits as f64 / (1u64 << n) as f64)
}
