//! Line, comment and identifier metrics.

use std::collections::HashSet;

use super::lexer::{self, TokenStream};
use super::MetricsError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineMetrics {
    pub loc: u32,
    pub blc: u32,
    pub locom: u32,
    pub cw: u32,
    pub allc: f64,
    pub identifiers: u32,
    pub alid: f64,
    pub klcid: f64,
}

pub fn line_metrics(source: &str, tokens: &TokenStream) -> LineMetrics {
    let lines: Vec<&str> = source.lines().collect();
    let loc = lines.len() as u32;
    let blc = lines.iter().filter(|l| l.trim().is_empty()).count() as u32;

    let locom = tokens
        .comments
        .iter()
        .filter(|c| {
            lines
                .get(c.line - 1)
                .is_some_and(|l| l.chars().take(c.col).all(char::is_whitespace))
        })
        .count() as u32;
    let cw = tokens
        .comments
        .iter()
        .map(|c| c.text.trim_start_matches('#').split_whitespace().count() as u32)
        .sum();

    let total_chars: usize = lines.iter().map(|l| l.chars().count()).sum();
    let allc = if loc == 0 { 0.0 } else { total_chars as f64 / loc as f64 };

    let (identifiers, id_chars) = tokens
        .identifiers()
        .fold((0u32, 0usize), |(n, c), t| (n + 1, c + t.text.chars().count()));
    let alid = if identifiers == 0 { 0.0 } else { id_chars as f64 / identifiers as f64 };

    LineMetrics {
        loc,
        blc,
        locom,
        cw,
        allc,
        identifiers,
        alid,
        klcid: klcid_from_tokens(&lines, tokens),
    }
}

/// Identifier density over distinct identifier-bearing lines.
///
/// Lines are deduplicated on their whitespace-trimmed text (first occurrence
/// wins); lines without identifiers are ignored.
pub fn klcid(source: &str) -> Result<f64, MetricsError> {
    let tokens = lexer::tokenize(source).map_err(super::ParseError::from)?;
    let lines: Vec<&str> = source.lines().collect();
    Ok(klcid_from_tokens(&lines, &tokens))
}

fn klcid_from_tokens(lines: &[&str], tokens: &TokenStream) -> f64 {
    let mut per_line = vec![0u32; lines.len() + 1];
    for t in tokens.identifiers() {
        if let Some(slot) = per_line.get_mut(t.line - 1) {
            *slot += 1;
        }
    }
    let mut seen = HashSet::new();
    let (mut kinds, mut occurrences) = (0u32, 0u32);
    for (i, line) in lines.iter().enumerate() {
        if !seen.insert(line.trim()) {
            continue;
        }
        if per_line[i] > 0 {
            kinds += 1;
            occurrences += per_line[i];
        }
    }
    if kinds == 0 {
        0.0
    } else {
        occurrences as f64 / kinds as f64
    }
}
