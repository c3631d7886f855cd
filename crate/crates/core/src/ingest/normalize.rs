use std::sync::OnceLock;

use regex::Regex;

use super::{CodeMarkdownPair, IngestError};

struct Patterns {
    removals: Vec<Regex>,
    whitespace: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let re = |p: &str| Regex::new(p).expect("static pattern");
        Patterns {
            removals: vec![
                // fenced code; an unterminated fence runs to the end
                re(r"(?s)```.*?(?:```|\z)"),
                re(r"(?s)~~~.*?(?:~~~|\z)"),
                // inline code
                re(r"``[^`]*``"),
                re(r"`[^`\n]*`"),
                // images, inline and reference style
                re(r"!\[[^\]]*\]\([^)]*\)"),
                re(r"!\[[^\]]*\]\[[^\]]*\]"),
                // display then inline math, dollar and backslash delimiters
                re(r"(?s)\$\$.*?\$\$"),
                re(r"\$[^$\n]+\$"),
                re(r"(?s)\\\[.*?\\\]"),
                re(r"(?s)\\\(.*?\\\)"),
                // markup
                re(r"(?s)<!--.*?-->"),
                re(r"</?[A-Za-z][^<>]*>"),
            ],
            whitespace: re(r"\s+"),
        }
    })
}

fn normalize_once(text: &str) -> String {
    let p = patterns();
    let mut out = text.to_string();
    for re in &p.removals {
        if re.is_match(&out) {
            out = re.replace_all(&out, "").into_owned();
        }
    }
    p.whitespace.replace_all(&out, " ").trim().to_string()
}

/// Strips code, images, math and markup from markdown, then collapses
/// whitespace. Repeats until stable, so the result is idempotent.
pub fn normalize_markdown(markdown_raw: &str) -> String {
    let mut current = normalize_once(markdown_raw);
    loop {
        let next = normalize_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Whitespace-separated tokens containing at least one letter or digit.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

/// Keep decision: `min_words <= words(markdown_normalized) <= max_words`.
pub fn length_filter(
    pair: &CodeMarkdownPair,
    min_words: usize,
    max_words: usize,
) -> Result<bool, IngestError> {
    if min_words > max_words {
        return Err(IngestError::InvalidBounds { min: min_words, max: max_words });
    }
    let n = word_count(&pair.markdown_normalized);
    Ok((min_words..=max_words).contains(&n))
}
