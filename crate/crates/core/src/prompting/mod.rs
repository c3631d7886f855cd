//! Prompt rendering and completion.
//!
//! Instruction wording lives in versioned template files (`templates/`)
//! compiled into the crate. A template has three sections, `[instruction]`,
//! `[example]` and `[query]`; `{code}`, `{markdown}` and `{metrics}` are
//! substituted in a single pass, so inserted text is never re-expanded.

pub mod client;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metrics::{MetricVector, MetricsError};

pub use client::{
    complete, ChatClient, Completer, EchoCompleter, LlmConfig, LlmError, ResponseCache,
};

const NO_METRIC_V1: &str = include_str!("../../templates/no_metric.v1.txt");
const WITH_METRIC_V1: &str = include_str!("../../templates/with_metric.v1.txt");

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("metrics unavailable for with_metric prompt: {0}")]
    MetricsUnavailable(#[from] MetricsError),
    #[error("template {0}: {1}")]
    BadTemplate(&'static str, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    NoMetric,
    WithMetric,
}

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::NoMetric => "no_metric",
            TemplateId::WithMetric => "with_metric",
        }
    }

    /// Versioned file name of the template text.
    pub fn file_name(self) -> &'static str {
        match self {
            TemplateId::NoMetric => "no_metric.v1.txt",
            TemplateId::WithMetric => "with_metric.v1.txt",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            TemplateId::NoMetric => NO_METRIC_V1,
            TemplateId::WithMetric => WITH_METRIC_V1,
        }
    }
}

/// An exemplar as returned by the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub code: String,
    pub metrics: Option<MetricVector>,
    pub markdown: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub template_id: TemplateId,
    pub query_code: String,
    pub query_metrics: Option<MetricVector>,
    pub shots: Vec<Shot>,
    pub rendered: String,
}

impl PromptSpec {
    /// Hex SHA-256 of the rendered text.
    pub fn hash(&self) -> String {
        prompt_hash(&self.rendered)
    }
}

pub fn prompt_hash(rendered: &str) -> String {
    hex::encode(Sha256::digest(rendered.as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Code,
    Markdown,
    Metrics,
}

#[derive(Debug, Clone)]
struct Template {
    instruction: String,
    example: Vec<Piece>,
    query: Vec<Piece>,
}

fn compile_section(name: &'static str, body: &str) -> Result<Vec<Piece>, PromptError> {
    let mut pieces = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find('{') {
        let end = rest[start..]
            .find('}')
            .map(|e| start + e)
            .ok_or_else(|| PromptError::BadTemplate(name, "unclosed placeholder".into()))?;
        if start > 0 {
            pieces.push(Piece::Text(rest[..start].to_string()));
        }
        let slot = match &rest[start + 1..end] {
            "code" => Slot::Code,
            "markdown" => Slot::Markdown,
            "metrics" => Slot::Metrics,
            other => return Err(PromptError::BadTemplate(name, format!("unknown placeholder {{{other}}}"))),
        };
        pieces.push(Piece::Slot(slot));
        rest = &rest[end + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.to_string()));
    }
    Ok(pieces)
}

fn compile(id: TemplateId) -> Result<Template, PromptError> {
    let name = id.name();
    let mut sections: Vec<(&str, String)> = Vec::new();
    for line in id.source().lines() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') && t.len() > 2 {
            sections.push((&t[1..t.len() - 1], String::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !t.is_empty() {
            return Err(PromptError::BadTemplate(name, "text before first section".into()));
        }
    }
    let get = |key: &str| -> Result<String, PromptError> {
        sections
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, b)| b.trim_end().to_string())
            .ok_or_else(|| PromptError::BadTemplate(name, format!("missing [{key}] section")))
    };
    Ok(Template {
        instruction: get("instruction")?,
        example: compile_section(name, &get("example")?)?,
        query: compile_section(name, &get("query")?)?,
    })
}

/// `ABBR: value` lines in table order.
pub fn metric_lines(m: &MetricVector) -> String {
    m.formatted().iter().map(|(abbr, v)| format!("{abbr}: {v}")).collect::<Vec<_>>().join("\n")
}

fn fill(pieces: &[Piece], code: &str, markdown: &str, metrics: Option<&MetricVector>) -> String {
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(Slot::Code) => out.push_str(code.trim_end()),
            Piece::Slot(Slot::Markdown) => out.push_str(markdown.trim()),
            Piece::Slot(Slot::Metrics) => {
                if let Some(m) = metrics {
                    out.push_str(&metric_lines(m));
                }
            }
        }
    }
    out
}

/// Renders a prompt: instruction first, one example block per shot in the
/// given order, then the query. For `with_metric`, `metrics_fn` supplies the
/// metric vector of every code block that does not already carry one.
pub fn render_prompt(
    query_code: &str,
    shots: &[Shot],
    template_id: TemplateId,
    metrics_fn: &dyn Fn(&str) -> Result<MetricVector, MetricsError>,
) -> Result<PromptSpec, PromptError> {
    let template = compile(template_id)?;
    let with_metrics = template_id == TemplateId::WithMetric;

    let mut shots = shots.to_vec();
    let mut query_metrics = None;
    if with_metrics {
        for s in &mut shots {
            if s.metrics.is_none() {
                s.metrics = Some(metrics_fn(&s.code)?);
            }
        }
        query_metrics = Some(metrics_fn(query_code)?);
    } else {
        shots.iter_mut().for_each(|s| s.metrics = None);
    }

    let mut blocks = vec![template.instruction.clone()];
    for s in &shots {
        blocks.push(fill(&template.example, &s.code, &s.markdown, s.metrics.as_ref()));
    }
    blocks.push(fill(&template.query, query_code, "", query_metrics.as_ref()));
    let mut rendered = blocks.join("\n\n");
    rendered.push('\n');

    Ok(PromptSpec {
        template_id,
        query_code: query_code.to_string(),
        query_metrics,
        shots,
        rendered,
    })
}

/// Standalone tokens of `text` that are metric abbreviations.
pub fn abbreviation_tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| crate::metrics::METRIC_ABBREVIATIONS.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CellMeta;
    use crate::metrics::{extract_metrics, PopularityTable};

    fn metrics(code: &str) -> Result<MetricVector, MetricsError> {
        extract_metrics(code, &PopularityTable::default(), &CellMeta::default())
    }

    fn shot(i: usize) -> Shot {
        Shot { code: format!("x{i} = load({i})"), metrics: None, markdown: format!("Load table {i}.") }
    }

    #[test]
    fn templates_compile() {
        for id in [TemplateId::NoMetric, TemplateId::WithMetric] {
            compile(id).unwrap();
        }
    }

    #[test]
    fn zero_shot_no_metric_is_instruction_plus_query() {
        let p = render_prompt("y = 2", &[], TemplateId::NoMetric, &metrics).unwrap();
        assert!(!p.rendered.contains("[example]"));
        assert_eq!(p.rendered.matches("Code:").count(), 1);
        assert!(p.rendered.starts_with("You write markdown documentation"));
        assert!(p.rendered.ends_with("Markdown:\n"));
        assert!(p.rendered.contains("Write the markdown documentation"));
    }

    #[test]
    fn one_shot_with_metric_has_21_lines_per_block() {
        let p = render_prompt("y = 2", &[shot(1)], TemplateId::WithMetric, &metrics).unwrap();
        assert_eq!(p.rendered.matches("Metrics:\n").count(), 2);
        assert_eq!(p.rendered.matches("\nLOC: ").count(), 2);
        assert_eq!(p.rendered.matches("\nEC: ").count(), 2);
        let lines = p.rendered.lines().filter(|l| {
            l.split_once(": ").is_some_and(|(k, _)| crate::metrics::METRIC_ABBREVIATIONS.contains(&k))
        });
        assert_eq!(lines.count(), 42);
    }

    #[test]
    fn deterministic_and_order_sensitive() {
        let shots = [shot(1), shot(2)];
        let a = render_prompt("q()", &shots, TemplateId::NoMetric, &metrics).unwrap();
        let b = render_prompt("q()", &shots, TemplateId::NoMetric, &metrics).unwrap();
        assert_eq!(a.rendered, b.rendered);
        let swapped = render_prompt("q()", &[shot(2), shot(1)], TemplateId::NoMetric, &metrics).unwrap();
        assert_ne!(a.rendered, swapped.rendered);
        assert_ne!(a.hash(), swapped.hash());
    }

    #[test]
    fn no_metric_has_no_abbreviations() {
        let p = render_prompt("y = 2", &[shot(1)], TemplateId::NoMetric, &metrics).unwrap();
        assert!(abbreviation_tokens(&p.rendered).is_empty(), "{:?}", abbreviation_tokens(&p.rendered));
        assert!(p.shots.iter().all(|s| s.metrics.is_none()));
    }

    #[test]
    fn unparsable_code_fails_with_metric() {
        let r = render_prompt("def (:", &[], TemplateId::WithMetric, &metrics);
        assert!(matches!(r, Err(PromptError::MetricsUnavailable(_))));
        assert!(render_prompt("def (:", &[], TemplateId::NoMetric, &metrics).is_ok());
    }

    #[test]
    fn placeholders_in_code_are_not_expanded() {
        let p = render_prompt("s = '{markdown}'", &[], TemplateId::NoMetric, &metrics).unwrap();
        assert!(p.rendered.contains("s = '{markdown}'"));
    }
}
