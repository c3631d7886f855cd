//! LLM-as-a-judge ratings, one request per candidate.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::text::{rouge, tokenize_for_eval, RougeVariant};
use crate::prompting::{ChatClient, LlmError};

const JUDGE_V1: &str = include_str!("../../templates/judge.v1.txt");
const REASK: &str = "\n\nYour previous reply could not be parsed. Reply with the JSON object only, each value an integer from 1 to 5.";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("judge temperature must be 0, got {0}")]
    NonZeroTemperature(f64),
    #[error("judge output for candidate {candidate:?} could not be parsed: {output:?}")]
    UnparseableJudgeOutput { candidate: String, output: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub content_accuracy: u8,
    pub fluency_conciseness: u8,
    pub comprehension_support: u8,
    pub overall: f64,
}

impl JudgeScore {
    pub fn new(content_accuracy: u8, fluency_conciseness: u8, comprehension_support: u8) -> Self {
        let sum = f64::from(content_accuracy) + f64::from(fluency_conciseness) + f64::from(comprehension_support);
        Self { content_accuracy, fluency_conciseness, comprehension_support, overall: sum / 3.0 }
    }
}

/// One rating request.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgeRequest<'a> {
    pub code: &'a str,
    pub reference: &'a str,
    pub candidate: &'a str,
    pub prompt: String,
    /// 0 for the first ask, 1 for the re-ask.
    pub attempt: u32,
}

pub trait JudgeBackend: Send + Sync {
    fn rate(&self, request: &JudgeRequest<'_>) -> Result<String, LlmError>;
    fn temperature(&self) -> f64;
}

impl JudgeBackend for ChatClient {
    fn rate(&self, request: &JudgeRequest<'_>) -> Result<String, LlmError> {
        self.chat(&request.prompt)
    }

    fn temperature(&self) -> f64 {
        self.config().temperature
    }
}

/// Offline judge: every dimension is `1 + round(4 * ROUGE-1 F1)` of the
/// candidate against the reference.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockJudge;

impl JudgeBackend for MockJudge {
    fn rate(&self, request: &JudgeRequest<'_>) -> Result<String, LlmError> {
        let f1 = rouge(
            &tokenize_for_eval(request.candidate),
            &tokenize_for_eval(request.reference),
            RougeVariant::One,
        )
        .f1;
        let s = 1 + (4.0 * f1).round() as u8;
        Ok(format!(
            r#"{{"content_accuracy": {s}, "fluency_conciseness": {s}, "comprehension_support": {s}}}"#
        ))
    }

    fn temperature(&self) -> f64 {
        0.0
    }
}

fn fill(template: &str, code: &str, reference: &str, candidate: &str) -> String {
    let mut out = String::with_capacity(template.len() + code.len() + reference.len() + candidate.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let tail = &rest[start..];
        let (value, skip) = if tail.starts_with("{code}") {
            (Some(code.trim_end()), 6)
        } else if tail.starts_with("{reference}") {
            (Some(reference.trim()), 11)
        } else if tail.starts_with("{candidate}") {
            (Some(candidate.trim()), 11)
        } else {
            (None, 1)
        };
        out.push_str(&rest[..start]);
        out.push_str(value.unwrap_or("{"));
        rest = &rest[start + skip..];
    }
    out.push_str(rest);
    out
}

pub fn judge_prompt(code: &str, reference: &str, candidate: &str) -> String {
    fill(JUDGE_V1, code, reference, candidate)
}

/// Parses the first JSON object in `output`; each dimension must be 1..=5.
pub fn parse_judge_output(output: &str) -> Option<JudgeScore> {
    let start = output.find('{')?;
    let end = output.rfind('}')?;
    let v: Value = serde_json::from_str(output.get(start..=end)?).ok()?;
    let dim = |k: &str| -> Option<u8> {
        let x = v.get(k)?.as_u64()?;
        (1..=5).contains(&x).then_some(x as u8)
    };
    Some(JudgeScore::new(
        dim("content_accuracy")?,
        dim("fluency_conciseness")?,
        dim("comprehension_support")?,
    ))
}

/// Rates every named candidate independently.
pub fn judge(
    code: &str,
    reference: &str,
    candidates: &[(String, String)],
    backend: &dyn JudgeBackend,
) -> Result<Vec<(String, JudgeScore)>, JudgeError> {
    if backend.temperature() != 0.0 {
        return Err(JudgeError::NonZeroTemperature(backend.temperature()));
    }
    let mut out = Vec::with_capacity(candidates.len());
    for (name, text) in candidates {
        let base = judge_prompt(code, reference, text);
        let mut last = String::new();
        let mut score = None;
        for attempt in 0..2 {
            let prompt = if attempt == 0 { base.clone() } else { format!("{base}{REASK}") };
            let req = JudgeRequest { code, reference, candidate: text, prompt, attempt };
            last = backend.rate(&req)?;
            score = parse_judge_output(&last);
            if score.is_some() {
                break;
            }
        }
        let score = score.ok_or_else(|| JudgeError::UnparseableJudgeOutput {
            candidate: name.clone(),
            output: last,
        })?;
        out.push((name.clone(), score));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<String>>,
        calls: Mutex<u32>,
    }

    impl Canned {
        fn new(replies: &[&str]) -> Self {
            Self { replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()), calls: Mutex::new(0) }
        }
    }

    impl JudgeBackend for Canned {
        fn rate(&self, _: &JudgeRequest<'_>) -> Result<String, LlmError> {
            *self.calls.lock().unwrap() += 1;
            Ok(self.replies.lock().unwrap().pop().unwrap_or_default())
        }
        fn temperature(&self) -> f64 {
            0.0
        }
    }

    fn cands() -> Vec<(String, String)> {
        vec![("zero_shot".into(), "Reads a file.".into())]
    }

    #[test]
    fn mean_of_three() {
        let b = Canned::new(&[r#"{"content_accuracy": 4, "fluency_conciseness": 5, "comprehension_support": 3}"#]);
        let scores = judge("x", "ref", &cands(), &b).unwrap();
        assert_eq!(scores[0].1.overall, 4.0);
    }

    #[test]
    fn out_of_range_fails_after_one_reask() {
        let bad = r#"{"content_accuracy": 6, "fluency_conciseness": 5, "comprehension_support": 3}"#;
        let b = Canned::new(&[bad, bad, bad]);
        assert!(matches!(judge("x", "r", &cands(), &b), Err(JudgeError::UnparseableJudgeOutput { .. })));
        assert_eq!(*b.calls.lock().unwrap(), 2);
    }

    #[test]
    fn reask_recovers() {
        let b = Canned::new(&["sure!", r#"Here: {"content_accuracy": 2, "fluency_conciseness": 2, "comprehension_support": 5}"#]);
        let s = judge("x", "r", &cands(), &b).unwrap();
        assert_eq!(s[0].1.overall, 3.0);
    }

    #[test]
    fn temperature_must_be_zero() {
        struct Warm;
        impl JudgeBackend for Warm {
            fn rate(&self, _: &JudgeRequest<'_>) -> Result<String, LlmError> {
                unreachable!()
            }
            fn temperature(&self) -> f64 {
                0.5
            }
        }
        assert_eq!(judge("x", "r", &cands(), &Warm), Err(JudgeError::NonZeroTemperature(0.5)));
    }

    #[test]
    fn order_of_candidates_does_not_matter() {
        let a = vec![("a".to_string(), "plot the data".to_string()), ("b".to_string(), "unrelated words".to_string())];
        let mut b = a.clone();
        b.reverse();
        let mut ra = judge("c", "plot the data", &a, &MockJudge).unwrap();
        let mut rb = judge("c", "plot the data", &b, &MockJudge).unwrap();
        ra.sort_by(|x, y| x.0.cmp(&y.0));
        rb.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(ra, rb);
        assert_eq!(ra[0].1.overall, 5.0);
    }

    #[test]
    fn prompt_substitution() {
        let p = judge_prompt("x = 1", "Sets x.", "Assigns {code}.");
        assert!(p.contains("\"\"\"\nx = 1\n\"\"\""));
        assert!(p.contains("Assigns {code}."));
        assert!(p.contains(r#"{"content_accuracy": 1"#));
    }
}
