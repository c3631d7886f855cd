//! Scoring of generated documentation: BLEU, ROUGE, Wilcoxon signed-rank,
//! data splits and LLM-as-a-judge.

pub mod judge;
pub mod report;
pub mod splits;
pub mod text;
pub mod wilcoxon;

pub use judge::{judge, JudgeBackend, JudgeError, JudgeScore, MockJudge};
pub use report::{
    mean_std, MetricSummary, SCORE_NAMES,
    aggregate_report, score_record, score_records, EvalReport, GenerationRecord, ReportError,
    ScoredRecord, Significance,
};
pub use splits::{make_splits, SplitAssignment, SplitError, SplitItem, SplitStrategy};
pub use text::{bleu, rouge, tokenize_for_eval, Prf, RougeVariant};
pub use wilcoxon::{wilcoxon_signed_rank, PValueMethod, WilcoxonError, WilcoxonResult};
