//! One function per subcommand. Each reads its inputs from the output
//! directory (or the configured notebooks) and writes its artifacts there.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use nbdoc_core::curation::{
    Curator, EmbeddingProvider, HttpEmbeddingProvider, StubEmbeddingProvider,
};
use nbdoc_core::evaluation::{
    aggregate_report, judge, make_splits, score_records, GenerationRecord, JudgeBackend, JudgeScore,
    MockJudge, ScoredRecord, SplitAssignment, SplitItem,
};
use nbdoc_core::ingest::{
    number_pairs, pair_cells, parse_notebook_document, word_count, CellMeta, CodeMarkdownPair,
    PairId, PairProvenance,
};
use nbdoc_core::metrics::{
    build_popularity_table, imported_modules, parse_cell, sanitize_cell_source, MetricExtractor,
    MetricVector, MetricsError, PopularityTable, VisualizationAllowlist,
};
use nbdoc_core::par::Execution;
use nbdoc_core::prompting::{
    complete, render_prompt, ChatClient, Completer, EchoCompleter, PromptSpec, Shot,
};
use nbdoc_core::retrieval::{top_k, CorpusIndex, IndexHeader, Query};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as art, ArtifactHeader};
use crate::config::{EmbeddingBackend, PipelineConfig};
use crate::CliError;

/// Everything a stage needs besides the config itself.
pub struct Context {
    pub config: PipelineConfig,
    pub header: ArtifactHeader,
    pub execution: Execution,
}

impl Context {
    pub fn new(config: PipelineConfig) -> Self {
        let header = ArtifactHeader::new(&config.hash(), config.seed);
        Self { config, header, execution: Execution::default() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn embedding_provider(&self) -> Box<dyn EmbeddingProvider> {
        let e = &self.config.embedding;
        if self.config.offline || e.provider == EmbeddingBackend::Stub {
            Box::new(StubEmbeddingProvider::with_dim(e.dim))
        } else {
            Box::new(HttpEmbeddingProvider::new(e.http_config(self.config.generator.max_retries)))
        }
    }

}

pub(crate) fn chat_client(ctx: &Context, cfg: &nbdoc_core::prompting::LlmConfig) -> ChatClient {
    let cache = if cfg.cache { ctx.config.cache_dir.clone() } else { None };
    ChatClient::new(cfg.clone(), cache)
}

fn fail(stage: &'static str) -> impl Fn(String) -> CliError {
    move |cause| CliError::StageFailed { stage, cause }
}

/// Expands the configured inputs into a sorted list of notebook files.
fn notebook_files(inputs: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e == "ipynb") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn provenance(id: String, metadata: &serde_json::Value, default_tier: u32) -> PairProvenance {
    let meta = &metadata["nbdoc"];
    PairProvenance {
        notebook_id: id,
        author_tier: meta["author_tier"].as_u64().map_or(default_tier, |t| t as u32),
        is_fork: meta["is_fork"].as_bool().unwrap_or(false),
    }
}

pub fn ingest(ctx: &Context) -> Result<Vec<CodeMarkdownPair>, CliError> {
    let f = fail("ingest");
    let files = notebook_files(&ctx.config.input.notebooks).map_err(|e| f(e.to_string()))?;
    if files.is_empty() {
        return Err(f("no notebooks found under the configured inputs".into()));
    }
    let mut pairs = Vec::new();
    let mut next: PairId = 1;
    for path in &files {
        let bytes = std::fs::read(path).map_err(|e| f(format!("{}: {e}", path.display())))?;
        let doc = match parse_notebook_document(&bytes) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let prov = provenance(id, &doc.metadata, ctx.config.input.default_author_tier);
        let mut found = pair_cells(&doc.cells, &prov);
        next = number_pairs(&mut found, next);
        pairs.extend(found);
    }
    log::info!("ingest: {} notebooks, {} pairs", files.len(), pairs.len());
    art::write_jsonl(&ctx.path(art::PAIRS), &ctx.header, &pairs).map_err(|e| f(e.to_string()))?;
    Ok(pairs)
}

pub fn curate(ctx: &Context) -> Result<Vec<CodeMarkdownPair>, CliError> {
    let f = fail("curate");
    let (_, pairs): (_, Vec<CodeMarkdownPair>) =
        art::read_jsonl(&ctx.path(art::PAIRS)).map_err(|e| f(e.to_string()))?;
    let curator = Curator {
        min_words: ctx.config.bounds.min_words,
        max_words: ctx.config.bounds.max_words,
        config: ctx.config.curation.clone(),
        execution: ctx.execution,
    };
    let provider = ctx.embedding_provider();
    let out = curator.run(pairs, provider.as_ref()).map_err(|e| f(e.to_string()))?;
    art::write_jsonl(&ctx.path(art::CURATED), &ctx.header, &out.kept).map_err(|e| f(e.to_string()))?;
    art::write_text(&ctx.path(art::CURATION_REPORT_TXT), &ctx.header, &out.report.to_text())
        .map_err(|e| f(e.to_string()))?;
    art::write_json(&ctx.path(art::CURATION_REPORT_JSON), &ctx.header, "report", &out.report)
        .map_err(|e| f(e.to_string()))?;
    Ok(out.kept)
}

fn read_curated(ctx: &Context, f: &dyn Fn(String) -> CliError) -> Result<Vec<CodeMarkdownPair>, CliError> {
    let (_, pairs) = art::read_jsonl(&ctx.path(art::CURATED)).map_err(|e| f(e.to_string()))?;
    Ok(pairs)
}

pub fn metrics(ctx: &Context) -> Result<Vec<(PairId, MetricVector)>, CliError> {
    let f = fail("metrics");
    let pairs = read_curated(ctx, &f)?;
    let parsed: Vec<Option<Vec<String>>> = ctx.execution.map(&pairs, |p| {
        parse_cell(&sanitize_cell_source(&p.code)).ok().map(|c| imported_modules(&c.module))
    });
    let imports: Vec<Vec<String>> = parsed.iter().flatten().cloned().collect();
    let popularity = build_popularity_table(&imports);
    let extractor = MetricExtractor::new(popularity.clone(), VisualizationAllowlist::default());
    let cells: Vec<(&str, CellMeta)> = pairs.iter().map(|p| (p.code.as_str(), p.cell_meta)).collect();
    let mut rows = Vec::with_capacity(pairs.len());
    for (p, r) in pairs.iter().zip(extractor.extract_many(&cells, ctx.execution)) {
        match r {
            Ok(m) => rows.push((p.pair_id, m)),
            Err(e) => log::warn!("pair {}: no metrics, {e}", p.pair_id),
        }
    }
    art::write_metrics_csv(&ctx.path(art::METRICS_CSV), &ctx.header, &rows).map_err(|e| f(e.to_string()))?;
    art::write_json(&ctx.path(art::POPULARITY), &ctx.header, "popularity", &popularity)
        .map_err(|e| f(e.to_string()))?;
    Ok(rows)
}

pub fn index(ctx: &Context) -> Result<CorpusIndex, CliError> {
    let f = fail("index");
    let pairs = read_curated(ctx, &f)?;
    let by_id: HashMap<PairId, &CodeMarkdownPair> = pairs.iter().map(|p| (p.pair_id, p)).collect();
    let rows = art::read_metrics_csv(&ctx.path(art::METRICS_CSV)).map_err(|e| f(e.to_string()))?;
    let items: Vec<SplitItem> = rows
        .iter()
        .filter_map(|(id, m)| {
            by_id.get(id).map(|p| SplitItem {
                pair_id: *id,
                code_loc: m.loc,
                markdown_words: word_count(&p.markdown_normalized),
            })
        })
        .collect();
    let splits = make_splits(&items, ctx.config.split, ctx.config.sub_seed("split"))
        .map_err(|e| f(e.to_string()))?;
    art::write_json(&ctx.path(art::SPLITS), &ctx.header, "splits", &splits).map_err(|e| f(e.to_string()))?;

    let fold = &splits.folds[ctx.config.generate.fold];
    let metrics: HashMap<PairId, MetricVector> = rows.into_iter().collect();
    let train: Vec<(PairId, [f64; 21])> =
        fold.train.iter().filter_map(|id| metrics.get(id).map(|m| (*id, m.to_array()))).collect();
    let embeddings = if ctx.config.sampler.kind.needs_embeddings() {
        let provider = ctx.embedding_provider();
        let texts: Vec<&str> = train.iter().map(|(id, _)| by_id[id].code.as_str()).collect();
        Some(provider.embed(&texts).map_err(|e| f(e.to_string()))?)
    } else {
        None
    };
    let header = IndexHeader {
        tool_version: ctx.header.tool_version.clone(),
        config_hash: ctx.header.config_hash.clone(),
        seed: ctx.header.seed,
    };
    let idx = CorpusIndex::build(train, embeddings, header).map_err(|e| f(e.to_string()))?;
    art::write_atomic(&ctx.path(art::INDEX), &idx.to_bytes()).map_err(|e| f(e.to_string()))?;
    Ok(idx)
}

/// Rendered prompt kept next to the generation records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub pair_id: PairId,
    pub prompt_hash: String,
    pub shot_ids: Vec<PairId>,
    pub rendered: String,
}

pub fn run_id(cfg: &PipelineConfig) -> String {
    format!(
        "{}-{}shot-{}-fold{}",
        cfg.sampler.kind.name(),
        cfg.sampler.n_shots,
        cfg.generate.template.name(),
        cfg.generate.fold
    )
}

pub fn generate(ctx: &Context) -> Result<Vec<GenerationRecord>, CliError> {
    let f = fail("generate");
    let pairs = read_curated(ctx, &f)?;
    let by_id: HashMap<PairId, &CodeMarkdownPair> = pairs.iter().map(|p| (p.pair_id, p)).collect();
    let metrics: HashMap<PairId, MetricVector> = art::read_metrics_csv(&ctx.path(art::METRICS_CSV))
        .map_err(|e| f(e.to_string()))?
        .into_iter()
        .collect();
    let splits: SplitAssignment = art::read_json(&ctx.path(art::SPLITS), "splits").map_err(|e| f(e.to_string()))?;
    let index_bytes = std::fs::read(ctx.path(art::INDEX)).map_err(|e| f(e.to_string()))?;
    let index = CorpusIndex::from_bytes(&index_bytes).map_err(|e| f(e.to_string()))?;
    let popularity: PopularityTable =
        art::read_json(&ctx.path(art::POPULARITY), "popularity").map_err(|e| f(e.to_string()))?;
    let extractor = MetricExtractor::new(popularity, VisualizationAllowlist::default());

    let fold = splits
        .folds
        .get(ctx.config.generate.fold)
        .ok_or_else(|| f(format!("splits have no fold {}", ctx.config.generate.fold)))?;
    let sampler = ctx.config.effective_sampler();
    let provider = sampler.kind.needs_embeddings().then(|| ctx.embedding_provider());
    let template = ctx.config.generate.template;

    let code_metrics: HashMap<&str, MetricVector> =
        by_id.values().filter_map(|p| metrics.get(&p.pair_id).map(|m| (p.code.as_str(), *m))).collect();
    let metrics_fn = |code: &str| -> Result<MetricVector, MetricsError> {
        match code_metrics.get(code) {
            Some(m) => Ok(*m),
            None => extractor.extract_cell(code, &CellMeta::default()),
        }
    };

    let mut prompts: Vec<(PairId, PromptSpec, Vec<PairId>)> = Vec::with_capacity(fold.test.len());
    for id in &fold.test {
        let pair = by_id.get(id).ok_or_else(|| f(format!("test pair {id} missing from curated pairs")))?;
        let query = Query { code: &pair.code, metrics: metrics.get(id).copied(), exclude: Some(*id) };
        let hits = top_k(&query, &index, &sampler, provider.as_deref(), ctx.execution)
            .map_err(|e| f(format!("pair {id}: {e}")))?;
        let shots: Vec<Shot> = hits
            .iter()
            .map(|h| {
                let p = by_id[&h.pair_id];
                Shot { code: p.code.clone(), metrics: metrics.get(&h.pair_id).copied(), markdown: p.markdown_normalized.clone() }
            })
            .collect();
        let spec = render_prompt(&pair.code, &shots, template, &metrics_fn)
            .map_err(|e| f(format!("pair {id}: {e}")))?;
        prompts.push((*id, spec, hits.iter().map(|h| h.pair_id).collect()));
    }

    let completer: Box<dyn Completer> = if ctx.config.offline {
        // mock generator: the reply is the reference itself
        let replies = fold.test.iter().map(|id| (by_id[id].code.clone(), by_id[id].markdown_normalized.clone()));
        Box::new(EchoCompleter::new(replies.collect()))
    } else {
        Box::new(chat_client(ctx, &ctx.config.generator))
    };
    let outputs = ctx.execution.map(&prompts, |(_, spec, _)| complete(spec, completer.as_ref()));

    let run = run_id(&ctx.config);
    let mut records = Vec::with_capacity(prompts.len());
    let mut prompt_rows = Vec::with_capacity(prompts.len());
    for ((id, spec, shot_ids), out) in prompts.iter().zip(outputs) {
        let generated = out.map_err(|e| f(format!("pair {id}: {e}")))?;
        records.push(GenerationRecord {
            pair_id: *id,
            run_id: run.clone(),
            sampler: sampler.kind.name().to_string(),
            template_id: template.name().to_string(),
            prompt_hash: spec.hash(),
            generated,
            reference: by_id[id].markdown_normalized.clone(),
        });
        prompt_rows.push(PromptRecord {
            pair_id: *id,
            prompt_hash: spec.hash(),
            shot_ids: shot_ids.clone(),
            rendered: spec.rendered.clone(),
        });
    }
    art::write_jsonl(&ctx.path(art::PROMPTS), &ctx.header, &prompt_rows).map_err(|e| f(e.to_string()))?;
    art::write_jsonl(&ctx.path(art::GENERATIONS), &ctx.header, &records).map_err(|e| f(e.to_string()))?;
    Ok(records)
}

/// A line of `eval_report.jsonl`: a scored record, or the summary last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvalLine {
    Record(ScoredRecord),
    Summary { summary: Vec<nbdoc_core::evaluation::MetricSummary> },
}

pub fn eval(ctx: &Context) -> Result<nbdoc_core::evaluation::EvalReport, CliError> {
    let f = fail("eval");
    let (_, records): (_, Vec<GenerationRecord>) =
        art::read_jsonl(&ctx.path(art::GENERATIONS)).map_err(|e| f(e.to_string()))?;
    let scored = score_records(&records, ctx.execution);
    let baseline = match &ctx.config.eval.baseline {
        Some(p) => {
            let (_, b): (_, Vec<GenerationRecord>) = art::read_jsonl(p).map_err(|e| f(e.to_string()))?;
            Some(score_records(&b, ctx.execution))
        }
        None => None,
    };
    let report = aggregate_report(&scored, baseline.as_deref(), ctx.config.eval.alpha).map_err(|e| f(e.to_string()))?;
    let mut lines: Vec<EvalLine> = report.records.iter().cloned().map(EvalLine::Record).collect();
    lines.push(EvalLine::Summary { summary: report.summary.clone() });
    art::write_jsonl(&ctx.path(art::EVAL_REPORT), &ctx.header, &lines).map_err(|e| f(e.to_string()))?;
    art::write_text(&ctx.path(art::EVAL_SUMMARY), &ctx.header, &report.summary_text())
        .map_err(|e| f(e.to_string()))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub pair_id: PairId,
    pub run_id: String,
    pub score: JudgeScore,
}

pub fn judge_stage(ctx: &Context) -> Result<Vec<JudgeRecord>, CliError> {
    let f = fail("judge");
    let pairs = read_curated(ctx, &f)?;
    let code: BTreeMap<PairId, &str> = pairs.iter().map(|p| (p.pair_id, p.code.as_str())).collect();
    let (_, records): (_, Vec<GenerationRecord>) =
        art::read_jsonl(&ctx.path(art::GENERATIONS)).map_err(|e| f(e.to_string()))?;
    let backend: Box<dyn JudgeBackend> = if ctx.config.offline {
        Box::new(MockJudge)
    } else {
        Box::new(chat_client(ctx, &ctx.config.judge))
    };
    let results = ctx.execution.map(&records, |r| {
        let src = code.get(&r.pair_id).copied().unwrap_or("");
        judge(src, &r.reference, &[(r.run_id.clone(), r.generated.clone())], backend.as_ref())
    });
    let mut out = Vec::with_capacity(records.len());
    for (r, res) in records.iter().zip(results) {
        let scores = res.map_err(|e| f(format!("pair {}: {e}", r.pair_id)))?;
        for (run_id, score) in scores {
            out.push(JudgeRecord { pair_id: r.pair_id, run_id, score });
        }
    }
    art::write_jsonl(&ctx.path(art::JUDGE_SCORES), &ctx.header, &out).map_err(|e| f(e.to_string()))?;
    Ok(out)
}
