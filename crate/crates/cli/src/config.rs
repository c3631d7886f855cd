//! Pipeline configuration, read from TOML.
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use nbdoc_core::curation::{CurationConfig, HttpEmbeddingConfig};
use nbdoc_core::evaluation::SplitStrategy;
use nbdoc_core::http::RetryPolicy;
use nbdoc_core::prompting::{LlmConfig, TemplateId};
use nbdoc_core::retrieval::{SamplerConfig, SamplerKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Notebook files or directories searched recursively for `.ipynb`.
    pub notebooks: Vec<PathBuf>,
    /// Tier used when a notebook carries no `nbdoc.author_tier` metadata.
    pub default_author_tier: u32,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { notebooks: Vec::new(), default_author_tier: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { min_words: 4, max_words: 281 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackend {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingBackend,
    pub endpoint: String,
    pub model_id: String,
    pub dim: usize,
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub batch_size: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbeddingBackend::Stub,
            endpoint: "https://api.openai.com/v1/embeddings".into(),
            model_id: "text-embedding-3-small".into(),
            dim: 256,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60.0,
            batch_size: 64,
        }
    }
}

impl EmbeddingConfig {
    pub fn http_config(&self, max_retries: u32) -> HttpEmbeddingConfig {
        HttpEmbeddingConfig {
            endpoint: self.endpoint.clone(),
            model_id: self.model_id.clone(),
            dim: self.dim,
            api_key_env: self.api_key_env.clone(),
            timeout: Duration::from_secs_f64(self.timeout_secs),
            batch_size: self.batch_size,
            retry: RetryPolicy { max_retries, ..RetryPolicy::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub template: TemplateId,
    /// Which fold's test set is generated for.
    pub fold: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { template: TemplateId::NoMetric, fold: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Significance level of the paired test.
    pub alpha: f64,
    /// Generation records of a baseline run to test against.
    pub baseline: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { alpha: 0.05, baseline: None }
    }
}

fn default_judge() -> LlmConfig {
    LlmConfig { temperature: 0.0, ..LlmConfig::default() }
}

fn default_sampler() -> SamplerConfig {
    SamplerConfig::new(SamplerKind::CmIr, 5)
}

fn default_split() -> SplitStrategy {
    SplitStrategy::Kfold { k: 10 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub input: InputConfig,
    pub bounds: Bounds,
    pub curation: CurationConfig,
    pub embedding: EmbeddingConfig,
    #[serde(default = "default_split")]
    pub split: SplitStrategy,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerConfig,
    pub generate: GenerateConfig,
    pub generator: LlmConfig,
    #[serde(default = "default_judge")]
    pub judge: LlmConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("nbdoc-out"),
            cache_dir: None,
            offline: false,
            input: InputConfig::default(),
            bounds: Bounds::default(),
            curation: CurationConfig::default(),
            embedding: EmbeddingConfig::default(),
            split: default_split(),
            sampler: default_sampler(),
            generate: GenerateConfig::default(),
            generator: LlmConfig::default(),
            judge: default_judge(),
            eval: EvalConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.input.notebooks.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        if let Some(c) = &mut self.cache_dir {
            fix(c);
        }
        if let Some(b) = &mut self.eval.baseline {
            fix(b);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in &self.input.notebooks {
            if !p.exists() {
                return Err(invalid(format!("input path {} does not exist", p.display())));
            }
        }
        if let Some(b) = &self.eval.baseline {
            if !b.exists() {
                return Err(invalid(format!("baseline {} does not exist", b.display())));
            }
        }
        if self.bounds.min_words > self.bounds.max_words {
            return Err(invalid(format!(
                "min_words {} exceeds max_words {}",
                self.bounds.min_words, self.bounds.max_words
            )));
        }
        self.curation.validate().map_err(|e| invalid(e.to_string()))?;
        self.sampler.validate().map_err(|e| invalid(e.to_string()))?;
        self.generator.validate().map_err(|e| invalid(format!("generator: {e}")))?;
        self.judge.validate().map_err(|e| invalid(format!("judge: {e}")))?;
        if self.judge.temperature != 0.0 {
            return Err(invalid(format!("judge temperature must be 0, got {}", self.judge.temperature)));
        }
        match self.split {
            SplitStrategy::Kfold { k } => {
                if k < 3 {
                    return Err(invalid(format!("kfold needs k >= 3, got {k}")));
                }
                if self.generate.fold >= k {
                    return Err(invalid(format!("fold {} out of range for k = {k}", self.generate.fold)));
                }
            }
            SplitStrategy::Holdout { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(invalid(format!("holdout fraction {fraction} outside (0, 1)")));
                }
                if self.generate.fold != 0 {
                    return Err(invalid("holdout has a single fold"));
                }
            }
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha < 1.0) {
            return Err(invalid(format!("eval alpha {} outside (0, 1)", self.eval.alpha)));
        }
        if self.embedding.dim == 0 || self.embedding.batch_size == 0 {
            return Err(invalid("embedding dim and batch_size must be positive"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    /// Seed of a named stage, derived from the config seed.
    pub fn sub_seed(&self, stage: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(stage.as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    /// Sampler settings with the random-shot seed filled from the config seed.
    pub fn effective_sampler(&self) -> SamplerConfig {
        let mut s = self.sampler.clone();
        if s.rng_seed.is_none() {
            s.rng_seed = Some(self.sub_seed("sampler"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.bounds.min_words, 4);
        assert_eq!(cfg.bounds.max_words, 281);
        assert_eq!(cfg.curation.semantic_threshold, 0.58);
        assert_eq!(cfg.curation.dedup_threshold, 0.70);
        assert_eq!(cfg.generator.temperature, 0.5);
        assert_eq!(cfg.judge.temperature, 0.0);
    }

    #[test]
    fn parses_partial_toml() {
        let cfg = PipelineConfig::from_toml(
            r#"
            seed = 7
            [split]
            kind = "holdout"
            fraction = 0.1
            [sampler]
            kind = "combined_ir"
            n_shots = 10
            alpha = 0.25
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.split, SplitStrategy::Holdout { fraction: 0.1 });
        assert_eq!(cfg.sampler.kind, SamplerKind::CombinedIr);
        assert_eq!(cfg.sampler.alpha, 0.25);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("nonsense = 1").is_err());
        let mut cfg = PipelineConfig::default();
        cfg.judge.temperature = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.sampler.n_shots = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.input.notebooks.push("/definitely/missing.ipynb".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_and_sub_seeds_are_stable() {
        let a = PipelineConfig::default();
        assert_eq!(a.hash(), PipelineConfig::default().hash());
        let b = PipelineConfig { seed: 1, ..PipelineConfig::default() };
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.sub_seed("split"), a.sub_seed("sampler"));
        assert_eq!(a.sub_seed("split"), PipelineConfig::default().sub_seed("split"));
    }
}
