//! TOML run configuration. Command-line flags take precedence over file
//! values, which take precedence over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::error::invalid;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub annotation: AnnotationSection,
    #[serde(default)]
    pub vqa: VqaSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default)]
    pub llm: LlmSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n: Option<usize>,
    pub solver: Option<String>,
    pub budget_nodes: Option<u64>,
    pub oracle_cap: Option<u64>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub cosine: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub per_category: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSection {
    pub measure: Option<String>,
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqaSection {
    pub method: Option<String>,
    pub with_prompt: Option<bool>,
    pub weight: Option<f64>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub step: Option<f64>,
    pub f1_mean: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
    }
}
