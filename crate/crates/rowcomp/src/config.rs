//! Pipeline configuration: a JSON file whose fields command-line flags
//! override.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rowcomp_core::gapfill::{ContextMode, GapFillConfig};
use rowcomp_core::interpret::{IsolationForestParams, LinkConfig, OutlierRemover, ThresholdPolicy};
use rowcomp_core::kb::EntityId;
use rowcomp_core::suggest::{Detector, SuggestConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    /// Only `"majority"` is accepted.
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "snake_case")]
pub struct PipelineConfig {
    pub kb: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// fastText-style word vectors for label embeddings; hashed n-grams
    /// when absent.
    pub label_vectors: Option<PathBuf>,
    /// `mock:<fixture.json>` or `http`.
    pub clients: String,
    pub link_threshold: Threshold,
    pub fuzzy_threshold: f64,
    pub n_neighbors: usize,
    /// `iforest`, `iqr` or `none`.
    pub outlier_remover: String,
    pub k_per_seed: usize,
    pub high_cardinality_types: Vec<String>,
    pub detector: String,
    pub contamination: f64,
    pub samples: usize,
    pub temperature: f64,
    pub fill_threshold: f64,
    pub sim_threshold: f64,
    /// `mean` or `max`.
    pub context_mode: String,
    pub seed_rows: usize,
    pub suggestions: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kb: None,
            embeddings: None,
            label_vectors: None,
            clients: "http".into(),
            link_threshold: Threshold::Named("majority".into()),
            fuzzy_threshold: 0.2,
            n_neighbors: 10,
            outlier_remover: "iforest".into(),
            k_per_seed: 1000,
            high_cardinality_types: vec!["Q5".into()],
            detector: "knn".into(),
            contamination: 0.05,
            samples: 100,
            temperature: 0.7,
            fill_threshold: 0.05,
            sim_threshold: 0.5,
            context_mode: "mean".into(),
            seed_rows: 3,
            suggestions: 10,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths in it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.kb, &mut cfg.embeddings, &mut cfg.label_vectors].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(rest) = cfg.clients.strip_prefix("mock:") {
            let fixture = Path::new(rest);
            if fixture.is_relative() {
                cfg.clients = format!("mock:{}", base.join(fixture).display());
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.01..=0.06).contains(&self.contamination) {
            bail!("contamination {} outside [0.01, 0.06]", self.contamination);
        }
        if !(-1.0..=1.0).contains(&self.fill_threshold) {
            bail!("fill threshold {} outside [-1, 1]", self.fill_threshold);
        }
        if !(-1.0..=1.0).contains(&self.sim_threshold) {
            bail!("similarity threshold {} outside [-1, 1]", self.sim_threshold);
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            bail!("temperature {} outside [0, 2]", self.temperature);
        }
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            bail!("fuzzy threshold {} outside [0, 1]", self.fuzzy_threshold);
        }
        if self.samples == 0 || self.k_per_seed == 0 {
            bail!("samples and k_per_seed must be positive");
        }
        if self.seed_rows == 0 {
            bail!("seed_rows must be positive");
        }
        self.detector()?;
        self.remover()?;
        self.threshold()?;
        self.context_mode()?;
        if self.clients != "http" && !self.clients.starts_with("mock:") {
            bail!("clients must be `http` or `mock:<path>`, got {:?}", self.clients);
        }
        Ok(())
    }

    fn detector(&self) -> Result<Detector> {
        self.detector.parse().map_err(anyhow::Error::msg)
    }

    fn remover(&self) -> Result<OutlierRemover> {
        Ok(match self.outlier_remover.as_str() {
            "iforest" => OutlierRemover::IsolationForest(IsolationForestParams {
                seed: self.seed,
                ..IsolationForestParams::default()
            }),
            "iqr" => OutlierRemover::iqr(),
            "none" => OutlierRemover::Keep,
            other => bail!("unknown outlier remover {other:?} (iforest, iqr, none)"),
        })
    }

    fn threshold(&self) -> Result<ThresholdPolicy> {
        Ok(match &self.link_threshold {
            Threshold::Named(s) if s == "majority" => ThresholdPolicy::Majority,
            Threshold::Named(s) => bail!("unknown link threshold {s:?}"),
            Threshold::Fixed(t) => ThresholdPolicy::Fixed(*t),
        })
    }

    fn context_mode(&self) -> Result<ContextMode> {
        Ok(match self.context_mode.as_str() {
            "mean" => ContextMode::Mean,
            "max" => ContextMode::Max,
            other => bail!("unknown context mode {other:?} (mean, max)"),
        })
    }

    pub fn link_config(&self) -> Result<LinkConfig> {
        Ok(LinkConfig {
            fuzzy_threshold: self.fuzzy_threshold,
            remover: self.remover()?,
            n_neighbors: self.n_neighbors,
            threshold: self.threshold()?,
            ..LinkConfig::default()
        })
    }

    pub fn suggest_config(&self) -> Result<SuggestConfig> {
        Ok(SuggestConfig {
            k_per_seed: self.k_per_seed,
            high_cardinality_types: self.high_cardinality_types.iter().map(|t| EntityId::from(t.as_str())).collect(),
            detector: self.detector()?,
            contamination: self.contamination,
            samples: self.samples,
            temperature: self.temperature,
        })
    }

    pub fn gapfill_config(&self) -> Result<GapFillConfig> {
        Ok(GapFillConfig {
            samples: self.samples,
            temperature: self.temperature,
            fill_threshold: self.fill_threshold,
            sim_threshold: self.sim_threshold,
            context_mode: self.context_mode()?,
            ..GapFillConfig::default()
        })
    }
}
