//! Layered configuration: defaults, then a TOML file (`--config` flag or the
//! `BESTANSWER_CONFIG` env var), then per-command flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bestanswer::model::{ClassifierConfig, ClassifierKind};
use serde::Deserialize;

pub const CONFIG_ENV_VAR: &str = "BESTANSWER_CONFIG";

/// Every field has a default; see `docs/formats.md` for the file schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Default Posts.xml for `ingest` when --posts is not given.
    pub posts_xml: Option<PathBuf>,
    /// Default Users.xml for `ingest` when --users is not given.
    pub users_xml: Option<PathBuf>,
    /// Base directory for default output locations.
    pub workdir: PathBuf,
    /// Threads with fewer answers are dropped at ingest.
    pub min_answers: usize,
    /// Drop threads without an accepted answer at ingest.
    pub resolved_only: bool,
    /// Keep `code`/`pre` contents when stripping markup.
    pub keep_code: bool,
    /// Background-model smoothing.
    pub alpha: f64,
    /// `tree` or `logistic`.
    pub classifier: String,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub logistic_learning_rate: f64,
    pub logistic_iterations: usize,
    pub logistic_l2: f64,
    /// Cross-validation folds.
    pub k: usize,
    pub seed: u64,
    /// Default feature case (1–6).
    pub case: u8,
    /// Per-answer body limit for the prediction service, in bytes.
    pub body_limit: usize,
    /// Service bind address.
    pub addr: String,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            posts_xml: None,
            users_xml: None,
            workdir: PathBuf::from("."),
            min_answers: 2,
            resolved_only: true,
            keep_code: false,
            alpha: 1.0,
            classifier: "tree".into(),
            tree_max_depth: 10,
            tree_min_leaf: 20,
            logistic_learning_rate: 0.5,
            logistic_iterations: 300,
            logistic_l2: 1e-4,
            k: 10,
            seed: 7,
            case: 2,
            body_limit: 256 * 1024,
            addr: "127.0.0.1:8080".into(),
        }
    }
}

impl AppConfig {
    /// Load from `flag_path`, else from `$BESTANSWER_CONFIG`, else defaults.
    pub fn load(flag_path: Option<&Path>) -> Result<AppConfig> {
        let path: Option<PathBuf> = flag_path
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
        let config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => AppConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_answers < 1 {
            bail!("min_answers must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            bail!("alpha must be positive");
        }
        if self.k < 2 {
            bail!("k must be at least 2");
        }
        if !(1..=6).contains(&self.case) {
            bail!("case must be between 1 and 6");
        }
        self.classifier_kind()?;
        Ok(())
    }

    pub fn classifier_kind(&self) -> Result<ClassifierKind> {
        match self.classifier.as_str() {
            "tree" => Ok(ClassifierKind::DecisionTree),
            "logistic" => Ok(ClassifierKind::Logistic),
            other => bail!("unknown classifier {other:?} (expected \"tree\" or \"logistic\")"),
        }
    }

    pub fn classifier_config(&self) -> Result<ClassifierConfig> {
        Ok(ClassifierConfig {
            kind: self.classifier_kind()?,
            tree: bestanswer::model::TreeParams {
                max_depth: self.tree_max_depth,
                min_leaf: self.tree_min_leaf,
            },
            logistic: bestanswer::model::LogisticParams {
                learning_rate: self.logistic_learning_rate,
                iterations: self.logistic_iterations,
                l2: self.logistic_l2,
            },
            seed: self.seed,
        })
    }
}
