//! Classifiers over assembled datasets and the persisted model artifact.
//!
//! Two from-scratch binary classifiers: a Gini decision tree (default — it
//! copes with the mixed raw/rank feature scales without tuning) and an
//! L2-regularised logistic regression. A [`TrainedModel`] bundles the fitted
//! parameters with everything inference needs: column order, feature case,
//! the learned direction profile, the background-model digest and the markup
//! policy. Artifacts are versioned JSON documents.

mod logistic;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, FeatureCase};
use crate::discretise::DirectionProfile;
use crate::scalar::Scalar;
use crate::util::sha256_hex;

pub use logistic::{gradient, loss, sigmoid, LogisticModel, LogisticParams};
pub use tree::{DecisionTree, TreeNode, TreeParams};

/// Version tag embedded in serialised model artifacts.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single class; training needs both")]
    SingleClass,
    #[error("non-finite feature value in row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("expected {expected} feature values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("unsupported model format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
    #[error("model artifact does not parse: {0}")]
    Parse(String),
}

/// Which classifier to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    Logistic,
}

/// Classifier selection and hyperparameters. The seed participates in the
/// config digest; both classifiers are deterministic given the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub tree: TreeParams,
    pub logistic: LogisticParams,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::DecisionTree,
            tree: TreeParams::default(),
            logistic: LogisticParams::default(),
            seed: 7,
        }
    }
}

impl ClassifierConfig {
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serialises"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "model", rename_all = "snake_case")]
pub enum ModelParams<T: Scalar> {
    Tree(DecisionTree<T>),
    Logistic(LogisticModel<T>),
}

/// A fitted classifier plus the inference-time context it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainedModel<T: Scalar> {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub case: FeatureCase,
    pub feature_order: Vec<String>,
    pub params: ModelParams<T>,
    pub direction_profile: DirectionProfile<T>,
    /// Digest of the background model the features were computed under.
    pub background_digest: String,
    /// Markup policy used when the training bodies were stripped.
    pub keep_code: bool,
}

/// Fit a classifier on `dataset`.
///
/// The dataset must be non-empty with both classes present and finite values.
pub fn train<T: Scalar>(
    dataset: &Dataset<T>,
    config: &ClassifierConfig,
    profile: &DirectionProfile<T>,
    background_digest: &str,
    keep_code: bool,
) -> Result<TrainedModel<T>, ModelError> {
    if dataset.rows.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let positives = dataset.n_positive();
    if positives == 0 || positives == dataset.rows.len() {
        return Err(ModelError::SingleClass);
    }
    for (r, row) in dataset.rows.iter().enumerate() {
        if let Some(c) = row.values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: r, column: c });
        }
    }

    let rows: Vec<Vec<T>> = dataset.rows.iter().map(|r| r.values.clone()).collect();
    let labels: Vec<bool> = dataset.rows.iter().map(|r| r.label).collect();
    let params = match config.kind {
        ClassifierKind::DecisionTree => {
            ModelParams::Tree(DecisionTree::fit(&rows, &labels, &config.tree))
        }
        ClassifierKind::Logistic => {
            ModelParams::Logistic(LogisticModel::fit(&rows, &labels, &config.logistic))
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: config.kind,
        case: dataset.case,
        feature_order: dataset.feature_order(),
        params,
        direction_profile: profile.clone(),
        background_digest: background_digest.to_owned(),
        keep_code,
    })
}

impl<T: Scalar> TrainedModel<T> {
    /// Positive-class probability for one feature vector aligned to
    /// [`Self::feature_order`].
    pub fn predict_proba(&self, features: &[T]) -> Result<T, ModelError> {
        if features.len() != self.feature_order.len() {
            return Err(ModelError::ArityMismatch {
                expected: self.feature_order.len(),
                got: features.len(),
            });
        }
        if let Some(c) = features.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: 0, column: c });
        }
        Ok(match &self.params {
            ModelParams::Tree(tree) => tree.predict_proba(features),
            ModelParams::Logistic(model) => model.predict_proba(features),
        })
    }

    /// Serialise to the versioned JSON artifact.
    pub fn save(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serialises")
    }

    /// Parse an artifact produced by [`Self::save`].
    pub fn load(bytes: &[u8]) -> Result<Self, ModelError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ModelError::Parse("missing format_version".into()))?
            as u32;
        if found != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version {
                found,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| ModelError::Parse(e.to_string()))
    }

    /// Content hash of the serialised artifact.
    pub fn digest(&self) -> String {
        sha256_hex(&self.save())
    }
}
