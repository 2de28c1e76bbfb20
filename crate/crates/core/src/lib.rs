//! Best-answer prediction for community Q&A threads.
//!
//! The pipeline ingests StackExchange-style data dumps, computes five shallow
//! linguistic features per answer (token length, average word length, words
//! per sentence, longest sentence, vocabulary log-probability under a
//! background unigram model), and converts each feature into a within-question
//! ordinal rank: answers are grouped by their question, sorted in the
//! direction associated with acceptance, and numbered 1..n. Classifiers
//! trained on the rank features transfer across sites whose raw text
//! statistics differ, because ranks are invariant under any strictly
//! increasing per-site distortion of the raw values.
//!
//! Modules follow the pipeline order:
//!
//! * [`ingest`] — stream-parse `Posts.xml` / `Users.xml` into linked threads
//! * [`textfeat`] — markup stripping, segmentation, background model, features
//! * [`discretise`] — direction learning and per-group rank assignment
//! * [`dataset`] — per-answer example rows for the six feature cases
//! * [`model`] — decision-tree and logistic classifiers plus artifact I/O
//! * [`eval`] — grouped k-fold evaluation with P/R/F and AUC
//! * [`report`] — monthly feature-drift aggregation and site summaries
//! * [`predict`] — request-time feature assembly for the serving path
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the CLI uses.

pub mod dataset;
pub mod discretise;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod predict;
pub mod report;
pub mod scalar;
pub mod synth;
pub mod textfeat;
mod util;

pub use features::Feature;
pub use scalar::Scalar;

/// f64-backed background unigram model.
pub type BackgroundModel = textfeat::BackgroundModel<f64>;
/// f64-backed shallow feature vector.
pub type LinguisticFeatures = textfeat::LinguisticFeatures<f64>;
/// f64-backed learned sort directions.
pub type DirectionProfile = discretise::DirectionProfile<f64>;
/// f64-backed assembled dataset.
pub type Dataset = dataset::Dataset<f64>;
/// f64-backed trained classifier artifact.
pub type TrainedModel = model::TrainedModel<f64>;
/// f64-backed evaluation metrics.
pub type Metrics = eval::Metrics<f64>;
/// f64-backed per-site evaluation report.
pub type CaseReport = eval::CaseReport<f64>;
/// f64-backed monthly drift point.
pub type MonthlyPoint = report::MonthlyPoint<f64>;
