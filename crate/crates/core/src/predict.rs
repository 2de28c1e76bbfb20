//! Request-time scoring of candidate answer sets.
//!
//! A request is one question's worth of candidate answers. Discretisation is
//! recomputed within the request group using the direction profile stored in
//! the model artifact, so inference needs no corpus access: the answer count
//! is the group size and ranks come from the request itself.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Column;
use crate::discretise::{discretise_threads, AnswerValues, DiscretiseError, ThreadValues};
use crate::features::Feature;
use crate::model::{ModelError, TrainedModel};
use crate::scalar::Scalar;
use crate::textfeat::{compute_features, segment, strip_markup, BackgroundModel};

/// Default per-answer body limit for [`handle_predict`], in bytes.
pub const DEFAULT_BODY_LIMIT: usize = 256 * 1024;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("request has no answers")]
    EmptyRequest,
    #[error("answer {index} is missing required field {field}")]
    MissingField { index: usize, field: &'static str },
    #[error("answer {index} body is {size} bytes; limit is {limit}")]
    BodyTooLarge {
        index: usize,
        size: usize,
        limit: usize,
    },
    #[error("model artifact column {name:?} is not a known feature")]
    UnknownColumn { name: String },
    #[error("model and background model do not match: expected digest {expected}, got {got}")]
    BackgroundMismatch { expected: String, got: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Discretise(#[from] DiscretiseError),
}

/// One candidate answer of a prediction request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateAnswer {
    /// Markup body, stripped with the model's training-time policy.
    pub body: String,
    pub creation_date: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner_reputation: Option<u64>,
}

/// All candidate answers of one question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictRequest {
    pub answers: Vec<CandidateAnswer>,
}

/// Scored answer: `rank` 1 is the predicted best.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnswerPrediction<T: Scalar> {
    pub index: usize,
    pub probability: T,
    pub rank: usize,
}

/// Model identity echoed with every response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub case: u8,
    pub format_version: u32,
    pub model_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PredictResponse<T: Scalar> {
    pub model: ModelInfo,
    pub answers: Vec<AnswerPrediction<T>>,
}

/// Check that `bg` is the background model the artifact was trained with.
pub fn verify_background<T: Scalar>(
    model: &TrainedModel<T>,
    bg: &BackgroundModel<T>,
) -> Result<(), PredictError> {
    let got = bg.digest();
    if got != model.background_digest {
        return Err(PredictError::BackgroundMismatch {
            expected: model.background_digest.clone(),
            got,
        });
    }
    Ok(())
}

/// Score every candidate answer and rank them by probability.
///
/// Fields required by the model's case must be present on every answer;
/// otherwise the request is rejected (HTTP 422 semantics at the service
/// layer). Bodies above `body_limit` bytes are rejected.
pub fn handle_predict<T: Scalar>(
    request: &PredictRequest,
    model: &TrainedModel<T>,
    bg: &BackgroundModel<T>,
    body_limit: usize,
) -> Result<PredictResponse<T>, PredictError> {
    if request.answers.is_empty() {
        return Err(PredictError::EmptyRequest);
    }
    let case = model.case;
    for (index, answer) in request.answers.iter().enumerate() {
        if answer.body.len() > body_limit {
            return Err(PredictError::BodyTooLarge {
                index,
                size: answer.body.len(),
                limit: body_limit,
            });
        }
        if case.needs_score() && answer.score.is_none() {
            return Err(PredictError::MissingField {
                index,
                field: "score",
            });
        }
        if case.needs_reputation() && answer.owner_reputation.is_none() {
            return Err(PredictError::MissingField {
                index,
                field: "owner_reputation",
            });
        }
    }

    // request group = one thread; answer ids are request indices
    let n = request.answers.len();
    let group_size = T::from_usize_lossy(n);
    let answers: Vec<AnswerValues<T>> = request
        .answers
        .iter()
        .enumerate()
        .map(|(index, answer)| {
            let text = strip_markup(&answer.body, model.keep_code);
            let tokens = segment(&text);
            let lf = compute_features(&tokens, bg);
            let values = [
                (Feature::Length, lf.length),
                (Feature::AvgWordLength, lf.avg_word_length),
                (Feature::WordsPerSentence, lf.words_per_sentence),
                (Feature::LongestSentence, lf.longest_sentence),
                (Feature::VocabLogprob, lf.vocab_logprob),
                (Feature::AnswerCount, group_size),
                (
                    Feature::CreationEpoch,
                    T::from_i64_lossy(answer.creation_date.timestamp()),
                ),
                (
                    Feature::Reputation,
                    T::from_u64(answer.owner_reputation.unwrap_or(0))
                        .expect("reputation fits scalar"),
                ),
                (Feature::Score, T::from_i64_lossy(answer.score.unwrap_or(0))),
            ]
            .into_iter()
            .collect();
            AnswerValues {
                answer_id: index as u64,
                creation_date: answer.creation_date,
                values,
            }
        })
        .collect();
    let group = ThreadValues {
        question_id: 0,
        answers,
    };

    let rank_features = case.rank_features();
    let ranks = if rank_features.is_empty() {
        None
    } else {
        Some(
            discretise_threads(
                std::slice::from_ref(&group),
                rank_features,
                &model.direction_profile,
            )?
            .remove(0),
        )
    };

    let mut probabilities = Vec::with_capacity(n);
    for (index, answer) in group.answers.iter().enumerate() {
        let vector: Vec<T> = model
            .feature_order
            .iter()
            .map(|name| {
                let column = Column::from_name(name)
                    .ok_or_else(|| PredictError::UnknownColumn { name: name.clone() })?;
                Ok(match column {
                    Column::Raw(f) => *answer.values.get(&f).expect("all raw features present"),
                    Column::Rank(f) => T::from_usize_lossy(
                        ranks.as_ref().expect("ranks computed for rank cases")[index]
                            .get(f)
                            .expect("rank present"),
                    ),
                })
            })
            .collect::<Result<_, PredictError>>()?;
        probabilities.push(model.predict_proba(&vector)?);
    }

    // rank 1 = highest probability, request order breaks ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        probabilities[b]
            .partial_cmp(&probabilities[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    let mut rank_of = vec![0usize; n];
    for (position, &index) in order.iter().enumerate() {
        rank_of[index] = position + 1;
    }

    Ok(PredictResponse {
        model: ModelInfo {
            case: case.index(),
            format_version: model.format_version,
            model_digest: model.digest(),
        },
        answers: (0..n)
            .map(|index| AnswerPrediction {
                index,
                probability: probabilities[index],
                rank: rank_of[index],
            })
            .collect(),
    })
}
