//! Within-question rank discretisation.
//!
//! Each feature value is replaced by the answer's 1-based position when the
//! answers of its question are sorted by that feature. The sort direction is
//! learned from labels: whichever direction puts the accepted answers first
//! (higher accepted mean → descending, lower → ascending). Because ranks only
//! depend on within-group order, they are invariant under any strictly
//! increasing transformation of the raw values — cross-site shifts in raw
//! text statistics cancel out.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Feature;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiscretiseError {
    #[error("no accepted answers in the training input; directions are undefined")]
    NoAcceptedAnswers,
    #[error("no non-accepted answers in the training input; directions are undefined")]
    NoRejectedAnswers,
    #[error("non-finite value for {feature} at group position {index}")]
    NonFiniteValue { feature: Feature, index: usize },
    #[error("feature {feature} has no learned direction")]
    MissingDirection { feature: Feature },
    #[error("answer {answer_id} has no value for {feature}")]
    MissingValue { feature: Feature, answer_id: u64 },
}

/// Sort order applied before rank assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortDirection {
    Descending,
    Ascending,
}

/// Learned direction for one feature, with the class means that justified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DirectionEntry<T: Scalar> {
    pub direction: SortDirection,
    pub accepted_mean: T,
    pub non_accepted_mean: T,
}

/// Per-feature sort directions learned from labeled training threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DirectionProfile<T: Scalar> {
    entries: BTreeMap<Feature, DirectionEntry<T>>,
}

impl<T: Scalar> Default for DirectionProfile<T> {
    fn default() -> Self {
        DirectionProfile {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> DirectionProfile<T> {
    pub fn get(&self, feature: Feature) -> Option<&DirectionEntry<T>> {
        self.entries.get(&feature)
    }

    pub fn direction(&self, feature: Feature) -> Option<SortDirection> {
        self.entries.get(&feature).map(|e| e.direction)
    }

    pub fn insert(&mut self, feature: Feature, entry: DirectionEntry<T>) {
        self.entries.insert(feature, entry);
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, &DirectionEntry<T>)> {
        self.entries.iter().map(|(f, e)| (*f, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Learn one direction per feature by comparing class means.
///
/// `rows` are (is_accepted, values) pairs with `values` aligned to
/// `features`. Higher accepted mean → descending; lower → ascending; exact
/// tie → descending. Fails when either class is empty.
pub fn learn_directions<T: Scalar>(
    features: &[Feature],
    rows: &[(bool, Vec<T>)],
) -> Result<DirectionProfile<T>, DiscretiseError> {
    let n_accepted = rows.iter().filter(|(accepted, _)| *accepted).count();
    if n_accepted == 0 {
        return Err(DiscretiseError::NoAcceptedAnswers);
    }
    if n_accepted == rows.len() {
        return Err(DiscretiseError::NoRejectedAnswers);
    }
    let mut profile = DirectionProfile::default();
    for (i, &feature) in features.iter().enumerate() {
        let mut acc_sum = T::zero();
        let mut non_sum = T::zero();
        for (accepted, values) in rows {
            if *accepted {
                acc_sum = acc_sum + values[i];
            } else {
                non_sum = non_sum + values[i];
            }
        }
        let accepted_mean = acc_sum / T::from_usize_lossy(n_accepted);
        let non_accepted_mean = non_sum / T::from_usize_lossy(rows.len() - n_accepted);
        let direction = if accepted_mean >= non_accepted_mean {
            SortDirection::Descending
        } else {
            SortDirection::Ascending
        };
        profile.insert(
            feature,
            DirectionEntry {
                direction,
                accepted_mean,
                non_accepted_mean,
            },
        );
    }
    Ok(profile)
}

/// Tie-break key: ties sort by earlier creation date, then smaller answer id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TieBreak {
    pub creation_date: DateTime<Utc>,
    pub answer_id: u64,
}

/// Assign 1-based ranks to `values` under `direction`.
///
/// `ranks[i]` is the position of item `i` in the sorted order; the output is
/// always a permutation of `1..=n`.
pub fn rank_group<T: Scalar>(
    values: &[T],
    direction: SortDirection,
    tiebreak: &[TieBreak],
    feature: Feature,
) -> Result<Vec<usize>, DiscretiseError> {
    assert_eq!(
        values.len(),
        tiebreak.len(),
        "values and tie-break keys must align"
    );
    assert!(!values.is_empty(), "rank_group needs at least one value");
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(DiscretiseError::NonFiniteValue { feature, index });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let primary = match direction {
            SortDirection::Descending => values[b].partial_cmp(&values[a]),
            SortDirection::Ascending => values[a].partial_cmp(&values[b]),
        }
        .expect("finite values compare totally");
        primary.then_with(|| tiebreak[a].cmp(&tiebreak[b]))
    });
    let mut ranks = vec![0usize; values.len()];
    for (position, &index) in order.iter().enumerate() {
        ranks[index] = position + 1;
    }
    Ok(ranks)
}

/// One answer's raw feature values inside a thread.
#[derive(Debug, Clone)]
pub struct AnswerValues<T: Scalar> {
    pub answer_id: u64,
    pub creation_date: DateTime<Utc>,
    pub values: BTreeMap<Feature, T>,
}

/// One thread's answers, ready for discretisation.
#[derive(Debug, Clone)]
pub struct ThreadValues<T: Scalar> {
    pub question_id: u64,
    pub answers: Vec<AnswerValues<T>>,
}

/// Per-answer ranks for the discretised features of one thread.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankVector {
    ranks: BTreeMap<Feature, usize>,
}

impl RankVector {
    pub fn get(&self, feature: Feature) -> Option<usize> {
        self.ranks.get(&feature).copied()
    }

    fn insert(&mut self, feature: Feature, rank: usize) {
        self.ranks.insert(feature, rank);
    }
}

/// Rank every listed feature independently within every thread.
///
/// Returns one `Vec<RankVector>` per thread, aligned to its answers. Answers
/// in different threads never influence each other.
pub fn discretise_threads<T: Scalar>(
    threads: &[ThreadValues<T>],
    features: &[Feature],
    profile: &DirectionProfile<T>,
) -> Result<Vec<Vec<RankVector>>, DiscretiseError> {
    let mut out = Vec::with_capacity(threads.len());
    for thread in threads {
        let mut vectors = vec![RankVector::default(); thread.answers.len()];
        let tiebreak: Vec<TieBreak> = thread
            .answers
            .iter()
            .map(|a| TieBreak {
                creation_date: a.creation_date,
                answer_id: a.answer_id,
            })
            .collect();
        for &feature in features {
            let direction = profile
                .direction(feature)
                .ok_or(DiscretiseError::MissingDirection { feature })?;
            let values = thread
                .answers
                .iter()
                .map(|a| {
                    a.values
                        .get(&feature)
                        .copied()
                        .ok_or(DiscretiseError::MissingValue {
                            feature,
                            answer_id: a.answer_id,
                        })
                })
                .collect::<Result<Vec<T>, _>>()?;
            let ranks = rank_group(&values, direction, &tiebreak, feature)?;
            for (vector, rank) in vectors.iter_mut().zip(ranks) {
                vector.insert(feature, rank);
            }
        }
        out.push(vectors);
    }
    Ok(out)
}
