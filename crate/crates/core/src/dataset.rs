//! Example-row assembly for the six feature-set cases.
//!
//! Cases grow from raw linguistic features only (case 1) to everything
//! including answer scores and their ranks (case 6). Rank columns require a
//! learned [`DirectionProfile`]; raw-only cases ignore it.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretise::{self, AnswerValues, DirectionProfile, ThreadValues};
use crate::features::Feature;
use crate::ingest::SiteCorpus;
use crate::scalar::Scalar;
use crate::textfeat::{compute_features, segment, BackgroundModel, TokenizedText};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{case} includes rank features; a direction profile is required")]
    MissingProfile { case: FeatureCase },
    #[error("thread {question_id} has no accepted answer; assemble needs a resolved corpus")]
    UnresolvedThread { question_id: u64 },
    #[error(transparent)]
    Discretise(#[from] discretise::DiscretiseError),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One of the six feature-set configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureCase {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
}

impl FeatureCase {
    pub const ALL: [FeatureCase; 6] = [
        FeatureCase::Case1,
        FeatureCase::Case2,
        FeatureCase::Case3,
        FeatureCase::Case4,
        FeatureCase::Case5,
        FeatureCase::Case6,
    ];

    pub fn index(self) -> u8 {
        match self {
            FeatureCase::Case1 => 1,
            FeatureCase::Case2 => 2,
            FeatureCase::Case3 => 3,
            FeatureCase::Case4 => 4,
            FeatureCase::Case5 => 5,
            FeatureCase::Case6 => 6,
        }
    }

    pub fn from_index(index: u8) -> Option<FeatureCase> {
        FeatureCase::ALL.get(index.checked_sub(1)? as usize).copied()
    }

    /// Human description matching the feature composition.
    pub fn label(self) -> &'static str {
        match self {
            FeatureCase::Case1 => "linguistic",
            FeatureCase::Case2 => "linguistic + discretisation",
            FeatureCase::Case3 => "linguistic + discretisation + other",
            FeatureCase::Case4 => "linguistic + other + user rating (no discretisation)",
            FeatureCase::Case5 => "linguistic + other + user rating (with discretisation)",
            FeatureCase::Case6 => "all features (answer and user rating with discretisation)",
        }
    }

    /// Features whose within-thread ranks enter this case.
    pub fn rank_features(self) -> &'static [Feature] {
        const NONE: [Feature; 0] = [];
        const CASE3: [Feature; 6] = [
            Feature::Length,
            Feature::AvgWordLength,
            Feature::WordsPerSentence,
            Feature::LongestSentence,
            Feature::VocabLogprob,
            Feature::CreationEpoch,
        ];
        const CASE5: [Feature; 7] = [
            Feature::Length,
            Feature::AvgWordLength,
            Feature::WordsPerSentence,
            Feature::LongestSentence,
            Feature::VocabLogprob,
            Feature::CreationEpoch,
            Feature::Reputation,
        ];
        const CASE6: [Feature; 8] = [
            Feature::Length,
            Feature::AvgWordLength,
            Feature::WordsPerSentence,
            Feature::LongestSentence,
            Feature::VocabLogprob,
            Feature::CreationEpoch,
            Feature::Reputation,
            Feature::Score,
        ];
        match self {
            FeatureCase::Case1 | FeatureCase::Case4 => &NONE,
            FeatureCase::Case2 => &Feature::LINGUISTIC,
            FeatureCase::Case3 => &CASE3,
            FeatureCase::Case5 => &CASE5,
            FeatureCase::Case6 => &CASE6,
        }
    }

    pub fn has_rank_features(self) -> bool {
        !self.rank_features().is_empty()
    }

    /// Cases that consume owner reputation need a corpus built with a user map.
    pub fn needs_reputation(self) -> bool {
        matches!(
            self,
            FeatureCase::Case4 | FeatureCase::Case5 | FeatureCase::Case6
        )
    }

    pub fn needs_score(self) -> bool {
        self == FeatureCase::Case6
    }
}

impl std::fmt::Display for FeatureCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "case {}", self.index())
    }
}

/// One dataset column: a raw feature value or its within-thread rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Raw(Feature),
    Rank(Feature),
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::Raw(f) => f.name(),
            Column::Rank(f) => f.rank_name(),
        }
    }

    /// Inverse of [`Column::name`], used to interpret persisted column lists.
    pub fn from_name(name: &str) -> Option<Column> {
        Feature::ALL.into_iter().find_map(|f| {
            if f.name() == name {
                Some(Column::Raw(f))
            } else if f.rank_name() == name {
                Some(Column::Rank(f))
            } else {
                None
            }
        })
    }
}

/// Ordered column composition of a case.
pub fn columns(case: FeatureCase) -> Vec<Column> {
    let mut cols: Vec<Column> = Feature::LINGUISTIC.map(Column::Raw).to_vec();
    match case {
        FeatureCase::Case1 => {}
        FeatureCase::Case2 => {
            cols.extend(Feature::LINGUISTIC.map(Column::Rank));
        }
        FeatureCase::Case3 => {
            cols.extend(Feature::LINGUISTIC.map(Column::Rank));
            cols.push(Column::Raw(Feature::AnswerCount));
            cols.push(Column::Raw(Feature::CreationEpoch));
            cols.push(Column::Rank(Feature::CreationEpoch));
        }
        FeatureCase::Case4 => {
            cols.push(Column::Raw(Feature::AnswerCount));
            cols.push(Column::Raw(Feature::CreationEpoch));
            cols.push(Column::Raw(Feature::Reputation));
        }
        FeatureCase::Case5 => {
            cols = columns(FeatureCase::Case3);
            cols.push(Column::Raw(Feature::Reputation));
            cols.push(Column::Rank(Feature::Reputation));
        }
        FeatureCase::Case6 => {
            cols = columns(FeatureCase::Case5);
            cols.push(Column::Raw(Feature::Score));
            cols.push(Column::Rank(Feature::Score));
        }
    }
    cols
}

/// Ordered column names of a case.
pub fn feature_names(case: FeatureCase) -> Vec<&'static str> {
    columns(case).into_iter().map(Column::name).collect()
}

/// One answer's example row: values aligned to the dataset's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleRow<T: Scalar> {
    pub question_id: u64,
    pub answer_id: u64,
    pub label: bool,
    pub values: Vec<T>,
}

/// Assembled rows for one case, grouped contiguously by question.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    pub case: FeatureCase,
    pub columns: Vec<Column>,
    pub rows: Vec<ExampleRow<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn feature_order(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name().to_owned()).collect()
    }

    pub fn n_positive(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }
}

/// Corpus with per-answer segmentation done once, shared across folds and
/// cases.
pub struct TokenizedCorpus<'a> {
    pub corpus: &'a SiteCorpus,
    /// tokens[thread_idx][answer_idx], aligned to the corpus
    pub tokens: Vec<Vec<TokenizedText>>,
}

impl<'a> TokenizedCorpus<'a> {
    pub fn new(corpus: &'a SiteCorpus) -> Self {
        let tokens = corpus
            .threads
            .par_iter()
            .map(|t| t.answers.iter().map(|a| segment(&a.body_text)).collect())
            .collect();
        TokenizedCorpus { corpus, tokens }
    }
}

/// All nine raw feature values per answer, plus labels, for a thread subset.
pub struct RawFeatureTable<T: Scalar> {
    pub threads: Vec<ThreadValues<T>>,
    /// labels[thread_idx][answer_idx], aligned to `threads`
    pub labels: Vec<Vec<bool>>,
}

impl<T: Scalar> RawFeatureTable<T> {
    /// Flatten into (is_accepted, values) rows aligned to `features`, the
    /// shape direction learning consumes.
    pub fn labeled_rows(&self, features: &[Feature]) -> Vec<(bool, Vec<T>)> {
        let mut rows = Vec::new();
        for (thread, labels) in self.threads.iter().zip(&self.labels) {
            for (answer, &label) in thread.answers.iter().zip(labels) {
                let values = features
                    .iter()
                    .map(|f| *answer.values.get(f).expect("all raw features present"))
                    .collect();
                rows.push((label, values));
            }
        }
        rows
    }
}

/// Compute every raw feature for the threads in `filter` (all when absent).
///
/// Vocabulary log-probability is scored under `model`; everything else is
/// independent of it. Threads come out sorted by question id.
pub fn raw_features<T: Scalar>(
    tc: &TokenizedCorpus<'_>,
    model: &BackgroundModel<T>,
    filter: Option<&BTreeSet<u64>>,
) -> RawFeatureTable<T> {
    let mut indices: Vec<usize> = (0..tc.corpus.threads.len())
        .filter(|&i| {
            filter
                .map(|keep| keep.contains(&tc.corpus.threads[i].question_id))
                .unwrap_or(true)
        })
        .collect();
    indices.sort_by_key(|&i| tc.corpus.threads[i].question_id);

    let per_thread: Vec<(ThreadValues<T>, Vec<bool>)> = indices
        .par_iter()
        .map(|&i| {
            let thread = &tc.corpus.threads[i];
            let n = thread.answers.len();
            let answer_count = T::from_usize_lossy(n);
            let mut answers = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for (answer, tokens) in thread.answers.iter().zip(&tc.tokens[i]) {
                let lf = compute_features(tokens, model);
                let values = [
                    (Feature::Length, lf.length),
                    (Feature::AvgWordLength, lf.avg_word_length),
                    (Feature::WordsPerSentence, lf.words_per_sentence),
                    (Feature::LongestSentence, lf.longest_sentence),
                    (Feature::VocabLogprob, lf.vocab_logprob),
                    (Feature::AnswerCount, answer_count),
                    (
                        Feature::CreationEpoch,
                        T::from_i64_lossy(answer.creation_date.timestamp()),
                    ),
                    (
                        Feature::Reputation,
                        T::from_u64(answer.owner_reputation).expect("reputation fits scalar"),
                    ),
                    (Feature::Score, T::from_i64_lossy(answer.score)),
                ]
                .into_iter()
                .collect();
                answers.push(AnswerValues {
                    answer_id: answer.id,
                    creation_date: answer.creation_date,
                    values,
                });
                labels.push(answer.is_accepted);
            }
            (
                ThreadValues {
                    question_id: thread.question_id,
                    answers,
                },
                labels,
            )
        })
        .collect();

    let (threads, labels) = per_thread.into_iter().unzip();
    RawFeatureTable { threads, labels }
}

/// Assemble a dataset from a precomputed feature table.
pub fn assemble_from_table<T: Scalar>(
    table: &RawFeatureTable<T>,
    case: FeatureCase,
    profile: Option<&DirectionProfile<T>>,
) -> Result<Dataset<T>, DatasetError> {
    let rank_features = case.rank_features();
    let ranks = if rank_features.is_empty() {
        None
    } else {
        let profile = profile.ok_or(DatasetError::MissingProfile { case })?;
        Some(discretise::discretise_threads(
            &table.threads,
            rank_features,
            profile,
        )?)
    };

    let cols = columns(case);
    let mut rows = Vec::new();
    for (t_idx, (thread, labels)) in table.threads.iter().zip(&table.labels).enumerate() {
        if !labels.iter().any(|&l| l) {
            return Err(DatasetError::UnresolvedThread {
                question_id: thread.question_id,
            });
        }
        let mut order: Vec<usize> = (0..thread.answers.len()).collect();
        order.sort_by_key(|&a| thread.answers[a].answer_id);
        for a_idx in order {
            let answer = &thread.answers[a_idx];
            let values = cols
                .iter()
                .map(|col| match col {
                    Column::Raw(f) => *answer.values.get(f).expect("all raw features present"),
                    Column::Rank(f) => {
                        let rank = ranks.as_ref().expect("ranks computed for rank cases")[t_idx]
                            [a_idx]
                            .get(*f)
                            .expect("rank computed for every rank feature");
                        T::from_usize_lossy(rank)
                    }
                })
                .collect();
            rows.push(ExampleRow {
                question_id: thread.question_id,
                answer_id: answer.answer_id,
                label: labels[a_idx],
                values,
            });
        }
    }
    Ok(Dataset {
        case,
        columns: cols,
        rows,
    })
}

/// One row per answer of `corpus` for `case`.
///
/// `profile` is required exactly when the case includes rank features; the
/// corpus must be resolved-only.
pub fn assemble<T: Scalar>(
    corpus: &SiteCorpus,
    case: FeatureCase,
    model: &BackgroundModel<T>,
    profile: Option<&DirectionProfile<T>>,
) -> Result<Dataset<T>, DatasetError> {
    let tc = TokenizedCorpus::new(corpus);
    let table = raw_features(&tc, model, None);
    assemble_from_table(&table, case, profile)
}

/// Write a dataset as CSV: feature columns, then question_id, answer_id and
/// the 0/1 label. Rows are ordered by (question_id, answer_id), so equal
/// inputs export byte-identically.
pub fn write_dataset_csv<W: Write, T: Scalar>(
    out: W,
    dataset: &Dataset<T>,
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = dataset.feature_order();
    header.extend(["question_id".into(), "answer_id".into(), "label".into()]);
    w.write_record(&header)?;
    for row in &dataset.rows {
        let mut record: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        record.push(row.question_id.to_string());
        record.push(row.answer_id.to_string());
        record.push(if row.label { "1" } else { "0" }.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::ingest::{AnswerRecord, QuestionThread};
    use chrono::{DateTime, Utc};

    pub(crate) fn ts(minute: u64) -> DateTime<Utc> {
        crate::ingest::parse_timestamp("2013-06-01T00:00:00.000").unwrap()
            + chrono::Duration::minutes(minute as i64)
    }

    /// Thread whose answers have the given (id, token_count, accepted).
    pub(crate) fn thread(question_id: u64, answers: &[(u64, usize, bool)]) -> QuestionThread {
        let answers: Vec<AnswerRecord> = answers
            .iter()
            .map(|&(id, tokens, accepted)| AnswerRecord {
                id,
                creation_date: ts(id),
                score: (id % 7) as i64,
                owner_reputation: id * 10,
                body_text: vec!["word"; tokens].join(" "),
                is_accepted: accepted,
            })
            .collect();
        QuestionThread {
            question_id,
            creation_date: ts(0),
            accepted_answer_id: answers.iter().find(|a| a.is_accepted).map(|a| a.id),
            answer_count: answers.len(),
            answers,
        }
    }

    pub(crate) fn corpus(threads: Vec<QuestionThread>) -> SiteCorpus {
        SiteCorpus {
            site_name: "test".into(),
            threads,
        }
    }

    pub(crate) fn full_profile(
        corpus: &SiteCorpus,
        model: &BackgroundModel<f64>,
    ) -> DirectionProfile<f64> {
        let tc = TokenizedCorpus::new(corpus);
        let table = raw_features(&tc, model, None);
        let rankable: Vec<Feature> = Feature::ALL
            .into_iter()
            .filter(|f| f.is_rankable())
            .collect();
        crate::discretise::learn_directions(&rankable, &table.labeled_rows(&rankable)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::{corpus, full_profile, thread};
    use super::*;

    #[test]
    fn case_compositions() {
        assert_eq!(feature_names(FeatureCase::Case1).len(), 5);
        assert_eq!(feature_names(FeatureCase::Case2).len(), 10);
        assert_eq!(feature_names(FeatureCase::Case3).len(), 13);
        assert_eq!(feature_names(FeatureCase::Case4).len(), 8);
        assert_eq!(feature_names(FeatureCase::Case5).len(), 15);
        assert_eq!(feature_names(FeatureCase::Case6).len(), 17);

        assert_eq!(
            feature_names(FeatureCase::Case1),
            vec![
                "length",
                "avg_word_length",
                "words_per_sentence",
                "longest_sentence",
                "vocab_logprob"
            ]
        );
        assert!(feature_names(FeatureCase::Case3).contains(&"creation_rank"));
        assert!(feature_names(FeatureCase::Case4)
            .iter()
            .all(|n| !n.ends_with("_rank")));
        assert!(feature_names(FeatureCase::Case6).contains(&"score_rank"));
    }

    #[test]
    fn case_supersets() {
        let as_set = |case| {
            feature_names(case)
                .into_iter()
                .collect::<std::collections::BTreeSet<_>>()
        };
        assert!(as_set(FeatureCase::Case2).is_superset(&as_set(FeatureCase::Case1)));
        assert!(as_set(FeatureCase::Case3).is_superset(&as_set(FeatureCase::Case2)));
        assert!(as_set(FeatureCase::Case5).is_superset(&as_set(FeatureCase::Case3)));
        assert!(as_set(FeatureCase::Case6).is_superset(&as_set(FeatureCase::Case5)));
    }

    #[test]
    fn case_index_round_trip() {
        for case in FeatureCase::ALL {
            assert_eq!(FeatureCase::from_index(case.index()), Some(case));
        }
        assert_eq!(FeatureCase::from_index(0), None);
        assert_eq!(FeatureCase::from_index(7), None);
    }

    #[test]
    fn assemble_counts_rows_and_positives() {
        let c = corpus(vec![
            thread(1, &[(11, 10, false), (12, 20, true), (13, 5, false)]),
            thread(2, &[(21, 8, true), (22, 9, false)]),
        ]);
        let model = BackgroundModel::build([], 1.0);
        let ds = assemble(&c, FeatureCase::Case1, &model, None).unwrap();
        assert_eq!(ds.rows.len(), 5);
        assert_eq!(ds.n_positive(), 2);
        // grouped contiguously by question, ordered by answer id
        let ids: Vec<(u64, u64)> = ds
            .rows
            .iter()
            .map(|r| (r.question_id, r.answer_id))
            .collect();
        assert_eq!(ids, vec![(1, 11), (1, 12), (1, 13), (2, 21), (2, 22)]);
    }

    #[test]
    fn case1_ignores_profile() {
        let c = corpus(vec![thread(1, &[(11, 10, false), (12, 20, true)])]);
        let model = BackgroundModel::build([], 1.0);
        let profile = full_profile(&c, &model);
        let without = assemble(&c, FeatureCase::Case1, &model, None).unwrap();
        let with = assemble(&c, FeatureCase::Case1, &model, Some(&profile)).unwrap();
        assert_eq!(without, with);
    }

    #[test]
    fn rank_case_requires_profile() {
        let c = corpus(vec![thread(1, &[(11, 10, false), (12, 20, true)])]);
        let model = BackgroundModel::build([], 1.0);
        assert!(matches!(
            assemble(&c, FeatureCase::Case2, &model, None),
            Err(DatasetError::MissingProfile { .. })
        ));
    }

    #[test]
    fn unresolved_thread_rejected() {
        let c = corpus(vec![thread(1, &[(11, 10, false), (12, 20, false)])]);
        let model = BackgroundModel::build([], 1.0);
        assert!(matches!(
            assemble(&c, FeatureCase::Case1, &model, None),
            Err(DatasetError::UnresolvedThread { question_id: 1 })
        ));
    }

    #[test]
    fn length_ranks_match_two_question_fixture() {
        // question 1: lengths 200/150/250 for answers 2/3/4
        // question 5: lengths 250/200 for answers 6/7
        let c = corpus(vec![
            thread(1, &[(2, 200, false), (3, 150, false), (4, 250, true)]),
            thread(5, &[(6, 250, true), (7, 200, false)]),
        ]);
        let model = BackgroundModel::build([], 1.0);
        let profile = full_profile(&c, &model);
        let ds = assemble(&c, FeatureCase::Case2, &model, Some(&profile)).unwrap();

        let names = ds.feature_order();
        let col = names.iter().position(|n| n == "length_rank").unwrap();
        let ranks: Vec<f64> = ds.rows.iter().map(|r| r.values[col]).collect();
        assert_eq!(ranks, vec![2.0, 3.0, 1.0, 1.0, 2.0]);

        let raw_col = names.iter().position(|n| n == "length").unwrap();
        let lengths: Vec<f64> = ds.rows.iter().map(|r| r.values[raw_col]).collect();
        assert_eq!(lengths, vec![200.0, 150.0, 250.0, 250.0, 200.0]);
    }

    #[test]
    fn exactly_one_positive_per_thread() {
        let c = corpus(vec![
            thread(1, &[(11, 10, false), (12, 20, true), (13, 5, false)]),
            thread(2, &[(21, 8, true), (22, 9, false)]),
        ]);
        let model = BackgroundModel::build([], 1.0);
        let ds = assemble(
            &c,
            FeatureCase::Case6,
            &model,
            Some(&full_profile(&c, &model)),
        )
        .unwrap();
        let mut per_thread = std::collections::BTreeMap::new();
        for row in &ds.rows {
            *per_thread.entry(row.question_id).or_insert(0usize) += usize::from(row.label);
        }
        assert!(per_thread.values().all(|&n| n == 1));
    }

    #[test]
    fn csv_export_is_byte_stable() {
        let c = corpus(vec![
            thread(1, &[(11, 10, false), (12, 20, true)]),
            thread(2, &[(21, 8, true), (22, 9, false), (23, 30, false)]),
        ]);
        let tc = TokenizedCorpus::new(&c);
        let model: BackgroundModel<f64> = BackgroundModel::build(tc.tokens.iter().flatten(), 1.0);
        let profile = full_profile(&c, &model);

        let mut first = Vec::new();
        let ds1 = assemble(&c, FeatureCase::Case6, &model, Some(&profile)).unwrap();
        write_dataset_csv(&mut first, &ds1).unwrap();

        let mut second = Vec::new();
        let ds2 = assemble(&c, FeatureCase::Case6, &model, Some(&profile)).unwrap();
        write_dataset_csv(&mut second, &ds2).unwrap();

        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("length,"));
        assert_eq!(text.lines().count(), 1 + ds1.rows.len());
    }
}
