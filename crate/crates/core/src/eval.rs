//! Grouped k-fold evaluation of the feature cases.
//!
//! Folds partition *questions*, never single answers: all answers of a thread
//! share a fold, because within-thread ranks tie them together. For each
//! fold, the background model and the direction profile are learned from the
//! training threads only, both partitions are assembled with those artifacts,
//! and the classifier is scored on the held-out rows with positive-class
//! precision/recall/F at probability threshold 0.5 plus rank-based AUC.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    assemble_from_table, raw_features, DatasetError, FeatureCase, TokenizedCorpus,
};
use crate::discretise::{learn_directions, DirectionProfile, DiscretiseError};
use crate::features::Feature;
use crate::ingest::SiteCorpus;
use crate::model::{train, ClassifierConfig, ModelError};
use crate::scalar::Scalar;
use crate::textfeat::BackgroundModel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("{questions} questions cannot fill {k} folds")]
    TooFewQuestions { questions: usize, k: usize },
    #[error("AUC needs both classes, input has only one")]
    SingleClass,
    #[error("input is empty")]
    Empty,
    #[error("reports mix cases {0} and {1}")]
    MixedCases(FeatureCase, FeatureCase),
    #[error("thread {question_id}: {reason}")]
    InvalidCorpus { question_id: u64, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Discretise(#[from] DiscretiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Positive-class evaluation metrics, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Metrics<T: Scalar> {
    pub precision: T,
    pub recall: T,
    pub f_measure: T,
    pub auc: T,
}

impl<T: Scalar> Metrics<T> {
    pub fn mean_of(items: &[Metrics<T>]) -> Metrics<T> {
        let n = T::from_usize_lossy(items.len());
        Metrics {
            precision: items.iter().map(|m| m.precision).sum::<T>() / n,
            recall: items.iter().map(|m| m.recall).sum::<T>() / n,
            f_measure: items.iter().map(|m| m.f_measure).sum::<T>() / n,
            auc: items.iter().map(|m| m.auc).sum::<T>() / n,
        }
    }
}

/// One cross-validation split over question ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: BTreeSet<u64>,
    pub test: BTreeSet<u64>,
}

/// Partition questions into `k` folds, stratifying roughly by thread size.
///
/// Questions are shuffled with `seed`, stably sorted by answer count
/// (largest first) and dealt round-robin, so fold sizes differ by at most
/// one and every question lands in exactly one test set.
pub fn grouped_kfold(
    questions: &[(u64, usize)],
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>, EvalError> {
    if k < 2 {
        return Err(EvalError::KTooSmall(k));
    }
    if questions.len() < k {
        return Err(EvalError::TooFewQuestions {
            questions: questions.len(),
            k,
        });
    }
    let mut order: Vec<(u64, usize)> = questions.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.sort_by_key(|&(_, n_answers)| std::cmp::Reverse(n_answers));

    let mut tests: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); k];
    for (i, (qid, _)) in order.into_iter().enumerate() {
        tests[i % k].insert(qid);
    }
    let all: BTreeSet<u64> = questions.iter().map(|&(qid, _)| qid).collect();
    Ok(tests
        .into_iter()
        .enumerate()
        .map(|(fold, test)| FoldSplit {
            fold,
            train: all.difference(&test).copied().collect(),
            test,
        })
        .collect())
}

/// Rank-based AUC (Mann–Whitney with midrank tie handling):
/// `(Σ ranks of positives − n⁺(n⁺+1)/2) / (n⁺ n⁻)`.
pub fn roc_auc<T: Scalar>(labels: &[bool], scores: &[T]) -> Result<T, EvalError> {
    assert_eq!(labels.len(), scores.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // midranks over tied runs
    let mut rank_sum_pos = T::zero();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share midrank ((i+1) + (j+1)) / 2
        let midrank = T::from_usize_lossy(i + j + 2) / T::from_f64_lossy(2.0);
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos = rank_sum_pos + midrank;
            }
        }
        i = j + 1;
    }
    let np = T::from_usize_lossy(n_pos);
    let nn = T::from_usize_lossy(n_neg);
    let min_sum = np * (np + T::one()) / T::from_f64_lossy(2.0);
    Ok((rank_sum_pos - min_sum) / (np * nn))
}

/// Positive-class precision, recall and F-measure at fixed predictions.
/// Zero denominators yield zero by convention.
pub fn binary_metrics<T: Scalar>(labels: &[bool], predicted: &[bool]) -> (T, T, T) {
    assert_eq!(labels.len(), predicted.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&label, &pred) in labels.iter().zip(predicted) {
        match (label, pred) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(num) / T::from_usize_lossy(den)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    // harmonic mean of precision and recall, in integer-ratio form
    let f_measure = ratio(2 * tp, 2 * tp + fp + fn_);
    (precision, recall, f_measure)
}

/// Cross-validated results for one case on one site.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CaseReport<T: Scalar> {
    pub site_name: String,
    pub case: FeatureCase,
    pub folds: Vec<Metrics<T>>,
    pub mean: Metrics<T>,
    pub config_digest: String,
    pub seed: u64,
    /// Convention notes, recorded so numbers are comparable across tools.
    pub metrics_convention: String,
    pub fold_grouping: String,
}

const METRICS_CONVENTION: &str =
    "positive-class (accepted) precision/recall/F at probability threshold 0.5; rank AUC";
const FOLD_GROUPING: &str = "folds partition questions; all answers of a question share a fold";

fn rankable_features() -> Vec<Feature> {
    Feature::ALL.into_iter().filter(|f| f.is_rankable()).collect()
}

/// Background model and direction profile learned from the training side of
/// one fold. Test-fold text never reaches the model; test-fold labels never
/// reach direction learning.
pub fn fold_artifacts<T: Scalar>(
    corpus: &SiteCorpus,
    split: &FoldSplit,
    alpha: T,
) -> Result<(BackgroundModel<T>, DirectionProfile<T>), EvalError> {
    let tc = TokenizedCorpus::new(corpus);
    let (bg, profile, _) = fold_artifacts_cached(&tc, &split.train, alpha)?;
    Ok((bg, profile))
}

type FoldArtifacts<T> = (
    BackgroundModel<T>,
    DirectionProfile<T>,
    crate::dataset::RawFeatureTable<T>,
);

fn fold_artifacts_cached<'a, T: Scalar>(
    tc: &'a TokenizedCorpus<'a>,
    train: &BTreeSet<u64>,
    alpha: T,
) -> Result<FoldArtifacts<T>, EvalError> {
    let train_tokens = tc
        .corpus
        .threads
        .iter()
        .zip(&tc.tokens)
        .filter(|(thread, _)| train.contains(&thread.question_id))
        .flat_map(|(_, tokens)| tokens.iter());
    let bg = BackgroundModel::build(train_tokens, alpha);
    let table = raw_features(tc, &bg, Some(train));
    let features = rankable_features();
    let profile = learn_directions(&features, &table.labeled_rows(&features))?;
    Ok((bg, profile, table))
}

fn validate_eval_corpus(corpus: &SiteCorpus) -> Result<(), EvalError> {
    for thread in &corpus.threads {
        if thread.answers.len() < 2 {
            return Err(EvalError::InvalidCorpus {
                question_id: thread.question_id,
                reason: "fewer than 2 answers".into(),
            });
        }
        if !thread.is_resolved() {
            return Err(EvalError::InvalidCorpus {
                question_id: thread.question_id,
                reason: "no accepted answer".into(),
            });
        }
    }
    Ok(())
}

/// Evaluate several cases over the same folds, sharing tokenisation and
/// per-fold artifacts. Folds run in parallel.
pub fn evaluate_cases<T: Scalar>(
    corpus: &SiteCorpus,
    cases: &[FeatureCase],
    k: usize,
    config: &ClassifierConfig,
    seed: u64,
    alpha: T,
) -> Result<Vec<CaseReport<T>>, EvalError> {
    validate_eval_corpus(corpus)?;
    let tc = TokenizedCorpus::new(corpus);
    let questions: Vec<(u64, usize)> = corpus
        .threads
        .iter()
        .map(|t| (t.question_id, t.answers.len()))
        .collect();
    let folds = grouped_kfold(&questions, k, seed)?;

    // per fold, metrics for every case
    let fold_metrics: Vec<Vec<Metrics<T>>> = folds
        .par_iter()
        .map(|split| -> Result<Vec<Metrics<T>>, EvalError> {
            let (bg, profile, train_table) = fold_artifacts_cached(&tc, &split.train, alpha)?;
            let bg_digest = bg.digest();
            let test_table = raw_features(&tc, &bg, Some(&split.test));
            let mut per_case = Vec::with_capacity(cases.len());
            for &case in cases {
                let train_ds = assemble_from_table(&train_table, case, Some(&profile))?;
                let test_ds = assemble_from_table(&test_table, case, Some(&profile))?;
                let model = train(&train_ds, config, &profile, &bg_digest, false)?;
                let labels: Vec<bool> = test_ds.rows.iter().map(|r| r.label).collect();
                let probs: Vec<T> = test_ds
                    .rows
                    .iter()
                    .map(|r| model.predict_proba(&r.values))
                    .collect::<Result<_, _>>()?;
                let half = T::from_f64_lossy(0.5);
                let predicted: Vec<bool> = probs.iter().map(|&p| p >= half).collect();
                let (precision, recall, f_measure) = binary_metrics(&labels, &predicted);
                let auc = roc_auc(&labels, &probs)?;
                per_case.push(Metrics {
                    precision,
                    recall,
                    f_measure,
                    auc,
                });
            }
            Ok(per_case)
        })
        .collect::<Result<_, _>>()?;

    Ok(cases
        .iter()
        .enumerate()
        .map(|(c_idx, &case)| {
            let per_fold: Vec<Metrics<T>> = fold_metrics.iter().map(|f| f[c_idx]).collect();
            CaseReport {
                site_name: corpus.site_name.clone(),
                case,
                mean: Metrics::mean_of(&per_fold),
                folds: per_fold,
                config_digest: config.digest(),
                seed,
                metrics_convention: METRICS_CONVENTION.into(),
                fold_grouping: FOLD_GROUPING.into(),
            }
        })
        .collect())
}

/// [`evaluate_cases`] for a single case.
pub fn evaluate_case<T: Scalar>(
    corpus: &SiteCorpus,
    case: FeatureCase,
    k: usize,
    config: &ClassifierConfig,
    seed: u64,
    alpha: T,
) -> Result<CaseReport<T>, EvalError> {
    Ok(evaluate_cases(corpus, &[case], k, config, seed, alpha)?
        .pop()
        .expect("one report per case"))
}

/// Unweighted mean of per-site mean metrics. All reports must share a case.
pub fn macro_average<T: Scalar>(reports: &[CaseReport<T>]) -> Result<Metrics<T>, EvalError> {
    let first = reports.first().ok_or(EvalError::Empty)?;
    for report in reports {
        if report.case != first.case {
            return Err(EvalError::MixedCases(first.case, report.case));
        }
    }
    let means: Vec<Metrics<T>> = reports.iter().map(|r| r.mean).collect();
    Ok(Metrics::mean_of(&means))
}

/// Render a report as CSV: one line per fold plus a mean line.
pub fn case_report_csv<T: Scalar>(report: &CaseReport<T>) -> String {
    let mut out = String::from("fold,precision,recall,f_measure,auc\n");
    for (i, m) in report.folds.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i, m.precision, m.recall, m.f_measure, m.auc
        ));
    }
    let m = &report.mean;
    out.push_str(&format!(
        "mean,{},{},{},{}\n",
        m.precision, m.recall, m.f_measure, m.auc
    ));
    out
}
