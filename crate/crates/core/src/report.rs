//! Temporal drift and cross-site summaries of the raw linguistic features.
//!
//! Answers are bucketed by UTC calendar month; each bucket reports feature
//! means (and optional standard deviations) split by accepted vs not.
//! Plot rendering is out of scope — the CSV feeds any external plotter.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{raw_features, TokenizedCorpus};
use crate::features::Feature;
use crate::ingest::SiteCorpus;
use crate::scalar::Scalar;
use crate::textfeat::BackgroundModel;

/// Mean and population standard deviation of one class in one bucket;
/// `None` when the class is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassSummary<T: Scalar> {
    pub mean: Option<T>,
    pub std: Option<T>,
}

/// Accepted vs non-accepted summary for one feature in one month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureSplit<T: Scalar> {
    pub accepted: ClassSummary<T>,
    pub other: ClassSummary<T>,
}

/// One month of activity: answer counts and per-feature class means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MonthlyPoint<T: Scalar> {
    /// Calendar month, `YYYY-MM`, UTC.
    pub month: String,
    pub n_answers: usize,
    pub n_accepted: usize,
    pub n_other: usize,
    pub features: BTreeMap<Feature, FeatureSplit<T>>,
}

#[derive(Default)]
struct Accumulator<T: Scalar> {
    n: usize,
    sums: Vec<T>,
    squares: Vec<T>,
}

impl<T: Scalar> Accumulator<T> {
    fn new() -> Self {
        Accumulator {
            n: 0,
            sums: vec![T::zero(); Feature::LINGUISTIC.len()],
            squares: vec![T::zero(); Feature::LINGUISTIC.len()],
        }
    }

    fn add(&mut self, values: &[T]) {
        self.n += 1;
        for ((sum, square), &v) in self.sums.iter_mut().zip(&mut self.squares).zip(values) {
            *sum = *sum + v;
            *square = *square + v * v;
        }
    }

    fn summary(&self, i: usize) -> ClassSummary<T> {
        if self.n == 0 {
            return ClassSummary {
                mean: None,
                std: None,
            };
        }
        let n = T::from_usize_lossy(self.n);
        let mean = self.sums[i] / n;
        let variance = (self.squares[i] / n - mean * mean).max(T::zero());
        ClassSummary {
            mean: Some(mean),
            std: Some(variance.sqrt()),
        }
    }
}

/// Bucket `corpus` answers by UTC month and split feature means by
/// acceptance. Months with no answers are omitted; output is ordered.
pub fn monthly_drift<T: Scalar>(
    corpus: &SiteCorpus,
    model: &BackgroundModel<T>,
) -> Vec<MonthlyPoint<T>> {
    let tc = TokenizedCorpus::new(corpus);
    let table = raw_features(&tc, model, None);

    let mut buckets: BTreeMap<String, (Accumulator<T>, Accumulator<T>)> = BTreeMap::new();
    for (thread, labels) in table.threads.iter().zip(&table.labels) {
        for (answer, &accepted) in thread.answers.iter().zip(labels) {
            let month = answer.creation_date.format("%Y-%m").to_string();
            let values: Vec<T> = Feature::LINGUISTIC
                .iter()
                .map(|f| *answer.values.get(f).expect("linguistic features present"))
                .collect();
            let bucket = buckets
                .entry(month)
                .or_insert_with(|| (Accumulator::new(), Accumulator::new()));
            if accepted {
                bucket.0.add(&values);
            } else {
                bucket.1.add(&values);
            }
        }
    }

    buckets
        .into_iter()
        .map(|(month, (acc, non))| MonthlyPoint {
            month,
            n_answers: acc.n + non.n,
            n_accepted: acc.n,
            n_other: non.n,
            features: Feature::LINGUISTIC
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    (
                        f,
                        FeatureSplit {
                            accepted: acc.summary(i),
                            other: non.summary(i),
                        },
                    )
                })
                .collect(),
        })
        .collect()
}

/// Write drift points as CSV.
///
/// Header: `month,n_answers` then `<feature>_accepted,<feature>_other` per
/// feature (plus `_std` pairs when `include_std`). Empty-class cells are
/// blank.
pub fn export_drift_csv<W: Write, T: Scalar>(
    out: W,
    points: &[MonthlyPoint<T>],
    include_std: bool,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["month".to_owned(), "n_answers".to_owned()];
    for f in Feature::LINGUISTIC {
        header.push(format!("{}_accepted", f.name()));
        header.push(format!("{}_other", f.name()));
    }
    if include_std {
        for f in Feature::LINGUISTIC {
            header.push(format!("{}_accepted_std", f.name()));
            header.push(format!("{}_other_std", f.name()));
        }
    }
    w.write_record(&header)?;

    let fmt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    for point in points {
        let mut record = vec![point.month.clone(), point.n_answers.to_string()];
        for f in Feature::LINGUISTIC {
            let split = &point.features[&f];
            record.push(fmt(split.accepted.mean));
            record.push(fmt(split.other.mean));
        }
        if include_std {
            for f in Feature::LINGUISTIC {
                let split = &point.features[&f];
                record.push(fmt(split.accepted.std));
                record.push(fmt(split.other.std));
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Overall raw linguistic feature means for one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SiteSummary<T: Scalar> {
    pub site_name: String,
    pub n_answers: usize,
    pub means: BTreeMap<Feature, T>,
}

/// Per-site mean of each raw linguistic feature over all answers.
///
/// Each site is scored under its own background model (built from all of its
/// answers with smoothing `alpha`). Sites without answers are excluded.
pub fn site_summary<T: Scalar>(corpora: &[SiteCorpus], alpha: T) -> Vec<SiteSummary<T>> {
    corpora
        .iter()
        .filter(|c| c.total_answers() > 0)
        .map(|corpus| {
            let tc = TokenizedCorpus::new(corpus);
            let model = BackgroundModel::build(tc.tokens.iter().flatten(), alpha);
            let table = raw_features(&tc, &model, None);
            let mut n = 0usize;
            let mut sums = vec![T::zero(); Feature::LINGUISTIC.len()];
            for thread in &table.threads {
                for answer in &thread.answers {
                    n += 1;
                    for (sum, f) in sums.iter_mut().zip(&Feature::LINGUISTIC) {
                        *sum = *sum + *answer.values.get(f).expect("linguistic present");
                    }
                }
            }
            SiteSummary {
                site_name: corpus.site_name.clone(),
                n_answers: n,
                means: Feature::LINGUISTIC
                    .iter()
                    .zip(&sums)
                    .map(|(&f, &sum)| (f, sum / T::from_usize_lossy(n)))
                    .collect(),
            }
        })
        .collect()
}
