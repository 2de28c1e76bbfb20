//! Dump ingestion: linked question threads with accepted-answer labels.
//!
//! `Posts.xml` rows become [`RawPost`]s, which [`build_corpus`] links into
//! [`QuestionThread`]s: answers joined to questions by `ParentId`, acceptance
//! derived from the question's `AcceptedAnswerId`, owner reputation looked up
//! from `Users.xml`, and bodies stripped to plain text. Linking is
//! order-tolerant, so answers may precede their question in file order.

mod xml;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textfeat::strip_markup;

pub use xml::{parse_posts, parse_timestamp, parse_users, PostsReader};

/// Version tag written into persisted corpus files.
pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at byte offset {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("post row {row_id}: {message}")]
    Record { row_id: u64, message: String },
    #[error("corpus file: {0}")]
    Corpus(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Post classification from `PostTypeId`: 1 is a question, 2 an answer,
/// anything else is other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostType {
    Question,
    Answer,
    Other,
}

/// One `Posts.xml` row, attributes echoed as typed fields.
#[derive(Debug, Clone)]
pub struct RawPost {
    pub id: u64,
    pub post_type: PostType,
    pub parent_id: Option<u64>,
    pub accepted_answer_id: Option<u64>,
    pub creation_date: DateTime<Utc>,
    pub score: i64,
    pub body: String,
    pub owner_user_id: Option<u64>,
    pub answer_count: Option<u32>,
}

/// An answer linked into its thread, body already markup-stripped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub id: u64,
    pub creation_date: DateTime<Utc>,
    pub score: i64,
    pub owner_reputation: u64,
    pub body_text: String,
    pub is_accepted: bool,
}

/// A question with its candidate answers, ordered by (creation date, id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionThread {
    pub question_id: u64,
    pub creation_date: DateTime<Utc>,
    pub accepted_answer_id: Option<u64>,
    pub answers: Vec<AnswerRecord>,
    pub answer_count: usize,
}

impl QuestionThread {
    pub fn accepted_answer(&self) -> Option<&AnswerRecord> {
        self.answers.iter().find(|a| a.is_accepted)
    }

    pub fn is_resolved(&self) -> bool {
        self.accepted_answer().is_some()
    }
}

/// All retained threads of one site.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SiteCorpus {
    pub site_name: String,
    pub threads: Vec<QuestionThread>,
}

impl SiteCorpus {
    pub fn total_answers(&self) -> usize {
        self.threads.iter().map(|t| t.answers.len()).sum()
    }
}

/// Markup handling applied to answer bodies at ingest time.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MarkupOptions {
    /// Keep the text inside `code`/`pre` elements.
    pub keep_code: bool,
}

/// Thread filters and markup policy for [`build_corpus`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Threads with fewer answers are dropped. With one candidate there is
    /// nothing to rank, so the default is 2.
    pub min_answers: usize,
    /// Drop threads without a linked accepted answer.
    pub resolved_only: bool,
    pub markup: MarkupOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            min_answers: 2,
            resolved_only: true,
            markup: MarkupOptions::default(),
        }
    }
}

/// Raw tallies from one [`build_corpus`] run.
///
/// `resolved_questions` is counted over every parsed question before any
/// filtering, so `resolved_fraction` matches the dump, not the retained
/// corpus. `answers_seen` counts every answer row; the retained corpus may
/// hold fewer (see `orphan_answers` and `answers_of_dropped_threads`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub questions_seen: usize,
    pub answers_seen: usize,
    pub other_posts: usize,
    pub record_errors: usize,
    pub resolved_questions: usize,
    pub orphan_answers: usize,
    pub threads_dropped_min_answers: usize,
    pub threads_dropped_unresolved: usize,
    pub answers_of_dropped_threads: usize,
}

impl IngestCounts {
    /// Fraction of parsed questions with a linked accepted answer.
    pub fn resolved_fraction(&self) -> f64 {
        if self.questions_seen == 0 {
            0.0
        } else {
            self.resolved_questions as f64 / self.questions_seen as f64
        }
    }
}

/// A built corpus together with its ingest tallies.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub corpus: SiteCorpus,
    pub counts: IngestCounts,
}

/// Link posts into threads and apply the configured filters.
///
/// Fatal XML errors abort; record-level errors are counted and skipped.
/// Answers whose question never appears are dropped as orphans. Undersized
/// threads are dropped before the resolved-only filter, so each dropped
/// thread is counted exactly once.
pub fn build_corpus<I>(
    posts: I,
    users: &HashMap<u64, u64>,
    site_name: &str,
    options: &BuildOptions,
) -> Result<BuildOutcome, IngestError>
where
    I: IntoIterator<Item = Result<RawPost, IngestError>>,
{
    assert!(options.min_answers >= 1, "min_answers must be at least 1");
    let mut counts = IngestCounts::default();
    let mut questions: BTreeMap<u64, RawPost> = BTreeMap::new();
    let mut answers: Vec<RawPost> = Vec::new();

    for post in posts {
        let post = match post {
            Ok(post) => post,
            Err(err @ IngestError::Xml { .. }) => return Err(err),
            Err(_) => {
                counts.record_errors += 1;
                continue;
            }
        };
        match post.post_type {
            PostType::Question => {
                counts.questions_seen += 1;
                questions.insert(post.id, post);
            }
            PostType::Answer => {
                counts.answers_seen += 1;
                answers.push(post);
            }
            PostType::Other => counts.other_posts += 1,
        }
    }

    let mut linked: BTreeMap<u64, Vec<RawPost>> = BTreeMap::new();
    for answer in answers {
        let parent = answer.parent_id.expect("answers always carry a parent id");
        if questions.contains_key(&parent) {
            linked.entry(parent).or_default().push(answer);
        } else {
            counts.orphan_answers += 1;
        }
    }

    let mut threads = Vec::new();
    for (question_id, question) in &questions {
        let mut raw_answers = linked.remove(question_id).unwrap_or_default();
        raw_answers.sort_by_key(|a| (a.creation_date, a.id));

        let accepted_id = question.accepted_answer_id;
        let resolved = accepted_id
            .map(|id| raw_answers.iter().any(|a| a.id == id))
            .unwrap_or(false);
        if resolved {
            counts.resolved_questions += 1;
        }

        if raw_answers.len() < options.min_answers {
            counts.threads_dropped_min_answers += 1;
            counts.answers_of_dropped_threads += raw_answers.len();
            continue;
        }
        if options.resolved_only && !resolved {
            counts.threads_dropped_unresolved += 1;
            counts.answers_of_dropped_threads += raw_answers.len();
            continue;
        }

        let answer_count = raw_answers.len();
        let records = raw_answers
            .into_iter()
            .map(|a| AnswerRecord {
                is_accepted: resolved && accepted_id == Some(a.id),
                owner_reputation: a
                    .owner_user_id
                    .and_then(|uid| users.get(&uid).copied())
                    .unwrap_or(0),
                body_text: strip_markup(&a.body, options.markup.keep_code),
                id: a.id,
                creation_date: a.creation_date,
                score: a.score,
            })
            .collect();
        threads.push(QuestionThread {
            question_id: *question_id,
            creation_date: question.creation_date,
            accepted_answer_id: if resolved { accepted_id } else { None },
            answers: records,
            answer_count,
        });
    }

    Ok(BuildOutcome {
        corpus: SiteCorpus {
            site_name: site_name.to_owned(),
            threads,
        },
        counts,
    })
}

/// Counts derivable from a built corpus, plus the ingest tallies when known.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub threads: usize,
    pub answers: usize,
    pub accepted_answers: usize,
    /// accepted answers / total answers in the corpus
    pub accepted_rate: f64,
    pub resolved_threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_fraction_of_dump: Option<f64>,
}

/// Summarise a corpus. Pass the ingest tallies to also report dump-level
/// drop counts and the resolved fraction.
pub fn corpus_stats(corpus: &SiteCorpus, ingest: Option<&IngestCounts>) -> CorpusStats {
    let answers = corpus.total_answers();
    let accepted = corpus
        .threads
        .iter()
        .flat_map(|t| &t.answers)
        .filter(|a| a.is_accepted)
        .count();
    CorpusStats {
        threads: corpus.threads.len(),
        answers,
        accepted_answers: accepted,
        accepted_rate: if answers == 0 {
            0.0
        } else {
            accepted as f64 / answers as f64
        },
        resolved_threads: corpus.threads.iter().filter(|t| t.is_resolved()).count(),
        ingest: ingest.cloned(),
        resolved_fraction_of_dump: ingest.map(IngestCounts::resolved_fraction),
    }
}

/// Everything recorded alongside the threads in a persisted corpus file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub format_version: u32,
    pub site_name: String,
    /// Whether a `Users.xml` reputation map was supplied at ingest time.
    /// Reputation-based feature cases refuse corpora built without one.
    pub has_reputations: bool,
    pub options: BuildOptions,
    pub counts: IngestCounts,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum CorpusLine {
    Header(CorpusMeta),
    Thread(QuestionThread),
}

/// Write a corpus as line-delimited JSON: one header record, then one
/// thread record per line.
pub fn write_corpus<W: Write>(
    mut out: W,
    corpus: &SiteCorpus,
    meta: &CorpusMeta,
) -> Result<(), IngestError> {
    let header = serde_json::to_string(&CorpusLine::Header(meta.clone()))
        .map_err(|e| IngestError::Corpus(e.to_string()))?;
    writeln!(out, "{header}")?;
    for thread in &corpus.threads {
        // serialize by reference to avoid cloning every thread
        #[derive(Serialize)]
        #[serde(tag = "record", rename_all = "snake_case")]
        enum Line<'a> {
            Thread(&'a QuestionThread),
        }
        let line = serde_json::to_string(&Line::Thread(thread))
            .map_err(|e| IngestError::Corpus(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a corpus written by [`write_corpus`].
pub fn read_corpus<R: BufRead>(input: R) -> Result<(SiteCorpus, CorpusMeta), IngestError> {
    let mut meta: Option<CorpusMeta> = None;
    let mut threads = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = serde_json::from_str(&line)
            .map_err(|e| IngestError::Corpus(format!("line {}: {e}", idx + 1)))?;
        match parsed {
            CorpusLine::Header(m) => {
                if m.format_version != CORPUS_FORMAT_VERSION {
                    return Err(IngestError::Corpus(format!(
                        "unsupported corpus format version {} (expected {})",
                        m.format_version, CORPUS_FORMAT_VERSION
                    )));
                }
                if meta.replace(m).is_some() {
                    return Err(IngestError::Corpus("duplicate header record".into()));
                }
            }
            CorpusLine::Thread(t) => threads.push(t),
        }
    }
    let meta = meta.ok_or_else(|| IngestError::Corpus("missing header record".into()))?;
    Ok((
        SiteCorpus {
            site_name: meta.site_name.clone(),
            threads,
        },
        meta,
    ))
}
