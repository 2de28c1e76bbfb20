//! Seeded synthetic corpora for tests and demos.
//!
//! Threads get 2–6 answers with controlled token counts; the accepted answer
//! is the one maximising `length + gaussian noise`, so length carries the
//! signal with tunable label noise. A per-site affine stretch of the token
//! counts simulates cross-site shifts in raw text statistics: strictly
//! increasing, so within-thread ranks are unaffected.

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{parse_timestamp, AnswerRecord, QuestionThread, SiteCorpus};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub site_name: String,
    pub n_threads: usize,
    pub seed: u64,
    /// Added to every question/answer id so merged sites stay disjoint.
    pub id_offset: u64,
    /// Inclusive range of answers per thread.
    pub answers: (usize, usize),
    /// Inclusive range of base token counts per answer.
    pub base_tokens: (usize, usize),
    /// Noise added to the token count when picking the accepted answer.
    pub noise_sigma: f64,
    /// Site distortion: emitted tokens = base * token_scale + token_offset.
    pub token_scale: usize,
    pub token_offset: usize,
    /// Tokens per sentence.
    pub sentence_len: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            site_name: "synthetic".into(),
            n_threads: 100,
            seed: 7,
            id_offset: 0,
            answers: (2, 6),
            base_tokens: (30, 330),
            noise_sigma: 25.0,
            token_scale: 1,
            token_offset: 0,
            sentence_len: 8,
        }
    }
}

/// Pool of words with varying lengths, so word-length statistics move a bit.
fn word_pool() -> Vec<String> {
    (0..64u8)
        .map(|i| {
            let letter = (b'a' + i % 26) as char;
            let len = 2 + (i as usize % 9);
            std::iter::repeat_n(letter, len).collect()
        })
        .collect()
}

fn body(tokens: usize, sentence_len: usize, pool: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(tokens * 6);
    for i in 0..tokens {
        out.push_str(&pool[rng.gen_range(0..pool.len())]);
        if (i + 1) % sentence_len == 0 || i + 1 == tokens {
            out.push_str(". ");
        } else {
            out.push(' ');
        }
    }
    out.trim_end().to_owned()
}

/// Generate a resolved corpus per `config`. Deterministic in the seed.
pub fn synth_corpus(config: &SynthConfig) -> SiteCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sigma).expect("valid sigma");
    let pool = word_pool();
    let start = parse_timestamp("2013-01-01T00:00:00.000").unwrap();

    let mut threads = Vec::with_capacity(config.n_threads);
    for t in 0..config.n_threads {
        let question_id = config.id_offset + (t as u64) * 100 + 1;
        let n_answers = rng.gen_range(config.answers.0..=config.answers.1);

        let base: Vec<usize> = (0..n_answers)
            .map(|_| rng.gen_range(config.base_tokens.0..=config.base_tokens.1))
            .collect();
        let accepted_idx = base
            .iter()
            .enumerate()
            .map(|(i, &b)| (i, b as f64 + noise.sample(&mut rng)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .map(|(i, _)| i)
            .expect("at least one answer");

        let question_date = start + Duration::minutes(t as i64 * 90);
        let answers: Vec<AnswerRecord> = base
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let accepted = i == accepted_idx;
                let tokens = b * config.token_scale + config.token_offset;
                let score_noise: f64 = noise.sample(&mut rng) / config.noise_sigma;
                AnswerRecord {
                    id: question_id + 1 + i as u64,
                    creation_date: question_date + Duration::minutes(1 + i as i64),
                    score: (if accepted { 6.0 } else { 2.0 } + 3.0 * score_noise).round() as i64,
                    owner_reputation: rng.gen_range(1..2000)
                        + if accepted { rng.gen_range(0..500) } else { 0 },
                    body_text: body(tokens, config.sentence_len, &pool, &mut rng),
                    is_accepted: accepted,
                }
            })
            .collect();

        threads.push(QuestionThread {
            question_id,
            creation_date: question_date,
            accepted_answer_id: Some(answers[accepted_idx].id),
            answer_count: answers.len(),
            answers,
        });
    }
    SiteCorpus {
        site_name: config.site_name.clone(),
        threads,
    }
}

/// Pool several sites into one corpus. Ids must already be disjoint
/// (use `id_offset`).
pub fn merge_corpora(site_name: &str, corpora: Vec<SiteCorpus>) -> SiteCorpus {
    let mut threads: Vec<QuestionThread> = corpora.into_iter().flat_map(|c| c.threads).collect();
    threads.sort_by_key(|t| t.question_id);
    SiteCorpus {
        site_name: site_name.to_owned(),
        threads,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_resolved() {
        let config = SynthConfig {
            n_threads: 20,
            ..SynthConfig::default()
        };
        let a = synth_corpus(&config);
        let b = synth_corpus(&config);
        assert_eq!(a, b);
        for thread in &a.threads {
            assert!(thread.is_resolved());
            assert!(thread.answers.len() >= 2);
            assert_eq!(
                thread.answers.iter().filter(|x| x.is_accepted).count(),
                1
            );
        }
    }

    #[test]
    fn token_offset_shifts_lengths() {
        let base = SynthConfig {
            n_threads: 5,
            ..SynthConfig::default()
        };
        let shifted = SynthConfig {
            token_offset: 150,
            ..base.clone()
        };
        let a = synth_corpus(&base);
        let b = synth_corpus(&shifted);
        // same rng stream, so answer i has exactly 150 more tokens
        let count = |s: &str| s.split_whitespace().count();
        let a0 = count(&a.threads[0].answers[0].body_text);
        let b0 = count(&b.threads[0].answers[0].body_text);
        assert_eq!(b0, a0 + 150);
    }

    #[test]
    fn merged_sites_have_unique_ids() {
        let a = synth_corpus(&SynthConfig {
            n_threads: 10,
            ..SynthConfig::default()
        });
        let b = synth_corpus(&SynthConfig {
            n_threads: 10,
            id_offset: 1_000_000,
            seed: 8,
            ..SynthConfig::default()
        });
        let merged = merge_corpora("pooled", vec![a, b]);
        assert_eq!(merged.threads.len(), 20);
        let mut qids: Vec<u64> = merged.threads.iter().map(|t| t.question_id).collect();
        qids.dedup();
        assert_eq!(qids.len(), 20);
        let mut aids: Vec<u64> = merged
            .threads
            .iter()
            .flat_map(|t| t.answers.iter().map(|a| a.id))
            .collect();
        aids.sort_unstable();
        aids.dedup();
        assert_eq!(aids.len(), merged.total_answers());
    }
}
