//! The raw per-answer features the pipeline knows about.

use serde::{Deserialize, Serialize};

/// A raw feature column. Rank columns are derived from these per thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Length,
    AvgWordLength,
    WordsPerSentence,
    LongestSentence,
    VocabLogprob,
    AnswerCount,
    CreationEpoch,
    Reputation,
    Score,
}

impl Feature {
    /// The five shallow linguistic features.
    pub const LINGUISTIC: [Feature; 5] = [
        Feature::Length,
        Feature::AvgWordLength,
        Feature::WordsPerSentence,
        Feature::LongestSentence,
        Feature::VocabLogprob,
    ];

    pub const ALL: [Feature; 9] = [
        Feature::Length,
        Feature::AvgWordLength,
        Feature::WordsPerSentence,
        Feature::LongestSentence,
        Feature::VocabLogprob,
        Feature::AnswerCount,
        Feature::CreationEpoch,
        Feature::Reputation,
        Feature::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Length => "length",
            Feature::AvgWordLength => "avg_word_length",
            Feature::WordsPerSentence => "words_per_sentence",
            Feature::LongestSentence => "longest_sentence",
            Feature::VocabLogprob => "vocab_logprob",
            Feature::AnswerCount => "answer_count",
            Feature::CreationEpoch => "creation_epoch",
            Feature::Reputation => "reputation",
            Feature::Score => "score",
        }
    }

    /// Column name of this feature's within-thread rank.
    pub fn rank_name(self) -> &'static str {
        match self {
            Feature::Length => "length_rank",
            Feature::AvgWordLength => "avg_word_length_rank",
            Feature::WordsPerSentence => "words_per_sentence_rank",
            Feature::LongestSentence => "longest_sentence_rank",
            Feature::VocabLogprob => "vocab_logprob_rank",
            Feature::CreationEpoch => "creation_rank",
            Feature::Reputation => "reputation_rank",
            Feature::Score => "score_rank",
            // constant within a group, so a rank would be degenerate
            Feature::AnswerCount => "answer_count_rank",
        }
    }

    /// AnswerCount is constant within a thread and is never discretised.
    pub fn is_rankable(self) -> bool {
        self != Feature::AnswerCount
    }
}

impl std::fmt::Display for Feature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_names_match_display() {
        for feature in Feature::ALL {
            let json = serde_json::to_string(&feature).unwrap();
            assert_eq!(json, format!("\"{}\"", feature.name()));
        }
    }
}
