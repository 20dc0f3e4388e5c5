use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, write_jsonl, LabeledSentence, MitiLabel};
use crate::error::{Error, Result};

/// Lowercased token tuple.
pub type NGram = Vec<String>;

/// Orders kept in an [`NGramIndex`].
pub const INDEXED_ORDERS: [usize; 2] = [4, 5];

/// Default frequency floor; an n-gram is indexed only when its count is
/// strictly greater.
pub const DEFAULT_MIN_FREQ: usize = 5;

/// Contiguous windows of length `n`.
pub fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    let count = if n == 0 { 0 } else { tokens.len().saturating_sub(n - 1) };
    (0..count).map(move |i| &tokens[i..i + n])
}

/// Indicative 4- and 5-grams per label with their within-label counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NGramIndex {
    by_label: BTreeMap<MitiLabel, BTreeMap<NGram, usize>>,
}

/// One line of the serialized index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramEntry {
    pub label: MitiLabel,
    pub ngram: NGram,
    pub freq: usize,
}

impl NGramIndex {
    pub fn is_empty(&self) -> bool {
        self.by_label.values().all(BTreeMap::is_empty)
    }

    pub fn len(&self) -> usize {
        self.by_label.values().map(BTreeMap::len).sum()
    }

    pub fn insert(&mut self, label: MitiLabel, ngram: NGram, freq: usize) {
        self.by_label.entry(label).or_default().insert(ngram, freq);
    }

    pub fn freq(&self, label: MitiLabel, ngram: &[String]) -> Option<usize> {
        self.by_label.get(&label)?.get(ngram).copied()
    }

    /// Labels under which `ngram` (lowercased) is indexed, in code order.
    pub fn labels_for(&self, ngram: &[String]) -> Vec<MitiLabel> {
        self.by_label
            .iter()
            .filter(|(_, grams)| grams.contains_key(ngram))
            .map(|(label, _)| *label)
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = NGramEntry> + '_ {
        self.by_label.iter().flat_map(|(label, grams)| {
            grams.iter().map(move |(ngram, freq)| NGramEntry {
                label: *label,
                ngram: ngram.clone(),
                freq: *freq,
            })
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let entries: Vec<NGramEntry> = self.entries().collect();
        write_jsonl(path, &entries)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut index = NGramIndex::default();
        for (line, entry) in read_jsonl::<NGramEntry>(path)? {
            if !INDEXED_ORDERS.contains(&entry.ngram.len()) {
                return Err(Error::Parse {
                    line,
                    message: format!("n-gram of length {} (expected 4 or 5)", entry.ngram.len()),
                });
            }
            index.insert(entry.label, entry.ngram, entry.freq);
        }
        Ok(index)
    }
}

/// Counts every 4- and 5-gram per gold label and keeps those whose count is
/// strictly greater than `min_freq`. Unlabeled sentences are ignored.
pub fn mine_ngrams(corpus: &[LabeledSentence], min_freq: usize) -> NGramIndex {
    let mut counts: HashMap<MitiLabel, HashMap<NGram, usize>> = HashMap::new();
    for sentence in corpus {
        let Some(label) = sentence.label else { continue };
        let tokens = super::lowercase(&sentence.tokens());
        let per_label = counts.entry(label).or_default();
        for n in INDEXED_ORDERS {
            for gram in ngrams(&tokens, n) {
                *per_label.entry(gram.to_vec()).or_default() += 1;
            }
        }
    }
    let mut index = NGramIndex::default();
    for (label, grams) in counts {
        for (gram, freq) in grams {
            if freq > min_freq {
                index.insert(label, gram, freq);
            }
        }
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sent(id: usize, text: &str, label: MitiLabel) -> LabeledSentence {
        LabeledSentence::gold(format!("s{id}"), text, label)
    }

    fn owned(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn counts_above_threshold() {
        let mut corpus = Vec::new();
        for i in 0..7 {
            corpus.push(sent(i, "It sounds like you are tired", MitiLabel::SimpleReflection));
        }
        let index = mine_ngrams(&corpus, DEFAULT_MIN_FREQ);
        assert_eq!(
            index.freq(MitiLabel::SimpleReflection, &owned(&["it", "sounds", "like", "you", "are"])),
            Some(7)
        );
        assert_eq!(
            index.freq(MitiLabel::SimpleReflection, &owned(&["sounds", "like", "you", "are"])),
            Some(7)
        );
    }

    #[test]
    fn exactly_min_freq_is_excluded() {
        let corpus: Vec<_> = (0..5)
            .map(|i| sent(i, "I wish you the best", MitiLabel::Affirm))
            .collect();
        assert!(mine_ngrams(&corpus, DEFAULT_MIN_FREQ).is_empty());
        assert!(mine_ngrams(&[], DEFAULT_MIN_FREQ).is_empty());
    }

    #[test]
    fn unlabeled_sentences_are_ignored() {
        let corpus: Vec<_> = (0..9)
            .map(|i| LabeledSentence::new(format!("u{i}"), "a b c d e f"))
            .collect();
        assert!(mine_ngrams(&corpus, 0).is_empty());
    }

    #[test]
    fn index_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.jsonl");
        let mut index = NGramIndex::default();
        index.insert(MitiLabel::Affirm, owned(&["i", "wish", "you", "the", "best"]), 6);
        index.insert(MitiLabel::Support, owned(&["i", "'m", "so", "sorry"]), 12);
        index.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"label\":\"Affirm\",\"ngram\":[\"i\",\"wish\",\"you\",\"the\",\"best\"],\"freq\":6}\n"));
        assert_eq!(NGramIndex::read(&path).unwrap(), index);

        std::fs::write(&path, "{\"label\":\"Affirm\",\"ngram\":[\"a\",\"b\"],\"freq\":9}\n").unwrap();
        assert!(NGramIndex::read(&path).is_err());
    }

    /// Independent count: compare every candidate window against every
    /// position of every sentence with the same label.
    fn brute_force_count(corpus: &[LabeledSentence], label: MitiLabel, gram: &[String]) -> usize {
        corpus
            .iter()
            .filter(|s| s.label == Some(label))
            .map(|s| {
                let toks: Vec<String> = s.text.split(' ').map(str::to_lowercase).collect();
                let mut c = 0;
                for start in 0..toks.len() {
                    if start + gram.len() <= toks.len() && toks[start..start + gram.len()] == *gram {
                        c += 1;
                    }
                }
                c
            })
            .sum()
    }

    proptest! {
        #[test]
        fn matches_sliding_window_brute_force(
            sentences in prop::collection::vec(
                (prop::collection::vec(0usize..3, 0..12), 0usize..3),
                0..25,
            ),
            min_freq in 0usize..4,
        ) {
            let vocab = ["a", "b", "C"];
            let labels = [MitiLabel::Affirm, MitiLabel::Support, MitiLabel::Warn];
            let corpus: Vec<LabeledSentence> = sentences
                .iter()
                .enumerate()
                .map(|(i, (words, l))| {
                    let text = words.iter().map(|&w| vocab[w]).collect::<Vec<_>>().join(" ");
                    sent(i, &text, labels[*l])
                })
                .collect();
            let index = mine_ngrams(&corpus, min_freq);
            // Every indexed entry has the brute-force count.
            for entry in index.entries() {
                prop_assert_eq!(entry.freq, brute_force_count(&corpus, entry.label, &entry.ngram));
                prop_assert!(entry.freq > min_freq);
            }
            // Every window above threshold is indexed.
            for s in &corpus {
                let toks: Vec<String> = s.text.split(' ').filter(|t| !t.is_empty()).map(str::to_lowercase).collect();
                for n in INDEXED_ORDERS {
                    for g in ngrams(&toks, n) {
                        let c = brute_force_count(&corpus, s.label.unwrap(), g);
                        prop_assert_eq!(index.freq(s.label.unwrap(), g).is_some(), c > min_freq);
                    }
                }
            }
        }
    }
}
