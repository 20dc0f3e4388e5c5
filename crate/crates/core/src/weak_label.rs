//! Weak labeling of unlabeled sentences from a gold-labeled corpus.
//!
//! Two independent methods produce one [`WeakLabelDecision`] per sentence:
//! indicative n-gram matching and nearest-neighbour retrieval with majority
//! voting. [`merge`] combines them by union or intersection.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledSentence, MitiLabel, Provenance};
use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::text::{self, ngrams, NGramIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMethod {
    Ngram,
    Retrieval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    AmbiguousOverlap,
    NoEvidence,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramHit {
    pub ngram: String,
    pub label: MitiLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub label: MitiLabel,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    None,
    Ngrams(Vec<NgramHit>),
    Neighbors(Vec<Neighbor>),
}

/// Outcome of one method on one sentence. Exactly one of `label` and
/// `discarded_reason` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLabelDecision {
    pub sentence_id: String,
    pub label: Option<MitiLabel>,
    pub method: LabelMethod,
    pub evidence: Evidence,
    pub discarded_reason: Option<DiscardReason>,
}

impl WeakLabelDecision {
    fn assigned(id: &str, method: LabelMethod, label: MitiLabel, evidence: Evidence) -> Self {
        WeakLabelDecision {
            sentence_id: id.to_owned(),
            label: Some(label),
            method,
            evidence,
            discarded_reason: None,
        }
    }

    fn discarded(id: &str, method: LabelMethod, reason: DiscardReason, evidence: Evidence) -> Self {
        WeakLabelDecision {
            sentence_id: id.to_owned(),
            label: None,
            method,
            evidence,
            discarded_reason: Some(reason),
        }
    }
}

/// Labels a sentence from the indicative n-gram index.
///
/// 5-grams are tried first. If any matched, their outcome is final: a single
/// label is assigned, several labels discard the sentence as ambiguous.
/// Only when no 5-gram matched are 4-grams tried the same way.
pub fn label_by_ngram(sentence: &LabeledSentence, index: &NGramIndex) -> WeakLabelDecision {
    let tokens = text::lowercase(&sentence.tokens());
    for n in [5, 4] {
        let mut hits = Vec::new();
        for gram in ngrams(&tokens, n) {
            for label in index.labels_for(gram) {
                hits.push(NgramHit {
                    ngram: gram.join(" "),
                    label,
                });
            }
        }
        if hits.is_empty() {
            continue;
        }
        let labels: HashSet<MitiLabel> = hits.iter().map(|h| h.label).collect();
        let evidence = Evidence::Ngrams(hits);
        return if labels.len() == 1 {
            let label = *labels.iter().next().unwrap();
            WeakLabelDecision::assigned(&sentence.id, LabelMethod::Ngram, label, evidence)
        } else {
            WeakLabelDecision::discarded(&sentence.id, LabelMethod::Ngram, DiscardReason::AmbiguousOverlap, evidence)
        };
    }
    WeakLabelDecision::discarded(&sentence.id, LabelMethod::Ngram, DiscardReason::NoEvidence, Evidence::None)
}

pub fn label_corpus_by_ngram(pool: &[LabeledSentence], index: &NGramIndex) -> Vec<WeakLabelDecision> {
    pool.par_iter().map(|s| label_by_ngram(s, index)).collect()
}

/// Similarity threshold per label, indexed by label code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds(pub [f64; MitiLabel::COUNT]);

pub const DEFAULT_THRESHOLD: f64 = 0.7;

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(DEFAULT_THRESHOLD)
    }
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Thresholds([t; MitiLabel::COUNT])
    }

    pub fn get(&self, label: MitiLabel) -> f64 {
        self.0[label.code()]
    }

    pub fn set(&mut self, label: MitiLabel, t: f64) {
        self.0[label.code()] = t;
    }
}

/// Gold sentences used as retrieval targets. Callers pass only the training
/// part of the gold corpus.
#[derive(Debug, Clone)]
pub struct RetrievalLabeler {
    gold: Vec<(String, MitiLabel)>,
    pub thresholds: Thresholds,
}

impl RetrievalLabeler {
    pub fn new(gold: &[LabeledSentence], thresholds: Thresholds) -> Self {
        RetrievalLabeler {
            gold: gold
                .iter()
                .filter_map(|s| s.label.map(|l| (s.id.clone(), l)))
                .collect(),
            thresholds,
        }
    }

    /// Gold sentences whose similarity to the query exceeds their label's
    /// threshold, in gold order. The query itself is skipped.
    pub fn neighbors(&self, sentence_id: &str, table: &EmbeddingTable) -> Result<Vec<Neighbor>> {
        let query = table.require(sentence_id)?;
        let mut out = Vec::new();
        for (id, label) in &self.gold {
            if id == sentence_id {
                continue;
            }
            let similarity = cosine(query, table.require(id)?)?;
            if similarity > self.thresholds.get(*label) {
                out.push(Neighbor {
                    id: id.clone(),
                    label: *label,
                    similarity,
                });
            }
        }
        Ok(out)
    }

    pub fn label(&self, sentence_id: &str, table: &EmbeddingTable) -> Result<WeakLabelDecision> {
        let neighbors = self.neighbors(sentence_id, table)?;
        Ok(decide_by_vote(sentence_id, neighbors))
    }

    pub fn label_corpus(&self, pool: &[LabeledSentence], table: &EmbeddingTable) -> Result<Vec<WeakLabelDecision>> {
        pool.par_iter().map(|s| self.label(&s.id, table)).collect()
    }
}

/// Plurality vote over neighbour labels; ties between the largest groups go
/// to the highest mean similarity, and an exact tie there is ambiguous.
/// Group sums accumulate in neighbour order.
pub fn decide_by_vote(sentence_id: &str, mut neighbors: Vec<Neighbor>) -> WeakLabelDecision {
    let method = LabelMethod::Retrieval;
    if neighbors.is_empty() {
        return WeakLabelDecision::discarded(sentence_id, method, DiscardReason::NoEvidence, Evidence::Neighbors(neighbors));
    }
    let mut groups: BTreeMap<MitiLabel, (usize, f64)> = BTreeMap::new();
    for n in &neighbors {
        let g = groups.entry(n.label).or_insert((0, 0.0));
        g.0 += 1;
        g.1 += n.similarity;
    }
    let top = groups.values().map(|g| g.0).max().unwrap();
    let tied: Vec<(MitiLabel, f64)> = groups
        .iter()
        .filter(|(_, g)| g.0 == top)
        .map(|(l, g)| (*l, g.1 / g.0 as f64))
        .collect();
    let best_mean = tied.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<MitiLabel> = tied.iter().filter(|t| t.1 == best_mean).map(|t| t.0).collect();

    neighbors.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.id.cmp(&b.id)));
    let evidence = Evidence::Neighbors(neighbors);
    match winners.as_slice() {
        [label] => WeakLabelDecision::assigned(sentence_id, method, *label, evidence),
        _ => WeakLabelDecision::discarded(sentence_id, method, DiscardReason::AmbiguousOverlap, evidence),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    Union,
    Intersection,
}

/// A sentence the two methods labeled differently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub sentence_id: String,
    pub ngram_label: MitiLabel,
    pub retrieval_label: MitiLabel,
    pub discarded_reason: DiscardReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    /// Gold sentences unchanged, then weakly labeled pool sentences by id.
    pub corpus: Vec<LabeledSentence>,
    pub conflicts: Vec<ConflictRecord>,
}

/// Merges per-method decisions over the pool.
///
/// Intersection keeps a sentence when both methods assigned the same label;
/// union keeps it when either did. Differing labels discard the sentence in
/// both modes. Pool sentences whose id is also a gold id keep the gold label.
pub fn merge(
    gold: &[LabeledSentence],
    pool: &[LabeledSentence],
    ngram: &[WeakLabelDecision],
    retrieval: &[WeakLabelDecision],
    mode: MergeMode,
) -> Result<MergeOutcome> {
    let assigned = |decisions: &[WeakLabelDecision]| -> Result<HashMap<String, MitiLabel>> {
        let mut map = HashMap::new();
        for d in decisions {
            if let Some(label) = d.label {
                if map.insert(d.sentence_id.clone(), label).is_some() {
                    return Err(Error::invalid(format!("two decisions for {:?} from one method", d.sentence_id)));
                }
            }
        }
        Ok(map)
    };
    let by_ngram = assigned(ngram)?;
    let by_retrieval = assigned(retrieval)?;
    let gold_ids: HashSet<&str> = gold.iter().map(|s| s.id.as_str()).collect();

    let mut sorted: Vec<&LabeledSentence> = pool.iter().filter(|s| !gold_ids.contains(s.id.as_str())).collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut corpus = gold.to_vec();
    let mut conflicts = Vec::new();
    for sentence in sorted {
        let label = match (by_ngram.get(&sentence.id), by_retrieval.get(&sentence.id)) {
            (Some(a), Some(b)) if a != b => {
                conflicts.push(ConflictRecord {
                    sentence_id: sentence.id.clone(),
                    ngram_label: *a,
                    retrieval_label: *b,
                    discarded_reason: DiscardReason::Conflict,
                });
                continue;
            }
            (Some(a), Some(_)) => *a,
            (Some(a), None) | (None, Some(a)) if mode == MergeMode::Union => *a,
            _ => continue,
        };
        corpus.push(LabeledSentence {
            label: Some(label),
            provenance: match mode {
                MergeMode::Union => Provenance::Union,
                MergeMode::Intersection => Provenance::Intersection,
            },
            ..sentence.clone()
        });
    }
    Ok(MergeOutcome { corpus, conflicts })
}
