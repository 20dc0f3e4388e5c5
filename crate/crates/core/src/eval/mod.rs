//! Automatic metric battery over (source, reference, hypothesis) triples.
//!
//! Tokens are lowercased and style phrases stripped before the semantic
//! metrics. Reference-based metrics (BLEU, ROUGE-L, METEOR, chrF, WMD,
//! embedding F1) compare hypothesis with reference; cosine similarity and
//! POS distance compare hypothesis with source. Style strength classifies
//! the unstripped hypotheses. Corpus values are arithmetic means of the
//! per-item values; BLEU is mean sentence-level BLEU without smoothing.

pub mod bleu;
pub mod chrf;
pub mod embed;
pub mod meteor;
pub mod pos;
pub mod rouge;
pub mod transport;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bleu::bleu_n;
pub use chrf::chrf;
pub use embed::{embed_f1, sentence_vector};
pub use meteor::meteor;
pub use pos::pos_distance;
pub use rouge::rouge_l;
pub use transport::wmd;

use crate::classifier::{self, ClassifierModel};
use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::text::{self, CoarseTag, LexiconTagger, PosTagger, StylePhraseSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub source: String,
    pub reference: String,
    pub hypothesis: String,
}

/// Pre-tagged tokens for one side of every triple.
pub type Tagged = Vec<(Vec<String>, Vec<CoarseTag>)>;

pub struct EvalResources<'a> {
    pub word_vectors: Option<&'a EmbeddingTable>,
    pub sentence_vectors: Option<&'a EmbeddingTable>,
    pub classifier: Option<&'a ClassifierModel>,
    pub tagger: &'a dyn PosTagger,
    /// Replace tagger output for sources and hypotheses, aligned with triples.
    pub source_tags: Option<&'a Tagged>,
    pub hypothesis_tags: Option<&'a Tagged>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub strip: bool,
    pub lowercase: bool,
    pub phrases: StylePhraseSet,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            strip: true,
            lowercase: true,
            phrases: StylePhraseSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    pub meteor: f64,
    pub chrf: f64,
    pub wmd: Option<f64>,
    pub embed_f1: Option<f64>,
    pub pos_distance: f64,
    pub cosine: Option<f64>,
    /// Whether the classifier labeled the unstripped hypothesis Advise with
    /// Permission.
    pub advise_with_permission: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    pub meteor: f64,
    pub wmd: Option<f64>,
    pub chrf: f64,
    pub embed_f1: Option<f64>,
    pub pos_distance: f64,
    pub cosine: Option<f64>,
    pub style_strength: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportMetadata {
    pub items: usize,
    pub stripping: bool,
    pub lowercase: bool,
    pub bleu: String,
    /// Items left out of a metric's mean because it was undefined for them.
    pub skipped: BTreeMap<String, usize>,
    pub oov_tokens_dropped: usize,
    pub oov_tokens_total: usize,
    pub meteor_budget_hits: usize,
    /// Free-form provenance (input files, seeds) filled in by callers.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub system: String,
    pub items: Vec<ItemMetrics>,
    pub corpus: CorpusMetrics,
    pub metadata: ReportMetadata,
}

struct ItemOutcome {
    metrics: ItemMetrics,
    oov_dropped: usize,
    oov_total: usize,
    meteor_cut: bool,
}

fn prepare(text: &str, config: &EvalConfig) -> Vec<String> {
    let tokens = text::tokenize(text);
    if config.lowercase {
        text::lowercase(&tokens)
    } else {
        tokens
    }
}

fn stripped_tags(tagged: &(Vec<String>, Vec<CoarseTag>), config: &EvalConfig) -> Vec<CoarseTag> {
    let (tokens, tags) = tagged;
    if !config.strip {
        return tags.clone();
    }
    config.phrases.kept_indices(tokens).into_iter().map(|i| tags[i]).collect()
}

fn evaluate_item(i: usize, triple: &Triple, config: &EvalConfig, res: &EvalResources) -> Result<ItemOutcome> {
    let strip = |tokens: Vec<String>| if config.strip { config.phrases.strip(&tokens) } else { tokens };
    let hyp_full = prepare(&triple.hypothesis, config);
    let src = strip(prepare(&triple.source, config));
    let reference = strip(prepare(&triple.reference, config));
    let hyp = strip(hyp_full.clone());

    let mut oov_dropped = 0;
    let mut oov_total = 0;
    let (wmd_value, f1_value) = match res.word_vectors {
        Some(vectors) => {
            let w = match transport::wmd(&hyp, &reference, vectors) {
                Ok(r) => {
                    oov_dropped += r.dropped;
                    oov_total += r.total;
                    Some(r.distance)
                }
                Err(Error::NoVocabularyOverlap) => {
                    oov_total += hyp.len() + reference.len();
                    oov_dropped += hyp.len() + reference.len();
                    None
                }
                Err(e) => return Err(e),
            };
            let f = match embed::embed_f1(&hyp, &reference, vectors) {
                Ok(r) => Some(r.f1),
                Err(Error::NoVocabularyOverlap) => None,
                Err(e) => return Err(e),
            };
            (w, f)
        }
        None => (None, None),
    };
    let cosine_value = match res.word_vectors {
        Some(words) => {
            let a = embed::sentence_vector(&src, res.sentence_vectors, words);
            let b = embed::sentence_vector(&hyp, res.sentence_vectors, words);
            match (a, b) {
                (Ok(a), Ok(b)) => match cosine(&a, &b) {
                    Ok(c) => Some(c),
                    Err(Error::ZeroNorm) => None,
                    Err(e) => return Err(e),
                },
                (Err(Error::NoVocabularyOverlap), _) | (_, Err(Error::NoVocabularyOverlap)) => None,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        None => None,
    };

    let src_tags = match res.source_tags {
        Some(t) => stripped_tags(&t[i], config),
        None => res.tagger.tag(&src),
    };
    let hyp_tags = match res.hypothesis_tags {
        Some(t) => stripped_tags(&t[i], config),
        None => res.tagger.tag(&hyp),
    };

    let advise_with_permission = match res.classifier {
        Some(model) => {
            let dense = if model.dense_dim() > 0 {
                let words = res
                    .word_vectors
                    .ok_or_else(|| Error::invalid("classifier needs dense features but no vectors were given"))?;
                Some(embed::sentence_vector(&hyp_full, res.sentence_vectors, words)?)
            } else {
                None
            };
            let x = model.featurize(&hyp_full, dense.as_deref())?;
            Some(model.predict_features(&x).label == crate::MitiLabel::AdviseWithPermission)
        }
        None => None,
    };

    let alignment = meteor::align(&hyp, &reference);
    let metrics = ItemMetrics {
        bleu: [1, 2, 3, 4].map(|n| bleu::bleu_n(&hyp, &reference, n)),
        rouge_l: rouge::rouge_l(&hyp, &reference),
        meteor: meteor::score(alignment.matches(), alignment.chunks, hyp.len(), reference.len()),
        chrf: chrf::chrf(&hyp, &reference),
        wmd: wmd_value,
        embed_f1: f1_value,
        pos_distance: pos::pos_distance(&src_tags, &hyp_tags) as f64,
        cosine: cosine_value,
        advise_with_permission,
    };
    Ok(ItemOutcome {
        metrics,
        oov_dropped,
        oov_total,
        meteor_cut: !alignment.exhaustive,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores every triple and averages over the corpus.
pub fn evaluate_corpus(
    system: &str,
    triples: &[Triple],
    config: &EvalConfig,
    res: &EvalResources,
) -> Result<MetricReport> {
    if triples.is_empty() {
        return Err(Error::invalid("no triples to evaluate"));
    }
    for (name, tags) in [("source", res.source_tags), ("hypothesis", res.hypothesis_tags)] {
        if let Some(t) = tags {
            if t.len() != triples.len() {
                return Err(Error::invalid(format!(
                    "{} pre-tagged {name} lines for {} triples",
                    t.len(),
                    triples.len()
                )));
            }
        }
    }
    let outcomes: Vec<ItemOutcome> = triples
        .par_iter()
        .enumerate()
        .map(|(i, t)| evaluate_item(i, t, config, res))
        .collect::<Result<_>>()?;
    let items: Vec<ItemMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();

    let all = |f: fn(&ItemMetrics) -> f64| mean(items.iter().map(f)).unwrap();
    let some = |f: fn(&ItemMetrics) -> Option<f64>| mean(items.iter().filter_map(f));
    let mut skipped = BTreeMap::new();
    if res.word_vectors.is_some() {
        skipped.insert("wmd".into(), items.iter().filter(|m| m.wmd.is_none()).count());
        skipped.insert("embed_f1".into(), items.iter().filter(|m| m.embed_f1.is_none()).count());
        skipped.insert("cosine".into(), items.iter().filter(|m| m.cosine.is_none()).count());
    }
    let style_strength = match res.classifier {
        Some(_) => {
            let hits = items.iter().filter(|m| m.advise_with_permission == Some(true)).count();
            Some(100.0 * hits as f64 / items.len() as f64)
        }
        None => None,
    };
    let corpus = CorpusMetrics {
        bleu: [0, 1, 2, 3].map(|k| mean(items.iter().map(|m| m.bleu[k])).unwrap()),
        rouge_l: all(|m| m.rouge_l),
        meteor: all(|m| m.meteor),
        wmd: some(|m| m.wmd),
        chrf: all(|m| m.chrf),
        embed_f1: some(|m| m.embed_f1),
        pos_distance: all(|m| m.pos_distance),
        cosine: some(|m| m.cosine),
        style_strength,
    };
    let metadata = ReportMetadata {
        items: items.len(),
        stripping: config.strip,
        lowercase: config.lowercase,
        bleu: "mean sentence-level, uniform weights, no smoothing".into(),
        skipped,
        oov_tokens_dropped: outcomes.iter().map(|o| o.oov_dropped).sum(),
        oov_tokens_total: outcomes.iter().map(|o| o.oov_total).sum(),
        meteor_budget_hits: outcomes.iter().filter(|o| o.meteor_cut).count(),
        inputs: BTreeMap::new(),
    };
    Ok(MetricReport {
        system: system.to_owned(),
        items,
        corpus,
        metadata,
    })
}

/// Default tagger for [`EvalResources`].
pub fn default_tagger() -> LexiconTagger<'static> {
    LexiconTagger::default()
}

/// Builds triples from three aligned line lists.
pub fn triples_from_lines(sources: &[String], references: &[String], hypotheses: &[String]) -> Result<Vec<Triple>> {
    if sources.len() != references.len() || sources.len() != hypotheses.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} sources, {} references, {} hypotheses",
            sources.len(),
            references.len(),
            hypotheses.len()
        )));
    }
    Ok(sources
        .iter()
        .zip(references)
        .zip(hypotheses)
        .map(|((s, r), h)| Triple {
            source: s.clone(),
            reference: r.clone(),
            hypothesis: h.clone(),
        })
        .collect())
}

/// Row labels of the metric table, with lower-is-better rows marked.
pub const TABLE_ROWS: [&str; 12] = [
    "BLEU-1",
    "BLEU-2",
    "BLEU-3",
    "BLEU-4",
    "ROUGE-L",
    "METEOR",
    "WMD ↓",
    "Chrf Score",
    "BERTScore",
    "POS dist. ↓",
    "Cos Similarity",
    "Style Strength",
];

fn row_values(c: &CorpusMetrics) -> [Option<f64>; 12] {
    [
        Some(c.bleu[0]),
        Some(c.bleu[1]),
        Some(c.bleu[2]),
        Some(c.bleu[3]),
        Some(c.rouge_l),
        Some(c.meteor),
        c.wmd,
        Some(c.chrf),
        c.embed_f1,
        Some(c.pos_distance),
        c.cosine,
        c.style_strength,
    ]
}

/// Metric-by-system table: one column per report, values to 4 decimals
/// (style strength to 2), `-` where a metric was not computed.
pub fn metric_table_tsv(reports: &[MetricReport]) -> String {
    let mut out = String::from("Metric");
    for r in reports {
        let _ = write!(out, "\t{}", r.system.replace(['\t', '\n'], " "));
    }
    out.push('\n');
    let values: Vec<[Option<f64>; 12]> = reports.iter().map(|r| row_values(&r.corpus)).collect();
    for (row, name) in TABLE_ROWS.iter().enumerate() {
        out.push_str(name);
        for v in &values {
            match v[row] {
                Some(x) if row == 11 => {
                    let _ = write!(out, "\t{x:.2}");
                }
                Some(x) => {
                    let _ = write!(out, "\t{x:.4}");
                }
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}

/// Percentage of hypotheses the classifier labels Advise with Permission.
pub fn style_strength(model: &ClassifierModel, hypotheses: &[String]) -> Result<f64> {
    let features: Vec<_> = hypotheses
        .iter()
        .map(|h| model.featurize(&text::tokenize(h), None))
        .collect::<Result<_>>()?;
    classifier::style_strength(model, &features)
}
