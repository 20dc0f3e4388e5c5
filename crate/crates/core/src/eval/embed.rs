use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn token_cosine(u: &[f64], v: &[f64]) -> f64 {
    // Zero vectors carry no direction and match nothing.
    cosine(u, v).unwrap_or(0.0)
}

/// Greedy-matching F1 over token vectors: each token takes its best cosine
/// on the other side (negative maxima count as 0). No idf weighting.
pub fn embed_f1(candidate: &[String], reference: &[String], vectors: &EmbeddingTable) -> Result<EmbedF1> {
    let cand: Vec<&[f64]> = candidate.iter().filter_map(|t| vectors.get(t)).collect();
    let refs: Vec<&[f64]> = reference.iter().filter_map(|t| vectors.get(t)).collect();
    if cand.is_empty() || refs.is_empty() {
        return Err(Error::NoVocabularyOverlap);
    }
    let best = |from: &[&[f64]], to: &[&[f64]]| {
        from.iter()
            .map(|u| to.iter().map(|v| token_cosine(u, v)).fold(f64::NEG_INFINITY, f64::max).max(0.0))
            .sum::<f64>()
            / from.len() as f64
    };
    let precision = best(&cand, &refs);
    let recall = best(&refs, &cand);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EmbedF1 { precision, recall, f1 })
}

/// Sentence vector: the entry for the space-joined tokens in `sentences`
/// when present, otherwise the mean of the in-vocabulary word vectors.
pub fn sentence_vector(tokens: &[String], sentences: Option<&EmbeddingTable>, words: &EmbeddingTable) -> Result<Vec<f64>> {
    if let Some(v) = sentences.and_then(|s| s.get(&tokens.join(" "))) {
        return Ok(v.to_vec());
    }
    let found: Vec<&[f64]> = tokens.iter().filter_map(|t| words.get(t)).collect();
    if found.is_empty() {
        return Err(Error::NoVocabularyOverlap);
    }
    let mut mean = vec![0.0; words.dim()];
    for v in &found {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= found.len() as f64);
    Ok(mean)
}
