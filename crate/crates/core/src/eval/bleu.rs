use std::collections::HashMap;

use crate::text::ngrams;

fn counts(tokens: &[String], k: usize) -> HashMap<&[String], usize> {
    let mut map = HashMap::new();
    for gram in ngrams(tokens, k) {
        *map.entry(gram).or_insert(0) += 1;
    }
    map
}

/// Clipped k-gram matches and the candidate's k-gram total.
pub fn modified_precision(candidate: &[String], reference: &[String], k: usize) -> (usize, usize) {
    let cand = counts(candidate, k);
    let refs = counts(reference, k);
    let matched = cand
        .iter()
        .map(|(gram, c)| (*c).min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(k - 1))
}

/// Sentence BLEU with uniform weights over orders 1..=n and no smoothing:
/// any zero precision gives 0.
pub fn bleu_n(candidate: &[String], reference: &[String], n: usize) -> f64 {
    assert!((1..=4).contains(&n), "BLEU order {n} outside 1..=4");
    if candidate.is_empty() {
        log::warn!("empty candidate scores BLEU 0");
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let (matched, total) = modified_precision(candidate, reference, k);
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / n as f64).exp()
}
