use std::collections::HashMap;

pub const MAX_ORDER: usize = 6;
pub const BETA: f64 = 3.0;

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut map = HashMap::new();
    if chars.len() >= n {
        for i in 0..=chars.len() - n {
            *map.entry(&chars[i..i + n]).or_insert(0) += 1;
        }
    }
    map
}

/// Character n-gram F-score over the tokens concatenated without spaces.
///
/// Precision and recall are averaged over the orders 1..=6 at which both
/// sides have at least one n-gram; with no such order the score is 0.
pub fn chrf(candidate: &[String], reference: &[String]) -> f64 {
    let c: Vec<char> = candidate.iter().flat_map(|t| t.chars()).filter(|ch| !ch.is_whitespace()).collect();
    let r: Vec<char> = reference.iter().flat_map(|t| t.chars()).filter(|ch| !ch.is_whitespace()).collect();
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0usize);
    for n in 1..=MAX_ORDER {
        if c.len() < n || r.len() < n {
            break;
        }
        let cg = char_ngrams(&c, n);
        let rg = char_ngrams(&r, n);
        let matched: usize = cg.iter().map(|(g, k)| (*k).min(rg.get(g).copied().unwrap_or(0))).sum();
        p_sum += matched as f64 / (c.len() - n + 1) as f64;
        r_sum += matched as f64 / (r.len() - n + 1) as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let (p, rc) = (p_sum / orders as f64, r_sum / orders as f64);
    let b2 = BETA * BETA;
    if p + rc == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * p * rc / (b2 * p + rc)
}
