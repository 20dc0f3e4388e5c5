//! Human rating batches, weighted kappa and score aggregation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{RatingRecord, LIKERT_MAX};
use crate::error::{Error, Result};
use crate::rng;

pub const BATCH_SIZE: usize = 9;
pub const RATERS_PER_BATCH: usize = 2;
/// Likert categories 0..=4.
pub const CATEGORIES: usize = LIKERT_MAX as usize + 1;

/// One system's rephrasing of a test sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub system: String,
    pub text: String,
}

/// A test sentence with every system's rephrasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingItem {
    pub item_id: String,
    pub original: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedCandidate {
    /// Opaque id shown to raters.
    pub candidate_id: String,
    pub position: usize,
    pub system: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItem {
    pub item_id: String,
    pub original: String,
    /// In presentation order.
    pub candidates: Vec<PresentedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingBatch {
    pub batch_id: String,
    pub items: Vec<BatchItem>,
    pub raters: Vec<String>,
    pub seed: u64,
    /// Set on a final batch with fewer than nine items.
    pub short: bool,
}

/// Groups items into batches of nine in a seeded random order, shuffles each
/// item's candidates with a stream derived from its id, and assigns raters
/// round-robin, two distinct raters per batch.
pub fn make_batches(items: &[RatingItem], raters: &[String], seed: u64) -> Result<Vec<RatingBatch>> {
    let mut distinct = raters.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != raters.len() {
        return Err(Error::invalid("duplicate rater id"));
    }
    if raters.len() < RATERS_PER_BATCH {
        return Err(Error::invalid(format!("need at least 2 raters, got {}", raters.len())));
    }
    if items.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = std::collections::HashSet::new();
    for item in items {
        if !seen.insert(item.item_id.as_str()) {
            return Err(Error::invalid(format!("duplicate item id {:?}", item.item_id)));
        }
    }
    let mut order: Vec<&RatingItem> = items.iter().collect();
    rng::shuffle(&mut order, &mut rng::seeded(seed));

    let mut batches = Vec::new();
    for (b, chunk) in order.chunks(BATCH_SIZE).enumerate() {
        let batch_items = chunk
            .iter()
            .map(|item| {
                let mut cands: Vec<&Candidate> = item.candidates.iter().collect();
                rng::shuffle(&mut cands, &mut rng::for_key(seed, &item.item_id));
                BatchItem {
                    item_id: item.item_id.clone(),
                    original: item.original.clone(),
                    candidates: cands
                        .into_iter()
                        .enumerate()
                        .map(|(position, c)| PresentedCandidate {
                            candidate_id: format!("c{position}"),
                            position,
                            system: c.system.clone(),
                            text: c.text.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        batches.push(RatingBatch {
            batch_id: format!("b{b:03}"),
            items: batch_items,
            raters: (0..RATERS_PER_BATCH)
                .map(|r| raters[(RATERS_PER_BATCH * b + r) % raters.len()].clone())
                .collect(),
            seed,
            short: chunk.len() < BATCH_SIZE,
        });
    }
    Ok(batches)
}

/// Writes one pretty-printed `<batch_id>.json` per batch into `dir`.
pub fn write_batches(batches: &[RatingBatch], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for b in batches {
        let mut text = serde_json::to_string_pretty(b)?;
        text.push('\n');
        let file = dir.join(format!("{}.json", b.batch_id));
        fs::write(&file, text).map_err(|e| Error::io(file, e))?;
    }
    Ok(())
}

/// Reads batches from a directory of `*.json` files (in file name order) or
/// from a single file holding one batch or an array of batches.
pub fn read_batches(path: impl AsRef<Path>) -> Result<Vec<RatingBatch>> {
    let path = path.as_ref();
    let mut batches = Vec::new();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .and_then(|d| d.map(|e| e.map(|e| e.path())).collect::<std::io::Result<Vec<_>>>())
            .map_err(|e| Error::io(path, e))?;
        files.retain(|p| p.extension().is_some_and(|e| e == "json"));
        files.sort();
        for f in files {
            let text = fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
            batches.push(serde_json::from_str(&text)?);
        }
    } else {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match serde_json::from_str::<Vec<RatingBatch>>(&text) {
            Ok(list) => batches = list,
            Err(_) => batches.push(serde_json::from_str(&text)?),
        }
    }
    let mut ids: Vec<&str> = batches.iter().map(|b| b.batch_id.as_str()).collect();
    ids.sort();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("duplicate batch id"));
    }
    Ok(batches)
}

/// Weighted kappa with quadratic (Fleiss-Cohen) disagreement weights
/// `(i - j)^2 / (k - 1)^2`.
pub fn weighted_kappa(a: &[u8], b: &[u8], k: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("rating vectors differ in length"));
    }
    if a.len() < 2 || k < 2 {
        return Err(Error::DegenerateMarginals);
    }
    if a.iter().chain(b).any(|&v| v as usize >= k) {
        return Err(Error::invalid(format!("rating outside 0..{k}")));
    }
    let n = a.len() as f64;
    let mut observed = vec![vec![0.0; k]; k];
    let mut pa = vec![0.0; k];
    let mut pb = vec![0.0; k];
    for (&x, &y) in a.iter().zip(b) {
        observed[x as usize][y as usize] += 1.0 / n;
        pa[x as usize] += 1.0 / n;
        pb[y as usize] += 1.0 / n;
    }
    let scale = ((k - 1) * (k - 1)) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64) - (j as f64)).powi(2) / scale;
            num += w * observed[i][j];
            den += w * pa[i] * pb[j];
        }
    }
    if den == 0.0 {
        return if num == 0.0 { Ok(1.0) } else { Err(Error::DegenerateMarginals) };
    }
    Ok(1.0 - num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system: String,
    /// Mean semantic similarity rating.
    pub ss: f64,
    /// Mean style transfer strength rating.
    pub sts: f64,
    pub combined: f64,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterAgreement {
    pub rater_id: String,
    /// Mean over the rater's batches of `1 - mean((a - b)^2 / 16)`.
    pub agreement: f64,
    pub above_average: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub systems: Vec<SystemScore>,
    pub kappa_style_strength: f64,
    pub kappa_semantic_similarity: f64,
    pub pairs: usize,
    pub raters: Vec<RaterAgreement>,
    pub grand_mean_agreement: f64,
}

type Key<'a> = (&'a str, &'a str, &'a str, usize);

/// Aggregates ratings over batches: per-candidate means of the two raters,
/// per-system means over items, pooled kappas per question and the per-rater
/// agreement flag.
pub fn aggregate<'a>(batches: &'a [RatingBatch], ratings: &'a [RatingRecord]) -> Result<AgreementReport> {
    let mut index: HashMap<Key<'a>, &'a RatingRecord> = HashMap::new();
    for r in ratings {
        r.validate()?;
        let key = (r.batch_id.as_str(), r.item_id.as_str(), r.rater_id.as_str(), r.presented_position);
        if index.insert(key, r).is_some() {
            return Err(Error::invalid(format!(
                "duplicate rating: batch {} item {} rater {} position {}",
                r.batch_id, r.item_id, r.rater_id, r.presented_position
            )));
        }
    }

    let mut missing = Vec::new();
    let mut used = 0usize;
    let mut per_system: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    let (mut sts_a, mut sts_b, mut ss_a, mut ss_b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut per_rater: BTreeMap<&str, Vec<f64>> = BTreeMap::new();

    for batch in batches {
        if batch.raters.len() != RATERS_PER_BATCH || batch.raters[0] == batch.raters[1] {
            return Err(Error::invalid(format!("batch {} needs two distinct raters", batch.batch_id)));
        }
        let [ra, rb] = [&batch.raters[0], &batch.raters[1]];
        let mut sq_sum = 0.0;
        let mut sq_n = 0usize;
        for item in &batch.items {
            for cand in &item.candidates {
                let key = |rater: &'a str| (batch.batch_id.as_str(), item.item_id.as_str(), rater, cand.position);
                match (index.get(&key(ra)).copied(), index.get(&key(rb)).copied()) {
                    (Some(x), Some(y)) => {
                        used += 2;
                        let entry = per_system.entry(cand.system.as_str()).or_insert((0.0, 0.0, 0));
                        entry.0 += (x.semantic_similarity + y.semantic_similarity) as f64 / 2.0;
                        entry.1 += (x.style_strength + y.style_strength) as f64 / 2.0;
                        entry.2 += 1;
                        sts_a.push(x.style_strength);
                        sts_b.push(y.style_strength);
                        ss_a.push(x.semantic_similarity);
                        ss_b.push(y.semantic_similarity);
                        for (p, q) in [(x.style_strength, y.style_strength), (x.semantic_similarity, y.semantic_similarity)] {
                            sq_sum += ((p as f64) - (q as f64)).powi(2) / 16.0;
                            sq_n += 1;
                        }
                    }
                    (x, y) => {
                        for (rater, rec) in [(ra, x), (rb, y)] {
                            if rec.is_none() {
                                missing.push(format!(
                                    "batch {} item {} position {} rater {}",
                                    batch.batch_id, item.item_id, cand.position, rater
                                ));
                            }
                        }
                    }
                }
            }
        }
        if sq_n > 0 {
            let value = 1.0 - sq_sum / sq_n as f64;
            per_rater.entry(ra).or_default().push(value);
            per_rater.entry(rb).or_default().push(value);
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).map(String::as_str).collect();
        return Err(Error::invalid(format!(
            "{} missing ratings: {}{}",
            missing.len(),
            shown.join("; "),
            if missing.len() > 10 { "; ..." } else { "" }
        )));
    }
    if used != ratings.len() {
        return Err(Error::invalid(format!(
            "{} ratings do not match any assigned (batch, item, rater, position)",
            ratings.len() - used
        )));
    }

    let systems = per_system
        .into_iter()
        .map(|(system, (ss, sts, n))| {
            let (ss, sts) = (ss / n as f64, sts / n as f64);
            SystemScore {
                system: system.to_owned(),
                ss,
                sts,
                combined: (ss + sts) / 2.0,
                items: n,
            }
        })
        .collect();
    let rater_values: Vec<(String, f64)> = per_rater
        .into_iter()
        .map(|(r, v)| (r.to_owned(), v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let grand = if rater_values.is_empty() {
        0.0
    } else {
        rater_values.iter().map(|r| r.1).sum::<f64>() / rater_values.len() as f64
    };
    Ok(AgreementReport {
        systems,
        kappa_style_strength: weighted_kappa(&sts_a, &sts_b, CATEGORIES)?,
        kappa_semantic_similarity: weighted_kappa(&ss_a, &ss_b, CATEGORIES)?,
        pairs: sts_a.len(),
        raters: rater_values
            .into_iter()
            .map(|(rater_id, agreement)| RaterAgreement {
                above_average: agreement >= grand,
                rater_id,
                agreement,
            })
            .collect(),
        grand_mean_agreement: grand,
    })
}

/// System-by-row table of the human scores, two decimals.
pub fn scores_tsv(report: &AgreementReport) -> String {
    let mut out = String::from("Metric");
    for s in &report.systems {
        let _ = write!(out, "\t{}", s.system);
    }
    out.push('\n');
    let rows: [(&str, fn(&SystemScore) -> f64); 3] = [
        ("Semantic Similarity (SS)", |s| s.ss),
        ("Style Transfer Strength (STS)", |s| s.sts),
        ("(Average of SS and STS)", |s| s.combined),
    ];
    for (name, f) in rows {
        out.push_str(name);
        for s in &report.systems {
            let _ = write!(out, "\t{:.2}", f(s));
        }
        out.push('\n');
    }
    out
}
