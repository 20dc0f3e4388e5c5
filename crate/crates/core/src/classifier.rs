//! 15-way multinomial logistic regression over hashed token n-grams, with an
//! optional dense sentence-embedding block.
//!
//! Features: token uni-, bi- and trigrams of the lowercased sentence
//! (truncated to [`MAX_TOKENS`]), each joined by single spaces, hashed with
//! 64-bit FNV-1a and bucketed modulo `2^hash_bits`. Bucket values are counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::MitiLabel;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_HASH_BITS: u32 = 18;
pub const MAX_TOKENS: usize = 100;
const CLASSES: usize = MitiLabel::COUNT;
const MAGIC: &[u8; 8] = b"MIBCLF01";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Features {
    /// (bucket, count), sorted by bucket, no duplicates.
    pub sparse: Vec<(usize, f64)>,
    pub dense: Vec<f64>,
}

/// Hashed n-gram features of a token sequence.
pub fn featurize(tokens: &[String], hash_bits: u32, dense: Option<&[f64]>) -> Features {
    let lower: Vec<String> = tokens.iter().take(MAX_TOKENS).map(|t| t.to_lowercase()).collect();
    let mask = (1u64 << hash_bits) - 1;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for n in 1..=3 {
        for gram in crate::text::ngrams(&lower, n) {
            let bucket = (rng::fnv1a64(gram.join(" ").as_bytes()) & mask) as usize;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
    }
    Features {
        sparse: counts.into_iter().collect(),
        dense: dense.map(<[f64]>::to_vec).unwrap_or_default(),
    }
}

/// Softmax with the maximum logit subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub hash_bits: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.1,
            l2: 1e-4,
            epochs: 20,
            batch: 32,
            seed: 0,
            hash_bits: DEFAULT_HASH_BITS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub config: Option<TrainConfig>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub validation_loss: Option<f64>,
    pub validation_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    hash_bits: u32,
    dense_dim: usize,
    /// Row-major `CLASSES x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: MitiLabel,
    pub probabilities: Vec<f64>,
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub type Example = (Features, MitiLabel);

impl ClassifierModel {
    pub fn zeros(hash_bits: u32, dense_dim: usize) -> Self {
        let dim = (1usize << hash_bits) + dense_dim;
        ClassifierModel {
            hash_bits,
            dense_dim,
            weights: vec![0.0; CLASSES * dim],
            bias: vec![0.0; CLASSES],
            meta: TrainingMeta::default(),
        }
    }

    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }

    pub fn dense_dim(&self) -> usize {
        self.dense_dim
    }

    pub fn dim(&self) -> usize {
        (1usize << self.hash_bits) + self.dense_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn weight(&self, label: MitiLabel, feature: usize) -> f64 {
        self.weights[label.code() * self.dim() + feature]
    }

    pub fn set_weight(&mut self, label: MitiLabel, feature: usize, value: f64) {
        let dim = self.dim();
        self.weights[label.code() * dim + feature] = value;
    }

    pub fn featurize(&self, tokens: &[String], dense: Option<&[f64]>) -> Result<Features> {
        match dense {
            Some(d) if d.len() != self.dense_dim => Err(Error::invalid(format!(
                "dense features have {} values, model expects {}",
                d.len(),
                self.dense_dim
            ))),
            None if self.dense_dim > 0 => Err(Error::invalid("model expects dense features")),
            _ => Ok(featurize(tokens, self.hash_bits, dense)),
        }
    }

    /// Bucket index of an n-gram given as space-joined lowercase tokens.
    pub fn bucket(&self, gram: &str) -> usize {
        (rng::fnv1a64(gram.as_bytes()) & ((1u64 << self.hash_bits) - 1)) as usize
    }

    pub fn logits(&self, x: &Features) -> Vec<f64> {
        logits_scaled(&self.weights, 1.0, &self.bias, self.dim(), 1usize << self.hash_bits, x)
    }

    pub fn predict_features(&self, x: &Features) -> Prediction {
        let probabilities = softmax(&self.logits(x));
        Prediction {
            label: MitiLabel::from_code(argmax(&probabilities)).expect("15 classes"),
            probabilities,
        }
    }

    /// Predicts from sparse features only; the model must have no dense block.
    pub fn predict(&self, tokens: &[String]) -> Result<Prediction> {
        Ok(self.predict_features(&self.featurize(tokens, None)?))
    }

    /// Mean cross-entropy over the batch plus `l2 / 2 * |W|^2` (bias excluded).
    pub fn loss(&self, batch: &[Example], l2: f64) -> f64 {
        let ce = batch
            .iter()
            .map(|(x, y)| -log_softmax_at(&self.logits(x), y.code()))
            .sum::<f64>()
            / batch.len() as f64;
        ce + 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`ClassifierModel::loss`].
    pub fn gradient(&self, batch: &[Example], l2: f64) -> Result<Gradient> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let dim = self.dim();
        let sparse_dim = 1usize << self.hash_bits;
        let mut g = Gradient {
            weights: self.weights.iter().map(|w| l2 * w).collect(),
            bias: vec![0.0; CLASSES],
        };
        let scale = 1.0 / batch.len() as f64;
        for (x, y) in batch {
            let p = softmax(&self.logits(x));
            for c in 0..CLASSES {
                let delta = (p[c] - if c == y.code() { 1.0 } else { 0.0 }) * scale;
                g.bias[c] += delta;
                let row = &mut g.weights[c * dim..(c + 1) * dim];
                for &(j, v) in &x.sparse {
                    row[j] += delta * v;
                }
                for (k, v) in x.dense.iter().enumerate() {
                    row[sparse_dim + k] += delta * v;
                }
            }
        }
        Ok(g)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::with_capacity(32 + meta.len() + 8 * (self.weights.len() + CLASSES));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(CLASSES as u32).to_le_bytes());
        out.extend_from_slice(&self.hash_bits.to_le_bytes());
        out.extend_from_slice(&(self.dense_dim as u64).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in self.weights.iter().chain(&self.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::invalid("not a classifier model file"));
        }
        let classes = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let hash_bits = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        let dense_dim = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        let meta_len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        if classes != CLASSES {
            return Err(Error::invalid(format!("model has {classes} classes, expected {CLASSES}")));
        }
        if hash_bits > 30 {
            return Err(Error::invalid(format!("hash_bits {hash_bits} out of range")));
        }
        let meta: TrainingMeta = serde_json::from_slice(r.take(meta_len)?)?;
        let mut model = ClassifierModel::zeros(hash_bits, dense_dim);
        let expected = 8 * (model.weights.len() + CLASSES);
        if bytes.len() - r.pos != expected {
            return Err(Error::invalid(format!(
                "parameter block has {} bytes, shape needs {expected}",
                bytes.len() - r.pos
            )));
        }
        for v in model.weights.iter_mut().chain(model.bias.iter_mut()) {
            *v = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::invalid("non-finite parameter"));
            }
        }
        model.meta = meta;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::invalid("truncated model file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

fn logits_scaled(w: &[f64], scale: f64, bias: &[f64], dim: usize, sparse_dim: usize, x: &Features) -> Vec<f64> {
    (0..CLASSES)
        .map(|c| {
            let row = &w[c * dim..(c + 1) * dim];
            let mut z = 0.0;
            for &(j, v) in &x.sparse {
                z += row[j] * v;
            }
            for (k, v) in x.dense.iter().enumerate() {
                z += row[sparse_dim + k] * v;
            }
            scale * z + bias[c]
        })
        .collect()
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

/// Mini-batch gradient descent on cross-entropy plus L2, keeping the
/// parameters of the epoch with the lowest mean validation cross-entropy.
///
/// Weights are stored as `scale * V` so the L2 shrinkage of a step costs one
/// multiplication and data updates touch only active features.
pub fn train(train: &[Example], valid: &[Example], config: &TrainConfig) -> Result<ClassifierModel> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if valid.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    if config.batch == 0 || !(config.lr > 0.0) || config.l2 < 0.0 || config.lr * config.l2 >= 1.0 {
        return Err(Error::invalid("invalid training configuration"));
    }
    let dense_dim = train[0].0.dense.len();
    if train.iter().chain(valid).any(|(x, _)| x.dense.len() != dense_dim) {
        return Err(Error::invalid("inconsistent dense feature dimension"));
    }
    let mut model = ClassifierModel::zeros(config.hash_bits, dense_dim);
    let dim = model.dim();
    let sparse_dim = 1usize << config.hash_bits;
    if train.iter().chain(valid).any(|(x, _)| x.sparse.last().is_some_and(|&(j, _)| j >= sparse_dim)) {
        return Err(Error::invalid("feature bucket outside the hash space"));
    }

    let mut v = vec![0.0; CLASSES * dim];
    let mut scale = 1.0;
    let mut bias = vec![0.0; CLASSES];
    let decay = 1.0 - config.lr * config.l2;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stream = rng::seeded(config.seed);
    let mut best: Option<(f64, usize, Vec<f64>, Vec<f64>)> = None;
    let mut losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        rng::shuffle(&mut order, &mut stream);
        for chunk in order.chunks(config.batch) {
            let step = config.lr / chunk.len() as f64;
            let deltas: Vec<Vec<f64>> = chunk
                .iter()
                .map(|&i| {
                    let (x, y) = &train[i];
                    let mut p = softmax(&logits_scaled(&v, scale, &bias, dim, sparse_dim, x));
                    p[y.code()] -= 1.0;
                    p
                })
                .collect();
            scale *= decay;
            for (&i, delta) in chunk.iter().zip(&deltas) {
                let x = &train[i].0;
                for c in 0..CLASSES {
                    let d = step * delta[c];
                    bias[c] -= d;
                    let row = &mut v[c * dim..(c + 1) * dim];
                    for &(j, val) in &x.sparse {
                        row[j] -= d * val / scale;
                    }
                    for (k, val) in x.dense.iter().enumerate() {
                        row[sparse_dim + k] -= d * val / scale;
                    }
                }
            }
            if scale < 1e-6 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        let loss = valid
            .iter()
            .map(|(x, y)| -log_softmax_at(&logits_scaled(&v, scale, &bias, dim, sparse_dim, x), y.code()))
            .sum::<f64>()
            / valid.len() as f64;
        losses.push(loss);
        log::debug!("epoch {epoch}: validation loss {loss:.6}");
        if best.as_ref().is_none_or(|b| loss < b.0) {
            best = Some((loss, epoch, v.iter().map(|w| w * scale).collect(), bias.clone()));
        }
    }

    match best {
        Some((loss, epoch, w, b)) => {
            model.weights = w;
            model.bias = b;
            model.meta.best_epoch = epoch;
            model.meta.validation_loss = Some(loss);
        }
        None => {
            model.weights = v;
            model.bias = bias;
        }
    }
    if model.weights.iter().chain(&model.bias).any(|p| !p.is_finite()) {
        return Err(Error::invalid("training diverged to non-finite parameters"));
    }
    model.meta.config = Some(config.clone());
    model.meta.epochs_run = config.epochs;
    model.meta.validation_losses = losses;
    Ok(model)
}

/// Percentage of outputs predicted as Advise with Permission.
pub fn style_strength(model: &ClassifierModel, outputs: &[Features]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::invalid("no outputs to score"));
    }
    let hits = outputs
        .iter()
        .filter(|x| model.predict_features(x).label == MitiLabel::AdviseWithPermission)
        .count();
    Ok(100.0 * hits as f64 / outputs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        text::tokenize(s)
    }

    #[test]
    fn features_are_hashed_ngram_counts() {
        let f = featurize(&toks("Go go"), 18, None);
        let b = |g: &str| (rng::fnv1a64(g.as_bytes()) % (1 << 18)) as usize;
        let mut expected = vec![(b("go"), 2.0), (b("go go"), 1.0)];
        expected.sort_by_key(|e| e.0);
        assert_eq!(f.sparse, expected);
        let long: Vec<String> = (0..150).map(|i| format!("w{i}")).collect();
        let f = featurize(&long, 18, None);
        assert_eq!(f.sparse.iter().map(|e| e.1).sum::<f64>(), (100 + 99 + 98) as f64);
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ClassifierModel::zeros(8, 0);
        let p = m.predict(&toks("anything at all")).unwrap();
        assert!(p.probabilities.iter().all(|&q| (q - 1.0 / 15.0).abs() < 1e-15));
        assert_eq!(p.label.code(), 0);
    }

    #[test]
    fn dominant_weight_decides() {
        let mut m = ClassifierModel::zeros(DEFAULT_HASH_BITS, 0);
        let bucket = m.bucket("sounds like");
        m.set_weight(MitiLabel::SimpleReflection, bucket, 10.0);
        let p = m.predict(&toks("It Sounds like a hard week .")).unwrap();
        assert_eq!(p.label, MitiLabel::SimpleReflection);
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_closed_form_at_zero() {
        let m = ClassifierModel::zeros(4, 0);
        let x = featurize(&toks("a b"), 4, None);
        let g = m.gradient(&[(x.clone(), MitiLabel::Affirm)], 0.0).unwrap();
        for (j, gb) in g.bias.iter().enumerate() {
            let expected = 1.0 / 15.0 - if j == MitiLabel::Affirm.code() { 1.0 } else { 0.0 };
            assert!((gb - expected).abs() < 1e-15);
        }
        let g2 = m
            .gradient(&[(x.clone(), MitiLabel::Affirm), (x, MitiLabel::Affirm)], 0.0)
            .unwrap();
        assert_eq!(g, g2);
        assert!(m.gradient(&[], 0.0).is_err());
    }

    fn random_model(rng: &mut ChaCha8Rng, bits: u32, dense: usize) -> ClassifierModel {
        let mut m = ClassifierModel::zeros(bits, dense);
        m.weights_mut().iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        m.bias_mut().iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        m
    }

    fn random_batch(rng: &mut ChaCha8Rng, bits: u32, dense: usize) -> Vec<Example> {
        let n = rng.random_range(1..6);
        (0..n)
            .map(|_| {
                let words: Vec<String> = (0..rng.random_range(1..8)).map(|_| format!("w{}", rng.random_range(0..20))).collect();
                let d: Vec<f64> = (0..dense).map(|_| rng.random_range(-1.0..1.0)).collect();
                let x = featurize(&words, bits, Some(&d));
                (x, MitiLabel::from_code(rng.random_range(0..15)).unwrap())
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (bits, dense) = (5, 3);
            let m = random_model(&mut rng, bits, dense);
            let batch = random_batch(&mut rng, bits, dense);
            let l2 = 1e-2;
            let g = m.gradient(&batch, l2).unwrap();
            for i in 0..m.weights().len() + 15 {
                let mut plus = m.clone();
                let mut minus = m.clone();
                let (a, p, q) = if i < m.weights().len() {
                    plus.weights_mut()[i] += h;
                    minus.weights_mut()[i] -= h;
                    (g.weights[i], plus, minus)
                } else {
                    plus.bias_mut()[i - m.weights().len()] += h;
                    minus.bias_mut()[i - m.weights().len()] -= h;
                    (g.bias[i - m.weights().len()], plus, minus)
                };
                let numeric = (p.loss(&batch, l2) - q.loss(&batch, l2)) / (2.0 * h);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-5, "max relative error {worst:e}");
    }

    #[test]
    fn training_memorizes_one_example() {
        let x = featurize(&toks("remember this sentence"), 10, None);
        let data = vec![(x, MitiLabel::Warn)];
        let config = TrainConfig {
            lr: 1.0,
            epochs: 300,
            hash_bits: 10,
            ..Default::default()
        };
        let m = train(&data, &data, &config).unwrap();
        assert!(m.loss(&data, 0.0) < 0.01, "{}", m.loss(&data, 0.0));
        assert!(train(&[], &data, &config).is_err());
    }

    #[test]
    fn training_is_deterministic_and_keeps_best_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_batch(&mut rng, 8, 0);
        let config = TrainConfig {
            hash_bits: 8,
            epochs: 7,
            batch: 2,
            seed: 9,
            ..Default::default()
        };
        let a = train(&data, &data, &config).unwrap();
        let b = train(&data, &data, &config).unwrap();
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
        let losses = &a.meta.validation_losses;
        let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(a.meta.validation_loss, Some(min));
        assert_eq!(losses[a.meta.best_epoch - 1], min);
    }

    #[test]
    fn toy_problem_matches_grid_separator() {
        // Three classes keyed by one word each; the grid searches the three
        // keyword weights per class over {-1, 0, 1}.
        let words = ["alpha", "beta", "gamma"];
        let labels = [MitiLabel::Affirm, MitiLabel::Support, MitiLabel::Warn];
        let mut data = Vec::new();
        for i in 0..30 {
            let k = i % 3;
            let sentence = format!("{} {}", words[k], ["x", "y", "z"][i / 3 % 3]);
            data.push((featurize(&toks(&sentence), 12, None), labels[k]));
        }
        let config = TrainConfig {
            hash_bits: 12,
            epochs: 30,
            batch: 4,
            ..Default::default()
        };
        let m = train(&data, &data, &config).unwrap();

        let grid_predict = |w: &[f64], k: usize| -> usize {
            let scores: Vec<f64> = (0..3).map(|c| w[c * 3 + k]).collect();
            argmax(&scores)
        };
        let grid_w: Vec<f64> = (0..3usize.pow(9))
            .map(|code| (0..9).map(|d| (code / 3usize.pow(d) % 3) as f64 - 1.0).collect::<Vec<f64>>())
            .find(|w| (0..3).all(|k| grid_predict(w, k) == k))
            .expect("separable");
        for (i, (x, _)) in data.iter().enumerate() {
            assert_eq!(m.predict_features(x).label, labels[grid_predict(&grid_w, i % 3)]);
        }
    }

    #[test]
    fn model_file_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = random_model(&mut rng, 6, 2);
        m.meta.best_epoch = 4;
        let bytes = m.to_bytes().unwrap();
        assert_eq!(ClassifierModel::from_bytes(&bytes).unwrap(), m);
        assert!(ClassifierModel::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ClassifierModel::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[8] = 14;
        assert!(ClassifierModel::from_bytes(&bad).is_err());
    }

    #[test]
    fn style_strength_examples() {
        let mut m = ClassifierModel::zeros(DEFAULT_HASH_BITS, 0);
        let b = m.bucket("maybe");
        m.set_weight(MitiLabel::AdviseWithPermission, b, 5.0);
        let outs: Vec<Features> = ["maybe rest", "maybe talk", "maybe go", "go now"]
            .iter()
            .map(|s| featurize(&toks(s), DEFAULT_HASH_BITS, None))
            .collect();
        assert_eq!(style_strength(&m, &outs).unwrap(), 75.0);
        m.bias_mut()[MitiLabel::AdviseWithPermission.code()] = 100.0;
        assert_eq!(style_strength(&m, &outs).unwrap(), 100.0);
        assert!(style_strength(&m, &[]).is_err());
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 15),
            shift in -1e3f64..1e3,
        ) {
            let p = softmax(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&q| q >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            prop_assert_eq!(argmax(&softmax(&shifted)), argmax(&p));
        }
    }
}
