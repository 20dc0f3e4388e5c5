//! Pipeline configuration file and the per-run snapshot.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use miboost_core::classifier::{TrainConfig, DEFAULT_HASH_BITS};
use miboost_core::text::DEFAULT_MIN_FREQ;
use miboost_core::weak_label::{Thresholds, DEFAULT_THRESHOLD};
use miboost_core::MitiLabel;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub paths: Paths,
    pub mining: Mining,
    pub retrieval: Retrieval,
    pub classifier: Classifier,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Base directory for relative output paths.
    pub output_dir: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub sentence_vectors: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mining {
    /// An n-gram is kept when its count exceeds this.
    pub min_freq: usize,
}

impl Default for Mining {
    fn default() -> Self {
        Mining { min_freq: DEFAULT_MIN_FREQ }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Retrieval {
    pub default_threshold: f64,
    /// Per-label overrides keyed by label name, e.g. `Support = 0.8`.
    pub thresholds: BTreeMap<String, f64>,
    pub pair_threshold: f64,
    pub one_best: bool,
}

impl Default for Retrieval {
    fn default() -> Self {
        Retrieval {
            default_threshold: DEFAULT_THRESHOLD,
            thresholds: BTreeMap::new(),
            pair_threshold: DEFAULT_THRESHOLD,
            one_best: false,
        }
    }
}

impl Retrieval {
    pub fn label_thresholds(&self) -> Result<Thresholds> {
        let mut t = Thresholds::uniform(self.default_threshold);
        for (name, value) in &self.thresholds {
            let label = MitiLabel::ALL
                .into_iter()
                .find(|l| format!("{l:?}") == *name)
                .with_context(|| format!("retrieval.thresholds: unknown label {name:?}"))?;
            t.set(label, *value);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Classifier {
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hash_bits: u32,
}

impl Default for Classifier {
    fn default() -> Self {
        let t = TrainConfig::default();
        Classifier {
            lr: t.lr,
            l2: t.l2,
            epochs: t.epochs,
            batch: t.batch,
            hash_bits: DEFAULT_HASH_BITS,
        }
    }
}

impl Classifier {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            l2: self.l2,
            epochs: self.epochs,
            batch: self.batch,
            seed,
            hash_bits: self.hash_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Metrics {
    pub strip: bool,
    pub lowercase: bool,
    /// WMD, embedding F1 and cosine; need word vectors.
    pub embedding_metrics: bool,
    /// Needs a classifier model.
    pub style_strength: bool,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            strip: true,
            lowercase: true,
            embedding_metrics: true,
            style_strength: true,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("--config: cannot read {}", path.display()))?;
        let config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("--config: invalid config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("retrieval.default_threshold", self.retrieval.default_threshold),
            ("retrieval.pair_threshold", self.retrieval.pair_threshold),
        ] {
            if !(-1.0..=1.0).contains(&t) {
                bail!("{name} = {t} is outside [-1, 1]");
            }
        }
        self.retrieval.label_thresholds()?;
        Ok(())
    }

    /// Resolves a relative output path against `paths.output_dir`.
    pub fn output(&self, path: &Path) -> PathBuf {
        match &self.paths.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Snapshot<'a> {
    command: &'a str,
    inputs: &'a BTreeMap<String, String>,
    config: &'a PipelineConfig,
}

/// Path of the snapshot written next to `output`.
pub fn snapshot_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.toml");
    output.with_file_name(name)
}

/// Writes the resolved configuration and the command's inputs next to
/// `output`.
pub fn write_snapshot(output: &Path, command: &str, inputs: &BTreeMap<String, String>, config: &PipelineConfig) -> Result<PathBuf> {
    let path = snapshot_path(output);
    let text = toml::to_string(&Snapshot { command, inputs, config }).context("serializing config snapshot")?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
        assert_eq!(c.retrieval.pair_threshold, 0.7);
        assert_eq!(c.classifier.epochs, 20);
        assert_eq!(c.classifier.batch, 32);
    }

    #[test]
    fn partial_file_and_label_overrides() {
        let c: PipelineConfig = toml::from_str("seed = 7\n[retrieval]\nthresholds = { Support = 0.8 }\n").unwrap();
        assert_eq!(c.seed, 7);
        let t = c.retrieval.label_thresholds().unwrap();
        assert_eq!(t.get(MitiLabel::Support), 0.8);
        assert_eq!(t.get(MitiLabel::Affirm), 0.7);
        let bad: PipelineConfig = toml::from_str("[retrieval]\nthresholds = { Nope = 0.8 }\n").unwrap();
        assert!(bad.validate().is_err());
        assert!(toml::from_str::<PipelineConfig>("unknown = 1\n").is_err());
    }

    #[test]
    fn snapshot_sits_next_to_output() {
        assert_eq!(snapshot_path(Path::new("out/pairs.jsonl")), Path::new("out/pairs.jsonl.config.toml"));
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.jsonl");
        let inputs = BTreeMap::from([("corpus".to_string(), "gold.jsonl".to_string())]);
        let p = write_snapshot(&out, "mine-ngrams", &inputs, &PipelineConfig::default()).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert!(text.starts_with("command = \"mine-ngrams\""));
        assert!(text.contains("[config.retrieval]"));
    }
}
