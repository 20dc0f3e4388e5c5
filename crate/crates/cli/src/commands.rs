//! One function per subcommand, each a thin wrapper over a library call.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use miboost_core::agreement::{self, Candidate, RatingBatch, RatingItem};
use miboost_core::classifier::{self, ClassifierModel, Example};
use miboost_core::corpus::{self, read_corpus, read_pairs, read_ratings, write_corpus, write_jsonl, write_pairs, write_ratings, Provenance, SplitSpec};
use miboost_core::embedding::{load_embeddings, EmbeddingTable};
use miboost_core::eval::{self, EvalConfig, EvalResources, MetricReport, Tagged};
use miboost_core::pp::{self, PromptStyle, Spacing, TargetChoice, TemplateRephraser};
use miboost_core::text::{self, parse_pretagged, NGramIndex, StylePhraseSet};
use miboost_core::weak_label::{self, MergeMode, RetrievalLabeler, WeakLabelDecision};
use miboost_core::{LabeledSentence, MitiLabel, RatingRecord};

use crate::config::{write_snapshot, PipelineConfig};
use crate::*;

/// Tracks a command's inputs for the config snapshot.
struct Run {
    command: &'static str,
    config: PipelineConfig,
    inputs: BTreeMap<String, String>,
}

impl Run {
    fn new(command: &'static str, config: PipelineConfig) -> Self {
        Run {
            command,
            config,
            inputs: BTreeMap::new(),
        }
    }

    /// Records an input path, failing with the flag's name when it is missing.
    fn input(&mut self, flag: &str, path: &Path) -> Result<PathBuf> {
        if !path.exists() {
            bail!("--{flag}: no such file or directory: {}", path.display());
        }
        self.record(flag, path.display());
        Ok(path.to_path_buf())
    }

    fn optional(&mut self, flag: &str, path: Option<&Path>) -> Result<Option<PathBuf>> {
        path.map(|p| self.input(flag, p)).transpose()
    }

    fn record(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        self.inputs
            .entry(key.to_owned())
            .and_modify(|v| {
                v.push(',');
                v.push_str(&value);
            })
            .or_insert(value);
    }

    /// Resolves an output path and creates its directory.
    fn output(&self, path: &Path) -> Result<PathBuf> {
        let path = self.config.output(path);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }

    fn finish(&self, output: &Path) -> Result<()> {
        let snap = write_snapshot(output, self.command, &self.inputs, &self.config)?;
        log::info!("{}: wrote {} (config snapshot {})", self.command, output.display(), snap.display());
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn vectors(run: &mut Run, flag: &str, given: Option<&Path>, configured: Option<PathBuf>) -> Result<Option<EmbeddingTable>> {
    let path = given.map(Path::to_path_buf).or(configured);
    match run.optional(flag, path.as_deref())? {
        Some(p) => Ok(Some(load_embeddings(&p).with_context(|| format!("--{flag}: {}", p.display()))?)),
        None => Ok(None),
    }
}

pub fn mine_ngrams(a: MineNgrams, mut config: PipelineConfig) -> Result<()> {
    if let Some(m) = a.min_freq {
        config.mining.min_freq = m;
    }
    let mut run = Run::new("mine-ngrams", config);
    let gold = read_corpus(run.input("corpus", &a.corpus)?)?;
    let index = text::mine_ngrams(&gold, run.config.mining.min_freq);
    let out = run.output(&a.out)?;
    index.write(&out)?;
    log::info!("mined {} indicative n-grams from {} sentences", index.len(), gold.len());
    run.finish(&out)
}

fn summarize(decisions: &[WeakLabelDecision]) -> String {
    let assigned = decisions.iter().filter(|d| d.label.is_some()).count();
    format!("{assigned} labeled, {} discarded", decisions.len() - assigned)
}

pub fn label_ngram(a: LabelNgram, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("label-ngram", config);
    let pool = read_corpus(run.input("pool", &a.pool)?)?;
    let index = NGramIndex::read(run.input("ngrams", &a.ngrams)?)?;
    let decisions = weak_label::label_corpus_by_ngram(&pool, &index);
    let out = run.output(&a.out)?;
    write_jsonl(&out, &decisions)?;
    log::info!("n-gram labeling: {}", summarize(&decisions));
    run.finish(&out)
}

pub fn label_sim(a: LabelSim, mut config: PipelineConfig) -> Result<()> {
    if let Some(t) = a.threshold {
        config.retrieval.default_threshold = t;
        config.retrieval.thresholds.clear();
    }
    config.validate()?;
    let mut run = Run::new("label-sim", config);
    let gold = read_corpus(run.input("gold", &a.gold)?)?;
    let pool = read_corpus(run.input("pool", &a.pool)?)?;
    let configured = run.config.paths.sentence_vectors.clone();
    let table = vectors(&mut run, "embeddings", a.embeddings.as_deref(), configured)?
        .ok_or_else(|| anyhow!("--embeddings is required (or set paths.sentence_vectors)"))?;
    let labeler = RetrievalLabeler::new(&gold, run.config.retrieval.label_thresholds()?);
    let decisions = labeler.label_corpus(&pool, &table)?;
    let out = run.output(&a.out)?;
    write_jsonl(&out, &decisions)?;
    log::info!("retrieval labeling: {}", summarize(&decisions));
    run.finish(&out)
}

fn read_decisions(path: &Path) -> Result<Vec<WeakLabelDecision>> {
    Ok(corpus::read_jsonl(path)?.into_iter().map(|(_, d)| d).collect())
}

pub fn merge(a: Merge, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("merge", config);
    let gold = read_corpus(run.input("gold", &a.gold)?)?;
    let pool = read_corpus(run.input("pool", &a.pool)?)?;
    let ngram = match run.optional("ngram", a.ngram.as_deref())? {
        Some(p) => read_decisions(&p)?,
        None => Vec::new(),
    };
    let sim = match run.optional("sim", a.sim.as_deref())? {
        Some(p) => read_decisions(&p)?,
        None => Vec::new(),
    };
    let mode = match a.mode {
        ModeArg::Union => MergeMode::Union,
        ModeArg::Intersection => MergeMode::Intersection,
    };
    run.record("mode", format!("{mode:?}").to_lowercase());
    let outcome = weak_label::merge(&gold, &pool, &ngram, &sim, mode)?;
    let out = run.output(&a.out)?;
    write_corpus(&outcome.corpus, &out)?;
    write_jsonl(with_suffix(&out, ".conflicts.jsonl"), &outcome.conflicts)?;
    log::info!(
        "merged corpus: {} sentences ({} gold), {} conflicts discarded",
        outcome.corpus.len(),
        gold.len(),
        outcome.conflicts.len()
    );
    run.finish(&out)
}

fn examples(sentences: &[&LabeledSentence], hash_bits: u32) -> Vec<Example> {
    sentences
        .iter()
        .map(|s| (classifier::featurize(&s.tokens(), hash_bits, None), s.label.expect("labeled")))
        .collect()
}

fn accuracy(model: &ClassifierModel, data: &[Example]) -> Option<f64> {
    if data.is_empty() {
        return None;
    }
    let hits = data.iter().filter(|(x, y)| model.predict_features(x).label == *y).count();
    Some(hits as f64 / data.len() as f64)
}

#[derive(Serialize)]
struct TrainingReport {
    train: usize,
    valid: usize,
    test: usize,
    valid_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    best_epoch: usize,
    validation_losses: Vec<f64>,
}

pub fn train_classifier(a: TrainClassifier, mut config: PipelineConfig) -> Result<()> {
    if let Some(e) = a.epochs {
        config.classifier.epochs = e;
    }
    if let Some(lr) = a.lr {
        config.classifier.lr = lr;
    }
    let mut run = Run::new("train-classifier", config);
    let sentences = read_corpus(run.input("corpus", &a.corpus)?)?;
    let labeled: Vec<&LabeledSentence> = sentences.iter().filter(|s| s.label.is_some()).collect();
    let gold_ids: Vec<String> = labeled
        .iter()
        .filter(|s| s.provenance == Provenance::Gold)
        .map(|s| s.id.clone())
        .collect();
    let split = corpus::split_corpus(&gold_ids, &SplitSpec::with_seed(run.config.seed))
        .context("--corpus: no gold sentences to split")?;
    let part = |ids: &[String]| -> Vec<&LabeledSentence> {
        let set: HashSet<&str> = ids.iter().map(String::as_str).collect();
        labeled.iter().copied().filter(|s| s.provenance == Provenance::Gold && set.contains(s.id.as_str())).collect()
    };
    let mut train_part = part(&split.train);
    train_part.extend(labeled.iter().copied().filter(|s| s.provenance != Provenance::Gold));
    let bits = run.config.classifier.hash_bits;
    let train = examples(&train_part, bits);
    let valid = examples(&part(&split.valid), bits);
    let test = examples(&part(&split.test), bits);
    if valid.is_empty() {
        bail!("--corpus: too few gold sentences for a validation split ({})", gold_ids.len());
    }
    let tc = run.config.classifier.train_config(run.config.seed);
    let model = classifier::train(&train, &valid, &tc)?;
    let out = run.output(&a.out)?;
    model.save(&out)?;
    let report = TrainingReport {
        train: train.len(),
        valid: valid.len(),
        test: test.len(),
        valid_accuracy: accuracy(&model, &valid),
        test_accuracy: accuracy(&model, &test),
        best_epoch: model.meta.best_epoch,
        validation_losses: model.meta.validation_losses.clone(),
    };
    write_json(&with_suffix(&out, ".metrics.json"), &report)?;
    log::info!(
        "trained on {} examples; best epoch {}; test accuracy {:?}",
        report.train,
        report.best_epoch,
        report.test_accuracy
    );
    run.finish(&out)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    label: MitiLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<MitiLabel>,
    probabilities: Vec<f64>,
}

fn load_model(run: &mut Run, given: Option<&Path>) -> Result<Option<ClassifierModel>> {
    let path = given.map(Path::to_path_buf).or(run.config.paths.model.clone());
    match run.optional("model", path.as_deref())? {
        Some(p) => Ok(Some(ClassifierModel::load(&p).with_context(|| format!("--model: {}", p.display()))?)),
        None => Ok(None),
    }
}

pub fn classify(a: Classify, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("classify", config);
    let model = load_model(&mut run, a.model.as_deref())?.ok_or_else(|| anyhow!("--model is required (or set paths.model)"))?;
    let input = run.input("input", &a.input)?;
    let sentences: Vec<LabeledSentence> = if a.text {
        read_lines(&input)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| LabeledSentence::new(format!("line{}", i + 1), l))
            .collect()
    } else {
        read_corpus(&input)?
    };
    let mut rows = Vec::new();
    for s in &sentences {
        let p = model.predict(&s.tokens())?;
        rows.push(PredictionRow {
            id: &s.id,
            label: p.label,
            gold: s.label,
            probabilities: p.probabilities,
        });
    }
    let graded: Vec<&PredictionRow> = rows.iter().filter(|r| r.gold.is_some()).collect();
    if !graded.is_empty() {
        let hits = graded.iter().filter(|r| r.gold == Some(r.label)).count();
        log::info!("accuracy on labeled inputs: {hits}/{}", graded.len());
    }
    let out = run.output(&a.out)?;
    write_jsonl(&out, &rows)?;
    run.finish(&out)
}

fn spacing(s: SpacingArg) -> Spacing {
    match s {
        SpacingArg::Preserve => Spacing::Preserve,
        SpacingArg::Detokenize => Spacing::Detokenize,
    }
}

pub fn build_pp_template(a: BuildPpTemplate, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("build-pp-template", config);
    let sentences = read_corpus(run.input("corpus", &a.corpus)?)?;
    run.record("spacing", format!("{:?}", a.spacing).to_lowercase());
    let rephraser = TemplateRephraser::default().with_spacing(spacing(a.spacing));
    let (pairs, skips) = rephraser.build_pairs(&sentences, run.config.seed);
    let out = run.output(&a.out)?;
    write_pairs(&pairs, &out)?;
    write_jsonl(with_suffix(&out, ".skips.jsonl"), &skips)?;
    log::info!("template pairs: {} built, {} inputs skipped", pairs.len(), skips.len());
    run.finish(&out)
}

pub fn build_pp_retrieval(a: BuildPpRetrieval, mut config: PipelineConfig) -> Result<()> {
    if let Some(t) = a.threshold {
        config.retrieval.pair_threshold = t;
    }
    if a.one_best {
        config.retrieval.one_best = true;
    }
    config.validate()?;
    let mut run = Run::new("build-pp-retrieval", config);
    let sentences = read_corpus(run.input("corpus", &a.corpus)?)?;
    let configured = run.config.paths.sentence_vectors.clone();
    let table = vectors(&mut run, "embeddings", a.embeddings.as_deref(), configured)?
        .ok_or_else(|| anyhow!("--embeddings is required (or set paths.sentence_vectors)"))?;
    let of = |label| sentences.iter().filter(|s| s.label == Some(label)).cloned().collect::<Vec<_>>();
    let without = of(MitiLabel::AdviseWithoutPermission);
    let with = of(MitiLabel::AdviseWithPermission);
    let r = &run.config.retrieval;
    let scored = pp::pair_by_retrieval(&without, &with, &table, r.pair_threshold, r.one_best)?;
    let pairs: Vec<_> = scored.into_iter().map(|(p, _)| p).collect();
    let out = run.output(&a.out)?;
    write_pairs(&pairs, &out)?;
    log::info!("retrieval pairs: {} from {} x {} sentences", pairs.len(), without.len(), with.len());
    run.finish(&out)
}

pub fn format_prompts(a: FormatPrompts, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("format-prompts", config);
    let pairs = read_pairs(run.input("pairs", &a.pairs)?)?;
    let style = match a.style {
        PromptArg::Generic => PromptStyle::Generic,
        PromptArg::Ngram => PromptStyle::Ngram,
    };
    run.record("style", format!("{style:?}").to_lowercase());
    let phrases = StylePhraseSet::default();
    let formatted: Vec<_> = pairs.iter().map(|p| pp::format_prompt(p, style, &phrases)).collect();
    let fell_back = formatted.iter().filter(|f| f.fell_back).count();
    let prompted: Vec<_> = formatted.into_iter().map(|f| f.pair).collect();
    let out = run.output(&a.out)?;
    write_pairs(&prompted, &out)?;
    pp::write_training_tsv(&prompted, out.with_extension("tsv"))?;
    log::info!("prompted {} pairs ({} fell back to the generic prompt)", prompted.len(), fell_back);
    run.finish(&out)
}

pub fn rephrase(a: Rephrase, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("rephrase", config);
    let lines = read_lines(&run.input("input", &a.input)?)?;
    run.record("spacing", format!("{:?}", a.spacing).to_lowercase());
    let rephraser = TemplateRephraser::default().with_spacing(spacing(a.spacing));
    let mut out_text = String::new();
    let mut unchanged = 0;
    for (i, line) in lines.iter().enumerate() {
        let s = LabeledSentence::gold(format!("line{}", i + 1), line.as_str(), MitiLabel::AdviseWithoutPermission);
        match rephraser.rephrase(&s, TargetChoice::Seeded(run.config.seed)) {
            Ok(pair) => out_text.push_str(&pair.target_text),
            Err(_) => {
                unchanged += 1;
                out_text.push_str(line);
            }
        }
        out_text.push('\n');
    }
    let out = run.output(&a.out)?;
    fs::write(&out, out_text).with_context(|| format!("writing {}", out.display()))?;
    log::info!("rephrased {} lines ({unchanged} left unchanged)", lines.len());
    run.finish(&out)
}

fn read_tags(path: &Path) -> Result<Tagged> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_pretagged(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn evaluate(a: Evaluate, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("evaluate", config);
    let (sources, references) = match &a.pairs {
        Some(p) => {
            let pairs = read_pairs(run.input("pairs", p)?)?;
            (
                pairs.iter().map(|p| p.source_text.clone()).collect(),
                pairs.iter().map(|p| p.target_text.clone()).collect(),
            )
        }
        None => {
            let src = run.input("src", a.src.as_deref().expect("clap requires --src"))?;
            let rf = run.input("ref", a.r#ref.as_deref().expect("clap requires --ref"))?;
            (read_lines(&src)?, read_lines(&rf)?)
        }
    };
    if !a.system.is_empty() && a.system.len() != a.hyp.len() {
        bail!("--system: given {} names for {} --hyp files", a.system.len(), a.hyp.len());
    }
    if !a.hyp_tags.is_empty() && a.hyp_tags.len() != a.hyp.len() {
        bail!("--hyp-tags: given {} files for {} --hyp files", a.hyp_tags.len(), a.hyp.len());
    }
    let metrics = run.config.metrics.clone();
    let (words, sents) = if metrics.embedding_metrics {
        let wv = run.config.paths.word_vectors.clone();
        let sv = run.config.paths.sentence_vectors.clone();
        (
            vectors(&mut run, "word-vectors", a.word_vectors.as_deref(), wv)?,
            vectors(&mut run, "sentence-vectors", a.sentence_vectors.as_deref(), sv)?,
        )
    } else {
        (None, None)
    };
    let model = if metrics.style_strength {
        load_model(&mut run, a.model.as_deref())?
    } else {
        None
    };
    let src_tags = match run.optional("src-tags", a.src_tags.as_deref())? {
        Some(p) => Some(read_tags(&p)?),
        None => None,
    };
    let eval_config = EvalConfig {
        strip: metrics.strip && !a.no_strip,
        lowercase: metrics.lowercase,
        phrases: StylePhraseSet::default(),
    };
    if a.no_strip {
        run.record("no-strip", true);
    }
    let tagger = eval::default_tagger();
    let mut reports: Vec<MetricReport> = Vec::new();
    for (k, hyp) in a.hyp.iter().enumerate() {
        let hyp = run.input("hyp", hyp)?;
        let hyp_tags = match a.hyp_tags.get(k) {
            Some(p) => Some(read_tags(&run.input("hyp-tags", p)?)?),
            None => None,
        };
        let system = match a.system.get(k) {
            Some(s) => s.clone(),
            None => hyp.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        let triples = eval::triples_from_lines(&sources, &references, &read_lines(&hyp)?)
            .with_context(|| format!("--hyp {}", hyp.display()))?;
        let res = EvalResources {
            word_vectors: words.as_ref(),
            sentence_vectors: sents.as_ref(),
            classifier: model.as_ref(),
            tagger: &tagger,
            source_tags: src_tags.as_ref(),
            hypothesis_tags: hyp_tags.as_ref(),
        };
        let mut report = eval::evaluate_corpus(&system, &triples, &eval_config, &res)?;
        report.metadata.inputs = run.inputs.clone();
        report.metadata.inputs.insert("hyp".into(), hyp.display().to_string());
        report.metadata.inputs.insert("seed".into(), run.config.seed.to_string());
        log::info!("{system}: BLEU-1 {:.4}, items {}", report.corpus.bleu[0], report.metadata.items);
        reports.push(report);
    }
    let out = run.output(&a.out)?;
    write_json(&out, &reports)?;
    let table = match &a.table {
        Some(t) => run.output(t)?,
        None => out.with_extension("tsv"),
    };
    fs::write(&table, eval::metric_table_tsv(&reports)).with_context(|| format!("writing {}", table.display()))?;
    run.finish(&out)
}

pub fn make_batches(a: MakeBatches, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("make-batches", config);
    let originals = read_lines(&run.input("src", &a.src)?)?;
    let mut systems: Vec<(String, Vec<String>)> = Vec::new();
    for spec in &a.candidates {
        let (name, file) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--candidate: expected NAME=FILE, got {spec:?}"))?;
        let lines = read_lines(&run.input("candidate", Path::new(file))?)?;
        if lines.len() != originals.len() {
            bail!("--candidate {name}: {} lines but --src has {}", lines.len(), originals.len());
        }
        if systems.iter().any(|(n, _)| n == name) {
            bail!("--candidate: system {name:?} given twice");
        }
        systems.push((name.to_owned(), lines));
    }
    run.record("raters", a.raters.join(","));
    let items: Vec<RatingItem> = originals
        .iter()
        .enumerate()
        .map(|(i, original)| RatingItem {
            item_id: format!("t{i:03}"),
            original: original.clone(),
            candidates: systems
                .iter()
                .map(|(name, lines)| Candidate {
                    system: name.clone(),
                    text: lines[i].clone(),
                })
                .collect(),
        })
        .collect();
    let batches = agreement::make_batches(&items, &a.raters, run.config.seed)?;
    let out = run.output(&a.out)?;
    agreement::write_batches(&batches, &out)?;
    log::info!(
        "{} items in {} batches ({} short)",
        items.len(),
        batches.len(),
        batches.iter().filter(|b| b.short).count()
    );
    run.finish(&out)
}

pub fn serve(a: Serve, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("serve", config);
    let batches = agreement::read_batches(run.input("batches", &a.batches)?)?;
    let static_dir = run.optional("static", a.r#static.as_deref())?;
    let study = miboost_rating::Study::new(batches)?;
    let log_path = run.output(&a.log)?;
    let store = miboost_rating::Store::open(&log_path, &study)?;
    run.record("port", a.port);
    run.finish(&log_path)?;
    let state = miboost_rating::AppState::new(study, store);
    let addr = std::net::SocketAddr::new(a.host, a.port);
    tokio::runtime::Runtime::new()?.block_on(miboost_rating::serve(addr, state, static_dir))?;
    Ok(())
}

fn check_fits(batches: &HashMap<&str, &RatingBatch>, r: &RatingRecord) -> Result<()> {
    r.validate()?;
    let b = batches.get(r.batch_id.as_str()).ok_or_else(|| anyhow!("unknown batch {}", r.batch_id))?;
    if !b.raters.contains(&r.rater_id) {
        bail!("rater {} is not assigned to batch {}", r.rater_id, r.batch_id);
    }
    let item = b
        .items
        .iter()
        .find(|i| i.item_id == r.item_id)
        .ok_or_else(|| anyhow!("item {} is not in batch {}", r.item_id, r.batch_id))?;
    if r.presented_position >= item.candidates.len() {
        bail!("position {} is out of range for item {}", r.presented_position, r.item_id);
    }
    Ok(())
}

fn read_any_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        Ok(corpus::read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
    } else {
        Ok(read_ratings(path)?)
    }
}

pub fn ingest_ratings(a: IngestRatings, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("ingest-ratings", config);
    let batches = agreement::read_batches(run.input("batches", &a.batches)?)?;
    let by_id: HashMap<&str, &RatingBatch> = batches.iter().map(|b| (b.batch_id.as_str(), b)).collect();
    let mut merged: BTreeMap<(String, String, String, usize), RatingRecord> = BTreeMap::new();
    for path in &a.ratings {
        let path = run.input("ratings", path)?;
        for (n, r) in read_any_ratings(&path)?.into_iter().enumerate() {
            check_fits(&by_id, &r).with_context(|| format!("{} record {}", path.display(), n + 1))?;
            let key = (r.batch_id.clone(), r.rater_id.clone(), r.item_id.clone(), r.presented_position);
            match merged.get(&key) {
                Some(prev) if *prev != r => bail!(
                    "{} record {}: conflicting duplicate rating for batch {} rater {} item {} position {}",
                    path.display(),
                    n + 1,
                    key.0,
                    key.1,
                    key.2,
                    key.3
                ),
                _ => {
                    merged.insert(key, r);
                }
            }
        }
    }
    let expected: usize = batches
        .iter()
        .map(|b| b.raters.len() * b.items.iter().map(|i| i.candidates.len()).sum::<usize>())
        .sum();
    let rows: Vec<RatingRecord> = merged.into_values().collect();
    let out = run.output(&a.out)?;
    write_ratings(&rows, &out)?;
    log::info!("ingested {} of {} expected ratings", rows.len(), expected);
    run.finish(&out)
}

pub fn agreement(a: Agreement, config: PipelineConfig) -> Result<()> {
    let mut run = Run::new("agreement", config);
    let batches = agreement::read_batches(run.input("batches", &a.batches)?)?;
    let ratings = read_ratings(run.input("ratings", &a.ratings)?)?;
    let report = agreement::aggregate(&batches, &ratings)?;
    let out = run.output(&a.out)?;
    write_json(&out, &report)?;
    let table = match &a.table {
        Some(t) => run.output(t)?,
        None => out.with_extension("tsv"),
    };
    fs::write(&table, agreement::scores_tsv(&report)).with_context(|| format!("writing {}", table.display()))?;
    log::info!(
        "kappa: style strength {:.4}, semantic similarity {:.4} over {} pairs",
        report.kappa_style_strength,
        report.kappa_semantic_similarity,
        report.pairs
    );
    run.finish(&out)
}
