//! Pseudo-parallel corpus construction.
//!
//! Two constructions turn Advise-without-Permission sentences into
//! (source, target) pairs: template replacement, which swaps a detected
//! without-permission opener for a randomly chosen with-permission form, and
//! retrieval pairing, which matches each source with its most similar
//! Advise-with-Permission sentence. The template path doubles as the
//! deterministic rule-based rephraser.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledSentence, MitiLabel, PairMethod, PromptKind, PseudoPair};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng;
use crate::text::{self, StylePhraseSet, VerbLexicon};

/// Without-permission openers, each followed by a verb.
pub const SOURCE_PATTERNS: [&str; 10] = [
    "you can",
    "you could",
    "you need to",
    "you should",
    "you can try to",
    "i think you should",
    "i suggest that you",
    "i suggest you",
    "maybe you can",
    "maybe you could",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Prefix followed by the verb's base form.
    BaseVerb,
    /// Prefix followed by the verb's `-ing` form.
    PresentContinuous,
    /// The sentence followed by ", if you would like."
    Suffix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetForm {
    pub text: &'static str,
    pub kind: TargetKind,
}

impl TargetForm {
    const fn new(text: &'static str, kind: TargetKind) -> Self {
        TargetForm { text, kind }
    }

    /// Lowercase, space-separated token form of the fixed part.
    pub fn marker(&self) -> &'static str {
        MARKERS[TARGET_FORMS.iter().position(|f| f == self).expect("listed form")]
    }
}

/// With-permission forms in table order; `target_choice` indices refer to
/// positions in this list.
pub const TARGET_FORMS: [TargetForm; 15] = [
    TargetForm::new("It maybe helpful to", TargetKind::BaseVerb),
    TargetForm::new("You may want to", TargetKind::BaseVerb),
    TargetForm::new("I encourage you to", TargetKind::BaseVerb),
    TargetForm::new("Perhaps you can", TargetKind::BaseVerb),
    TargetForm::new(", if you would like.", TargetKind::Suffix),
    TargetForm::new("It would be good idea to", TargetKind::BaseVerb),
    TargetForm::new("It may be important to", TargetKind::BaseVerb),
    TargetForm::new("I would encourage you to", TargetKind::BaseVerb),
    TargetForm::new("I wonder if you can", TargetKind::BaseVerb),
    TargetForm::new("Maybe it is important to", TargetKind::BaseVerb),
    TargetForm::new("An option would be to", TargetKind::BaseVerb),
    TargetForm::new("You may want to consider", TargetKind::PresentContinuous),
    TargetForm::new("You may consider", TargetKind::PresentContinuous),
    TargetForm::new("I would recommend", TargetKind::PresentContinuous),
    TargetForm::new("I wonder if you can consider", TargetKind::PresentContinuous),
];

const MARKERS: [&str; 15] = [
    "it maybe helpful to",
    "you may want to",
    "i encourage you to",
    "perhaps you can",
    ", if you would like",
    "it would be good idea to",
    "it may be important to",
    "i would encourage you to",
    "i wonder if you can",
    "maybe it is important to",
    "an option would be to",
    "you may want to consider",
    "you may consider",
    "i would recommend",
    "i wonder if you can consider",
];

/// Leading discourse markers tolerated before a template ("Well , you ...").
const DISCOURSE_MARKERS: [&str; 3] = ["well", "so", "also"];

/// Sources longer than this many tokens are not templated.
pub const MAX_SOURCE_TOKENS: usize = 98;

pub const GENERIC_PROMPT: &str = "Advise with permission:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceRule {
    /// Index into [`SOURCE_PATTERNS`].
    Phrase(usize),
    BareImperative,
}

impl SourceRule {
    pub fn describe(&self) -> String {
        match self {
            SourceRule::Phrase(i) => format!("{} + V", SOURCE_PATTERNS[*i]),
            SourceRule::BareImperative => "V (imperative)".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateMatch {
    pub rule: SourceRule,
    /// Discourse marker and comma preceding the template, if any.
    pub lead: Vec<String>,
    pub verb: String,
    pub remainder: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// Tokens joined by single spaces ("... a doctor .").
    #[default]
    Preserve,
    /// Closing punctuation and clitics attached ("... a doctor.").
    Detokenize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetChoice {
    Index(usize),
    /// Uniform over eligible forms, drawn from the sentence's own stream.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    NotAdviseWithoutPermission,
    NoTemplate,
    TooLong,
    InflectionFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSkip {
    pub source_id: String,
    pub reason: SkipReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Detection and template replacement over one lexicon and phrase set.
#[derive(Debug, Clone)]
pub struct TemplateRephraser<'a> {
    lexicon: &'a VerbLexicon,
    phrases: StylePhraseSet,
    pub spacing: Spacing,
    pub max_tokens: usize,
}

impl Default for TemplateRephraser<'static> {
    fn default() -> Self {
        TemplateRephraser::new(VerbLexicon::bundled())
    }
}

impl<'a> TemplateRephraser<'a> {
    pub fn new(lexicon: &'a VerbLexicon) -> Self {
        TemplateRephraser {
            lexicon,
            phrases: StylePhraseSet::default(),
            spacing: Spacing::Preserve,
            max_tokens: MAX_SOURCE_TOKENS,
        }
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn phrases(&self) -> &StylePhraseSet {
        &self.phrases
    }

    /// Finds a without-permission template at the start of the sentence.
    ///
    /// Matching is case-insensitive, after an optional "well ,", "so ," or
    /// "also ,". The longest listed opener wins; otherwise a first token
    /// that is a lexicon verb (not followed by a negation) counts as a bare
    /// imperative. Sentences already carrying a with-permission marker are
    /// never matched.
    pub fn detect(&self, tokens: &[String]) -> Option<TemplateMatch> {
        if self.phrases.contains_with_permission(tokens) {
            return None;
        }
        let lower = text::lowercase(tokens);
        let start = match lower.as_slice() {
            [marker, comma, ..] if DISCOURSE_MARKERS.contains(&marker.as_str()) && comma == "," => 2,
            _ => 0,
        };
        let rest = &lower[start..];

        let phrase = SOURCE_PATTERNS
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.split(' ').collect::<Vec<_>>()))
            .filter(|(_, words)| {
                rest.len() > words.len() && words.iter().zip(rest).all(|(w, t)| w == t)
            })
            .max_by_key(|(_, words)| words.len());

        let (rule, verb_at) = match phrase {
            Some((i, words)) => {
                let at = start + words.len();
                if !is_word(&lower[at]) {
                    return None;
                }
                (SourceRule::Phrase(i), at)
            }
            None => {
                let first = rest.first()?;
                let negated = rest.get(1).is_some_and(|n| n == "n't" || n == "not");
                if !self.lexicon.contains(first) || negated {
                    return None;
                }
                (SourceRule::BareImperative, start)
            }
        };
        Some(TemplateMatch {
            rule,
            lead: tokens[..start].to_vec(),
            verb: tokens[verb_at].clone(),
            remainder: tokens[verb_at + 1..].to_vec(),
        })
    }

    /// Indices of target forms usable with `verb`. Continuous forms need an
    /// inflectable verb; a base-verb prefix is dropped when prefix plus verb
    /// spells another marker ("You may want to" + "consider").
    pub fn eligible_targets(&self, verb: &str) -> Vec<usize> {
        let verb = verb.to_lowercase();
        let inflects = self.lexicon.present_continuous(&verb).is_ok();
        TARGET_FORMS
            .iter()
            .enumerate()
            .filter(|(_, f)| match f.kind {
                TargetKind::PresentContinuous => inflects,
                TargetKind::BaseVerb => {
                    let joined = format!("{} {verb}", f.marker());
                    !MARKERS.contains(&joined.as_str())
                }
                TargetKind::Suffix => true,
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Target tokens for a detected template and a chosen form.
    pub fn render_tokens(&self, m: &TemplateMatch, form: &TargetForm) -> Result<Vec<String>> {
        let verb = m.verb.to_lowercase();
        let mut out: Vec<String> = m.lead.clone();
        match form.kind {
            TargetKind::BaseVerb | TargetKind::PresentContinuous => {
                let mut prefix = text::tokenize(form.text);
                if !out.is_empty() && prefix[0] != "I" {
                    prefix[0] = prefix[0].to_lowercase();
                }
                out.extend(prefix);
                out.push(match form.kind {
                    TargetKind::PresentContinuous => self.lexicon.present_continuous(&verb)?,
                    _ => verb,
                });
                out.extend(m.remainder.iter().cloned());
            }
            TargetKind::Suffix => {
                let mut body = vec![verb];
                body.extend(m.remainder.iter().cloned());
                let mut terminal = Vec::new();
                while body.last().is_some_and(|t| matches!(t.as_str(), "." | "!" | "?")) {
                    terminal.insert(0, body.pop().unwrap());
                }
                if terminal.is_empty() {
                    terminal.push(".".to_owned());
                }
                out.extend(body);
                out.extend(text::tokenize(", if you would like"));
                out.extend(terminal);
            }
        }
        capitalize_first(&mut out);
        Ok(out)
    }

    pub fn render(&self, tokens: &[String]) -> String {
        match self.spacing {
            Spacing::Preserve => text::join(tokens),
            Spacing::Detokenize => text::detokenize(tokens),
        }
    }

    /// Template-replaces one Advise-without-Permission sentence.
    pub fn rephrase(
        &self,
        sentence: &LabeledSentence,
        choice: TargetChoice,
    ) -> std::result::Result<PseudoPair, TemplateSkip> {
        let skip = |reason, detail: Option<String>| TemplateSkip {
            source_id: sentence.id.clone(),
            reason,
            detail,
        };
        let tokens = sentence.tokens();
        if tokens.len() > self.max_tokens {
            return Err(skip(SkipReason::TooLong, Some(format!("{} tokens", tokens.len()))));
        }
        let m = self.detect(&tokens).ok_or_else(|| skip(SkipReason::NoTemplate, None))?;
        let index = match choice {
            TargetChoice::Index(i) => {
                if i >= TARGET_FORMS.len() {
                    return Err(skip(SkipReason::NoTemplate, Some(format!("target index {i} out of range"))));
                }
                i
            }
            TargetChoice::Seeded(seed) => {
                let eligible = self.eligible_targets(&m.verb);
                eligible[rng::index(eligible.len(), &mut rng::for_key(seed, &sentence.id))]
            }
        };
        let target = self
            .render_tokens(&m, &TARGET_FORMS[index])
            .map_err(|e| skip(SkipReason::InflectionFailed, Some(e.to_string())))?;
        Ok(PseudoPair {
            source_id: sentence.id.clone(),
            source_text: sentence.text.clone(),
            target_text: self.render(&target),
            method: PairMethod::Template,
            prompt: None,
            prompt_kind: PromptKind::None,
        })
    }

    /// Runs template replacement over every Advise-without-Permission
    /// sentence, returning the pairs and a skip record for every other input.
    pub fn build_pairs(
        &self,
        corpus: &[LabeledSentence],
        seed: u64,
    ) -> (Vec<PseudoPair>, Vec<TemplateSkip>) {
        let mut pairs = Vec::new();
        let mut skips = Vec::new();
        for sentence in corpus {
            if sentence.label != Some(MitiLabel::AdviseWithoutPermission) {
                skips.push(TemplateSkip {
                    source_id: sentence.id.clone(),
                    reason: SkipReason::NotAdviseWithoutPermission,
                    detail: None,
                });
                continue;
            }
            match self.rephrase(sentence, TargetChoice::Seeded(seed)) {
                Ok(pair) => pairs.push(pair),
                Err(skip) => skips.push(skip),
            }
        }
        (pairs, skips)
    }
}

fn is_word(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_alphabetic)
}

fn capitalize_first(tokens: &mut [String]) {
    if let Some(first) = tokens.first_mut() {
        let mut chars = first.chars();
        if let Some(c) = chars.next() {
            *first = c.to_uppercase().chain(chars).collect();
        }
    }
}

/// Pairs each without-permission sentence with with-permission sentences
/// whose cosine similarity is strictly above `threshold`. With `one_best`
/// only the highest-scoring partner is kept (ties go to the smaller id).
pub fn pair_by_retrieval(
    without: &[LabeledSentence],
    with: &[LabeledSentence],
    table: &EmbeddingTable,
    threshold: f64,
    one_best: bool,
) -> Result<Vec<(PseudoPair, f64)>> {
    let with_ids: Vec<&str> = with.iter().map(|s| s.id.as_str()).collect();
    let by_id: std::collections::HashMap<&str, &LabeledSentence> =
        with.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = Vec::new();
    for source in without {
        let hits = table.neighbors_above(&source.id, &with_ids, threshold)?;
        let keep = if one_best { hits.len().min(1) } else { hits.len() };
        for (id, sim) in hits.into_iter().take(keep) {
            let target = by_id[id.as_str()];
            out.push((
                PseudoPair {
                    source_id: source.id.clone(),
                    source_text: source.text.clone(),
                    target_text: target.text.clone(),
                    method: PairMethod::Retrieval,
                    prompt: None,
                    prompt_kind: PromptKind::None,
                },
                sim,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    Generic,
    Ngram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormattedPair {
    pub pair: PseudoPair,
    /// Set when an n-gram prompt was requested but the target carries no
    /// with-permission marker, so the generic prompt was used.
    pub fell_back: bool,
}

/// Attaches a generic or n-gram prompt to a pair.
///
/// The n-gram prompt is the first with-permission marker found in the
/// target, spelled as in the target and followed by a colon.
pub fn format_prompt(pair: &PseudoPair, style: PromptStyle, phrases: &StylePhraseSet) -> FormattedPair {
    let generic = || PseudoPair {
        prompt: Some(GENERIC_PROMPT.to_owned()),
        prompt_kind: PromptKind::Generic,
        ..pair.clone()
    };
    match style {
        PromptStyle::Generic => FormattedPair {
            pair: generic(),
            fell_back: false,
        },
        PromptStyle::Ngram => {
            let tokens = text::tokenize(&pair.target_text);
            match phrases.first_with_permission(&tokens) {
                Some(m) => FormattedPair {
                    pair: PseudoPair {
                        prompt: Some(format!("{}:", text::join(&tokens[m.start..m.start + m.len]))),
                        prompt_kind: PromptKind::Ngram,
                        ..pair.clone()
                    },
                    fell_back: false,
                },
                None => FormattedPair {
                    pair: generic(),
                    fell_back: true,
                },
            }
        }
    }
}

/// Two-column `input<TAB>output` training file. Tabs and newlines inside
/// fields are replaced by spaces.
pub fn training_tsv(pairs: &[PseudoPair]) -> String {
    let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
    let mut out = String::new();
    for pair in pairs {
        let _ = writeln!(out, "{}\t{}", clean(&pair.input_text()), clean(&pair.target_text));
    }
    out
}

pub fn write_training_tsv(pairs: &[PseudoPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, training_tsv(pairs)).map_err(|e| Error::io(path, e))
}
