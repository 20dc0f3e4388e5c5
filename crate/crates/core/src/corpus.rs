//! Shared domain types, on-disk formats and deterministic splitting.
//!
//! Corpora and pair files are JSON Lines (one record per line, UTF-8);
//! ratings are CSV with a fixed header.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{rng, text};

/// Response types adapted from the MITI code. Codes 0..=14 follow
/// declaration order and are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MitiLabel {
    ClosedQuestion,
    OpenQuestion,
    SimpleReflection,
    ComplexReflection,
    GiveInformation,
    AdviseWithPermission,
    Affirm,
    EmphasizeAutonomy,
    Support,
    AdviseWithoutPermission,
    Confront,
    Direct,
    Warn,
    SelfDisclose,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelGroup {
    GeneralFavourable,
    MiAdherent,
    MiNonAdherent,
    Other,
}

impl MitiLabel {
    pub const COUNT: usize = 15;

    pub const ALL: [MitiLabel; 15] = [
        MitiLabel::ClosedQuestion,
        MitiLabel::OpenQuestion,
        MitiLabel::SimpleReflection,
        MitiLabel::ComplexReflection,
        MitiLabel::GiveInformation,
        MitiLabel::AdviseWithPermission,
        MitiLabel::Affirm,
        MitiLabel::EmphasizeAutonomy,
        MitiLabel::Support,
        MitiLabel::AdviseWithoutPermission,
        MitiLabel::Confront,
        MitiLabel::Direct,
        MitiLabel::Warn,
        MitiLabel::SelfDisclose,
        MitiLabel::Other,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn group(self) -> LabelGroup {
        use MitiLabel::*;
        match self {
            ClosedQuestion | OpenQuestion | SimpleReflection | ComplexReflection
            | GiveInformation => LabelGroup::GeneralFavourable,
            AdviseWithPermission | Affirm | EmphasizeAutonomy | Support => LabelGroup::MiAdherent,
            AdviseWithoutPermission | Confront | Direct | Warn => LabelGroup::MiNonAdherent,
            SelfDisclose | Other => LabelGroup::Other,
        }
    }

    pub fn name(self) -> &'static str {
        use MitiLabel::*;
        match self {
            ClosedQuestion => "ClosedQuestion",
            OpenQuestion => "OpenQuestion",
            SimpleReflection => "SimpleReflection",
            ComplexReflection => "ComplexReflection",
            GiveInformation => "GiveInformation",
            AdviseWithPermission => "AdviseWithPermission",
            Affirm => "Affirm",
            EmphasizeAutonomy => "EmphasizeAutonomy",
            Support => "Support",
            AdviseWithoutPermission => "AdviseWithoutPermission",
            Confront => "Confront",
            Direct => "Direct",
            Warn => "Warn",
            SelfDisclose => "SelfDisclose",
            Other => "Other",
        }
    }
}

impl fmt::Display for MitiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MitiLabel {
    type Err = Error;

    /// Accepts the variant name (case-insensitive) or the integer code.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(code) = s.parse::<usize>() {
            return Self::from_code(code).ok_or_else(|| Error::invalid(format!("label code {code}")));
        }
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gold,
    Ngram,
    Retrieval,
    Union,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Counselchat,
    Red,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    pub label: Option<MitiLabel>,
    pub provenance: Provenance,
    pub source: Source,
}

impl LabeledSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        LabeledSentence {
            id: id.into(),
            text: text.into(),
            tokens: None,
            label: None,
            provenance: Provenance::Gold,
            source: Source::Other,
        }
    }

    pub fn gold(id: impl Into<String>, text: impl Into<String>, label: MitiLabel) -> Self {
        LabeledSentence {
            label: Some(label),
            ..Self::new(id, text)
        }
    }

    /// Stored tokens, or the tokenization of `text` when none are stored.
    pub fn tokens(&self) -> Vec<String> {
        match &self.tokens {
            Some(tokens) => tokens.clone(),
            None => text::tokenize(&self.text),
        }
    }

    fn validate(&self, line: usize) -> Result<()> {
        if self.provenance == Provenance::Gold && self.label.is_none() {
            return Err(Error::Parse {
                line,
                message: format!("gold record {:?} has no label", self.id),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMethod {
    Template,
    Retrieval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    #[default]
    None,
    Generic,
    Ngram,
}

/// An (Advise without Permission, Advise with Permission) training record.
///
/// The source is always an Advise-without-Permission sentence, so only its
/// id and text are carried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoPair {
    pub source_id: String,
    pub source_text: String,
    pub target_text: String,
    pub method: PairMethod,
    pub prompt: Option<String>,
    pub prompt_kind: PromptKind,
}

impl PseudoPair {
    /// Model input: the source text with the prompt (if any) appended.
    pub fn input_text(&self) -> String {
        match &self.prompt {
            Some(prompt) => format!("{} {}", self.source_text, prompt),
            None => self.source_text.clone(),
        }
    }
}

/// One rater's two Likert answers for one presented rephrasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub rater_id: String,
    pub style_strength: u8,
    pub semantic_similarity: u8,
    pub batch_id: String,
    pub presented_position: usize,
}

pub const LIKERT_MAX: u8 = 4;

pub const RATINGS_HEADER: [&str; 6] = [
    "item_id",
    "rater_id",
    "style_strength",
    "semantic_similarity",
    "batch_id",
    "presented_position",
];

impl RatingRecord {
    pub fn validate(&self) -> Result<()> {
        if self.style_strength > LIKERT_MAX || self.semantic_similarity > LIKERT_MAX {
            return Err(Error::invalid(format!(
                "rating for item {:?} by {:?} outside 0..=4",
                self.item_id, self.rater_id
            )));
        }
        Ok(())
    }
}

/// Exact fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    fn floor_of(self, n: usize) -> usize {
        (n as u128 * self.num as u128 / self.den as u128) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Ratio,
    pub valid: Ratio,
    pub test: Ratio,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: Ratio::new(8, 10),
            valid: Ratio::new(1, 10),
            test: Ratio::new(1, 10),
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|r| r.den == 0) {
            return Err(Error::invalid("split fraction with zero denominator"));
        }
        // a/b + c/d + e/f == 1, cross-multiplied.
        let den: u128 = parts.iter().map(|r| r.den as u128).product();
        let num: u128 = parts
            .iter()
            .map(|r| r.num as u128 * den / r.den as u128)
            .sum();
        if num != den {
            return Err(Error::invalid("split fractions do not sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

/// Deterministic train/valid/test partition.
///
/// Ids are sorted, shuffled with the seeded stream and sliced. Part sizes
/// are the floors of `n * fraction`; the remainder goes one each to train,
/// then valid, then test.
pub fn split_corpus(ids: &[String], spec: &SplitSpec) -> Result<Split> {
    if ids.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    spec.validate()?;
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate id {:?}", w[0])));
    }
    rng::shuffle(&mut sorted, &mut rng::seeded(spec.seed));

    let n = sorted.len();
    let mut sizes = [spec.train.floor_of(n), spec.valid.floor_of(n), spec.test.floor_of(n)];
    let remainder = n - sizes.iter().sum::<usize>();
    for i in 0..remainder {
        sizes[i % 3] += 1;
    }

    let test = sorted.split_off(sizes[0] + sizes[1]);
    let valid = sorted.split_off(sizes[0]);
    Ok(Split {
        train: sorted,
        valid,
        test,
    })
}

/// Reads a JSON Lines file, skipping blank lines. Each value is returned with
/// its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<(usize, T)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, record) in read_jsonl::<LabeledSentence>(path)? {
        record.validate(line)?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                line,
                id: record.id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_corpus(records: &[LabeledSentence], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<PseudoPair>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, p)| p).collect())
}

pub fn write_pairs(pairs: &[PseudoPair], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(path, pairs)
}

pub fn read_ratings(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings_from(file)
}

pub fn read_ratings_from(reader: impl std::io::Read) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != RATINGS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("ratings header must be {}", RATINGS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (idx, row) in rdr.deserialize::<RatingRecord>().enumerate() {
        let record = row.map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes the ratings CSV: fixed header, `\n` line endings, no quoting
/// unless a field requires it.
pub fn write_ratings_to(records: &[RatingRecord], writer: impl Write) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(RATINGS_HEADER)?;
    for record in records {
        wtr.serialize(record)?;
    }
    wtr.flush().map_err(|e| Error::io("<ratings>", e))
}

pub fn write_ratings(records: &[RatingRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ratings_to(records, BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn label_codes_and_groups() {
        assert_eq!(MitiLabel::ALL.len(), 15);
        for (code, label) in MitiLabel::ALL.iter().enumerate() {
            assert_eq!(label.code(), code);
            assert_eq!(MitiLabel::from_code(code), Some(*label));
            assert_eq!(label.name().parse::<MitiLabel>().unwrap(), *label);
        }
        assert_eq!(MitiLabel::from_code(15), None);
        assert_eq!(MitiLabel::AdviseWithPermission.group(), LabelGroup::MiAdherent);
        assert_eq!(MitiLabel::AdviseWithoutPermission.group(), LabelGroup::MiNonAdherent);
        assert_eq!(MitiLabel::OpenQuestion.group(), LabelGroup::GeneralFavourable);
        assert_eq!(MitiLabel::SelfDisclose.group(), LabelGroup::Other);
    }

    #[test]
    fn split_sizes() {
        let s = split_corpus(&ids(10), &SplitSpec::with_seed(7)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        let s = split_corpus(&ids(1), &SplitSpec::with_seed(123)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (1, 0, 0));
        let s = split_corpus(&ids(9), &SplitSpec::with_seed(0)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 0));
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split_corpus(&[], &SplitSpec::default()),
            Err(Error::EmptyCorpus)
        ));
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(split_corpus(&dup, &SplitSpec::default()).is_err());
        let bad = SplitSpec {
            test: Ratio::new(2, 10),
            ..SplitSpec::default()
        };
        assert!(split_corpus(&ids(3), &bad).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_and_is_deterministic(n in 1usize..200, seed in any::<u64>()) {
            let input = ids(n);
            let a = split_corpus(&input, &SplitSpec::with_seed(seed)).unwrap();
            let b = split_corpus(&input, &SplitSpec::with_seed(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.valid.len(), n / 10 + usize::from(n - n * 8 / 10 - 2 * (n / 10) >= 2));
            let mut all: Vec<String> = a.train.iter().chain(&a.valid).chain(&a.test).cloned().collect();
            all.sort();
            let mut expected = input.clone();
            expected.sort();
            prop_assert_eq!(all, expected);
        }
    }

    #[test]
    fn corpus_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut s = LabeledSentence::gold("s1", "You should rest .", MitiLabel::AdviseWithoutPermission);
        s.source = Source::Red;
        write_corpus(std::slice::from_ref(&s), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, vec![s]);
        write_corpus(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\"id\":\"s1\",\"text\":\"You should rest .\",\"label\":\"AdviseWithoutPermission\",\"provenance\":\"gold\",\"source\":\"red\"}\n"
        );
    }

    #[test]
    fn corpus_read_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        assert!(read_corpus(&empty).unwrap().is_empty());

        let dup = dir.path().join("dup.jsonl");
        let line = r#"{"id":"s1","text":"a","label":null,"provenance":"ngram","source":"other"}"#;
        std::fs::write(&dup, format!("{line}\n{line}\n")).unwrap();
        match read_corpus(&dup) {
            Err(Error::DuplicateId { line, id }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "s1");
            }
            other => panic!("expected duplicate id, got {other:?}"),
        }

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, format!("{line}\n{{not json\n")).unwrap();
        assert!(matches!(read_corpus(&bad), Err(Error::Parse { line: 2, .. })));

        let unlabeled_gold = dir.path().join("gold.jsonl");
        std::fs::write(
            &unlabeled_gold,
            r#"{"id":"s1","text":"a","label":null,"provenance":"gold","source":"other"}"#,
        )
        .unwrap();
        assert!(matches!(read_corpus(&unlabeled_gold), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn ratings_csv_round_trip() {
        let records = vec![RatingRecord {
            item_id: "t1".into(),
            rater_id: "r1".into(),
            style_strength: 3,
            semantic_similarity: 4,
            batch_id: "b0".into(),
            presented_position: 2,
        }];
        let mut buf = Vec::new();
        write_ratings_to(&records, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "item_id,rater_id,style_strength,semantic_similarity,batch_id,presented_position\nt1,r1,3,4,b0,2\n"
        );
        assert_eq!(read_ratings_from(&buf[..]).unwrap(), records);

        let out_of_range = "item_id,rater_id,style_strength,semantic_similarity,batch_id,presented_position\nt1,r1,5,4,b0,2\n";
        assert!(read_ratings_from(out_of_range.as_bytes()).is_err());
    }
}
