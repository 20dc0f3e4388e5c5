use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const BUNDLED_VERBS: &str = include_str!("../../data/verbs.txt");
const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/ing_exceptions.txt");

/// Base-form English verbs with an `-ing` exception table.
#[derive(Debug, Clone, Default)]
pub struct VerbLexicon {
    verbs: HashSet<String>,
    exceptions: HashMap<String, String>,
}

impl VerbLexicon {
    /// Parses a verb list (one base form per line) and an exception table
    /// (`base ing-form` per line). Blank lines and `#` comments are skipped.
    pub fn parse(verbs: &str, exceptions: &str) -> Result<Self> {
        let entries = |s: &'_ str| {
            s.lines()
                .map(str::trim)
                .enumerate()
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .map(|(i, l)| (i + 1, l.to_owned()))
                .collect::<Vec<_>>()
        };
        let verbs: HashSet<String> = entries(verbs).into_iter().map(|(_, v)| v.to_lowercase()).collect();
        let mut table = HashMap::new();
        for (line, entry) in entries(exceptions) {
            let mut parts = entry.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(base), Some(ing), None) => {
                    table.insert(base.to_lowercase(), ing.to_lowercase());
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: "expected `base ing-form`".into(),
                    })
                }
            }
        }
        Ok(VerbLexicon {
            verbs,
            exceptions: table,
        })
    }

    /// The lexicon shipped with the crate (about 2,000 common verbs).
    pub fn bundled() -> &'static VerbLexicon {
        static LEXICON: OnceLock<VerbLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            VerbLexicon::parse(BUNDLED_VERBS, BUNDLED_EXCEPTIONS).expect("bundled lexicon parses")
        })
    }

    pub fn len(&self) -> usize {
        self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.verbs.contains(&word.to_lowercase())
    }

    /// Present participle of a lexicon verb.
    pub fn present_continuous(&self, verb: &str) -> Result<String> {
        let verb = verb.to_lowercase();
        if !self.verbs.contains(&verb) {
            return Err(Error::UnknownVerb(verb));
        }
        if let Some(form) = self.exceptions.get(&verb) {
            return Ok(form.clone());
        }
        Ok(ing_by_rule(&verb))
    }

    /// Base form for a known `-ing` form, used when comparing inflected
    /// targets back to their sources.
    pub fn base_of_ing(&self, form: &str) -> Option<String> {
        let form = form.to_lowercase();
        let stem = form.strip_suffix("ing")?;
        if let Some((base, _)) = self.exceptions.iter().find(|(_, ing)| **ing == form) {
            return Some(base.clone());
        }
        let mut candidates = vec![stem.to_owned(), format!("{stem}e")];
        let sb = stem.as_bytes();
        if sb.len() >= 2 && sb[sb.len() - 1] == sb[sb.len() - 2] {
            candidates.push(stem[..stem.len() - 1].to_owned());
        }
        if let Some(y) = stem.strip_suffix('y') {
            candidates.push(format!("{y}ie"));
        }
        candidates
            .into_iter()
            .find(|c| self.verbs.contains(c) && self.present_continuous(c).is_ok_and(|f| f == form))
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// `-ing` suffixation rules, applied when the exception table has no entry.
fn ing_by_rule(verb: &str) -> String {
    let b = verb.as_bytes();
    let n = b.len();
    if let Some(stem) = verb.strip_suffix("ie") {
        return format!("{stem}ying");
    }
    // Silent final e: "take" -> "taking"; keeps "see", "hoe", "dye", "be".
    if n > 2 && b[n - 1] == b'e' && !matches!(b[n - 2], b'e' | b'o' | b'i' | b'y') {
        return format!("{}ing", &verb[..n - 1]);
    }
    // CVC monosyllable not ending in w/x/y doubles its final consonant.
    let vowel_groups = b
        .iter()
        .enumerate()
        .filter(|&(i, &c)| is_vowel(c) && (i == 0 || !is_vowel(b[i - 1])))
        .count();
    if vowel_groups == 1
        && n >= 3
        && !is_vowel(b[n - 1])
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
        && is_vowel(b[n - 2])
        && !is_vowel(b[n - 3])
    {
        return format!("{verb}{}ing", b[n - 1] as char);
    }
    format!("{verb}ing")
}
