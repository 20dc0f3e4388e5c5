//! Tokenization and sentence segmentation, plus the lexical helpers built on
//! top of them.

mod inflect;
mod ngram;
pub mod porter;
mod postag;
mod style;

pub use inflect::VerbLexicon;
pub use ngram::{DEFAULT_MIN_FREQ, mine_ngrams, ngrams, NGram, NGramEntry, NGramIndex, INDEXED_ORDERS};
pub use postag::{parse_pretagged, CoarseTag, LexiconTagger, PosTagger};
pub use style::{PatternMatch, StylePhraseSet};

/// English clitics split off at the apostrophe, longest first.
const CLITICS: [&str; 7] = ["n't", "'re", "'ll", "'ve", "'s", "'m", "'d"];

/// Informal fusions split the way treebank tokenizers do ("wanna" -> "wan na").
const FUSIONS: [(&str, &str, &str); 3] = [("wanna", "wan", "na"), ("gonna", "gon", "na"), ("gotta", "got", "ta")];

/// Splits `text` into tokens.
///
/// Whitespace separates tokens; leading and trailing punctuation is
/// detached one character at a time; clitics (`n't`, `'re`, `'s`, `'ll`,
/// `'ve`, `'m`, `'d`) become their own token. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = word.replace(['\u{2019}', '\u{2018}'], "'");
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while end > start && is_punct(chars[end - 1]) {
            end -= 1;
        }
        while start < end && is_punct(chars[start]) && !is_clitic(&chars[start..end]) {
            start += 1;
        }
        for c in &chars[..start] {
            out.push(c.to_string());
        }
        if start < end {
            let core: String = chars[start..end].iter().collect();
            split_core(&core, &mut out);
        }
        for c in &chars[end..] {
            out.push(c.to_string());
        }
    }
    out
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn is_clitic(chars: &[char]) -> bool {
    let word: String = chars.iter().collect::<String>().to_lowercase();
    CLITICS.contains(&word.as_str())
}

fn split_core(core: &str, out: &mut Vec<String>) {
    let lower = core.to_lowercase();
    for (fused, a, b) in FUSIONS {
        if lower == fused {
            out.push(core[..a.len()].to_string());
            out.push(core[a.len()..].to_string());
            debug_assert_eq!(b.len(), core.len() - a.len());
            return;
        }
    }
    for clitic in CLITICS {
        if lower.len() > clitic.len() && lower.ends_with(clitic) && lower.is_char_boundary(lower.len() - clitic.len()) {
            let cut = core.len() - clitic.len();
            if core.is_char_boundary(cut) {
                out.push(core[..cut].to_string());
                out.push(core[cut..].to_string());
                return;
            }
        }
    }
    out.push(core.to_string());
}

/// Joins tokens with single spaces.
pub fn join(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Joins tokens, attaching closing punctuation and clitics to the previous
/// token ("people ." -> "people.", "do n't" -> "don't").
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let attach = i > 0
            && (matches!(tok.as_str(), "." | "," | "!" | "?" | ";" | ":" | ")" | "%")
                || CLITICS.iter().any(|c| tok.eq_ignore_ascii_case(c))
                || (i > 0 && is_fusion_tail(&tokens[i - 1], tok)));
        if i > 0 && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn is_fusion_tail(prev: &str, tok: &str) -> bool {
    FUSIONS
        .iter()
        .any(|(_, a, b)| prev.eq_ignore_ascii_case(a) && tok.eq_ignore_ascii_case(b))
}

pub fn lowercase(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

const ABBREVIATIONS: [&str; 14] = [
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "approx", "no",
];

/// Splits running text into sentences at `.`, `!` or `?` followed by
/// whitespace and an uppercase letter, unless the word carrying the period
/// is a known abbreviation.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            // Absorb runs like "?!" or "..." and closing quotes.
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j && k < chars.len() && chars[k].1.is_uppercase();
            if boundary && !(c == '.' && is_abbreviation(&text[start..pos])) {
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    out.push(sentence.to_string());
                }
                start = chars[k].0;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace())
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str()) || (word.chars().count() == 1 && word.chars().all(char::is_alphabetic))
}
