use serde::{Deserialize, Serialize};

use super::VerbLexicon;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoarseTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Other,
}

impl CoarseTag {
    pub const ALL: [CoarseTag; 6] = [
        CoarseTag::Noun,
        CoarseTag::Verb,
        CoarseTag::Adj,
        CoarseTag::Adv,
        CoarseTag::Pron,
        CoarseTag::Other,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "NOUN" | "PROPN" => CoarseTag::Noun,
            "VERB" | "AUX" => CoarseTag::Verb,
            "ADJ" => CoarseTag::Adj,
            "ADV" => CoarseTag::Adv,
            "PRON" => CoarseTag::Pron,
            "OTHER" | "X" | "DET" | "ADP" | "CCONJ" | "SCONJ" | "PART" | "PUNCT" | "NUM" | "INTJ"
            | "SYM" => CoarseTag::Other,
            _ => return None,
        })
    }
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Vec<CoarseTag>;
}

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "yourselves", "he", "him",
    "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our",
    "ours", "ourselves", "they", "them", "their", "theirs", "themselves", "someone", "somebody",
    "anyone", "anybody", "everyone", "everybody", "nobody", "something", "anything", "everything",
    "nothing", "who", "whom", "whose", "what", "which", "u",
];

const AUXILIARIES: &[&str] = &[
    "am", "is", "are", "was", "were", "been", "being", "'m", "'re", "'s", "has", "had", "'ve", "'d",
    "does", "did", "done", "can", "could", "will", "would", "shall", "should", "may", "might", "must",
    "'ll", "ca", "wo",
];

const ADVERBS: &[&str] = &[
    "not", "n't", "very", "really", "just", "also", "maybe", "perhaps", "always", "never", "often",
    "sometimes", "too", "still", "already", "here", "there", "now", "then", "even", "ever", "only",
    "quite", "rather", "almost", "again", "soon", "together", "away", "back", "today", "tomorrow",
    "yesterday", "probably", "definitely", "actually", "usually", "anyway", "else", "instead",
    "once", "twice", "ago", "yet", "how", "when", "where", "why", "well", "so", "much", "more",
    "most", "less", "least", "alone",
];

const ADJECTIVES: &[&str] = &[
    "good", "bad", "new", "old", "important", "helpful", "hard", "easy", "able", "happy", "sad",
    "best", "better", "worse", "worst", "great", "little", "big", "small", "long", "short", "high",
    "low", "young", "right", "wrong", "sure", "glad", "sorry", "proud", "alone", "difficult", "free",
    "safe", "strong", "weak", "tired", "afraid", "okay", "ok", "fine", "real", "true", "whole",
    "own", "same", "different", "other", "next", "last", "first", "many", "few", "several",
    "professional", "mental", "healthy", "worried", "anxious", "depressed", "lonely", "upset",
    "angry", "scared", "nice", "kind", "open", "close", "honest", "personal", "possible", "ready",
];

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "every", "each", "no", "all",
    "both", "either", "neither", "and", "or", "but", "nor", "if", "because", "while", "although",
    "though", "unless", "until", "since", "than", "as", "of", "to", "in", "on", "at", "by", "for",
    "with", "about", "from", "into", "onto", "over", "under", "after", "before", "between",
    "through", "during", "without", "within", "around", "against", "like", "up", "down", "out",
    "off", "near", "upon", "toward", "towards", "across", "behind", "beyond", "whether", "yes",
    "hello", "hi", "hey", "please", "thanks", "oh", "na", "ta",
];

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "some", "any", "every", "each", "no",
];

const ADJ_SUFFIXES: &[&str] = &["ful", "ous", "ive", "able", "ible", "less", "ish", "ical", "ic", "al", "ary"];
const NOUN_SUFFIXES: &[&str] = &["tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ist", "ism", "er", "or"];

/// Closed-class word lists, the verb lexicon and suffix rules. Open-class
/// words that match nothing else are nouns.
pub struct LexiconTagger<'a> {
    verbs: &'a VerbLexicon,
}

impl Default for LexiconTagger<'static> {
    fn default() -> Self {
        LexiconTagger {
            verbs: VerbLexicon::bundled(),
        }
    }
}

impl<'a> LexiconTagger<'a> {
    pub fn new(verbs: &'a VerbLexicon) -> Self {
        LexiconTagger { verbs }
    }

    fn is_verb_form(&self, w: &str) -> bool {
        if self.verbs.contains(w) {
            return true;
        }
        if w.ends_with("ing") && self.verbs.base_of_ing(w).is_some() {
            return true;
        }
        for (suffix, replacements) in [("ed", &["", "e"][..]), ("ied", &["y"][..]), ("es", &[""][..]), ("s", &[""][..])] {
            if let Some(stem) = w.strip_suffix(suffix) {
                if replacements.iter().any(|r| self.verbs.contains(&format!("{stem}{r}"))) {
                    return true;
                }
            }
        }
        false
    }

    fn tag_word(&self, w: &str, after_determiner: bool) -> CoarseTag {
        if !w.chars().any(char::is_alphabetic) {
            return CoarseTag::Other;
        }
        if PRONOUNS.contains(&w) && !after_determiner {
            return CoarseTag::Pron;
        }
        if AUXILIARIES.contains(&w) {
            return CoarseTag::Verb;
        }
        if ADVERBS.contains(&w) {
            return CoarseTag::Adv;
        }
        if ADJECTIVES.contains(&w) {
            return CoarseTag::Adj;
        }
        if FUNCTION_WORDS.contains(&w) {
            return CoarseTag::Other;
        }
        if after_determiner {
            return if ADJ_SUFFIXES.iter().any(|s| w.len() > s.len() + 2 && w.ends_with(s)) {
                CoarseTag::Adj
            } else {
                CoarseTag::Noun
            };
        }
        if self.is_verb_form(w) {
            return CoarseTag::Verb;
        }
        if w.len() > 4 && w.ends_with("ly") {
            return CoarseTag::Adv;
        }
        if NOUN_SUFFIXES.iter().any(|s| w.len() > s.len() + 2 && w.ends_with(s)) {
            return CoarseTag::Noun;
        }
        if ADJ_SUFFIXES.iter().any(|s| w.len() > s.len() + 2 && w.ends_with(s)) {
            return CoarseTag::Adj;
        }
        CoarseTag::Noun
    }
}

impl PosTagger for LexiconTagger<'_> {
    fn tag(&self, tokens: &[String]) -> Vec<CoarseTag> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut after_determiner = false;
        for token in tokens {
            let w = token.to_lowercase();
            let tag = self.tag_word(&w, after_determiner);
            // Adjectives keep the noun-phrase context open ("a good doctor").
            after_determiner = DETERMINERS.contains(&w.as_str()) || (after_determiner && tag == CoarseTag::Adj);
            out.push(tag);
        }
        out
    }
}

/// Parses a pre-tagged line of `word/TAG` tokens separated by spaces.
pub fn parse_pretagged(line: &str) -> Result<(Vec<String>, Vec<CoarseTag>)> {
    let mut words = Vec::new();
    let mut tags = Vec::new();
    for item in line.split_whitespace() {
        let (word, tag) = item
            .rsplit_once('/')
            .ok_or_else(|| Error::invalid(format!("pre-tagged token {item:?} lacks /TAG")))?;
        let tag = CoarseTag::parse(tag).ok_or_else(|| Error::invalid(format!("unknown tag in {item:?}")))?;
        words.push(word.to_owned());
        tags.push(tag);
    }
    Ok((words, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CoarseTag::*;

    fn tag(s: &str) -> Vec<CoarseTag> {
        let toks: Vec<String> = s.split(' ').map(str::to_owned).collect();
        LexiconTagger::default().tag(&toks)
    }

    #[test]
    fn tags_simple_advice() {
        assert_eq!(tag("You should see a therapist ."), [Pron, Verb, Verb, Other, Noun, Other]);
        assert_eq!(tag("try to learn from your mistakes"), [Verb, Other, Verb, Other, Pron, Noun]);
        assert_eq!(tag("I am really happy"), [Pron, Verb, Adv, Adj]);
        assert_eq!(tag("talking helps a lot"), [Verb, Verb, Other, Noun]);
        assert_eq!(tag("a wonderful doctor"), [Other, Adj, Noun]);
        assert_eq!(tag("go slowly"), [Verb, Adv]);
    }

    #[test]
    fn pretagged_input() {
        let (w, t) = parse_pretagged("see/VERB a/DET doctor/NOUN").unwrap();
        assert_eq!(w, ["see", "a", "doctor"]);
        assert_eq!(t, [Verb, Other, Noun]);
        assert!(parse_pretagged("see").is_err());
        assert!(parse_pretagged("see/BOGUS").is_err());
    }
}
