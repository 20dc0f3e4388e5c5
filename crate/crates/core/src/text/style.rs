use serde::{Deserialize, Serialize};

use crate::pp::{SOURCE_PATTERNS, TARGET_FORMS};

/// Attribute markers for the two advice styles, as lowercase token patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StylePhraseSet {
    pub without_permission: Vec<Vec<String>>,
    pub with_permission: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternMatch {
    pub start: usize,
    pub len: usize,
    pub with_permission: bool,
}

impl Default for StylePhraseSet {
    /// The fixed parts of the rephrasing template table.
    fn default() -> Self {
        let split = |p: &str| p.split(' ').map(str::to_owned).collect::<Vec<_>>();
        StylePhraseSet {
            without_permission: SOURCE_PATTERNS.iter().map(|p| split(p)).collect(),
            with_permission: TARGET_FORMS.iter().map(|f| split(f.marker())).collect(),
        }
    }
}

impl StylePhraseSet {
    /// Longest pattern (from either list) starting at `pos` of the lowercased
    /// token slice.
    fn longest_at(&self, lower: &[String], pos: usize) -> Option<PatternMatch> {
        let candidates = self
            .without_permission
            .iter()
            .map(|p| (p, false))
            .chain(self.with_permission.iter().map(|p| (p, true)));
        let mut best: Option<PatternMatch> = None;
        for (pattern, with_permission) in candidates {
            let len = pattern.len();
            if len == 0 || pos + len > lower.len() || lower[pos..pos + len] != pattern[..] {
                continue;
            }
            if best.is_none_or(|b| len > b.len) {
                best = Some(PatternMatch {
                    start: pos,
                    len,
                    with_permission,
                });
            }
        }
        best
    }

    /// Left-to-right scan taking the longest match at each position.
    pub fn matches(&self, tokens: &[String]) -> Vec<PatternMatch> {
        let lower = super::lowercase(tokens);
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < lower.len() {
            match self.longest_at(&lower, pos) {
                Some(m) => {
                    pos += m.len;
                    out.push(m);
                }
                None => pos += 1,
            }
        }
        out
    }

    /// First with-permission marker in scan order.
    pub fn first_with_permission(&self, tokens: &[String]) -> Option<PatternMatch> {
        self.matches(tokens).into_iter().find(|m| m.with_permission)
    }

    pub fn contains_with_permission(&self, tokens: &[String]) -> bool {
        self.first_with_permission(tokens).is_some()
    }

    fn kept_once(&self, tokens: &[String]) -> Vec<usize> {
        let matches = self.matches(tokens);
        let mut out = Vec::with_capacity(tokens.len());
        let mut next = matches.iter().peekable();
        let mut pos = 0;
        while pos < tokens.len() {
            if let Some(m) = next.peek().filter(|m| m.start == pos) {
                pos += m.len;
                next.next();
            } else {
                out.push(pos);
                pos += 1;
            }
        }
        out
    }

    /// Positions that survive [`StylePhraseSet::strip`].
    pub fn kept_indices(&self, tokens: &[String]) -> Vec<usize> {
        let mut kept: Vec<usize> = (0..tokens.len()).collect();
        loop {
            let current: Vec<String> = kept.iter().map(|&i| tokens[i].clone()).collect();
            let next = self.kept_once(&current);
            if next.len() == kept.len() {
                return kept;
            }
            kept = next.into_iter().map(|i| kept[i]).collect();
        }
    }

    /// Removes every style-marker occurrence. Removal can join tokens into a
    /// new occurrence, so the scan repeats until nothing changes.
    pub fn strip(&self, tokens: &[String]) -> Vec<String> {
        self.kept_indices(tokens).into_iter().map(|i| tokens[i].clone()).collect()
    }
}
