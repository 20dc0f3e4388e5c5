//! METEOR with exact and Porter-stem matching stages.
//!
//! Each stage matches as many tokens as possible (exact first, then stems
//! among the tokens left over). Among the alignments with those match counts
//! the one with the fewest chunks is chosen by depth-first search; the search
//! is exhaustive unless it exceeds [`NODE_BUDGET`] nodes after a first
//! alignment is found, in which case the best alignment so far is used.

use std::collections::HashMap;

use crate::text::porter;

pub const ALPHA: f64 = 0.9;
pub const GAMMA: f64 = 0.5;
pub const THETA: f64 = 3.0;
pub const NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// (candidate position, reference position), by candidate position.
    pub links: Vec<(usize, usize)>,
    pub exact: usize,
    pub stem: usize,
    pub chunks: usize,
    /// False when the node budget cut the chunk search short.
    pub exhaustive: bool,
}

impl Alignment {
    pub fn matches(&self) -> usize {
        self.exact + self.stem
    }
}

/// Chunks in links sorted by candidate position: runs where both positions
/// advance by one.
pub fn count_chunks(links: &[(usize, usize)]) -> usize {
    links
        .iter()
        .enumerate()
        .filter(|(k, &(i, j))| *k == 0 || links[k - 1] != (i.wrapping_sub(1), j.wrapping_sub(1)))
        .count()
}

/// Score from match statistics.
pub fn score(matches: usize, chunks: usize, cand_len: usize, ref_len: usize) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let f_mean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
    let penalty = GAMMA * (chunks as f64 / m).powf(THETA);
    f_mean * (1.0 - penalty)
}

pub fn meteor(candidate: &[String], reference: &[String]) -> f64 {
    let a = align(candidate, reference);
    score(a.matches(), a.chunks, candidate.len(), reference.len())
}

struct Search {
    cand_word: Vec<usize>,
    cand_stem: Vec<usize>,
    ref_word: Vec<usize>,
    ref_stem: Vec<usize>,
    exact_need: Vec<usize>,
    stem_need: Vec<usize>,
    /// Candidate tokens at positions after the current one, by word / stem.
    cand_rest_word: Vec<usize>,
    cand_rest_stem: Vec<usize>,
    ref_free_word: Vec<usize>,
    ref_used: Vec<bool>,
    links: Vec<(usize, usize)>,
    best: Option<(usize, Vec<(usize, usize)>)>,
    nodes: usize,
    cut: bool,
}

enum Link {
    Exact,
    Stem,
}

impl Search {
    fn link_kind(&self, i: usize, j: usize) -> Option<Link> {
        if self.ref_used[j] {
            return None;
        }
        let (w, rw) = (self.cand_word[i], self.ref_word[j]);
        if w == rw {
            (self.exact_need[w] > 0).then_some(Link::Exact)
        } else if self.cand_stem[i] == self.ref_stem[j]
            && self.stem_need[self.cand_stem[i]] > 0
            && self.exact_need[w] <= self.cand_rest_word[w]
            && self.ref_free_word[rw] > self.exact_need[rw]
        {
            Some(Link::Stem)
        } else {
            None
        }
    }

    fn dfs(&mut self, i: usize, chunks: usize) {
        self.nodes += 1;
        if self.best.is_some() && self.nodes > NODE_BUDGET {
            self.cut = true;
            return;
        }
        if self.best.as_ref().is_some_and(|(b, _)| chunks >= *b) {
            return;
        }
        if i == self.cand_word.len() {
            if self.exact_need.iter().all(|&n| n == 0) && self.stem_need.iter().all(|&n| n == 0) {
                self.best = Some((chunks, self.links.clone()));
            }
            return;
        }
        let (w, s) = (self.cand_word[i], self.cand_stem[i]);
        self.cand_rest_word[w] -= 1;
        self.cand_rest_stem[s] -= 1;

        // Continuing the previous chunk first, then every other link, then skipping.
        let continuation = self
            .links
            .last()
            .filter(|&&(pi, pj)| pi + 1 == i && pj + 1 < self.ref_word.len())
            .map(|&(_, pj)| pj + 1);
        let mut options: Vec<usize> = continuation.into_iter().collect();
        options.extend((0..self.ref_word.len()).filter(|&j| Some(j) != continuation));
        for j in options {
            let Some(kind) = self.link_kind(i, j) else { continue };
            let rw = self.ref_word[j];
            match kind {
                Link::Exact => self.exact_need[w] -= 1,
                Link::Stem => self.stem_need[s] -= 1,
            }
            self.ref_used[j] = true;
            self.ref_free_word[rw] -= 1;
            self.links.push((i, j));
            let extra = usize::from(Some(j) != continuation);
            self.dfs(i + 1, chunks + extra);
            self.links.pop();
            self.ref_free_word[rw] += 1;
            self.ref_used[j] = false;
            match kind {
                Link::Exact => self.exact_need[w] += 1,
                Link::Stem => self.stem_need[s] += 1,
            }
            if self.cut {
                break;
            }
        }
        if !self.cut && self.exact_need[w] <= self.cand_rest_word[w] && self.stem_need[s] <= self.cand_rest_stem[s] {
            self.dfs(i + 1, chunks);
        }

        self.cand_rest_word[w] += 1;
        self.cand_rest_stem[s] += 1;
    }
}

pub fn align(candidate: &[String], reference: &[String]) -> Alignment {
    let mut words: HashMap<String, usize> = HashMap::new();
    let mut stems: HashMap<String, usize> = HashMap::new();
    let mut word_stem: Vec<usize> = Vec::new();
    let mut intern = |t: &str| -> (usize, usize) {
        let next = words.len();
        let w = *words.entry(t.to_owned()).or_insert(next);
        if w == word_stem.len() {
            let st = porter::stem(t);
            let next = stems.len();
            word_stem.push(*stems.entry(st).or_insert(next));
        }
        (w, word_stem[w])
    };
    let (cand_word, cand_stem): (Vec<usize>, Vec<usize>) = candidate.iter().map(|t| intern(t)).unzip();
    let (ref_word, ref_stem): (Vec<usize>, Vec<usize>) = reference.iter().map(|t| intern(t)).unzip();
    let (nw, ns) = (words.len(), stems.len());

    let tally = |ids: &[usize], n: usize| {
        let mut c = vec![0usize; n];
        ids.iter().for_each(|&i| c[i] += 1);
        c
    };
    let (cw, rw) = (tally(&cand_word, nw), tally(&ref_word, nw));
    let exact_need: Vec<usize> = (0..nw).map(|w| cw[w].min(rw[w])).collect();
    let mut left_c = vec![0usize; ns];
    let mut left_r = vec![0usize; ns];
    for w in 0..nw {
        left_c[word_stem[w]] += cw[w] - exact_need[w];
        left_r[word_stem[w]] += rw[w] - exact_need[w];
    }
    let stem_need: Vec<usize> = (0..ns).map(|s| left_c[s].min(left_r[s])).collect();
    let exact = exact_need.iter().sum();
    let stem = stem_need.iter().sum();

    let mut search = Search {
        cand_rest_word: cw,
        cand_rest_stem: tally(&cand_stem, ns),
        ref_free_word: rw,
        ref_used: vec![false; reference.len()],
        cand_word,
        cand_stem,
        ref_word,
        ref_stem,
        exact_need,
        stem_need,
        links: Vec::new(),
        best: None,
        nodes: 0,
        cut: false,
    };
    search.dfs(0, 0);
    if search.cut {
        log::debug!("METEOR chunk search hit the node budget");
    }
    let (chunks, links) = search.best.expect("an alignment with maximal stage counts exists");
    Alignment {
        links,
        exact,
        stem,
        chunks,
        exhaustive: !search.cut,
    }
}
