//! Externally produced embeddings and exact cosine retrieval.
//!
//! File format: the first line holds the dimension `d`; every following
//! line is `key<TAB>v1 v2 ... vd`. Keys may contain spaces when the tab
//! separator is used; lines without a tab split at the first space.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for {key:?} has {} values, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value in vector for {key:?}")));
        }
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.data.extend(vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.index
            .get(key)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn require(&self, key: &str) -> Result<&[f64]> {
        self.get(key).ok_or_else(|| Error::MissingKey(key.to_owned()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let dim = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => {
                    break l.trim().parse::<usize>().ok().filter(|&d| d > 0).ok_or_else(|| Error::Parse {
                        line: i + 1,
                        message: format!("expected a positive dimension, found {l:?}"),
                    })?
                }
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "missing dimension header".into(),
                    })
                }
            }
        };
        let mut table = EmbeddingTable::new(dim);
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (key, values) = line
                .split_once('\t')
                .or_else(|| line.split_once(' '))
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected `key<TAB>values`".into(),
                })?;
            let vector = values
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("invalid number {v:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    line: line_no,
                    expected: dim,
                    found: vector.len(),
                });
            }
            if table.index.contains_key(key) {
                return Err(Error::DuplicateId {
                    line: line_no,
                    id: key.to_owned(),
                });
            }
            table.insert(key, vector)?;
        }
        Ok(table)
    }

    /// Writes the table in the file format above, values in shortest
    /// round-trip decimal form.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{}\n", self.dim);
        for key in &self.keys {
            let values: Vec<String> = self.get(key).unwrap().iter().map(|v| format!("{v:?}")).collect();
            out.push_str(key);
            out.push('\t');
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        out
    }

    /// Cosine between two stored vectors.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        cosine(self.require(a)?, self.require(b)?)
    }

    /// Candidates whose similarity to `query` is strictly above `threshold`,
    /// best first; equal similarities are ordered by key.
    pub fn neighbors_above(
        &self,
        query: &str,
        candidates: &[impl AsRef<str>],
        threshold: f64,
    ) -> Result<Vec<(String, f64)>> {
        let q = self.require(query)?;
        let mut hits = Vec::new();
        for cand in candidates {
            let cand = cand.as_ref();
            let sim = cosine(q, self.require(cand)?)?;
            if sim > threshold {
                hits.push((cand.to_owned(), sim));
            }
        }
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(hits)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&text)
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `dot(u, v) / (|u| |v|)`, clamped to [-1, 1] against rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("dimension {} vs {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
