//! Word Mover's Distance as an exact transportation problem.
//!
//! Supplies and demands are scaled to integers (token counts times the other
//! side's length) and solved by successive shortest augmenting paths, which is
//! optimal for integral capacities.

use std::collections::{BTreeMap, VecDeque};

use crate::embedding::{euclidean, EmbeddingTable};
use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

struct Edge {
    to: usize,
    cap: u64,
    cost: f64,
}

/// Minimum total cost of shipping `supply` to `demand` (equal totals) with
/// unit costs `cost[i][j]`; returns the cost and the flow matrix.
pub fn transport(supply: &[u64], demand: &[u64], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<u64>>)> {
    let total: u64 = supply.iter().sum();
    if total != demand.iter().sum::<u64>() {
        return Err(Error::invalid("supply and demand totals differ"));
    }
    let (m, n) = (supply.len(), demand.len());
    let (source, sink) = (m + n, m + n + 1);
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n + 2];
    let mut add = |edges: &mut Vec<Edge>, from: usize, to: usize, cap: u64, cost: f64| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost });
        adj[to].push(edges.len());
        edges.push(Edge { to: from, cap: 0, cost: -cost });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(&mut edges, source, i, s, 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            add(&mut edges, i, m + j, total, cost[i][j]);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut edges, m + j, sink, d, 0.0);
    }

    let mut shipped = 0;
    let mut total_cost = 0.0;
    while shipped < total {
        // Bellman-Ford with a queue; residual costs may be negative.
        let mut dist = vec![f64::INFINITY; m + n + 2];
        let mut via = vec![usize::MAX; m + n + 2];
        let mut queued = vec![false; m + n + 2];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0.0;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &adj[u] {
                let edge = &edges[e];
                if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - EPS {
                    dist[edge.to] = dist[u] + edge.cost;
                    via[edge.to] = e;
                    if !queued[edge.to] {
                        queued[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::invalid("transport problem is infeasible"));
        }
        let mut push = total - shipped;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            total_cost += push as f64 * edges[e].cost;
            v = edges[e ^ 1].to;
        }
        shipped += push;
    }

    let mut flow = vec![vec![0u64; n]; m];
    for i in 0..m {
        for &e in &adj[i] {
            let to = edges[e].to;
            if (m..m + n).contains(&to) && e % 2 == 0 {
                flow[i][to - m] = edges[e ^ 1].cap;
            }
        }
    }
    Ok((total_cost, flow))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmdResult {
    pub distance: f64,
    /// Out-of-vocabulary tokens dropped from both sides.
    pub dropped: usize,
    pub total: usize,
}

/// Bag of in-vocabulary tokens: distinct tokens in first-seen order with counts.
pub(crate) fn in_vocab_bag<'a>(tokens: &'a [String], vectors: &EmbeddingTable) -> Vec<(&'a str, u64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut order = Vec::new();
    for t in tokens {
        if vectors.get(t).is_some() {
            let c = counts.entry(t.as_str()).or_insert(0);
            if *c == 0 {
                order.push(t.as_str());
            }
            *c += 1;
        }
    }
    order.into_iter().map(|t| (t, counts[t])).collect()
}

/// Earth mover's distance between the normalized bags of words, with
/// Euclidean distance between word vectors as ground cost.
pub fn wmd(candidate: &[String], reference: &[String], vectors: &EmbeddingTable) -> Result<WmdResult> {
    let cand = in_vocab_bag(candidate, vectors);
    let refs = in_vocab_bag(reference, vectors);
    if cand.is_empty() || refs.is_empty() {
        return Err(Error::NoVocabularyOverlap);
    }
    let nc: u64 = cand.iter().map(|c| c.1).sum();
    let nr: u64 = refs.iter().map(|r| r.1).sum();
    let supply: Vec<u64> = cand.iter().map(|c| c.1 * nr).collect();
    let demand: Vec<u64> = refs.iter().map(|r| r.1 * nc).collect();
    let cost: Vec<Vec<f64>> = cand
        .iter()
        .map(|(c, _)| {
            let u = vectors.get(c).unwrap();
            refs.iter().map(|(r, _)| euclidean(u, vectors.get(r).unwrap())).collect()
        })
        .collect();
    let (total_cost, _) = transport(&supply, &demand, &cost)?;
    let total = candidate.len() + reference.len();
    Ok(WmdResult {
        distance: (total_cost / (nc * nr) as f64).max(0.0),
        dropped: total - (nc + nr) as usize,
        total,
    })
}
