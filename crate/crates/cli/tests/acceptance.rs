//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Run with
//! `cargo test -p miboost-cli --test acceptance`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use miboost_core::agreement::weighted_kappa;
use miboost_core::classifier::{self, featurize, softmax, ClassifierModel, Example, Features, TrainConfig};
use miboost_core::embedding::EmbeddingTable;
use miboost_core::eval::{bleu_n, chrf, embed_f1, meteor, rouge_l, wmd, TABLE_ROWS};
use miboost_core::pp::{format_prompt, PromptStyle, Spacing, TargetChoice, TemplateRephraser, TARGET_FORMS};
use miboost_core::text::{self, mine_ngrams, porter, StylePhraseSet};
use miboost_core::weak_label::{
    decide_by_vote, label_corpus_by_ngram, merge, DiscardReason, LabelMethod, MergeMode, Neighbor, WeakLabelDecision,
    Evidence,
};
use miboost_core::{LabeledSentence, MitiLabel};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(elapsed < Duration::from_secs(limit_secs), || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn random_sentence(rng: &mut ChaCha8Rng, vocab: &[&str], min: usize, max: usize) -> Vec<String> {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
}

// ---------------------------------------------------------------------------
// Metric oracles

fn naive_count(tokens: &[String], gram: &[String]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len()).filter(|&i| &tokens[i..i + gram.len()] == gram).count()
}

fn oracle_bleu(c: &[String], r: &[String], n: usize) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let mut product = 1.0;
    for k in 1..=n {
        if c.len() < k {
            return 0.0;
        }
        let mut matched = 0;
        for i in 0..=c.len() - k {
            let gram = &c[i..i + k];
            // Count each distinct gram once, at its first position.
            if (0..i).any(|p| &c[p..p + k] == gram) {
                continue;
            }
            matched += naive_count(c, gram).min(naive_count(r, gram));
        }
        if matched == 0 {
            return 0.0;
        }
        product *= matched as f64 / (c.len() - k + 1) as f64;
    }
    let bp = if c.len() < r.len() {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    } else {
        1.0
    };
    bp * product.powf(1.0 / n as f64)
}

fn is_subsequence(sub: &[&String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|x| it.any(|y| y == *x))
}

fn oracle_rouge_l(c: &[String], r: &[String]) -> f64 {
    let mut best = 0;
    for mask in 0u32..(1 << c.len()) {
        let sub: Vec<&String> = (0..c.len()).filter(|i| mask >> i & 1 == 1).map(|i| &c[i]).collect();
        if sub.len() > best && is_subsequence(&sub, r) {
            best = sub.len();
        }
    }
    if best == 0 {
        return 0.0;
    }
    let p = best as f64 / c.len() as f64;
    let rc = best as f64 / r.len() as f64;
    2.0 * p * rc / (p + rc)
}

fn oracle_chrf(c: &[String], r: &[String]) -> f64 {
    let cs: Vec<char> = c.concat().chars().collect();
    let rs: Vec<char> = r.concat().chars().collect();
    let count = |s: &[char], g: &[char]| {
        if s.len() < g.len() {
            0
        } else {
            (0..=s.len() - g.len()).filter(|&i| &s[i..i + g.len()] == g).count()
        }
    };
    let (mut ps, mut rs_sum, mut orders) = (0.0, 0.0, 0);
    for n in 1..=6 {
        if cs.len() < n || rs.len() < n {
            break;
        }
        let mut matched = 0;
        for i in 0..=cs.len() - n {
            let g = &cs[i..i + n];
            if (0..i).any(|p| &cs[p..p + n] == g) {
                continue;
            }
            matched += count(&cs, g).min(count(&rs, g));
        }
        ps += matched as f64 / (cs.len() - n + 1) as f64;
        rs_sum += matched as f64 / (rs.len() - n + 1) as f64;
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let (p, rc) = (ps / orders as f64, rs_sum / orders as f64);
    if p + rc == 0.0 {
        return 0.0;
    }
    10.0 * p * rc / (9.0 * p + rc)
}

/// Hand-written stems for the METEOR oracle vocabulary.
const STEMS: [(&str, &str); 9] = [
    ("run", "run"),
    ("runs", "run"),
    ("running", "run"),
    ("cat", "cat"),
    ("cats", "cat"),
    ("jump", "jump"),
    ("jumped", "jump"),
    ("the", "the"),
    ("a", "a"),
];

fn stem_of(w: &str) -> &'static str {
    STEMS.iter().find(|(x, _)| *x == w).map(|(_, s)| *s).unwrap()
}

/// Best (exact, stem, -chunks) over every partial one-to-one alignment.
fn meteor_enumerate(c: &[String], r: &[String], i: usize, used: &mut Vec<bool>, links: &mut Vec<(usize, usize, bool)>, best: &mut (usize, usize, usize)) {
    if i == c.len() {
        let exact = links.iter().filter(|l| l.2).count();
        let stem = links.len() - exact;
        let mut chunks = 0;
        for k in 0..links.len() {
            if k == 0 || !(links[k].0 == links[k - 1].0 + 1 && links[k].1 == links[k - 1].1 + 1) {
                chunks += 1;
            }
        }
        let better = (exact, stem) > (best.0, best.1) || ((exact, stem) == (best.0, best.1) && chunks < best.2);
        if better {
            *best = (exact, stem, chunks);
        }
        return;
    }
    meteor_enumerate(c, r, i + 1, used, links, best);
    for j in 0..r.len() {
        if used[j] {
            continue;
        }
        let exact = c[i] == r[j];
        if !exact && stem_of(&c[i]) != stem_of(&r[j]) {
            continue;
        }
        used[j] = true;
        links.push((i, j, exact));
        meteor_enumerate(c, r, i + 1, used, links, best);
        links.pop();
        used[j] = false;
    }
}

fn oracle_meteor(c: &[String], r: &[String]) -> f64 {
    let mut best = (0, 0, usize::MAX);
    meteor_enumerate(c, r, 0, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
    let m = (best.0 + best.1) as f64;
    if m == 0.0 {
        return 0.0;
    }
    let p = m / c.len() as f64;
    let rc = m / r.len() as f64;
    let fmean = 10.0 * p * rc / (rc + 9.0 * p);
    fmean * (1.0 - 0.5 * (best.2 as f64 / m).powi(3))
}

fn vec_cos(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for k in 0..u.len() {
        dot += u[k] * v[k];
        nu += u[k] * u[k];
        nv += v[k] * v[k];
    }
    dot / (nu.sqrt() * nv.sqrt())
}

fn oracle_embed_f1(c: &[String], r: &[String], vecs: &HashMap<String, Vec<f64>>) -> f64 {
    let side = |from: &[String], to: &[String]| {
        let mut total = 0.0;
        for a in from {
            let mut best: f64 = 0.0;
            for b in to {
                let s = vec_cos(&vecs[a], &vecs[b]);
                if s > best {
                    best = s;
                }
            }
            total += best;
        }
        total / from.len() as f64
    };
    let p = side(c, r);
    let rc = side(r, c);
    if p + rc > 0.0 {
        2.0 * p * rc / (p + rc)
    } else {
        0.0
    }
}

fn bag(tokens: &[String]) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_default() += 1;
    }
    counts.into_iter().map(|(t, k)| (t.clone(), k as f64 / tokens.len() as f64)).collect()
}

/// Minimum-cost transport by enumerating every basis of the transportation
/// polytope (edge sets of size m + n - 1) and keeping the feasible vertices.
fn oracle_wmd(c: &[String], r: &[String], vecs: &HashMap<String, Vec<f64>>) -> f64 {
    let (a, b) = (bag(c), bag(r));
    let (m, n) = (a.len(), b.len());
    let cost = |i: usize, j: usize| {
        let (u, v) = (&vecs[&a[i].0], &vecs[&b[j].0]);
        u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let size = m + n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..edges.len()).filter(|k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        let mut supply: Vec<f64> = a.iter().map(|x| x.1).collect();
        let mut demand: Vec<f64> = b.iter().map(|x| x.1).collect();
        let mut flow: Vec<Option<f64>> = vec![None; size];
        // Peel leaves: a row or column with a single unresolved edge fixes it.
        let mut progress = true;
        while progress {
            progress = false;
            for i in 0..m {
                let open: Vec<usize> = (0..size).filter(|&k| flow[k].is_none() && chosen[k].0 == i).collect();
                if open.len() == 1 {
                    let k = open[0];
                    let f = supply[i];
                    flow[k] = Some(f);
                    supply[i] -= f;
                    demand[chosen[k].1] -= f;
                    progress = true;
                }
            }
            for j in 0..n {
                let open: Vec<usize> = (0..size).filter(|&k| flow[k].is_none() && chosen[k].1 == j).collect();
                if open.len() == 1 {
                    let k = open[0];
                    let f = demand[j];
                    flow[k] = Some(f);
                    demand[j] -= f;
                    supply[chosen[k].0] -= f;
                    progress = true;
                }
            }
        }
        if flow.iter().any(Option::is_none) {
            continue;
        }
        let balanced = supply.iter().chain(&demand).all(|x| x.abs() < 1e-12);
        if !balanced || flow.iter().any(|f| f.unwrap() < -1e-12) {
            continue;
        }
        let total: f64 = chosen.iter().zip(&flow).map(|(&(i, j), f)| cost(i, j) * f.unwrap()).sum();
        best = best.min(total);
    }
    best
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, got: f64, want: f64, tol: f64, c: &[String], r: &[String]| -> Result<(), String> {
        let err = (got - want).abs();
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(err);
        check(err <= tol, || format!("{name}: {got} vs oracle {want} on {c:?} / {r:?}"))
    };

    for (w, s) in STEMS {
        check(porter::stem(w) == s, || format!("porter stem of {w:?} is {:?}, oracle table says {s:?}", porter::stem(w)))?;
    }

    let lexical = ["a", "b", "c", "d", "ab", "ba", "abc"];
    let meteor_vocab: Vec<&str> = STEMS.iter().map(|(w, _)| *w).collect();
    let embed_vocab = ["v0", "v1", "v2", "v3", "v4"];
    let mut table = EmbeddingTable::new(3);
    let mut vecs = HashMap::new();
    for w in embed_vocab {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        table.insert(w, v.clone()).unwrap();
        vecs.insert(w.to_string(), v);
    }

    let pairs = 60;
    for _ in 0..pairs {
        let c = random_sentence(&mut rng, &lexical, 1, 7);
        let r = random_sentence(&mut rng, &lexical, 1, 7);
        for n in 1..=4 {
            let name = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4"][n - 1];
            note(name, bleu_n(&c, &r, n), oracle_bleu(&c, &r, n), 1e-9, &c, &r)?;
        }
        note("ROUGE-L", rouge_l(&c, &r), oracle_rouge_l(&c, &r), 1e-9, &c, &r)?;
        note("chrF", chrf(&c, &r), oracle_chrf(&c, &r), 1e-9, &c, &r)?;

        let c = random_sentence(&mut rng, &meteor_vocab, 1, 6);
        let r = random_sentence(&mut rng, &meteor_vocab, 1, 6);
        note("METEOR", meteor(&c, &r), oracle_meteor(&c, &r), 1e-9, &c, &r)?;

        let c = random_sentence(&mut rng, &embed_vocab, 1, 4);
        let r = random_sentence(&mut rng, &embed_vocab, 1, 4);
        let f1 = embed_f1(&c, &r, &table).map_err(|e| e.to_string())?.f1;
        note("embed_f1", f1, oracle_embed_f1(&c, &r, &vecs), 1e-9, &c, &r)?;
        let d = wmd(&c, &r, &table).map_err(|e| e.to_string())?.distance;
        note("WMD", d, oracle_wmd(&c, &r, &vecs), 1e-7, &c, &r)?;
    }
    within(start.elapsed(), 10)?;
    let summary: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    Ok(format!("{pairs} pairs per metric, max |err|: {}", summary.join(", ")))
}

// ---------------------------------------------------------------------------

fn worked_example() -> Outcome {
    let source = "try to learn from your mistakes and meet some new people .";
    let expected = "It may be important to try to learn from your mistakes and meet some new people.";
    check(TARGET_FORMS[6].marker().eq_ignore_ascii_case("It may be important to"), || {
        format!("target 6 is {:?}", TARGET_FORMS[6].marker())
    })?;
    let sentence = LabeledSentence::gold("p1", source, MitiLabel::AdviseWithoutPermission);
    let pair = TemplateRephraser::default()
        .with_spacing(Spacing::Detokenize)
        .rephrase(&sentence, TargetChoice::Index(6))
        .map_err(|s| format!("skipped: {s:?}"))?;
    check(pair.target_text == expected, || format!("got {:?}", pair.target_text))?;

    let phrases = StylePhraseSet::default();
    let generic = format_prompt(&pair, PromptStyle::Generic, &phrases).pair;
    check(generic.input_text() == format!("{source} Advise with permission:"), || {
        format!("generic input {:?}", generic.input_text())
    })?;
    let ngram = format_prompt(&pair, PromptStyle::Ngram, &phrases);
    check(!ngram.fell_back && ngram.pair.input_text() == format!("{source} It may be important to:"), || {
        format!("n-gram input {:?}", ngram.pair.input_text())
    })?;
    Ok(format!("{expected:?}"))
}

// ---------------------------------------------------------------------------

fn planted(label: MitiLabel) -> String {
    let c = label.code();
    ["a", "b", "c", "d", "e"].iter().map(|s| format!("plant{c}{s}")).collect::<Vec<_>>().join(" ")
}

fn with_fillers(rng: &mut ChaCha8Rng, middle: &str) -> String {
    let fillers: Vec<String> = (0..30).map(|i| format!("filler{i}")).collect();
    let mut side = || -> Vec<String> {
        let n = rng.random_range(0..=3);
        (0..n).map(|_| fillers.choose(rng).unwrap().clone()).collect()
    };
    let (pre, post) = (side(), side());
    [pre.join(" "), middle.to_string(), post.join(" ")]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_decisions(rng: &mut ChaCha8Rng, ids: &[String], method: LabelMethod) -> Vec<WeakLabelDecision> {
    let labels = [MitiLabel::Support, MitiLabel::Affirm, MitiLabel::Warn];
    ids.iter()
        .map(|id| {
            let label = if rng.random_bool(0.6) { Some(*labels.choose(rng).unwrap()) } else { None };
            WeakLabelDecision {
                sentence_id: id.clone(),
                label,
                method,
                evidence: Evidence::None,
                discarded_reason: label.is_none().then_some(DiscardReason::NoEvidence),
            }
        })
        .collect()
}

fn weak_labeler() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut gold = Vec::new();
    for label in MitiLabel::ALL {
        for k in 0..20 {
            gold.push(LabeledSentence::gold(format!("g{}_{k}", label.code()), with_fillers(&mut rng, &planted(label)), label));
        }
    }
    let index = mine_ngrams(&gold, text::DEFAULT_MIN_FREQ);

    let mut pool = Vec::new();
    let mut expected: HashMap<String, Option<MitiLabel>> = HashMap::new();
    for label in MitiLabel::ALL {
        for k in 0..5 {
            let id = format!("p{}_{k}", label.code());
            pool.push(LabeledSentence::new(id.clone(), with_fillers(&mut rng, &planted(label))));
            expected.insert(id, Some(label));
        }
    }
    let mut doubles = 0;
    for k in 0..30 {
        let two: Vec<&MitiLabel> = MitiLabel::ALL.choose_multiple(&mut rng, 2).collect();
        let id = format!("d{k}");
        let middle = format!("{} {}", planted(*two[0]), planted(*two[1]));
        pool.push(LabeledSentence::new(id.clone(), with_fillers(&mut rng, &middle)));
        expected.insert(id, None);
        doubles += 1;
    }
    for k in 0..10 {
        let id = format!("u{k}");
        pool.push(LabeledSentence::new(id.clone(), with_fillers(&mut rng, "filler0 filler1")));
        expected.insert(id, None);
    }

    let decisions = label_corpus_by_ngram(&pool, &index);
    let (mut tp, mut assigned, mut planted_total, mut discarded_doubles) = (0, 0, 0, 0);
    for d in &decisions {
        let want = expected[&d.sentence_id];
        if want.is_some() {
            planted_total += 1;
        }
        if let Some(l) = d.label {
            assigned += 1;
            if Some(l) == want {
                tp += 1;
            }
        }
        if d.sentence_id.starts_with('d') && d.discarded_reason == Some(DiscardReason::AmbiguousOverlap) {
            discarded_doubles += 1;
        }
    }
    let precision = tp as f64 / assigned.max(1) as f64;
    let recall = tp as f64 / planted_total as f64;
    check(precision == 1.0 && recall == 1.0, || format!("precision {precision}, recall {recall}"))?;
    check(discarded_doubles == doubles, || format!("{discarded_doubles}/{doubles} double-planted discarded"))?;

    let ids: Vec<String> = (0..25).map(|i| format!("s{i:02}")).collect();
    let fuzz_pool: Vec<LabeledSentence> = ids.iter().map(|id| LabeledSentence::new(id.clone(), "x")).collect();
    for round in 0..100 {
        let ng = random_decisions(&mut rng, &ids, LabelMethod::Ngram);
        let rt = random_decisions(&mut rng, &ids, LabelMethod::Retrieval);
        let gold = &gold[..round % 3];
        let inter = merge(gold, &fuzz_pool, &ng, &rt, MergeMode::Intersection).map_err(|e| e.to_string())?;
        let union = merge(gold, &fuzz_pool, &ng, &rt, MergeMode::Union).map_err(|e| e.to_string())?;
        let in_union: HashMap<&str, Option<MitiLabel>> = union.corpus.iter().map(|s| (s.id.as_str(), s.label)).collect();
        for s in &inter.corpus {
            check(in_union.get(s.id.as_str()) == Some(&s.label), || {
                format!("round {round}: {} in intersection but not union", s.id)
            })?;
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!(
        "precision 1, recall 1 on {planted_total} planted; {doubles}/{doubles} double-planted discarded; 100 merge rounds; {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

/// Exhaustive rule check: a label wins when, against every other label, it
/// has more votes, or as many votes and a strictly higher mean. Similarities
/// are multiples of 1/32 so means compare exactly through integer sums.
fn oracle_vote(neighbors: &[(MitiLabel, u32)]) -> Option<MitiLabel> {
    let mut groups: BTreeMap<MitiLabel, (u32, u32)> = BTreeMap::new();
    for (l, s) in neighbors {
        let g = groups.entry(*l).or_default();
        g.0 += 1;
        g.1 += s;
    }
    let winners: Vec<MitiLabel> = groups
        .iter()
        .filter(|(l, (n, s))| {
            groups.iter().all(|(m, (n2, s2))| m == *l || n > n2 || (n == n2 && s * n2 > s2 * n))
        })
        .map(|(l, _)| *l)
        .collect();
    match winners.as_slice() {
        [l] => Some(*l),
        _ => None,
    }
}

fn retrieval_vote() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x707E);
    let labels = [MitiLabel::Support, MitiLabel::Affirm, MitiLabel::OpenQuestion];
    let (mut decided, mut ambiguous) = (0, 0);
    for round in 0..100 {
        let k = rng.random_range(1..=6);
        let raw: Vec<(MitiLabel, u32)> = (0..k).map(|_| (*labels.choose(&mut rng).unwrap(), rng.random_range(29..=32))).collect();
        let neighbors: Vec<Neighbor> = raw
            .iter()
            .enumerate()
            .map(|(i, (l, s))| Neighbor {
                id: format!("n{i}"),
                label: *l,
                similarity: *s as f64 / 32.0,
            })
            .collect();
        let got = decide_by_vote("q", neighbors).label;
        let want = oracle_vote(&raw);
        check(got == want, || format!("round {round}: {raw:?} gave {got:?}, rules give {want:?}"))?;
        if want.is_some() {
            decided += 1;
        } else {
            ambiguous += 1;
        }
    }
    let tie = vec![
        Neighbor { id: "a".into(), label: MitiLabel::Support, similarity: 0.90 },
        Neighbor { id: "b".into(), label: MitiLabel::Affirm, similarity: 0.80 },
    ];
    let got = decide_by_vote("tie", tie).label;
    check(got == Some(MitiLabel::Support), || format!("tie case gave {got:?}"))?;
    Ok(format!("100 sets ({decided} decided, {ambiguous} ambiguous) match; Support 0.90 vs Affirm 0.80 -> Support"))
}

// ---------------------------------------------------------------------------

fn random_example(rng: &mut ChaCha8Rng, sparse_dim: usize, dense_dim: usize) -> Example {
    let mut buckets: Vec<usize> = (0..sparse_dim).collect();
    buckets.shuffle(rng);
    let mut sparse: Vec<(usize, f64)> = buckets[..4].iter().map(|&b| (b, rng.random_range(1..=3) as f64)).collect();
    sparse.sort_by_key(|x| x.0);
    let dense = (0..dense_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    (Features { sparse, dense }, *MitiLabel::ALL.choose(rng).unwrap())
}

/// Fourth-order central difference of `f` at 0.
fn central(f: &mut dyn FnMut(f64) -> f64) -> f64 {
    let h = 1e-3;
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

fn classifier_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut model = ClassifierModel::zeros(4, 3);
        for w in model.weights_mut() {
            *w = rng.random_range(-0.5..0.5);
        }
        for b in model.bias_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
        let batch: Vec<Example> = (0..5).map(|_| random_example(&mut rng, 16, 3)).collect();
        let l2 = rng.random_range(0.0..0.01);
        let g = model.gradient(&batch, l2).map_err(|e| e.to_string())?;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        for k in 0..model.weights().len() {
            let w0 = model.weights()[k];
            let numeric = central(&mut |d| {
                model.weights_mut()[k] = w0 + d;
                model.loss(&batch, l2)
            });
            model.weights_mut()[k] = w0;
            worst = worst.max(rel(g.weights[k], numeric));
        }
        for k in 0..model.bias().len() {
            let b0 = model.bias()[k];
            let numeric = central(&mut |d| {
                model.bias_mut()[k] = b0 + d;
                model.loss(&batch, l2)
            });
            model.bias_mut()[k] = b0;
            worst = worst.max(rel(g.bias[k], numeric));
        }
    }
    check(worst < 1e-5, || format!("max relative gradient error {worst:.2e}"))?;

    let mut softmax_err: f64 = 0.0;
    for _ in 0..200 {
        let scale = [1.0, 50.0, 700.0].choose(&mut rng).copied().unwrap();
        let logits: Vec<f64> = (0..15).map(|_| rng.random_range(-scale..scale)).collect();
        let p = softmax(&logits);
        softmax_err = softmax_err.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    check(softmax_err <= 1e-9, || format!("softmax row sum off by {softmax_err:.2e}"))?;

    let start = Instant::now();
    let fillers: Vec<String> = (0..60).map(|i| format!("common{i}")).collect();
    let mut sample = |per_class: usize| -> Vec<Example> {
        let mut out = Vec::new();
        for label in MitiLabel::ALL {
            for _ in 0..per_class {
                let mut toks: Vec<String> = (0..2).map(|_| format!("key{}x{}", label.code(), rng.random_range(0..5))).collect();
                toks.extend((0..4).map(|_| fillers.choose(&mut rng).unwrap().clone()));
                toks.shuffle(&mut rng);
                out.push((featurize(&toks, 16, None), label));
            }
        }
        out
    };
    let (train, valid, test) = (sample(60), sample(10), sample(30));
    let config = TrainConfig {
        hash_bits: 16,
        seed: 3,
        ..TrainConfig::default()
    };
    let model = classifier::train(&train, &valid, &config).map_err(|e| e.to_string())?;
    let correct = test.iter().filter(|(x, y)| model.predict_features(x).label == *y).count();
    let accuracy = correct as f64 / test.len() as f64;
    check(accuracy >= 0.95, || format!("held-out accuracy {accuracy:.4}"))?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "max gradient rel err {worst:.1e}; softmax sum err {softmax_err:.1e}; held-out accuracy {:.2}% in {:.2}s",
        accuracy * 100.0,
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn kappa_fixtures() -> Outcome {
    let err = |e: miboost_core::Error| e.to_string();
    let perfect = weighted_kappa(&[0, 1, 2, 3, 4, 2], &[0, 1, 2, 3, 4, 2], 5).map_err(err)?;
    check(perfect == 1.0, || format!("perfect agreement gave {perfect}"))?;

    // Table [[2,1],[1,2]]: (0,0) twice, (0,1), (1,0), (1,1) twice.
    let two = weighted_kappa(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 0, 1, 1], 2).map_err(err)?;
    check((two - 1.0 / 3.0).abs() <= 1e-12, || format!("2x2 table gave {two}"))?;

    // Hand computation with weights (i-j)^2/16:
    //   both marginals are (1, 2, 2, 1, 2)/8;
    //   observed: four off-diagonal pairs at distance 1, 4 * (1/16) / 8 = 1/32;
    //   expected: sum_ij w_ij pa_i pb_j = 119/512;
    //   kappa = 1 - (1/32) / (119/512) = 1 - 16/119 = 103/119.
    let five = weighted_kappa(&[0, 1, 2, 3, 4, 4, 2, 1], &[0, 2, 2, 4, 4, 3, 1, 1], 5).map_err(err)?;
    check((five - 103.0 / 119.0).abs() <= 1e-9, || format!("5-category table gave {five}"))?;
    Ok(format!("1.0 exactly; {two:.15} ~ 1/3; {five:.12} ~ 103/119"))
}

// ---------------------------------------------------------------------------

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demo")
}

fn miboost(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_miboost"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(["--config", "config.toml"])
        .args(args)
        .output()
        .map_err(|e| format!("spawning miboost: {e}"))?;
    check(out.status.success(), || {
        format!("miboost {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

/// Runs the demo pipeline in `dir` and returns every output file by name.
fn run_pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    for f in ["config.toml", "gold.jsonl", "pool.jsonl", "word_vectors.txt", "sentence_vectors.txt"] {
        fs::copy(demo_dir().join(f), dir.join(f)).map_err(|e| format!("copying {f}: {e}"))?;
    }
    let steps: [&[&str]; 8] = [
        &["mine-ngrams", "--corpus", "gold.jsonl", "--out", "out/ngrams.jsonl"],
        &["label-ngram", "--pool", "pool.jsonl", "--ngrams", "out/ngrams.jsonl", "--out", "out/ngram_labels.jsonl"],
        &["label-sim", "--gold", "gold.jsonl", "--pool", "pool.jsonl", "--embeddings", "sentence_vectors.txt", "--out", "out/sim_labels.jsonl"],
        &["merge", "--gold", "gold.jsonl", "--pool", "pool.jsonl", "--ngram", "out/ngram_labels.jsonl", "--sim", "out/sim_labels.jsonl", "--mode", "union", "--out", "out/merged.jsonl"],
        &["train-classifier", "--corpus", "out/merged.jsonl", "--out", "out/classifier.bin"],
        &["build-pp-template", "--corpus", "out/merged.jsonl", "--out", "out/pp.jsonl"],
        &["format-prompts", "--pairs", "out/pp.jsonl", "--style", "ngram", "--out", "out/prompts.jsonl"],
        &["rephrase", "--input", "out/sources.txt", "--out", "out/template.txt"],
    ];
    for step in &steps[..7] {
        miboost(dir, step)?;
    }
    let pairs = miboost_core::corpus::read_pairs(dir.join("out/prompts.jsonl")).map_err(|e| e.to_string())?;
    let sources: String = pairs.iter().map(|p| format!("{}\n", p.source_text)).collect();
    fs::write(dir.join("out/sources.txt"), sources).map_err(|e| e.to_string())?;
    miboost(dir, steps[7])?;
    miboost(
        dir,
        &[
            "evaluate", "--pairs", "out/prompts.jsonl", "--hyp", "out/template.txt", "--system", "Template", "--hyp",
            "out/sources.txt", "--system", "Copy", "--word-vectors", "word_vectors.txt", "--model", "out/classifier.bin",
            "--out", "out/eval.json", "--table", "out/eval.tsv",
        ],
    )?;

    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir.join("out")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn end_to_end(table: &mut Option<String>) -> Outcome {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_pipeline(a.path())?;
    let second = run_pipeline(b.path())?;
    check(first.keys().eq(second.keys()), || {
        format!("file sets differ: {:?} vs {:?}", first.keys(), second.keys())
    })?;
    for (name, bytes) in &first {
        check(second[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    check(first.get("pp.jsonl").is_some_and(|b| !b.is_empty()), || "no template pairs were built".into())?;
    within(start.elapsed(), 60)?;
    *table = first.get("eval.tsv").map(|b| String::from_utf8_lossy(b).into_owned());
    Ok(format!("{} output files byte-identical across two runs in {:.2}s", first.len(), start.elapsed().as_secs_f64()))
}

fn table_shape(table: Option<&str>) -> Outcome {
    let tsv = table.ok_or("no evaluate table (end-to-end run failed)")?;
    let lines: Vec<&str> = tsv.lines().collect();
    check(lines.first().is_some_and(|h| *h == "Metric\tTemplate\tCopy"), || format!("header {:?}", lines.first()))?;
    let rows = &lines[1..];
    check(rows.len() == 12, || format!("{} metric rows", rows.len()))?;
    let expected = [
        "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L", "METEOR", "WMD ↓", "Chrf Score", "BERTScore", "POS dist. ↓",
        "Cos Similarity", "Style Strength",
    ];
    check(TABLE_ROWS == expected, || format!("row names {TABLE_ROWS:?}"))?;
    for (row, name) in rows.iter().zip(expected) {
        let cells: Vec<&str> = row.split('\t').collect();
        check(cells.len() == 3 && cells[0] == name, || format!("row {row:?}"))?;
        check(cells[1..].iter().all(|c| c.parse::<f64>().is_ok()), || format!("non-numeric cell in {row:?}"))?;
    }
    let flagged: Vec<&str> = expected.iter().copied().filter(|n| n.ends_with('↓')).collect();
    check(flagged == ["WMD ↓", "POS dist. ↓"], || format!("flagged rows {flagged:?}"))?;
    Ok("12 metric rows, WMD and POS distance flagged lower-is-better".into())
}

fn main() -> ExitCode {
    let mut table = None;
    let mut results: Vec<(&str, Outcome, Duration)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        results.push((name, outcome, t.elapsed()));
    };
    run("metric oracles", &mut metric_oracles);
    run("worked example reproduction", &mut worked_example);
    run("weak labeler properties", &mut weak_labeler);
    run("retrieval vote vs brute force", &mut retrieval_vote);
    run("classifier numerics", &mut classifier_numerics);
    run("kappa fixtures", &mut kappa_fixtures);
    run("end-to-end determinism", &mut || end_to_end(&mut table));
    run("table shape", &mut || table_shape(table.as_deref()));

    let mut failed = 0;
    for (name, outcome, elapsed) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2}s]", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.2}s]", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
