#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::Rng;
use treegram::corpus::{normalize_all, Corpus};
use treegram::grammar::Production;
use treegram::hmm::{HmmModel, END_TAG, START_TAG};
use treegram::synth::synthetic_treebank;
use treegram::{parse_bracketed, Grammar, Normalizer, Tree};

/// Environment variable naming a real treebank (file or directory).
pub const TREEBANK_ENV: &str = "TREEGRAM_TREEBANK";

pub fn treebank() -> Option<Corpus> {
    let path = std::env::var_os(TREEBANK_ENV)?;
    Some(Corpus::load(&[PathBuf::from(path)]).expect("treebank named by TREEGRAM_TREEBANK must load"))
}

/// Raw synthetic trees, read back through the bracket reader.
pub fn synthetic_raw(seed: u64, count: usize) -> Vec<Tree> {
    parse_bracketed(&synthetic_treebank(seed, count)).unwrap()
}

pub fn synthetic(seed: u64, count: usize, normalizer: &Normalizer) -> Vec<Tree> {
    let raw = synthetic_raw(seed, count);
    normalize_all(raw.iter(), normalizer).0
}

/// Random grammar over terminals `a b c` with at most 6 nonterminals and 12
/// rules; `S` always has at least one rule.
pub fn random_grammar<R: Rng>(rng: &mut R) -> Grammar {
    const NTS: [&str; 6] = ["S", "A", "B", "C", "D", "E"];
    const TS: [&str; 3] = ["a", "b", "c"];
    let nt_count = rng.gen_range(1..=NTS.len());
    let rule_count = rng.gen_range(1..=12);
    let mut counts: BTreeMap<Production, u64> = BTreeMap::new();
    for i in 0..rule_count {
        let lhs = if i == 0 { "S" } else { NTS[rng.gen_range(0..nt_count)] };
        let len = rng.gen_range(1..=3);
        let rhs: Vec<&str> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    NTS[rng.gen_range(0..nt_count)]
                } else {
                    TS[rng.gen_range(0..TS.len())]
                }
            })
            .collect();
        *counts.entry(Production::new(lhs, rhs)).or_default() += rng.gen_range(1..=5);
    }
    Grammar::from_counts(counts)
}

/// Best derivation log-probability of `tags` from `root`, by fixpoint
/// iteration over every span and every segmentation of every rule.
pub fn oracle_best_log_prob(grammar: &Grammar, tags: &[&str], root: &str) -> Option<f64> {
    let n = tags.len();
    let nts = grammar.nonterminals();
    if !nts.contains(root) {
        return None;
    }
    let mut best: HashMap<(&str, usize, usize), f64> = HashMap::new();

    fn segment(
        rhs: &[String],
        from: usize,
        to: usize,
        tags: &[&str],
        best: &HashMap<(&str, usize, usize), f64>,
        is_nt: &dyn Fn(&str) -> bool,
    ) -> f64 {
        let Some((first, rest)) = rhs.split_first() else {
            return if from == to { 0.0 } else { f64::NEG_INFINITY };
        };
        let mut top = f64::NEG_INFINITY;
        for mid in from + 1..=to {
            // every remaining symbol needs at least one token
            if to - mid < rest.len() || (rest.is_empty() && mid != to) {
                continue;
            }
            let head = if is_nt(first) {
                best.get(&(first.as_str(), from, mid)).copied().unwrap_or(f64::NEG_INFINITY)
            } else if mid == from + 1 && tags[from] == first {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            if head == f64::NEG_INFINITY {
                continue;
            }
            let tail = segment(rest, mid, to, tags, best, is_nt);
            if head + tail > top {
                top = head + tail;
            }
        }
        top
    }

    let is_nt = |s: &str| nts.contains(s);
    loop {
        let mut changed = false;
        for (prod, stats) in grammar.rules() {
            let lp = stats.probability.ln();
            for len in prod.rhs.len()..=n {
                for i in 0..=n - len {
                    let j = i + len;
                    let inner = segment(&prod.rhs, i, j, tags, &best, &is_nt);
                    if inner == f64::NEG_INFINITY {
                        continue;
                    }
                    let score = lp + inner;
                    let slot = best.entry((prod.lhs.as_str(), i, j)).or_insert(f64::NEG_INFINITY);
                    if score > *slot {
                        *slot = score;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    best.get(&(root, 0, n)).copied()
}

/// Random small training corpus over at most `max_tags` tags.
pub fn random_tagged_corpus<R: Rng>(rng: &mut R, max_tags: usize) -> Vec<Vec<(String, String)>> {
    const TAGS: [&str; 5] = ["DT", "IN", "NN", "RB", "VB"];
    const WORDS: [&str; 8] = ["the", "a", "dog", "run", "fast", "in", "cat", "sees"];
    let k = rng.gen_range(1..=max_tags.min(TAGS.len()));
    let sentences = rng.gen_range(1..=8);
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..=5);
            (0..len)
                .map(|_| {
                    (
                        WORDS[rng.gen_range(0..WORDS.len())].to_string(),
                        TAGS[rng.gen_range(0..k)].to_string(),
                    )
                })
                .collect()
        })
        .collect()
}

/// Exhaustive maximum over all `k^n` tag sequences, scored through the
/// model's public probabilities.
pub fn brute_force_viterbi(model: &HmmModel, words: &[&str]) -> (Vec<String>, f64) {
    let tags = model.tags();
    let k = tags.len();
    let n = words.len();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut idx = vec![0usize; n];
    loop {
        let mut score = 0.0;
        let mut prev = START_TAG;
        for (w, &t) in words.iter().zip(&idx) {
            let tag = tags[t].as_str();
            score = score + model.log_transition(prev, tag).unwrap() + model.log_emission(tag, w).unwrap();
            prev = tag;
        }
        score += model.log_transition(prev, END_TAG).unwrap();
        if score > best.1 {
            best = (idx.iter().map(|&t| tags[t].clone()).collect(), score);
        }
        // odometer increment, last position fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Tag sequence derived from `root` by random expansion, at most `max_len`
/// long; `None` when no attempt stays within the limits.
pub fn sample_yield<R: Rng>(grammar: &Grammar, root: &str, max_len: usize, rng: &mut R) -> Option<Vec<String>> {
    fn expand<R: Rng>(
        grammar: &Grammar,
        sym: &str,
        depth: usize,
        out: &mut Vec<String>,
        max_len: usize,
        rng: &mut R,
    ) -> bool {
        if !grammar.nonterminals().contains(sym) {
            out.push(sym.to_string());
            return out.len() <= max_len;
        }
        if depth == 0 {
            return false;
        }
        let options: Vec<&Production> = grammar.rules().keys().filter(|p| p.lhs == sym).collect();
        let rule = options[rng.gen_range(0..options.len())];
        rule.rhs
            .iter()
            .all(|s| expand(grammar, s, depth - 1, out, max_len, rng))
    }
    (0..20).find_map(|_| {
        let mut out = Vec::new();
        expand(grammar, root, 8, &mut out, max_len, rng).then_some(out)
    })
}
