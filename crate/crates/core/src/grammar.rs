//! Production extraction, maximum-likelihood rule probabilities and grammar
//! statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::tree::Tree;

/// A syntactic pattern `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl Production {
    pub fn new<S: Into<String>>(lhs: impl Into<String>, rhs: impl IntoIterator<Item = S>) -> Self {
        Production {
            lhs: lhs.into(),
            rhs: rhs.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
    }
}

/// Count and probability attached to a production.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleStats {
    pub count: u64,
    pub probability: f64,
}

/// A rule table with its symbol inventories.
///
/// Counts are the source of truth; probabilities are evaluated once when the
/// grammar is learned (or renormalized) and stored alongside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grammar {
    rules: BTreeMap<Production, RuleStats>,
    nonterminals: BTreeSet<String>,
    terminals: BTreeSet<String>,
    lhs_totals: BTreeMap<String, u64>,
}

impl Grammar {
    /// Builds a grammar from an explicit rule table, deriving the symbol sets
    /// and per-lhs totals from it. Probabilities are taken as given.
    pub fn from_rules(rules: BTreeMap<Production, RuleStats>) -> Grammar {
        let mut lhs_totals: BTreeMap<String, u64> = BTreeMap::new();
        for (prod, stats) in &rules {
            *lhs_totals.entry(prod.lhs.clone()).or_default() += stats.count;
        }
        let nonterminals: BTreeSet<String> = lhs_totals.keys().cloned().collect();
        let terminals = rules
            .keys()
            .flat_map(|p| p.rhs.iter())
            .filter(|s| !nonterminals.contains(*s))
            .cloned()
            .collect();
        Grammar {
            rules,
            nonterminals,
            terminals,
            lhs_totals,
        }
    }

    /// Builds a grammar from counts alone, with maximum-likelihood
    /// probabilities `C(A -> z) / sum_g C(A -> g)`.
    pub fn from_counts(counts: impl IntoIterator<Item = (Production, u64)>) -> Grammar {
        let rules = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(p, count)| {
                (
                    p,
                    RuleStats {
                        count,
                        probability: 0.0,
                    },
                )
            })
            .collect();
        let mut grammar = Grammar::from_rules(rules);
        grammar.renormalize();
        grammar
    }

    /// Recomputes every probability as count over the current per-lhs total.
    pub fn renormalize(&mut self) {
        let totals = &self.lhs_totals;
        for (prod, stats) in self.rules.iter_mut() {
            let total = totals[&prod.lhs];
            stats.probability = if total == 0 {
                0.0
            } else {
                stats.count as f64 / total as f64
            };
        }
    }

    pub fn rules(&self) -> &BTreeMap<Production, RuleStats> {
        &self.rules
    }

    pub fn rule(&self, prod: &Production) -> Option<RuleStats> {
        self.rules.get(prod).copied()
    }

    pub fn nonterminals(&self) -> &BTreeSet<String> {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &BTreeSet<String> {
        &self.terminals
    }

    pub fn lhs_totals(&self) -> &BTreeMap<String, u64> {
        &self.lhs_totals
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        self.nonterminals.contains(sym) || self.terminals.contains(sym)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Number of distinct productions (PT).
    pub fn pattern_types(&self) -> usize {
        self.rules.len()
    }

    /// Total production occurrences (PA).
    pub fn pattern_occurrences(&self) -> u64 {
        self.rules.values().map(|r| r.count).sum()
    }

    /// Number of distinct left-hand sides (NT).
    pub fn nonterminal_types(&self) -> usize {
        self.nonterminals.len()
    }

    /// Largest number of rules sharing one left-hand side.
    pub fn max_rules_per_lhs(&self) -> usize {
        let mut per_lhs: HashMap<&str, usize> = HashMap::new();
        for prod in self.rules.keys() {
            *per_lhs.entry(prod.lhs.as_str()).or_default() += 1;
        }
        per_lhs.values().copied().max().unwrap_or(0)
    }

    /// Sum of probabilities per left-hand side.
    pub fn probability_mass(&self) -> BTreeMap<&str, f64> {
        let mut mass: BTreeMap<&str, f64> = BTreeMap::new();
        for (prod, stats) in &self.rules {
            *mass.entry(prod.lhs.as_str()).or_default() += stats.probability;
        }
        mass
    }

    /// Rules in file order: lhs, then descending count, then rhs.
    pub fn sorted_for_output(&self) -> Vec<(&Production, &RuleStats)> {
        let mut rows: Vec<_> = self.rules.iter().collect();
        rows.sort_by(|(pa, sa), (pb, sb)| {
            pa.lhs
                .cmp(&pb.lhs)
                .then(sb.count.cmp(&sa.count))
                .then_with(|| pa.rhs.cmp(&pb.rhs))
        });
        rows
    }

    /// Writes the tab-separated grammar file. `header` lines are emitted as
    /// `#` comments first.
    pub fn write_tsv<W: Write>(&self, mut out: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        for (prod, stats) in self.sorted_for_output() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                prod.lhs,
                prod.rhs.join(" "),
                stats.count,
                stats.probability
            )?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf, &[]).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("grammar symbols are UTF-8")
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Grammar, GrammarFileError> {
        let mut rules = BTreeMap::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            let bad = |why: &str| GrammarFileError::Malformed {
                line: lineno,
                reason: why.to_string(),
            };
            if cols.len() != 4 {
                return Err(bad("expected 4 tab-separated columns"));
            }
            let lhs = cols[0].trim();
            let rhs: Vec<String> = cols[1].split_whitespace().map(str::to_string).collect();
            if lhs.is_empty() || rhs.is_empty() {
                return Err(bad("empty left or right side"));
            }
            let count: u64 = cols[2].trim().parse().map_err(|_| bad("bad count"))?;
            let probability: f64 = cols[3].trim().parse().map_err(|_| bad("bad probability"))?;
            if !(0.0..=1.0).contains(&probability) {
                return Err(bad("probability outside [0, 1]"));
            }
            let prod = Production {
                lhs: lhs.to_string(),
                rhs,
            };
            if rules
                .insert(prod, RuleStats { count, probability })
                .is_some()
            {
                return Err(bad("duplicate production"));
            }
        }
        Ok(Grammar::from_rules(rules))
    }
}

#[derive(Debug, Error)]
pub enum GrammarFileError {
    #[error("grammar file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One production per internal node: its label over its children's labels.
pub fn extract_productions(tree: &Tree) -> Vec<Production> {
    let mut out = Vec::new();
    collect_productions(tree, &mut out);
    out
}

fn collect_productions(tree: &Tree, out: &mut Vec<Production>) {
    if tree.is_leaf() {
        return;
    }
    out.push(Production {
        lhs: tree.label.clone(),
        rhs: tree.children.iter().map(|c| c.label.clone()).collect(),
    });
    for child in &tree.children {
        collect_productions(child, out);
    }
}

/// Counts productions over a corpus and estimates rule probabilities.
pub fn learn(trees: &[Tree]) -> Grammar {
    let counts = trees
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<Production, u64>, tree| {
            for prod in extract_productions(tree) {
                *acc.entry(prod).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    Grammar::from_counts(counts)
}

fn merge_counts(
    mut into: HashMap<Production, u64>,
    from: HashMap<Production, u64>,
) -> HashMap<Production, u64> {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
    into
}

/// Corpus-level grammar and tagging statistics.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GrammarStats {
    pub terminal_types: usize,
    pub nonterminal_types: usize,
    pub pattern_types: usize,
    pub pattern_occurrences: u64,
    pub tag_tag_pair_types: usize,
    pub tag_tag_pair_tokens: usize,
    pub word_tag_pair_types: usize,
    pub word_types: usize,
    pub word_tokens: usize,
    pub learn_time_ms: u64,
}

pub type TaggedSentence = Vec<(String, String)>;

pub const STATS_CSV_HEADER: [&str; 10] = [
    "terminal_types",
    "nonterminal_types",
    "pattern_types",
    "pattern_occurrences",
    "tag_tag_pair_types",
    "tag_tag_pair_tokens",
    "word_tag_pair_types",
    "word_types",
    "word_tokens",
    "learn_time_ms",
];

impl GrammarStats {
    pub fn compute(grammar: &Grammar, tagged_corpus: &[TaggedSentence]) -> GrammarStats {
        let mut tag_pairs: HashSet<(&str, &str)> = HashSet::new();
        let mut word_tags: HashSet<(&str, &str)> = HashSet::new();
        let mut words: HashSet<&str> = HashSet::new();
        let mut pair_tokens = 0;
        let mut word_tokens = 0;
        for sentence in tagged_corpus {
            for (word, tag) in sentence {
                word_tags.insert((word, tag));
                words.insert(word);
                word_tokens += 1;
            }
            for pair in sentence.windows(2) {
                tag_pairs.insert((&pair[0].1, &pair[1].1));
                pair_tokens += 1;
            }
        }
        GrammarStats {
            terminal_types: grammar.terminals().len(),
            nonterminal_types: grammar.nonterminal_types(),
            pattern_types: grammar.pattern_types(),
            pattern_occurrences: grammar.pattern_occurrences(),
            tag_tag_pair_types: tag_pairs.len(),
            tag_tag_pair_tokens: pair_tokens,
            word_tag_pair_types: word_tags.len(),
            word_types: words.len(),
            word_tokens,
            learn_time_ms: 0,
        }
    }

    pub fn with_learn_time(mut self, ms: u64) -> GrammarStats {
        self.learn_time_ms = ms;
        self
    }

    pub fn values(&self) -> [String; 10] {
        [
            self.terminal_types.to_string(),
            self.nonterminal_types.to_string(),
            self.pattern_types.to_string(),
            self.pattern_occurrences.to_string(),
            self.tag_tag_pair_types.to_string(),
            self.tag_tag_pair_tokens.to_string(),
            self.word_tag_pair_types.to_string(),
            self.word_types.to_string(),
            self.word_tokens.to_string(),
            self.learn_time_ms.to_string(),
        ]
    }

    /// `key=value` lines, one per field.
    pub fn to_key_values(&self) -> String {
        STATS_CSV_HEADER
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
