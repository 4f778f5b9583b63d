//! Viterbi Earley chart parser over POS tag sequences.
//!
//! The chart is filled column by column. Within a column, completed
//! constituents are finalized in order of decreasing start position and, for
//! equal starts, decreasing inside log probability. Rule probabilities never
//! exceed one, so a constituent is final the first time it is popped; this
//! keeps Viterbi scores exact and makes unary cycles terminate.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::grammar::{Grammar, Production};

pub type SymbolId = u32;
pub type RuleId = u32;
pub type EdgeId = u32;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("tag {tag:?} at position {position} is not a symbol of the grammar")]
    UnknownSymbol { tag: String, position: usize },
    #[error("cannot parse an empty tag sequence")]
    EmptyInput,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    lhs: SymbolId,
    rhs: Vec<SymbolId>,
    log_prob: f64,
}

/// A grammar compiled for parsing: interned symbols and rules indexed by lhs.
#[derive(Debug, Clone)]
pub struct CompiledGrammar {
    names: Vec<String>,
    ids: HashMap<String, SymbolId>,
    rules: Vec<CompiledRule>,
    productions: Vec<Production>,
    by_lhs: Vec<Vec<RuleId>>,
}

impl CompiledGrammar {
    pub fn new(grammar: &Grammar) -> CompiledGrammar {
        let mut names = Vec::new();
        let mut ids = HashMap::new();
        let mut intern = |s: &str| -> SymbolId {
            *ids.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                (names.len() - 1) as SymbolId
            })
        };
        let mut rules = Vec::with_capacity(grammar.pattern_types());
        let mut productions = Vec::with_capacity(grammar.pattern_types());
        for (prod, stats) in grammar.rules() {
            let lhs = intern(&prod.lhs);
            let rhs = prod.rhs.iter().map(|s| intern(s)).collect();
            rules.push(CompiledRule {
                lhs,
                rhs,
                log_prob: stats.probability.ln(),
            });
            productions.push(prod.clone());
        }
        for t in grammar.terminals() {
            intern(t);
        }
        let mut by_lhs = vec![Vec::new(); names.len()];
        for (id, rule) in rules.iter().enumerate() {
            by_lhs[rule.lhs as usize].push(id as RuleId);
        }
        CompiledGrammar {
            names,
            ids,
            rules,
            productions,
            by_lhs,
        }
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, sym: SymbolId) -> &str {
        &self.names[sym as usize]
    }

    pub fn production(&self, rule: RuleId) -> &Production {
        &self.productions[rule as usize]
    }

    pub fn rule_log_prob(&self, rule: RuleId) -> f64 {
        self.rules[rule as usize].log_prob
    }

    pub fn rules_for(&self, lhs: SymbolId) -> &[RuleId] {
        &self.by_lhs[lhs as usize]
    }

    pub fn is_nonterminal(&self, sym: SymbolId) -> bool {
        !self.by_lhs[sym as usize].is_empty()
    }

    fn rhs(&self, rule: RuleId) -> &[SymbolId] {
        &self.rules[rule as usize].rhs
    }

    fn lhs(&self, rule: RuleId) -> SymbolId {
        self.rules[rule as usize].lhs
    }
}

/// Something an edge has consumed: an input tag or a completed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Leaf(usize),
    Edge(EdgeId),
}

/// A dotted rule over `[start, end)`.
///
/// The consumed children are kept as a backward-linked list through `prev`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub rule: RuleId,
    pub dot: usize,
    pub start: usize,
    pub end: usize,
    pub inner_log_prob: f64,
    prev: Option<EdgeId>,
    child: Option<Child>,
}

/// Result of offering an edge to the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// A new key.
    Added(EdgeId),
    /// The key existed and the new derivation replaced the old one.
    Improved(EdgeId),
    /// The key existed with an equal or better derivation.
    Rejected(EdgeId),
}

impl Insertion {
    pub fn id(self) -> EdgeId {
        match self {
            Insertion::Added(id) | Insertion::Improved(id) | Insertion::Rejected(id) => id,
        }
    }
}

type EdgeKey = (RuleId, u32, u32, u32);

/// Dynamic-programming table of edges for one input.
pub struct Chart<'g> {
    grammar: &'g CompiledGrammar,
    tags: Vec<SymbolId>,
    edges: Vec<Edge>,
    index: HashMap<EdgeKey, EdgeId>,
    /// Per column: active edges ending there, keyed by the symbol after the dot.
    waiting: Vec<HashMap<SymbolId, Vec<EdgeId>>>,
    predicted: Vec<HashSet<SymbolId>>,
    /// Finalized constituents `(symbol, start, end)`.
    finished: HashMap<(SymbolId, u32, u32), Child>,
    pub predictor_insertions: usize,
}

impl<'g> Chart<'g> {
    /// A chart for `tags` (already interned).
    pub fn new(grammar: &'g CompiledGrammar, tags: Vec<SymbolId>) -> Chart<'g> {
        let columns = tags.len() + 1;
        Chart {
            grammar,
            tags,
            edges: Vec::new(),
            index: HashMap::new(),
            waiting: vec![HashMap::new(); columns],
            predicted: vec![HashSet::new(); columns],
            finished: HashMap::new(),
            predictor_insertions: 0,
        }
    }

    /// Interns tag names, failing on the first symbol the grammar lacks.
    pub fn for_tags<S: AsRef<str>>(
        grammar: &'g CompiledGrammar,
        tags: &[S],
    ) -> Result<Chart<'g>, ParseError> {
        let ids = tags
            .iter()
            .enumerate()
            .map(|(position, t)| {
                grammar
                    .symbol(t.as_ref())
                    .ok_or_else(|| ParseError::UnknownSymbol {
                        tag: t.as_ref().to_string(),
                        position,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Chart::new(grammar, ids))
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn find(&self, rule: RuleId, dot: usize, start: usize, end: usize) -> Option<&Edge> {
        self.index
            .get(&(rule, dot as u32, start as u32, end as u32))
            .map(|&id| self.edge(id))
    }

    pub fn is_complete(&self, id: EdgeId) -> bool {
        let e = self.edge(id);
        e.dot == self.grammar.rhs(e.rule).len()
    }

    /// Symbol after the dot, if any.
    pub fn next_symbol(&self, id: EdgeId) -> Option<SymbolId> {
        let e = self.edge(id);
        self.grammar.rhs(e.rule).get(e.dot).copied()
    }

    /// The consumed children in left-to-right order.
    pub fn children(&self, id: EdgeId) -> Vec<Child> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let e = self.edge(c);
            if let Some(child) = e.child {
                out.push(child);
            }
            cur = e.prev;
        }
        out.reverse();
        out
    }

    fn child_log_prob(&self, child: Child) -> f64 {
        match child {
            Child::Leaf(_) => 0.0,
            Child::Edge(id) => self.edge(id).inner_log_prob,
        }
    }

    /// Inserts with max-probability deduplication on `(rule, dot, start, end)`.
    /// Equal scores keep the derivation with the smaller bracketed rendering.
    fn insert(&mut self, edge: Edge) -> Insertion {
        let key = (
            edge.rule,
            edge.dot as u32,
            edge.start as u32,
            edge.end as u32,
        );
        match self.index.get(&key) {
            None => {
                let id = self.edges.len() as EdgeId;
                self.edges.push(edge);
                self.index.insert(key, id);
                Insertion::Added(id)
            }
            Some(&id) => {
                let old = &self.edges[id as usize];
                let better = match edge.inner_log_prob.total_cmp(&old.inner_log_prob) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        self.render_parts(edge.prev, edge.child)
                            < self.render_parts(old.prev, old.child)
                    }
                };
                if better {
                    self.edges[id as usize] = edge;
                    Insertion::Improved(id)
                } else {
                    Insertion::Rejected(id)
                }
            }
        }
    }

    fn push_waiting(&mut self, id: EdgeId) {
        if let Some(sym) = self.next_symbol(id) {
            let end = self.edge(id).end;
            self.waiting[end].entry(sym).or_default().push(id);
        }
    }

    /// Adds a zero-dot edge at `position` for every rule with lhs `needed`.
    /// Returns how many edges were actually inserted.
    pub fn predict(&mut self, position: usize, needed: SymbolId) -> usize {
        if !self.predicted[position].insert(needed) {
            return 0;
        }
        let grammar = self.grammar;
        let mut added = 0;
        for &rule in grammar.rules_for(needed) {
            let edge = Edge {
                rule,
                dot: 0,
                start: position,
                end: position,
                inner_log_prob: grammar.rule_log_prob(rule),
                prev: None,
                child: None,
            };
            if let Insertion::Added(id) = self.insert(edge) {
                added += 1;
                self.push_waiting(id);
            }
        }
        self.predictor_insertions += added;
        added
    }

    /// Runs the predictor at `position` for `seeds` and for every nonterminal
    /// that becomes expected there as a consequence.
    pub fn predict_closure(&mut self, position: usize, seeds: &[SymbolId]) -> usize {
        let mut total = 0;
        let mut work: Vec<SymbolId> = seeds.to_vec();
        let mut seen: HashSet<SymbolId> = HashSet::new();
        while let Some(sym) = work.pop() {
            if !seen.insert(sym) || !self.grammar.is_nonterminal(sym) {
                continue;
            }
            total += self.predict(position, sym);
            for &rule in self.grammar.rules_for(sym) {
                let first = self.grammar.rhs(rule)[0];
                if !seen.contains(&first) {
                    work.push(first);
                }
            }
        }
        total
    }

    /// Advances `id` over a consumed child ending at `end`.
    fn advance(&mut self, id: EdgeId, child: Child, end: usize) -> Insertion {
        let e = self.edge(id);
        let edge = Edge {
            rule: e.rule,
            dot: e.dot + 1,
            start: e.start,
            end,
            inner_log_prob: e.inner_log_prob + self.child_log_prob(child),
            prev: Some(id),
            child: Some(child),
        };
        let outcome = self.insert(edge);
        if let Insertion::Added(new) = outcome {
            self.push_waiting(new);
        }
        outcome
    }

    /// Scanner: moves the dot of `id` over the input tag at its end position
    /// when that tag is the expected symbol.
    pub fn scan(&mut self, id: EdgeId) -> Option<Insertion> {
        let position = self.edge(id).end;
        let tag = *self.tags.get(position)?;
        if self.next_symbol(id) != Some(tag) {
            return None;
        }
        Some(self.advance(id, Child::Leaf(position), position + 1))
    }

    /// Completer: moves the dot of `waiting` over the completed edge `done`
    /// when `done` starts where `waiting` ends and has the expected lhs.
    pub fn complete(&mut self, waiting: EdgeId, done: EdgeId) -> Option<Insertion> {
        if !self.is_complete(done) {
            return None;
        }
        let d = self.edge(done);
        let (lhs, start, end) = (self.grammar.lhs(d.rule), d.start, d.end);
        if self.edge(waiting).end != start || self.next_symbol(waiting) != Some(lhs) {
            return None;
        }
        Some(self.advance(waiting, Child::Edge(done), end))
    }

    /// The finalized best derivation of `symbol` over `[start, end)`.
    pub fn constituent(&self, symbol: SymbolId, start: usize, end: usize) -> Option<Child> {
        self.finished
            .get(&(symbol, start as u32, end as u32))
            .copied()
    }

    fn render_child(&self, child: Child, out: &mut String) {
        match child {
            Child::Leaf(pos) => out.push_str(self.grammar.name(self.tags[pos])),
            Child::Edge(id) => {
                out.push('(');
                out.push_str(self.grammar.name(self.grammar.lhs(self.edge(id).rule)));
                for c in self.children(id) {
                    out.push(' ');
                    self.render_child(c, out);
                }
                out.push(')');
            }
        }
    }

    fn render_parts(&self, prev: Option<EdgeId>, last: Option<Child>) -> String {
        let mut out = String::new();
        let mut parts = prev.map(|p| self.children(p)).unwrap_or_default();
        parts.extend(last);
        for c in parts {
            out.push(' ');
            self.render_child(c, &mut out);
        }
        out
    }

    /// Builds the tree of a finalized derivation.
    pub fn build_tree(&self, child: Child) -> ParseTree {
        match child {
            Child::Leaf(pos) => ParseTree::leaf(self.grammar.name(self.tags[pos])),
            Child::Edge(id) => {
                let edge = self.edge(id);
                ParseTree {
                    label: self.grammar.name(self.grammar.lhs(edge.rule)).to_string(),
                    children: self
                        .children(id)
                        .into_iter()
                        .map(|c| self.build_tree(c))
                        .collect(),
                    log_prob: edge.inner_log_prob,
                }
            }
        }
    }
}

/// Agenda entry for a candidate constituent ending at the current column.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    score: f64,
    symbol: SymbolId,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.start
            .cmp(&other.start)
            .then(self.score.total_cmp(&other.score))
            .then(other.symbol.cmp(&self.symbol))
    }
}

/// A parse with tags as leaves. Every node carries its inside log probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
    pub log_prob: f64,
}

impl ParseTree {
    pub fn leaf(tag: impl Into<String>) -> ParseTree {
        ParseTree {
            label: tag.into(),
            children: Vec::new(),
            log_prob: 0.0,
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>, log_prob: f64) -> ParseTree {
        ParseTree {
            label: label.into(),
            children,
            log_prob,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.is_leaf() {
            out.push(&self.label);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    /// Productions used by the internal nodes, in pre-order.
    pub fn productions(&self) -> Vec<Production> {
        let mut out = Vec::new();
        self.collect_productions(&mut out);
        out
    }

    fn collect_productions(&self, out: &mut Vec<Production>) {
        if self.is_leaf() {
            return;
        }
        out.push(Production {
            lhs: self.label.clone(),
            rhs: self.children.iter().map(|c| c.label.clone()).collect(),
        });
        for c in &self.children {
            c.collect_productions(out);
        }
    }

    /// Sum of log rule probabilities looked up in `grammar`; `None` if some
    /// production is missing.
    pub fn recompute_log_prob(&self, grammar: &Grammar) -> Option<f64> {
        self.productions()
            .iter()
            .map(|p| grammar.rule(p).map(|r| r.probability.ln()))
            .sum()
    }

    /// `(S (NP DT NN) (VP VB))`
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        if self.is_leaf() {
            out.push_str(&self.label);
            return;
        }
        out.push('(');
        out.push_str(&self.label);
        for c in &self.children {
            out.push(' ');
            c.write(out);
        }
        out.push(')');
    }

    /// Reads the format written by [`ParseTree::to_bracketed`]. Log
    /// probabilities are not serialized and come back as zero.
    pub fn from_bracketed(text: &str) -> Option<ParseTree> {
        let spaced = text.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let tree = read_node(&tokens, &mut pos)?;
        (pos == tokens.len() && !tree.is_leaf()).then_some(tree)
    }
}

fn read_node(tokens: &[&str], pos: &mut usize) -> Option<ParseTree> {
    let tok = *tokens.get(*pos)?;
    *pos += 1;
    match tok {
        "(" => {
            let label = *tokens.get(*pos)?;
            if label == "(" || label == ")" {
                return None;
            }
            *pos += 1;
            let mut children = Vec::new();
            loop {
                match *tokens.get(*pos)? {
                    ")" => {
                        *pos += 1;
                        break;
                    }
                    _ => children.push(read_node(tokens, pos)?),
                }
            }
            if children.is_empty() {
                return None;
            }
            Some(ParseTree::node(label, children, 0.0))
        }
        ")" => None,
        tag => Some(ParseTree::leaf(tag)),
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Parsed(ParseTree),
    NoParse,
    TimedOut,
}

impl ParseOutcome {
    pub fn tree(&self) -> Option<&ParseTree> {
        match self {
            ParseOutcome::Parsed(t) => Some(t),
            _ => None,
        }
    }

    pub fn into_tree(self) -> Option<ParseTree> {
        match self {
            ParseOutcome::Parsed(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseStats {
    pub predictor_insertions: usize,
    pub edges: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseResult {
    pub outcome: ParseOutcome,
    pub stats: ParseStats,
}

/// Default per-sentence time budget.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Parser bound to one compiled grammar; shareable across threads.
#[derive(Debug, Clone)]
pub struct Parser {
    grammar: CompiledGrammar,
    pub timeout: Option<Duration>,
}

impl Parser {
    pub fn new(grammar: &Grammar) -> Parser {
        Parser {
            grammar: CompiledGrammar::new(grammar),
            timeout: Some(DEFAULT_TIMEOUT),
        }
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Parser {
        self.timeout = timeout;
        self
    }

    pub fn grammar(&self) -> &CompiledGrammar {
        &self.grammar
    }

    /// Best parse of `tags` rooted at `root`.
    pub fn parse<S: AsRef<str>>(&self, tags: &[S], root: &str) -> Result<ParseResult, ParseError> {
        let started = Instant::now();
        if tags.is_empty() {
            return Err(ParseError::EmptyInput);
        }
        let mut chart = Chart::for_tags(&self.grammar, tags)?;
        let deadline = self.timeout.map(|t| started + t);
        let outcome = match self.grammar.symbol(root) {
            Some(root_id) if self.grammar.is_nonterminal(root_id) => {
                self.fill(&mut chart, root_id, deadline)
            }
            _ => ParseOutcome::NoParse,
        };
        Ok(ParseResult {
            outcome,
            stats: ParseStats {
                predictor_insertions: chart.predictor_insertions,
                edges: chart.edge_count(),
                elapsed: started.elapsed(),
            },
        })
    }

    fn fill(&self, chart: &mut Chart<'_>, root: SymbolId, deadline: Option<Instant>) -> ParseOutcome {
        let n = chart.len();
        let timed_out = |deadline: Option<Instant>| deadline.is_some_and(|d| Instant::now() >= d);
        chart.predict_closure(0, &[root]);

        for end in 1..=n {
            if timed_out(deadline) {
                return ParseOutcome::TimedOut;
            }
            let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
            let mut best: HashMap<(SymbolId, usize), EdgeId> = HashMap::new();

            let leaf_start = end - 1;
            let tag = chart.tags[leaf_start];
            chart
                .finished
                .insert((tag, leaf_start as u32, end as u32), Child::Leaf(leaf_start));
            self.consume(chart, tag, leaf_start, end, Child::Leaf(leaf_start), &mut heap, &mut best);

            let mut pops = 0usize;
            while let Some(cand) = heap.pop() {
                pops += 1;
                if pops.is_multiple_of(1024) && timed_out(deadline) {
                    return ParseOutcome::TimedOut;
                }
                let key = (cand.symbol, cand.start as u32, end as u32);
                if chart.finished.contains_key(&key) {
                    continue;
                }
                let id = best[&(cand.symbol, cand.start)];
                chart.finished.insert(key, Child::Edge(id));
                self.consume(chart, cand.symbol, cand.start, end, Child::Edge(id), &mut heap, &mut best);
            }

            if end < n {
                let expected: Vec<SymbolId> = chart.waiting[end].keys().copied().collect();
                chart.predict_closure(end, &expected);
            }
        }

        match chart.constituent(root, 0, n) {
            Some(child @ Child::Edge(_)) => ParseOutcome::Parsed(chart.build_tree(child)),
            _ => ParseOutcome::NoParse,
        }
    }

    /// Advances every edge waiting at `start` for `symbol` over the finalized
    /// constituent, queueing any completed results.
    #[allow(clippy::too_many_arguments)]
    fn consume(
        &self,
        chart: &mut Chart<'_>,
        symbol: SymbolId,
        start: usize,
        end: usize,
        child: Child,
        heap: &mut BinaryHeap<Candidate>,
        best: &mut HashMap<(SymbolId, usize), EdgeId>,
    ) {
        let Some(waiting) = chart.waiting[start].get(&symbol).cloned() else {
            return;
        };
        for wid in waiting {
            let outcome = chart.advance(wid, child, end);
            let id = match outcome {
                Insertion::Added(id) | Insertion::Improved(id) => id,
                Insertion::Rejected(_) => continue,
            };
            if !chart.is_complete(id) {
                continue;
            }
            let edge = chart.edge(id);
            let lhs = self.grammar.lhs(edge.rule);
            let key = (lhs, edge.start);
            if chart
                .finished
                .contains_key(&(lhs, edge.start as u32, end as u32))
            {
                continue;
            }
            let score = edge.inner_log_prob;
            let replace = match best.entry(key) {
                Entry::Vacant(v) => {
                    v.insert(id);
                    true
                }
                Entry::Occupied(mut o) => {
                    let cur = *o.get();
                    let better = cur == id
                        || match score.total_cmp(&chart.edge(cur).inner_log_prob) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => {
                                let mut a = String::new();
                                let mut b = String::new();
                                chart.render_child(Child::Edge(id), &mut a);
                                chart.render_child(Child::Edge(cur), &mut b);
                                a < b
                            }
                        };
                    if better {
                        o.insert(id);
                    }
                    better
                }
            };
            if replace {
                heap.push(Candidate {
                    start: key.1,
                    score,
                    symbol: lhs,
                });
            }
        }
    }
}

/// Convenience wrapper: best parse or `None`, without a time budget.
pub fn parse<S: AsRef<str>>(
    tags: &[S],
    grammar: &Grammar,
    root: &str,
) -> Result<Option<ParseTree>, ParseError> {
    Ok(Parser::new(grammar)
        .with_timeout(None)
        .parse(tags, root)?
        .outcome
        .into_tree())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grammar(rules: &[(&str, &[&str], u64)]) -> Grammar {
        Grammar::from_counts(
            rules
                .iter()
                .map(|(l, r, c)| (Production::new(*l, r.iter().copied()), *c)),
        )
    }

    fn simple() -> Grammar {
        grammar(&[
            ("S", &["NP", "VP"], 1),
            ("NP", &["DT", "NN"], 1),
            ("VP", &["VB"], 1),
        ])
    }

    #[test]
    fn unique_derivation() {
        let tree = parse(&["DT", "NN", "VB"], &simple(), "S").unwrap().unwrap();
        assert_eq!(tree.to_bracketed(), "(S (NP DT NN) (VP VB))");
        assert_eq!(tree.log_prob, 0.0);
        assert_eq!(tree.leaves(), ["DT", "NN", "VB"]);
    }

    #[test]
    fn no_derivation() {
        assert_eq!(parse(&["VB", "DT"], &simple(), "S").unwrap(), None);
        assert_eq!(parse(&["DT", "NN"], &simple(), "S").unwrap(), None);
        assert_eq!(parse(&["DT", "NN", "VB"], &simple(), "X").unwrap(), None);
    }

    #[test]
    fn unknown_tag_is_an_error() {
        assert_eq!(
            parse(&["DT", "JJ"], &simple(), "S"),
            Err(ParseError::UnknownSymbol {
                tag: "JJ".into(),
                position: 1
            })
        );
        assert_eq!(
            parse::<&str>(&[], &simple(), "S"),
            Err(ParseError::EmptyInput)
        );
    }

    #[test]
    fn picks_the_more_probable_attachment() {
        // VP -> VB NP PP (flat) vs VP -> VB NP with NP -> NP PP
        let g = grammar(&[
            ("S", &["NP", "VP"], 10),
            ("VP", &["VB", "NP", "PP"], 1),
            ("VP", &["VB", "NP"], 9),
            ("NP", &["NP", "PP"], 1),
            ("NP", &["DT", "NN"], 9),
            ("PP", &["IN", "NP"], 10),
        ]);
        let tags = ["DT", "NN", "VB", "DT", "NN", "IN", "DT", "NN"];
        let tree = parse(&tags, &g, "S").unwrap().unwrap();
        // flat: 0.1 * 0.9^3 = 0.0729 ; nested: 0.9 * 0.1 * 0.9^3 = 0.06561
        assert_eq!(
            tree.to_bracketed(),
            "(S (NP DT NN) (VP VB (NP DT NN) (PP IN (NP DT NN))))"
        );
        let expect = 0.1f64.ln() + 3.0 * 0.9f64.ln();
        assert!((tree.log_prob - expect).abs() < 1e-12);
        assert!((tree.recompute_log_prob(&g).unwrap() - tree.log_prob).abs() < 1e-12);
    }

    #[test]
    fn unary_cycles_terminate() {
        let g = grammar(&[
            ("S", &["A"], 1),
            ("A", &["B"], 1),
            ("A", &["x"], 1),
            ("B", &["A"], 1),
            ("B", &["x", "x"], 1),
        ]);
        let tree = parse(&["x"], &g, "S").unwrap().unwrap();
        assert_eq!(tree.to_bracketed(), "(S (A x))");
        let tree = parse(&["x", "x"], &g, "S").unwrap().unwrap();
        assert_eq!(tree.to_bracketed(), "(S (A (B x x)))");
    }

    #[test]
    fn predictor_counts_and_dedups() {
        let g = grammar(&[
            ("S", &["NP", "VP"], 1),
            ("NP", &["DT", "NN"], 1),
            ("NP", &["NN"], 1),
            ("NP", &["NP", "PP"], 1),
            ("VP", &["VB"], 1),
        ]);
        let cg = CompiledGrammar::new(&g);
        let mut chart = Chart::for_tags(&cg, &["DT", "NN", "VB"]).unwrap();
        let np = cg.symbol("NP").unwrap();
        assert_eq!(chart.predict(2, np), 3);
        assert_eq!(chart.predict(2, np), 0);
        assert_eq!(chart.predictor_insertions, 3);
    }

    #[test]
    fn scanner_and_completer_steps() {
        let g = simple();
        let cg = CompiledGrammar::new(&g);
        let mut chart = Chart::for_tags(&cg, &["DT", "NN", "VB"]).unwrap();
        let s = cg.symbol("S").unwrap();
        chart.predict_closure(0, &[s]);
        let np_rule = (0..3).find(|&r| cg.production(r).lhs == "NP").unwrap();
        let s_rule = (0..3).find(|&r| cg.production(r).lhs == "S").unwrap();
        assert!(chart.find(np_rule, 0, 0, 0).is_some());
        let np0 = *chart.index.get(&(np_rule, 0, 0, 0)).unwrap();
        // NP -> . DT NN [0,0] scans DT
        let np1 = chart.scan(np0).unwrap().id();
        let e = chart.edge(np1);
        assert_eq!((e.dot, e.start, e.end), (1, 0, 1));
        let np2 = chart.scan(np1).unwrap().id();
        assert!(chart.is_complete(np2));
        assert!(chart.scan(np2).is_none());
        // S -> . NP VP [0,0] completes with NP [0,2]
        let s0 = *chart.index.get(&(s_rule, 0, 0, 0)).unwrap();
        let s1 = chart.complete(s0, np2).unwrap().id();
        let e = chart.edge(s1);
        assert_eq!((e.dot, e.start, e.end), (1, 0, 2));
        assert_eq!(chart.children(s1), vec![Child::Edge(np2)]);
        // completing something that is not complete is refused
        assert!(chart.complete(s0, np1).is_none());
    }

    #[test]
    fn dedup_keeps_max_probability() {
        let g = simple();
        let cg = CompiledGrammar::new(&g);
        let mut chart = Chart::for_tags(&cg, &["DT", "NN", "VB"]).unwrap();
        let mk = |p: f64| Edge {
            rule: 0,
            dot: 1,
            start: 0,
            end: 1,
            inner_log_prob: p,
            prev: None,
            child: Some(Child::Leaf(0)),
        };
        let a = chart.insert(mk(-2.0));
        assert!(matches!(a, Insertion::Added(_)));
        assert!(matches!(chart.insert(mk(-0.5)), Insertion::Improved(_)));
        assert!(matches!(chart.insert(mk(-3.0)), Insertion::Rejected(_)));
        assert_eq!(chart.edge(a.id()).inner_log_prob, -0.5);
    }

    #[test]
    fn parse_tree_text_round_trip() {
        let t = ParseTree::from_bracketed("(S (NP DT NN) (VP VB))").unwrap();
        assert_eq!(t.to_bracketed(), "(S (NP DT NN) (VP VB))");
        assert_eq!(t.leaves(), ["DT", "NN", "VB"]);
        assert!(ParseTree::from_bracketed("(NOPARSE)").is_none());
        assert!(ParseTree::from_bracketed("(S (NP DT)").is_none());
        assert!(ParseTree::from_bracketed("DT").is_none());
    }

    #[test]
    fn zero_timeout_reports_timeout() {
        let p = Parser::new(&simple()).with_timeout(Some(Duration::ZERO));
        let r = p.parse(&["DT", "NN", "VB"], "S").unwrap();
        assert_eq!(r.outcome, ParseOutcome::TimedOut);
    }
}
