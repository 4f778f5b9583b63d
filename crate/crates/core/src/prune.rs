//! Syntactic pattern pruning by appearance count, by probability, or both.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::grammar::Grammar;

/// Tolerance used when comparing a rule probability against the threshold.
pub const PROB_EPSILON: f64 = 1e-12;

/// Pruning thresholds. A zero threshold disables that criterion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PruneSpec {
    pub min_count: u64,
    pub min_prob: f64,
    pub renormalize: bool,
}

impl PruneSpec {
    pub fn new(min_count: u64, min_prob: f64) -> PruneSpec {
        PruneSpec {
            min_count,
            min_prob,
            renormalize: false,
        }
    }

    pub fn by_count(min_count: u64) -> PruneSpec {
        PruneSpec::new(min_count, 0.0)
    }

    pub fn by_prob(min_prob: f64) -> PruneSpec {
        PruneSpec::new(0, min_prob)
    }

    pub fn renormalized(mut self) -> PruneSpec {
        self.renormalize = true;
        self
    }

    pub fn is_identity(&self) -> bool {
        self.min_count <= 1 && self.min_prob <= 0.0 && !self.renormalize
    }

    /// Whether a rule with the given count and learned probability survives.
    pub fn keeps(&self, count: u64, probability: f64) -> bool {
        count >= self.min_count && probability >= self.min_prob - PROB_EPSILON
    }
}

impl fmt::Display for PruneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} P={}", self.min_count, self.min_prob)?;
        if self.renormalize {
            f.write_str(" renormalized")?;
        }
        Ok(())
    }
}

/// Size of a pruned grammar: remaining occurrences (PA), pattern types (PT)
/// and nonterminal types (NT).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneReport {
    pub spec: PruneSpec,
    pub pattern_occurrences: u64,
    pub pattern_types: usize,
    pub nonterminal_types: usize,
}

impl PruneReport {
    pub fn of(spec: PruneSpec, grammar: &Grammar) -> PruneReport {
        PruneReport {
            spec,
            pattern_occurrences: grammar.pattern_occurrences(),
            pattern_types: grammar.pattern_types(),
            nonterminal_types: grammar.nonterminal_types(),
        }
    }
}

/// Keeps the rules whose count and learned probability both meet the
/// thresholds. Probabilities are only recomputed when `spec.renormalize` is set.
pub fn prune(grammar: &Grammar, spec: PruneSpec) -> (Grammar, PruneReport) {
    let survivors = grammar
        .rules()
        .iter()
        .filter(|(_, stats)| spec.keeps(stats.count, stats.probability))
        .map(|(prod, stats)| (prod.clone(), *stats))
        .collect();
    let mut pruned = Grammar::from_rules(survivors);
    if spec.renormalize {
        pruned.renormalize();
    }
    let report = PruneReport::of(spec, &pruned);
    (pruned, report)
}

/// One report per spec, in input order.
pub fn sweep(grammar: &Grammar, specs: &[PruneSpec]) -> Vec<PruneReport> {
    specs.par_iter().map(|&spec| prune(grammar, spec).1).collect()
}

pub const SWEEP_CSV_HEADER: [&str; 5] = ["min_count", "min_prob", "pa", "pt", "nt"];

pub fn write_sweep_csv<W: Write>(out: W, reports: &[PruneReport]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(SWEEP_CSV_HEADER)?;
    for r in reports {
        writer.write_record([
            r.spec.min_count.to_string(),
            r.spec.min_prob.to_string(),
            r.pattern_occurrences.to_string(),
            r.pattern_types.to_string(),
            r.nonterminal_types.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
