//! Labeled-bracket scoring and the PT / RT time-efficiency factors.
//!
//! `PT = P / T` and `RT = R / T`, with precision and recall in percentage
//! points and `T` the wall-clock seconds of the whole parse run.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use thiserror::Error;

use crate::earley::ParseTree;
use crate::prune::PruneSpec;
use crate::tree::Tree;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{golds} gold trees but {predictions} predictions")]
    LengthMismatch { golds: usize, predictions: usize },
    #[error("elapsed time must be positive, got {0} s")]
    NonPositiveTime(f64),
}

/// A labeled span `(label, start, end)` over token positions.
pub type Constituent = (String, usize, usize);

/// Constituents of the internal nodes of a gold tree.
pub fn gold_constituents(tree: &Tree) -> Vec<Constituent> {
    fn walk(t: &Tree, start: usize, out: &mut Vec<Constituent>) -> usize {
        if t.is_leaf() {
            return start + 1;
        }
        let mut end = start;
        for c in &t.children {
            end = walk(c, end, out);
        }
        out.push((t.label.clone(), start, end));
        end
    }
    let mut out = Vec::new();
    walk(tree, 0, &mut out);
    out
}

/// Constituents of the internal nodes of a parse (leaves are tags).
pub fn parse_constituents(tree: &ParseTree) -> Vec<Constituent> {
    fn walk(t: &ParseTree, start: usize, out: &mut Vec<Constituent>) -> usize {
        if t.is_leaf() {
            return start + 1;
        }
        let mut end = start;
        for c in &t.children {
            end = walk(c, end, out);
        }
        out.push((t.label.clone(), start, end));
        end
    }
    let mut out = Vec::new();
    walk(tree, 0, &mut out);
    out
}

/// Per-sentence (or summed) bracket counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BracketCounts {
    pub matched: usize,
    pub predicted_total: usize,
    pub gold_total: usize,
}

impl std::ops::AddAssign for BracketCounts {
    fn add_assign(&mut self, rhs: BracketCounts) {
        self.matched += rhs.matched;
        self.predicted_total += rhs.predicted_total;
        self.gold_total += rhs.gold_total;
    }
}

/// Multiset intersection of predicted and gold constituents.
pub fn bracket_score(gold: &Tree, predicted: Option<&ParseTree>) -> BracketCounts {
    let gold_set = gold_constituents(gold);
    let Some(predicted) = predicted else {
        return BracketCounts {
            matched: 0,
            predicted_total: 0,
            gold_total: gold_set.len(),
        };
    };
    let pred_set = parse_constituents(predicted);
    let mut remaining: HashMap<&Constituent, usize> = HashMap::new();
    for c in &gold_set {
        *remaining.entry(c).or_default() += 1;
    }
    let mut matched = 0;
    for c in &pred_set {
        if let Some(n) = remaining.get_mut(c) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    BracketCounts {
        matched,
        predicted_total: pred_set.len(),
        gold_total: gold_set.len(),
    }
}

/// Corpus-level scores of one parse run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// Correctly parsed constituents, `C+`.
    pub matched: usize,
    /// Correctly recalled constituents, `C+_r`.
    pub matched_recalled: usize,
    pub predicted_total: usize,
    pub gold_total: usize,
    pub elapsed_seconds: f64,
    pub precision_pct: f64,
    pub recall_pct: f64,
    pub pt: f64,
    pub rt: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Set when nothing was predicted and precision was defined as zero.
    pub precision_undefined: bool,
    pub sentences: usize,
    pub parsed: usize,
}

impl EvalReport {
    pub fn from_counts(
        counts: BracketCounts,
        elapsed_seconds: f64,
    ) -> Result<EvalReport, EvalError> {
        if elapsed_seconds.is_nan() || elapsed_seconds <= 0.0 {
            return Err(EvalError::NonPositiveTime(elapsed_seconds));
        }
        let pct = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision_pct = pct(counts.matched, counts.predicted_total);
        let recall_pct = pct(counts.matched, counts.gold_total);
        Ok(EvalReport {
            matched: counts.matched,
            matched_recalled: counts.matched,
            predicted_total: counts.predicted_total,
            gold_total: counts.gold_total,
            elapsed_seconds,
            precision_pct,
            recall_pct,
            pt: precision_pct / elapsed_seconds,
            rt: recall_pct / elapsed_seconds,
            mu: counts.matched as f64 / elapsed_seconds,
            lambda: counts.matched as f64 / elapsed_seconds,
            precision_undefined: counts.predicted_total == 0,
            sentences: 0,
            parsed: 0,
        })
    }

    /// Report from precision and recall already expressed in percent.
    pub fn from_percentages(
        precision_pct: f64,
        recall_pct: f64,
        elapsed_seconds: f64,
    ) -> Result<EvalReport, EvalError> {
        let mut r = EvalReport::from_counts(BracketCounts::default(), elapsed_seconds)?;
        r.precision_pct = precision_pct;
        r.recall_pct = recall_pct;
        r.pt = precision_pct / elapsed_seconds;
        r.rt = recall_pct / elapsed_seconds;
        r.precision_undefined = false;
        Ok(r)
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "matched={}\nmatched_recalled={}\npredicted_total={}\ngold_total={}\n\
             elapsed_s={}\nprecision_pct={}\nrecall_pct={}\npt={}\nrt={}\nmu={}\nlambda={}\n\
             precision_undefined={}\nsentences={}\nparsed={}\n",
            self.matched,
            self.matched_recalled,
            self.predicted_total,
            self.gold_total,
            self.elapsed_seconds,
            self.precision_pct,
            self.recall_pct,
            self.pt,
            self.rt,
            self.mu,
            self.lambda,
            self.precision_undefined,
            self.sentences,
            self.parsed,
        )
    }
}

/// Micro-averaged scores over a test set.
pub fn evaluate_run(
    golds: &[Tree],
    predictions: &[Option<ParseTree>],
    elapsed_seconds: f64,
) -> Result<EvalReport, EvalError> {
    if golds.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            golds: golds.len(),
            predictions: predictions.len(),
        });
    }
    let mut counts = BracketCounts::default();
    for (gold, pred) in golds.iter().zip(predictions) {
        counts += bracket_score(gold, pred.as_ref());
    }
    let mut report = EvalReport::from_counts(counts, elapsed_seconds)?;
    report.sentences = golds.len();
    report.parsed = predictions.iter().filter(|p| p.is_some()).count();
    Ok(report)
}

/// An evaluation tagged with the pruning configuration that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigReport {
    pub spec: PruneSpec,
    pub pattern_types: usize,
    pub report: EvalReport,
}

/// Indices ordered by descending PT, ties by higher precision then input order.
pub fn rank_by_pt(reports: &[EvalReport]) -> Vec<usize> {
    rank(reports, |r| (r.pt, r.precision_pct))
}

/// Indices ordered by descending RT, ties by higher recall then input order.
pub fn rank_by_rt(reports: &[EvalReport]) -> Vec<usize> {
    rank(reports, |r| (r.rt, r.recall_pct))
}

fn rank(reports: &[EvalReport], key: impl Fn(&EvalReport) -> (f64, f64)) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reports.len()).collect();
    // stable sort keeps input order on full ties
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&reports[a]), key(&reports[b]));
        kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1)).then(Ordering::Equal)
    });
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub by_pt: Vec<usize>,
    pub by_rt: Vec<usize>,
}

pub fn compare_configs(rows: &[ConfigReport]) -> Comparison {
    let reports: Vec<EvalReport> = rows.iter().map(|r| r.report).collect();
    Comparison {
        by_pt: rank_by_pt(&reports),
        by_rt: rank_by_rt(&reports),
    }
}

pub const EVAL_CSV_HEADER: [&str; 8] = [
    "min_count",
    "min_prob",
    "pattern_types",
    "precision_pct",
    "recall_pct",
    "elapsed_s",
    "pt",
    "rt",
];

/// One row per configuration, in the given order.
pub fn write_eval_csv<W: Write>(out: W, rows: &[ConfigReport]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(EVAL_CSV_HEADER)?;
    for row in rows {
        let r = &row.report;
        writer.write_record([
            row.spec.min_count.to_string(),
            row.spec.min_prob.to_string(),
            row.pattern_types.to_string(),
            r.precision_pct.to_string(),
            r.recall_pct.to_string(),
            r.elapsed_seconds.to_string(),
            r.pt.to_string(),
            r.rt.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
