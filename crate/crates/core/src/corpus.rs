//! Loading bracketed corpus files and selecting train/test portions.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::normalize::{extract_tagged_sentence, Normalizer};
use crate::tree::{parse_bracketed_with_offsets, BracketError, Tree};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus path {0} does not exist")]
    Missing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Bracket {
        path: PathBuf,
        #[source]
        source: BracketError,
    },
}

/// A tree together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusTree {
    pub file: PathBuf,
    /// Zero-based line, counted over all files concatenated in load order.
    pub line: usize,
    pub tree: Tree,
}

/// Every tree of a corpus, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub trees: Vec<CorpusTree>,
    pub total_lines: usize,
}

fn is_treebank_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("mrg" | "prd" | "tree" | "trees" | "txt" | "bracketed")
    )
}

/// Expands directories (recursively, sorted) into treebank files; explicit
/// files are taken as given.
pub fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CorpusError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
        let io = |source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if is_treebank_file(&p) {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(CorpusError::Missing(p.clone()));
        }
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

impl Corpus {
    pub fn load(paths: &[PathBuf]) -> Result<Corpus, CorpusError> {
        let mut corpus = Corpus::default();
        for file in collect_files(paths)? {
            let text = std::fs::read_to_string(&file).map_err(|source| CorpusError::Io {
                path: file.clone(),
                source,
            })?;
            corpus.add_text(&file, &text).map_err(|source| CorpusError::Bracket {
                path: file.clone(),
                source,
            })?;
        }
        Ok(corpus)
    }

    /// Appends the trees of one file's text.
    pub fn add_text(&mut self, file: &Path, text: &str) -> Result<(), BracketError> {
        let base = self.total_lines;
        let found = parse_bracketed_with_offsets(text)?;
        let mut line = 0;
        let mut scanned = 0;
        for (offset, tree) in found {
            line += text[scanned..offset].matches('\n').count();
            scanned = offset;
            self.trees.push(CorpusTree {
                file: file.to_path_buf(),
                line: base + line,
                tree,
            });
        }
        self.total_lines += text.lines().count();
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Corpus, BracketError> {
        let mut c = Corpus::default();
        c.add_text(Path::new("<memory>"), text)?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Trees selected by `selection`.
    pub fn select(&self, selection: &Selection) -> Vec<&CorpusTree> {
        match selection.unit {
            RangeUnit::Lines => self
                .trees
                .iter()
                .filter(|t| selection.range.contains(&t.line))
                .collect(),
            RangeUnit::Sentences => self
                .trees
                .iter()
                .enumerate()
                .filter(|(i, _)| selection.range.contains(i))
                .map(|(_, t)| t)
                .collect(),
        }
    }
}

/// Normalizes trees, dropping sentences with no overt tokens. Returns the
/// normalized trees and the number dropped.
pub fn normalize_all<'a>(
    trees: impl IntoIterator<Item = &'a Tree>,
    normalizer: &Normalizer,
) -> (Vec<Tree>, usize) {
    let mut out = Vec::new();
    let mut dropped = 0;
    for t in trees {
        match normalizer.tree(t) {
            Ok(n) => out.push(n),
            Err(_) => dropped += 1,
        }
    }
    (out, dropped)
}

pub fn tagged_sentences(trees: &[Tree]) -> Vec<Vec<(String, String)>> {
    trees.iter().map(extract_tagged_sentence).collect()
}

/// How a range is measured: source lines or sentence indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeUnit {
    #[default]
    Lines,
    Sentences,
}

impl FromStr for RangeUnit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(RangeUnit::Lines),
            "sentences" => Ok(RangeUnit::Sentences),
            other => Err(format!("unknown range unit {other:?} (expected lines or sentences)")),
        }
    }
}

impl fmt::Display for RangeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RangeUnit::Lines => "lines",
            RangeUnit::Sentences => "sentences",
        })
    }
}

/// A half-open range of lines or sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub range: Range<usize>,
    pub unit: RangeUnit,
}

impl Selection {
    pub fn overlaps(&self, other: &Selection) -> bool {
        self.unit == other.unit
            && self.range.start < other.range.end
            && other.range.start < self.range.end
    }
}

/// Parses `START..END` (half-open, zero-based).
pub fn parse_range(text: &str) -> Result<Range<usize>, String> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| format!("range {text:?} is not of the form START..END"))?;
    let start: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad range start in {text:?}"))?;
    let end: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad range end in {text:?}"))?;
    if end <= start {
        return Err(format!("range {text:?} is empty"));
    }
    Ok(start..end)
}
