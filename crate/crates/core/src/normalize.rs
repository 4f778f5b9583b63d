//! Label normalization: the compressed POS set and nonterminal suffix stripping.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::tree::Tree;

/// POS tag of empty elements (traces, null complementizers).
pub const EMPTY_ELEMENT_TAG: &str = "-NONE-";

/// The built-in compressed POS set: 18 fine-grained tags folded into 9 targets.
pub const COMPRESSED_POS_SET: [(&str, &str); 18] = [
    ("NNS", "NN"),
    ("NNP", "NN"),
    ("NNPS", "NN"),
    ("FW", "NN"),
    ("VBD", "VB"),
    ("VBN", "VB"),
    ("VBG", "VB"),
    ("VBP", "VB"),
    ("VBZ", "VB"),
    ("PRP$", "PRP"),
    ("WP", "WDT"),
    ("WP$", "WDT"),
    ("WRB", "WDT"),
    ("TO", "IN"),
    ("JJR", "JJ"),
    ("JJS", "JJ"),
    ("RBR", "RB"),
    ("RBS", "RB"),
];

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("line {line}: expected `ORIGINAL<TAB>COMPRESSED`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("compressed tag {tag:?} is also mapped as an original; the mapping must be idempotent")]
    NotIdempotent { tag: String },
    #[error("cannot read POS mapping {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Many-to-one mapping from original POS tags to compressed tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosMapping {
    entries: BTreeMap<String, String>,
}

impl Default for PosMapping {
    fn default() -> Self {
        PosMapping::compressed()
    }
}

impl PosMapping {
    /// The built-in compressed POS set.
    pub fn compressed() -> PosMapping {
        PosMapping {
            entries: COMPRESSED_POS_SET
                .iter()
                .map(|&(from, to)| (from.to_string(), to.to_string()))
                .collect(),
        }
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<PosMapping, MappingError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let entries: BTreeMap<String, String> = pairs
            .into_iter()
            .map(|(a, b)| (a.into(), b.into()))
            .collect();
        // identity rows (X -> X) are harmless
        if let Some(tag) = entries
            .values()
            .find(|to| entries.get(*to).is_some_and(|again| again != *to))
        {
            return Err(MappingError::NotIdempotent { tag: tag.clone() });
        }
        Ok(PosMapping { entries })
    }

    /// Parses the two-column override format: `ORIGINAL<TAB>COMPRESSED` per
    /// line, `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<PosMapping, MappingError> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t').map(str::trim).filter(|c| !c.is_empty());
            match (cols.next(), cols.next(), cols.next()) {
                (Some(from), Some(to), None) => pairs.push((from.to_string(), to.to_string())),
                _ => {
                    return Err(MappingError::Malformed {
                        line: idx + 1,
                        text: raw.to_string(),
                    })
                }
            }
        }
        PosMapping::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<PosMapping, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|source| MappingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PosMapping::parse(&text)
    }

    pub fn get(&self, tag: &str) -> Option<&str> {
        self.entries.get(tag).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// The distinct compressed targets.
    pub fn targets(&self) -> std::collections::BTreeSet<&str> {
        self.entries.values().map(String::as_str).collect()
    }
}

pub fn compress_pos<'a>(tag: &'a str, mapping: &'a PosMapping) -> &'a str {
    mapping.get(tag).unwrap_or(tag)
}

/// Strips function tags and coindices: `NP-SBJ-33` becomes `NP`, `NP=2`
/// becomes `NP`. Labels starting with `-` (`-NONE-`, `-LRB-`) are returned
/// unchanged.
pub fn normalize_nonterminal(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    match label.find(['-', '=']) {
        Some(0) | None => label,
        Some(idx) => &label[..idx],
    }
}

/// Settings that every tree of a corpus must be normalized with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalizer {
    pub mapping: PosMapping,
    pub compress: bool,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            mapping: PosMapping::compressed(),
            compress: true,
        }
    }
}

impl Normalizer {
    pub fn new(mapping: PosMapping, compress: bool) -> Normalizer {
        Normalizer { mapping, compress }
    }

    pub fn full_pos_set() -> Normalizer {
        Normalizer {
            mapping: PosMapping::compressed(),
            compress: false,
        }
    }

    pub fn tree(&self, tree: &Tree) -> Result<Tree, DegenerateSentence> {
        normalize_tree(tree, &self.mapping, self.compress)
    }

    pub fn tag<'a>(&'a self, tag: &'a str) -> &'a str {
        if self.compress {
            compress_pos(tag, &self.mapping)
        } else {
            tag
        }
    }
}

/// Raised when a sentence consists only of empty elements.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("sentence rooted at {root:?} contains no overt tokens")]
pub struct DegenerateSentence {
    pub root: String,
}

/// Normalizes labels and removes empty elements.
///
/// Internal labels lose their suffixes; preterminal labels are compressed when
/// `use_compression` is set. `-NONE-` leaves are dropped, and so is every
/// internal node left without children.
pub fn normalize_tree(
    tree: &Tree,
    mapping: &PosMapping,
    use_compression: bool,
) -> Result<Tree, DegenerateSentence> {
    prune_and_relabel(tree, mapping, use_compression).ok_or_else(|| DegenerateSentence {
        root: tree.label.clone(),
    })
}

fn prune_and_relabel(tree: &Tree, mapping: &PosMapping, compress: bool) -> Option<Tree> {
    if tree.is_leaf() {
        if tree.label == EMPTY_ELEMENT_TAG {
            return None;
        }
        let label = if compress {
            compress_pos(&tree.label, mapping)
        } else {
            &tree.label
        };
        return Some(Tree {
            label: label.to_string(),
            children: Vec::new(),
            token: tree.token.clone(),
        });
    }
    let children: Vec<Tree> = tree
        .children
        .iter()
        .filter_map(|c| prune_and_relabel(c, mapping, compress))
        .collect();
    if children.is_empty() {
        return None;
    }
    Some(Tree::node(normalize_nonterminal(&tree.label), children))
}

/// Left-to-right `(word, tag)` pairs of a tree's leaves.
pub fn extract_tagged_sentence(tree: &Tree) -> Vec<(String, String)> {
    tree.leaves()
        .into_iter()
        .map(|leaf| {
            (
                leaf.token.clone().unwrap_or_default(),
                leaf.label.clone(),
            )
        })
        .collect()
}
