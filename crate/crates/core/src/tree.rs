//! Constituency trees and the bracketed treebank reader.

use std::fmt;

use thiserror::Error;

/// An n-ary labeled constituency tree.
///
/// Leaves are preterminals: they carry a POS label and the surface token and
/// have no children. Internal nodes carry a phrase label and at least one child.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
    pub token: Option<String>,
}

impl Tree {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Tree {
        Tree {
            label: label.into(),
            children: Vec::new(),
            token: Some(token.into()),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Tree {
        Tree {
            label: label.into(),
            children,
            token: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of leaves (tokens) under this node.
    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(Tree::leaf_count).sum()
        }
    }

    /// Number of non-leaf nodes, including this one.
    pub fn internal_count(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self.children.iter().map(Tree::internal_count).sum::<usize>()
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Tree> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Tree>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for child in &self.children {
                child.collect_leaves(out);
            }
        }
    }

    /// Checks the structural invariants: a node has a token iff it is a leaf,
    /// and every label is nonempty.
    pub fn is_well_formed(&self) -> bool {
        !self.label.is_empty()
            && self.token.is_some() == self.children.is_empty()
            && self.children.iter().all(Tree::is_well_formed)
    }

    /// Canonical single-line bracketed form, e.g. `(S (NP (DT the)) (VP (VB runs)))`.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_bracketed(&mut out);
        out
    }

    fn write_bracketed(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.label);
        if let Some(token) = &self.token {
            out.push(' ');
            out.push_str(token);
        }
        for child in &self.children {
            out.push(' ');
            child.write_bracketed(out);
        }
        out.push(')');
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BracketError {
    #[error("unbalanced parentheses: unmatched '(' opened at byte {offset}")]
    Unclosed { offset: usize },
    #[error("unbalanced parentheses: unexpected ')' at byte {offset}")]
    UnexpectedClose { offset: usize },
    #[error("unexpected token {token:?} outside any bracket at byte {offset}")]
    StrayToken { token: String, offset: usize },
    #[error("empty bracket at byte {offset}")]
    EmptyNode { offset: usize },
    #[error("node at byte {offset} mixes a word with subtrees")]
    MixedChildren { offset: usize },
    #[error("unlabeled node with {count} children at byte {offset}")]
    UnlabeledNode { offset: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> impl Iterator<Item = (usize, Token<'_>)> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    std::iter::from_fn(move || {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        match bytes[pos] {
            b'(' => {
                pos += 1;
                Some((start, Token::Open))
            }
            b')' => {
                pos += 1;
                Some((start, Token::Close))
            }
            _ => {
                while pos < bytes.len()
                    && !bytes[pos].is_ascii_whitespace()
                    && bytes[pos] != b'('
                    && bytes[pos] != b')'
                {
                    pos += 1;
                }
                Some((start, Token::Atom(&text[start..pos])))
            }
        }
    })
}

/// A bracket under construction.
struct Frame {
    offset: usize,
    label: Option<String>,
    word: Option<String>,
    children: Vec<Tree>,
}

impl Frame {
    fn finish(self) -> Result<Option<Tree>, BracketError> {
        let Frame {
            offset,
            label,
            word,
            children,
        } = self;
        match (label, word) {
            (None, _) => match children.len() {
                0 => Err(BracketError::EmptyNode { offset }),
                // `( (S ...) )` wrapper
                1 => Ok(children.into_iter().next()),
                count => Err(BracketError::UnlabeledNode { offset, count }),
            },
            (Some(label), Some(word)) => Ok(Some(Tree::leaf(label, word))),
            (Some(_), None) if children.is_empty() => Err(BracketError::EmptyNode { offset }),
            (Some(label), None) => Ok(Some(Tree::node(label, children))),
        }
    }
}

/// Reads every top-level tree from Penn-Treebank-style bracketed text.
///
/// Outer unlabeled wrappers are removed. Whitespace, including newlines, is
/// insignificant. Empty input yields an empty list.
pub fn parse_bracketed(text: &str) -> Result<Vec<Tree>, BracketError> {
    Ok(parse_bracketed_with_offsets(text)?
        .into_iter()
        .map(|(_, tree)| tree)
        .collect())
}

/// Like [`parse_bracketed`], also returning the byte offset at which each
/// top-level tree starts.
pub fn parse_bracketed_with_offsets(text: &str) -> Result<Vec<(usize, Tree)>, BracketError> {
    let mut trees = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();

    for (offset, token) in tokenize(text) {
        match token {
            Token::Open => {
                if let Some(top) = stack.last() {
                    if top.word.is_some() {
                        return Err(BracketError::MixedChildren { offset: top.offset });
                    }
                }
                stack.push(Frame {
                    offset,
                    label: None,
                    word: None,
                    children: Vec::new(),
                });
            }
            Token::Close => {
                let frame = stack
                    .pop()
                    .ok_or(BracketError::UnexpectedClose { offset })?;
                let start = frame.offset;
                let finished = frame.finish()?;
                match (stack.last_mut(), finished) {
                    (Some(parent), Some(tree)) => parent.children.push(tree),
                    (None, Some(tree)) => trees.push((start, tree)),
                    (_, None) => unreachable!("finish returns a tree or an error"),
                }
            }
            Token::Atom(atom) => {
                let frame = stack.last_mut().ok_or_else(|| BracketError::StrayToken {
                    token: atom.to_string(),
                    offset,
                })?;
                if frame.label.is_none() && frame.children.is_empty() {
                    frame.label = Some(atom.to_string());
                } else if frame.word.is_none() && frame.children.is_empty() {
                    frame.word = Some(atom.to_string());
                } else {
                    return Err(BracketError::MixedChildren {
                        offset: frame.offset,
                    });
                }
            }
        }
    }

    if let Some(frame) = stack.first() {
        return Err(BracketError::Unclosed {
            offset: frame.offset,
        });
    }
    Ok(trees)
}
