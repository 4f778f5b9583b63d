//! Treebank grammar toolkit.
//!
//! Learns a probabilistic context-free grammar from bracketed corpora,
//! shrinks it by syntactic pattern pruning, tags and parses with it, and
//! scores parse runs by bracket precision/recall and the PT / RT
//! time-efficiency factors.

pub mod bench;
pub mod corpus;
pub mod earley;
pub mod eval;
pub mod grammar;
pub mod hmm;
pub mod normalize;
pub mod prune;
pub mod synth;
pub mod tree;

pub use earley::{parse, ParseOutcome, ParseTree, Parser};
pub use eval::{bracket_score, evaluate_run, EvalReport};
pub use grammar::{extract_productions, learn, Grammar, GrammarStats, Production};
pub use hmm::HmmModel;
pub use normalize::{compress_pos, normalize_nonterminal, normalize_tree, Normalizer, PosMapping};
pub use prune::{prune, sweep, PruneReport, PruneSpec};
pub use tree::{parse_bracketed, Tree};
