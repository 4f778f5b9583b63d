//! Seeded generator of Penn-Treebank-style bracketed text.
//!
//! The output imitates the features the pipeline has to cope with: fine POS
//! tags, function tags and coindices on phrase labels, empty elements, outer
//! wrapper brackets, flat noun phrases with a long tail of rare shapes, and
//! ambiguous words. It is meant for tests and demos when no treebank is at
//! hand, not as a linguistic model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tree::Tree;

const DT: &[&str] = &["the", "a", "this", "that", "every", "some", "no", "an"];
const NN: &[&str] = &[
    "job", "company", "market", "report", "year", "stock", "price", "share", "journal", "event",
    "century", "plan", "deal", "group", "board", "bank", "rate", "run", "book", "record", "issue",
    "time", "week", "sale", "trade", "fund", "cost", "loss", "firm", "unit",
];
const NNS: &[&str] = &[
    "jobs", "companies", "markets", "reports", "years", "stocks", "prices", "shares", "events",
    "plans", "deals", "investors", "banks", "rates", "sales", "funds", "costs", "losses", "records",
];
const NNP: &[&str] = &[
    "Smith", "Vinken", "Elsevier", "Chicago", "Friday", "Congress", "Mr.", "Corp.", "Inc.", "Nov.",
    "Pierre", "Agnew", "Texas",
];
const NNPS: &[&str] = &["Americans", "Securities", "Industries"];
const FW: &[&str] = &["de", "facto", "vis-a-vis"];
const VB: &[&str] = &["find", "report", "run", "buy", "sell", "make", "take", "record", "book", "trade"];
const VBD: &[&str] = &["said", "reported", "rose", "fell", "bought", "sold", "made", "took", "ran"];
const VBZ: &[&str] = &["says", "reports", "rises", "falls", "buys", "sells", "makes", "runs", "is", "has"];
const VBP: &[&str] = &["want", "say", "report", "buy", "sell", "make", "run", "are", "have", "trade"];
const VBN: &[&str] = &["reported", "bought", "sold", "made", "taken", "expected", "named", "been"];
const VBG: &[&str] = &["making", "selling", "buying", "rising", "running", "trading", "including"];
const MD: &[&str] = &["will", "would", "could", "may", "can"];
const JJ: &[&str] = &[
    "new", "past", "big", "financial", "other", "last", "major", "high", "federal", "early", "more",
    "strong", "recent",
];
const JJR: &[&str] = &["higher", "lower", "larger", "bigger"];
const JJS: &[&str] = &["biggest", "largest", "highest"];
const RB: &[&str] = &["also", "not", "still", "only", "now", "just", "very", "already"];
const RBR: &[&str] = &["more", "less", "earlier"];
const RBS: &[&str] = &["most"];
const IN: &[&str] = &["of", "in", "for", "on", "with", "at", "by", "from", "that", "about", "as"];
const TO: &[&str] = &["to"];
const CC: &[&str] = &["and", "but", "or"];
const CD: &[&str] = &["1", "2", "10", "1989", "million", "billion", "three", "50"];
const PRP: &[&str] = &["I", "it", "he", "they", "we", "she", "you"];
const PRPS: &[&str] = &["its", "his", "their", "our", "my"];
const WDT: &[&str] = &["which", "that"];
const WP: &[&str] = &["who", "what"];
const WRB: &[&str] = &["when", "where", "how"];
const POS: &[&str] = &["'s"];

fn lexicon(tag: &str) -> &'static [&'static str] {
    match tag {
        "DT" => DT,
        "NN" => NN,
        "NNS" => NNS,
        "NNP" => NNP,
        "NNPS" => NNPS,
        "FW" => FW,
        "VB" => VB,
        "VBD" => VBD,
        "VBZ" => VBZ,
        "VBP" => VBP,
        "VBN" => VBN,
        "VBG" => VBG,
        "MD" => MD,
        "JJ" => JJ,
        "JJR" => JJR,
        "JJS" => JJS,
        "RB" => RB,
        "RBR" => RBR,
        "RBS" => RBS,
        "IN" => IN,
        "TO" => TO,
        "CC" => CC,
        "CD" => CD,
        "PRP" => PRP,
        "PRP$" => PRPS,
        "WDT" => WDT,
        "WP" => WP,
        "WRB" => WRB,
        "POS" => POS,
        "," => &[","],
        "." => &["."],
        ":" => &[";", "--"],
        "``" => &["``"],
        "''" => &["''"],
        _ => &["x"],
    }
}

/// Generator state; all randomness comes from the seed.
pub struct TreebankGenerator {
    rng: ChaCha8Rng,
    next_index: usize,
}

impl TreebankGenerator {
    pub fn new(seed: u64) -> TreebankGenerator {
        TreebankGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_index: 1,
        }
    }

    fn word(&mut self, tag: &str) -> Tree {
        let words = lexicon(tag);
        // skewed towards the front of each list
        let a = self.rng.gen_range(0..words.len());
        let b = self.rng.gen_range(0..words.len());
        Tree::leaf(tag, words[a.min(b)])
    }

    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options.choose(&mut self.rng).copied().unwrap_or("NN")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Geometric count: keeps adding while a coin with probability `p` lands.
    fn repeat(&mut self, p: f64, max: usize) -> usize {
        let mut n = 0;
        while n < max && self.chance(p) {
            n += 1;
        }
        n
    }

    fn index(&mut self) -> usize {
        let i = self.next_index;
        self.next_index += 1;
        i
    }

    fn noun_phrase(&mut self, depth: usize, role: Option<&str>) -> Tree {
        let label = match role {
            Some(r) if self.chance(0.3) => format!("NP-{r}-{}", self.index()),
            Some(r) => format!("NP-{r}"),
            None => "NP".to_string(),
        };
        let roll: f64 = self.rng.gen();
        let mut children = Vec::new();
        if roll < 0.18 {
            children.push(self.word("PRP"));
        } else if roll < 0.26 {
            let n = 1 + self.repeat(0.45, 3);
            for _ in 0..n {
                children.push(self.word("NNP"));
            }
            if self.chance(0.08) {
                children.push(self.word("NNPS"));
            }
        } else if roll < 0.31 {
            children.push(self.word("CD"));
            children.push(self.word("NNS"));
        } else {
            if self.chance(0.7) {
                children.push(self.word("DT"));
            } else if self.chance(0.3) {
                children.push(self.word("PRP$"));
            }
            for _ in 0..self.repeat(0.3, 3) {
                let adj = if self.chance(0.85) {
                    "JJ"
                } else {
                    self.pick(&["JJR", "JJS", "CD", "VBG", "VBN"])
                };
                children.push(self.word(adj));
            }
            for _ in 0..self.repeat(0.15, 2) {
                let modifier = self.pick(&["NN", "NN", "NNP"]);
                children.push(self.word(modifier));
            }
            let head = if self.chance(0.6) {
                "NN"
            } else if self.chance(0.9) {
                "NNS"
            } else {
                "FW"
            };
            children.push(self.word(head));
        }
        let mut np = Tree::node(label.clone(), children);
        if depth < 3 && self.chance(0.22) {
            let pp = self.prep_phrase(depth + 1);
            np = Tree::node(label.clone(), vec![Tree::node("NP", np.children), pp]);
        }
        if depth < 2 && self.chance(0.06) {
            let rel = self.relative_clause(depth + 1);
            np = Tree::node(label.clone(), vec![Tree::node("NP", np.children), rel]);
        }
        if depth < 2 && self.chance(0.04) {
            let other = self.noun_phrase(depth + 1, None);
            let cc = self.word("CC");
            np = Tree::node(label, vec![Tree::node("NP", np.children), cc, other]);
        }
        np
    }

    fn prep_phrase(&mut self, depth: usize) -> Tree {
        let label = if self.chance(0.2) {
            self.pick(&["PP-LOC", "PP-TMP", "PP-CLR", "PP-DIR"]).to_string()
        } else {
            "PP".to_string()
        };
        let prep = self.word("IN");
        let np = self.noun_phrase(depth, None);
        Tree::node(label, vec![prep, np])
    }

    fn relative_clause(&mut self, depth: usize) -> Tree {
        let i = self.index();
        let wh = if self.chance(0.7) {
            self.word("WDT")
        } else {
            self.word("WP")
        };
        let subject = Tree::node("NP-SBJ", vec![Tree::leaf("-NONE-", format!("*T*-{i}"))]);
        let vp = self.verb_phrase(depth + 1, true);
        Tree::node(
            "SBAR",
            vec![
                Tree::node(format!("WHNP-{i}"), vec![wh]),
                Tree::node("S", vec![subject, vp]),
            ],
        )
    }

    fn adjective_phrase(&mut self) -> Tree {
        let mut children = Vec::new();
        if self.chance(0.3) {
            let adv = if self.chance(0.8) { "RB" } else { self.pick(&["RBR", "RBS"]) };
            children.push(self.word(adv));
        }
        children.push(self.word("JJ"));
        Tree::node("ADJP-PRD", children)
    }

    fn verb_phrase(&mut self, depth: usize, finite: bool) -> Tree {
        if finite && depth < 3 && self.chance(0.12) {
            let md = self.word("MD");
            let inner = self.verb_phrase(depth + 1, false);
            return Tree::node("VP", vec![md, inner]);
        }
        if finite && depth < 3 && self.chance(0.1) {
            // "want to find a job": control verb with an empty subject
            let tag = self.pick_finite();
            let verb = self.word(tag);
            let to = self.word("TO");
            let inner = self.verb_phrase(depth + 1, false);
            let s = Tree::node(
                "S",
                vec![
                    Tree::node("NP-SBJ", vec![Tree::leaf("-NONE-", "*-1")]),
                    Tree::node("VP", vec![to, inner]),
                ],
            );
            return Tree::node("VP", vec![verb, s]);
        }
        let tag = if finite { self.pick_finite() } else { "VB" };
        let mut children = vec![self.word(tag)];
        let roll: f64 = self.rng.gen();
        if roll < 0.6 {
            children.push(self.noun_phrase(depth + 1, None));
        } else if roll < 0.72 {
            children.push(self.adjective_phrase());
        } else if roll < 0.8 && depth < 3 {
            let comp = self.word("IN");
            let s = self.clause(depth + 1);
            children.push(Tree::node("SBAR", vec![comp, s]));
        }
        for _ in 0..self.repeat(0.25, 2) {
            if depth < 4 {
                children.push(self.prep_phrase(depth + 1));
            }
        }
        if self.chance(0.08) {
            let adv = self.word("RB");
            children.push(Tree::node("ADVP", vec![adv]));
        }
        Tree::node("VP", children)
    }

    fn pick_finite(&mut self) -> &'static str {
        let tags: [&'static str; 4] = ["VBD", "VBZ", "VBP", "VBD"];
        tags[self.rng.gen_range(0..tags.len())]
    }

    fn clause(&mut self, depth: usize) -> Tree {
        let subject = self.noun_phrase(depth + 1, Some("SBJ"));
        let vp = self.verb_phrase(depth + 1, true);
        Tree::node("S", vec![subject, vp])
    }

    /// One sentence with its raw (unnormalized) labels.
    pub fn sentence(&mut self) -> Tree {
        let roll: f64 = self.rng.gen();
        let mut children = Vec::new();
        let label = if roll < 0.1 {
            let pp = self.prep_phrase(1);
            children.push(pp);
            children.push(self.word(","));
            "S"
        } else if roll < 0.14 {
            "S-TPC-1"
        } else {
            "S"
        };
        if (0.14..0.2).contains(&roll) {
            let a = self.clause(1);
            let cc = self.word("CC");
            let b = self.clause(1);
            children.extend([a, cc, b]);
        } else {
            children.push(self.noun_phrase(1, Some("SBJ")));
            children.push(self.verb_phrase(1, true));
        }
        if self.chance(0.03) {
            // rare sentence shapes feed the long tail of patterns
            let extra = self.pick(&["PRN", "FRAG", "UCP", "X", "INTJ", "LST", "QP", "RRC"]);
            let tag = self.pick(&["NN", "RB", "JJ", "CD"]);
            let inner = self.word(tag);
            children.push(Tree::node(extra, vec![inner]));
        }
        children.push(self.word("."));
        Tree::node(label, children)
    }

    pub fn sentences(&mut self, count: usize) -> Vec<Tree> {
        (0..count).map(|_| self.sentence()).collect()
    }
}

/// Renders trees as a treebank file: wrapper brackets, first-level children on
/// their own lines.
pub fn render_file(trees: &[Tree]) -> String {
    let mut out = String::new();
    for tree in trees {
        out.push_str("( (");
        out.push_str(&tree.label);
        for child in &tree.children {
            out.push_str("\n    ");
            out.push_str(&child.to_bracketed());
        }
        out.push_str(") )\n\n");
    }
    out
}

/// A ready-made corpus: `count` sentences from `seed`, rendered as text.
pub fn synthetic_treebank(seed: u64, count: usize) -> String {
    render_file(&TreebankGenerator::new(seed).sentences(count))
}
