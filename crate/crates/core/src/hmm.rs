//! First-order HMM part-of-speech tagger with Viterbi decoding.
//!
//! Transitions are add-one smoothed over the tag alphabet plus the end
//! boundary. Each tag reserves `1 / (count(tag) + |vocab|)` of its emission mass
//! for unknown words; seen words share the remainder by relative frequency.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Virtual tag before the first token.
pub const START_TAG: &str = "<s>";
/// Virtual tag after the last token.
pub const END_TAG: &str = "</s>";

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("cannot train a tagger on an empty corpus")]
    EmptyCorpus,
    #[error("training sentence {index} is empty")]
    EmptySentence { index: usize },
    #[error("model file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A trained bigram tagger.
///
/// Tags are kept in lexicographic order; index `k` (the number of tags) is the
/// boundary state, used as START for rows and END for columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    tags: Vec<String>,
    tag_index: HashMap<String, usize>,
    /// `(k + 1) x (k + 1)` row-major log probabilities, row = previous.
    transition: Vec<f64>,
    /// word -> log emission per tag (`-inf` when unseen with that tag).
    emission: HashMap<String, Vec<f64>>,
    /// log unknown-word mass per tag.
    unknown: Vec<f64>,
}

impl HmmModel {
    pub fn train(sentences: &[Vec<(String, String)>]) -> Result<HmmModel, HmmError> {
        if sentences.is_empty() {
            return Err(HmmError::EmptyCorpus);
        }
        if let Some(index) = sentences.iter().position(Vec::is_empty) {
            return Err(HmmError::EmptySentence { index });
        }

        let tag_set: BTreeSet<&str> = sentences
            .iter()
            .flat_map(|s| s.iter().map(|(_, t)| t.as_str()))
            .collect();
        let tags: Vec<String> = tag_set.into_iter().map(str::to_string).collect();
        let tag_index: HashMap<String, usize> =
            tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let k = tags.len();
        let boundary = k;
        let width = k + 1;

        let mut bigrams = vec![0u64; width * width];
        let mut tag_counts = vec![0u64; k];
        let mut word_tag: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        for sentence in sentences {
            let mut prev = boundary;
            for (word, tag) in sentence {
                let t = tag_index[tag];
                bigrams[prev * width + t] += 1;
                tag_counts[t] += 1;
                word_tag.entry(word.as_str()).or_insert_with(|| vec![0; k])[t] += 1;
                prev = t;
            }
            bigrams[prev * width + boundary] += 1;
        }

        let mut transition = vec![0.0; width * width];
        for prev in 0..width {
            let row = &bigrams[prev * width..(prev + 1) * width];
            let total: u64 = row.iter().sum();
            let denom = (total + width as u64) as f64;
            for next in 0..width {
                transition[prev * width + next] = ((row[next] + 1) as f64 / denom).ln();
            }
        }

        let vocab = word_tag.len() as f64;
        let unknown_mass: Vec<f64> = tag_counts
            .iter()
            .map(|&c| 1.0 / (c as f64 + vocab))
            .collect();
        let emission = word_tag
            .into_iter()
            .map(|(word, counts)| {
                let logs = counts
                    .iter()
                    .enumerate()
                    .map(|(t, &c)| {
                        if c == 0 {
                            f64::NEG_INFINITY
                        } else {
                            let seen = 1.0 - unknown_mass[t];
                            (c as f64 / tag_counts[t] as f64 * seen).ln()
                        }
                    })
                    .collect();
                (word.to_string(), logs)
            })
            .collect();

        Ok(HmmModel {
            tags,
            tag_index,
            transition,
            emission,
            unknown: unknown_mass.iter().map(|p| p.ln()).collect(),
        })
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn vocab_size(&self) -> usize {
        self.emission.len()
    }

    pub fn knows_word(&self, word: &str) -> bool {
        self.emission.contains_key(word)
    }

    fn index(&self, tag: &str) -> Option<usize> {
        match tag {
            START_TAG | END_TAG => Some(self.tags.len()),
            _ => self.tag_index.get(tag).copied(),
        }
    }

    /// Log transition probability; `START_TAG`/`END_TAG` name the boundary.
    pub fn log_transition(&self, prev: &str, next: &str) -> Option<f64> {
        let (p, n) = (self.index(prev)?, self.index(next)?);
        Some(self.transition[p * (self.tags.len() + 1) + n])
    }

    pub fn transition(&self, prev: &str, next: &str) -> Option<f64> {
        self.log_transition(prev, next).map(f64::exp)
    }

    /// Log emission probability of `word` under `tag`, falling back to the
    /// tag's unknown-word mass for out-of-vocabulary words.
    pub fn log_emission(&self, tag: &str, word: &str) -> Option<f64> {
        let t = *self.tag_index.get(tag)?;
        Some(self.emission_row(word).map_or(self.unknown[t], |row| row[t]))
    }

    pub fn emission(&self, tag: &str, word: &str) -> Option<f64> {
        self.log_emission(tag, word).map(f64::exp)
    }

    fn emission_row(&self, word: &str) -> Option<&[f64]> {
        self.emission.get(word).map(Vec::as_slice)
    }

    #[inline]
    fn trans_ix(&self, prev: usize, next: usize) -> f64 {
        self.transition[prev * (self.tags.len() + 1) + next]
    }

    #[inline]
    fn emit_ix(&self, row: Option<&[f64]>, tag: usize) -> f64 {
        row.map_or(self.unknown[tag], |r| r[tag])
    }

    /// Log score of a tag path, summed in decoding order: for each position,
    /// `(score + transition) + emission`, then the END transition.
    pub fn path_log_score<S: AsRef<str>>(&self, words: &[S], tags: &[S]) -> Option<f64> {
        if words.len() != tags.len() {
            return None;
        }
        let boundary = self.tags.len();
        let mut score = 0.0;
        let mut prev = boundary;
        for (word, tag) in words.iter().zip(tags) {
            let t = *self.tag_index.get(tag.as_ref())?;
            let row = self.emission_row(word.as_ref());
            score = score + self.trans_ix(prev, t) + self.emit_ix(row, t);
            prev = t;
        }
        Some(score + self.trans_ix(prev, boundary))
    }

    /// Most probable tag sequence. Ties prefer the lexicographically smaller tag.
    pub fn viterbi_tag<S: AsRef<str>>(&self, words: &[S]) -> Vec<String> {
        self.viterbi(words).0
    }

    /// Viterbi path with its log score.
    pub fn viterbi<S: AsRef<str>>(&self, words: &[S]) -> (Vec<String>, f64) {
        let n = words.len();
        let k = self.tags.len();
        if n == 0 || k == 0 {
            return (Vec::new(), 0.0);
        }
        let boundary = k;
        let mut score = vec![f64::NEG_INFINITY; n * k];
        let mut back = vec![0usize; n * k];

        let row = self.emission_row(words[0].as_ref());
        for t in 0..k {
            score[t] = 0.0 + self.trans_ix(boundary, t) + self.emit_ix(row, t);
        }
        for i in 1..n {
            let row = self.emission_row(words[i].as_ref());
            for t in 0..k {
                let emit = self.emit_ix(row, t);
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                // ascending tag order + strict comparison: ties keep the smaller tag
                for p in 0..k {
                    let cand = score[(i - 1) * k + p] + self.trans_ix(p, t);
                    if cand > best {
                        best = cand;
                        arg = p;
                    }
                }
                score[i * k + t] = best + emit;
                back[i * k + t] = arg;
            }
        }

        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for t in 0..k {
            let cand = score[(n - 1) * k + t] + self.trans_ix(t, boundary);
            if cand > best {
                best = cand;
                last = t;
            }
        }
        let mut path = vec![0usize; n];
        path[n - 1] = last;
        for i in (1..n).rev() {
            path[i - 1] = back[i * k + path[i]];
        }
        (path.into_iter().map(|t| self.tags[t].clone()).collect(), best)
    }

    /// Writes the model as `[TRANSITION]`, `[EMISSION]` and `[UNKNOWN]`
    /// sections of tab-separated rows.
    pub fn write_to<W: Write>(&self, mut out: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let names = |i: usize, boundary_name: &'static str| -> String {
            if i == self.tags.len() {
                boundary_name.to_string()
            } else {
                self.tags[i].clone()
            }
        };
        writeln!(out, "[TRANSITION]")?;
        let width = self.tags.len() + 1;
        for prev in 0..width {
            for next in 0..width {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    names(prev, START_TAG),
                    names(next, END_TAG),
                    self.trans_ix(prev, next).exp()
                )?;
            }
        }
        writeln!(out, "[EMISSION]")?;
        let mut words: Vec<&String> = self.emission.keys().collect();
        words.sort();
        for (t, tag) in self.tags.iter().enumerate() {
            for word in &words {
                let lp = self.emission[*word][t];
                if lp > f64::NEG_INFINITY {
                    writeln!(out, "{}\t{}\t{}", tag, word, lp.exp())?;
                }
            }
        }
        writeln!(out, "[UNKNOWN]")?;
        for (t, tag) in self.tags.iter().enumerate() {
            writeln!(out, "{}\t{}", tag, self.unknown[t].exp())?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<HmmModel, HmmError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Transition,
            Emission,
            Unknown,
        }
        let mut section = Section::None;
        let mut transitions: Vec<(String, String, f64)> = Vec::new();
        let mut emissions: Vec<(String, String, f64)> = Vec::new();
        let mut unknown: BTreeMap<String, f64> = BTreeMap::new();

        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed {
                "[TRANSITION]" => section = Section::Transition,
                "[EMISSION]" => section = Section::Emission,
                "[UNKNOWN]" => section = Section::Unknown,
                _ => {
                    let bad = |why: &str| HmmError::Malformed {
                        line: lineno,
                        reason: why.to_string(),
                    };
                    let cols: Vec<&str> = line.split('\t').collect();
                    let prob = |s: &str| -> Result<f64, HmmError> {
                        let p: f64 = s.trim().parse().map_err(|_| bad("bad probability"))?;
                        if (0.0..=1.0).contains(&p) {
                            Ok(p)
                        } else {
                            Err(bad("probability outside [0, 1]"))
                        }
                    };
                    match (&section, cols.as_slice()) {
                        (Section::Transition, [a, b, p]) => {
                            transitions.push((a.to_string(), b.to_string(), prob(p)?))
                        }
                        (Section::Emission, [a, b, p]) => {
                            emissions.push((a.to_string(), b.to_string(), prob(p)?))
                        }
                        (Section::Unknown, [a, p]) => {
                            unknown.insert(a.to_string(), prob(p)?);
                        }
                        (Section::None, _) => return Err(bad("row outside any section")),
                        _ => return Err(bad("wrong number of columns")),
                    }
                }
            }
        }

        let tags: Vec<String> = unknown.keys().cloned().collect();
        let tag_index: HashMap<String, usize> =
            tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let k = tags.len();
        let width = k + 1;
        let lookup = |name: &str, boundary: &str| -> Option<usize> {
            if name == boundary {
                Some(k)
            } else {
                tag_index.get(name).copied()
            }
        };
        let malformed = |reason: String| HmmError::Malformed { line: 0, reason };

        let mut transition = vec![f64::NEG_INFINITY; width * width];
        for (a, b, p) in transitions {
            let (Some(i), Some(j)) = (lookup(&a, START_TAG), lookup(&b, END_TAG)) else {
                return Err(malformed(format!("transition {a} -> {b} names an unknown tag")));
            };
            transition[i * width + j] = p.ln();
        }
        let mut emission: HashMap<String, Vec<f64>> = HashMap::new();
        for (tag, word, p) in emissions {
            let Some(&t) = tag_index.get(&tag) else {
                return Err(malformed(format!("emission from unknown tag {tag}")));
            };
            emission
                .entry(word)
                .or_insert_with(|| vec![f64::NEG_INFINITY; k])[t] = p.ln();
        }
        Ok(HmmModel {
            unknown: tags.iter().map(|t| unknown[t].ln()).collect(),
            tags,
            tag_index,
            transition,
            emission,
        })
    }
}

/// Fraction of positions where `predicted` agrees with `gold`.
pub fn token_accuracy<S: AsRef<str>>(gold: &[Vec<S>], predicted: &[Vec<String>]) -> (usize, usize) {
    let mut correct = 0;
    let mut total = 0;
    for (g, p) in gold.iter().zip(predicted) {
        for (a, b) in g.iter().zip(p) {
            total += 1;
            if a.as_ref() == b {
                correct += 1;
            }
        }
    }
    (correct, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(w, t)| (w.to_string(), t.to_string())).collect()
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(HmmModel::train(&[]), Err(HmmError::EmptyCorpus)));
        assert!(matches!(
            HmmModel::train(&[sent(&[("a", "X")]), vec![]]),
            Err(HmmError::EmptySentence { index: 1 })
        ));
    }

    #[test]
    fn single_sentence_dominates() {
        let m = HmmModel::train(&[sent(&[("the", "DT"), ("dog", "NN")])]).unwrap();
        let dt_nn = m.transition("DT", "NN").unwrap();
        for tag in ["DT", END_TAG] {
            assert!(dt_nn > m.transition("DT", tag).unwrap());
        }
        assert!(m.emission("DT", "the").unwrap() > m.emission("DT", "dog").unwrap());
        assert_eq!(m.viterbi_tag(&["the", "dog"]), ["DT", "NN"]);
        assert_eq!(m.viterbi_tag(&["dog"]), ["NN"]);
    }

    #[test]
    fn frequency_ordering() {
        let m = HmmModel::train(&[
            sent(&[("the", "DT"), ("dog", "NN")]),
            sent(&[("a", "DT"), ("cat", "NN"), ("the", "DT"), ("big", "JJ")]),
        ])
        .unwrap();
        assert!(m.transition("DT", "NN").unwrap() > m.transition("DT", "JJ").unwrap());
    }

    #[test]
    fn distributions_are_normalized() {
        let m = HmmModel::train(&[
            sent(&[("the", "DT"), ("dog", "NN"), ("runs", "VB")]),
            sent(&[("dogs", "NN"), ("run", "VB")]),
        ])
        .unwrap();
        let mut rows: Vec<&str> = m.tags().iter().map(String::as_str).collect();
        rows.push(START_TAG);
        for prev in rows {
            let mut sum: f64 = m.tags().iter().map(|t| m.transition(prev, t).unwrap()).sum();
            sum += m.transition(prev, END_TAG).unwrap();
            assert!((sum - 1.0).abs() < 1e-9, "{prev}: {sum}");
        }
        for tag in m.tags() {
            let seen: f64 = ["the", "dog", "runs", "dogs", "run"]
                .iter()
                .map(|w| m.emission(tag, w).unwrap())
                .sum();
            assert!(seen <= 1.0 + 1e-9);
            let unk = m.emission(tag, "zebra").unwrap();
            assert!((seen + unk - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_words_still_decode() {
        let m = HmmModel::train(&[sent(&[("the", "DT"), ("dog", "NN")])]).unwrap();
        let tags = m.viterbi_tag(&["the", "zebra"]);
        assert_eq!(tags.len(), 2);
        assert_eq!(tags[0], "DT");
    }

    #[test]
    fn model_file_round_trip() {
        let m = HmmModel::train(&[
            sent(&[("the", "DT"), ("dog", "NN"), ("runs", "VB")]),
            sent(&[("dogs", "NN"), ("run", "VB")]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf, &["test".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("[TRANSITION]\nDT\tDT\t"));
        assert!(text.contains("\n<s>\tDT\t"));
        let back = HmmModel::read_from(text.as_bytes()).unwrap();
        assert_eq!(back.tags(), m.tags());
        for w in [vec!["the", "dog", "runs"], vec!["dogs", "zebra"]] {
            assert_eq!(back.viterbi_tag(&w), m.viterbi_tag(&w));
            let (a, b) = (back.viterbi(&w).1, m.viterbi(&w).1);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
