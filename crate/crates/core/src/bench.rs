//! Benchmark harness: run configuration, timing, and the
//! learn / prune / tag / parse / evaluate pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::info;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{normalize_all, parse_range, tagged_sentences, Corpus, CorpusError, RangeUnit, Selection};
use crate::earley::{ParseOutcome, ParseTree, Parser};
use crate::eval::{compare_configs, evaluate_run, write_eval_csv, Comparison, ConfigReport, EvalError};
use crate::grammar::{learn, Grammar, GrammarFileError, GrammarStats, STATS_CSV_HEADER};
use crate::hmm::{HmmError, HmmModel};
use crate::normalize::{MappingError, Normalizer, PosMapping};
use crate::prune::{prune, write_sweep_csv, PruneReport, PruneSpec};
use crate::tree::Tree;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "TREEGRAM_OUT_DIR";

/// Line written for a sentence without a parse.
pub const NO_PARSE: &str = "(NOPARSE)";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    GrammarFile(#[from] GrammarFileError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl BenchError {
    /// Process exit code: 1 for configuration problems, 2 for I/O and data.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Mapping(MappingError::Io { .. }) => 2,
            BenchError::Mapping(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
        move |source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

/// Everything a pipeline run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Vec<PathBuf>,
    /// `None` trains on the whole corpus.
    pub train: Option<std::ops::Range<usize>>,
    pub test: Option<std::ops::Range<usize>>,
    pub unit: RangeUnit,
    /// Allows the test range to overlap the training range.
    pub self_test: bool,
    pub pos_map: Option<PathBuf>,
    pub compress: bool,
    pub grid: Vec<PruneSpec>,
    pub renormalize: bool,
    pub root: String,
    /// Per-sentence parse budget; 0 disables it.
    pub timeout_ms: u64,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Parse only a seeded random subset of this many test sentences.
    pub sample: Option<usize>,
    pub parallel_sentences: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: Vec::new(),
            train: None,
            test: None,
            unit: RangeUnit::Lines,
            self_test: false,
            pos_map: None,
            compress: true,
            grid: vec![PruneSpec::default()],
            renormalize: false,
            root: "S".to_string(),
            timeout_ms: 10_000,
            out_dir: PathBuf::from("out"),
            seed: 0,
            sample: None,
            parallel_sentences: false,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, BenchError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(config_err(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BenchError> {
    value
        .parse()
        .map_err(|_| config_err(format!("{key}: cannot parse {value:?}")))
}

/// Parses a grid such as `50:0, 60:0, 0:0.05, 10:0.02` (`COUNT:PROB` pairs).
pub fn parse_grid(text: &str) -> Result<Vec<PruneSpec>, BenchError> {
    let mut grid = Vec::new();
    for item in text.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
        let (n, p) = item
            .split_once(':')
            .ok_or_else(|| config_err(format!("grid entry {item:?} is not COUNT:PROB")))?;
        let min_count: u64 = parse_num("grid", n.trim())?;
        let min_prob: f64 = parse_num("grid", p.trim())?;
        if !(0.0..=1.0).contains(&min_prob) {
            return Err(config_err(format!("grid entry {item:?}: probability outside [0, 1]")));
        }
        grid.push(PruneSpec::new(min_count, min_prob));
    }
    Ok(grid)
}

fn format_grid(grid: &[PruneSpec]) -> String {
    grid.iter()
        .map(|s| format!("{}:{}", s.min_count, s.min_prob))
        .collect::<Vec<_>>()
        .join(",")
}

fn format_range(r: &Option<std::ops::Range<usize>>) -> String {
    r.as_ref().map_or_else(|| "all".to_string(), |r| format!("{}..{}", r.start, r.end))
}

impl RunConfig {
    /// Sets one key. Keys mirror the long command-line flags with `_` for `-`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let value = value.trim();
        match key {
            "corpus" => {
                self.corpus = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "train" => {
                self.train = match value {
                    "all" | "" => None,
                    _ => Some(parse_range(value).map_err(|e| config_err(format!("train: {e}")))?),
                }
            }
            "test" => self.test = Some(parse_range(value).map_err(|e| config_err(format!("test: {e}")))?),
            "unit" => self.unit = value.parse().map_err(config_err)?,
            "self_test" => self.self_test = parse_bool(key, value)?,
            "pos_map" => self.pos_map = (!value.is_empty()).then(|| PathBuf::from(value)),
            "compress" => self.compress = parse_bool(key, value)?,
            "grid" => self.grid = parse_grid(value)?,
            "renormalize" => self.renormalize = parse_bool(key, value)?,
            "root" => self.root = value.to_string(),
            "timeout_ms" => self.timeout_ms = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse_num(key, value)?,
            "sample" => {
                self.sample = match value {
                    "" | "none" => None,
                    _ => Some(parse_num(key, value)?),
                }
            }
            "parallel_sentences" => self.parallel_sentences = parse_bool(key, value)?,
            _ => return Err(config_err(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("config line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, BenchError> {
        let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
        let mut config = RunConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.corpus.is_empty() {
            return Err(config_err("no corpus path given"));
        }
        let test = self
            .test
            .as_ref()
            .ok_or_else(|| config_err("no test range given"))?;
        if test.is_empty() {
            return Err(config_err(format!("test range {}..{} is empty", test.start, test.end)));
        }
        if let Some(train) = &self.train {
            if train.is_empty() {
                return Err(config_err(format!("train range {}..{} is empty", train.start, train.end)));
            }
        }
        if !self.self_test {
            let train = self.train.clone().unwrap_or(0..usize::MAX);
            if train.start < test.end && test.start < train.end {
                return Err(config_err(format!(
                    "train range {} overlaps test range {}..{}; set self_test to evaluate on training data",
                    format_range(&self.train),
                    test.start,
                    test.end
                )));
            }
        }
        if self.grid.is_empty() {
            return Err(config_err("prune grid is empty"));
        }
        if self.root.is_empty() {
            return Err(config_err("root symbol is empty"));
        }
        if self.sample == Some(0) {
            return Err(config_err("sample size must be positive"));
        }
        Ok(())
    }

    /// Canonical text of every setting that affects non-timing outputs.
    pub fn canonical(&self) -> String {
        let corpus: Vec<String> = self.corpus.iter().map(|p| p.display().to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "compress={}", self.compress);
        let _ = writeln!(s, "corpus={}", corpus.join(","));
        let _ = writeln!(s, "grid={}", format_grid(&self.grid));
        let _ = writeln!(
            s,
            "pos_map={}",
            self.pos_map.as_ref().map_or(String::new(), |p| p.display().to_string())
        );
        let _ = writeln!(s, "renormalize={}", self.renormalize);
        let _ = writeln!(s, "root={}", self.root);
        let _ = writeln!(s, "sample={}", self.sample.map_or("none".to_string(), |n| n.to_string()));
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "self_test={}", self.self_test);
        let _ = writeln!(s, "test={}", format_range(&self.test));
        let _ = writeln!(s, "timeout_ms={}", self.timeout_ms);
        let _ = writeln!(s, "train={}", format_range(&self.train));
        let _ = writeln!(s, "unit={}", self.unit);
        s
    }

    /// Short SHA-256 of the canonical settings.
    pub fn hash(&self) -> String {
        config_hash(&self.canonical())
    }

    pub fn timeout(&self) -> Option<Duration> {
        (self.timeout_ms > 0).then(|| Duration::from_millis(self.timeout_ms))
    }

    pub fn normalizer(&self) -> Result<Normalizer, BenchError> {
        let mapping = match &self.pos_map {
            Some(p) => PosMapping::load(p)?,
            None => PosMapping::compressed(),
        };
        Ok(Normalizer::new(mapping, self.compress))
    }

    /// Grid with the global renormalization switch applied.
    pub fn specs(&self) -> Vec<PruneSpec> {
        self.grid
            .iter()
            .map(|s| PruneSpec {
                renormalize: s.renormalize || self.renormalize,
                ..*s
            })
            .collect()
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Timed sections of a run, in execution order.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub entries: Vec<(String, Duration)>,
}

impl RunLog {
    pub fn record(&mut self, label: &str, elapsed: Duration) {
        info!("{label}: {:.3} ms", elapsed.as_secs_f64() * 1e3);
        self.entries.push((label.to_string(), elapsed));
    }

    pub fn get(&self, label: &str) -> Option<Duration> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, d)| *d)
    }
}

/// Runs `work`, measuring monotonic wall time, and records it under `label`.
pub fn time_section<T>(label: &str, log: &mut RunLog, work: impl FnOnce() -> T) -> (T, Duration) {
    let started = Instant::now();
    let value = work();
    let elapsed = started.elapsed();
    log.record(label, elapsed);
    (value, elapsed)
}

/// Tags each sentence with the most probable tag sequence.
pub fn tag_all(model: &HmmModel, sentences: &[Vec<String>], parallel: bool) -> Vec<Vec<String>> {
    if parallel {
        sentences.par_iter().map(|s| model.viterbi_tag(s)).collect()
    } else {
        sentences.iter().map(|s| model.viterbi_tag(s)).collect()
    }
}

/// Parses each tag sequence. Tags outside the grammar give `NoParse`.
pub fn parse_all(parser: &Parser, tags: &[Vec<String>], root: &str, parallel: bool) -> Vec<ParseOutcome> {
    let one = |t: &Vec<String>| match parser.parse(t, root) {
        Ok(r) => r.outcome,
        Err(_) => ParseOutcome::NoParse,
    };
    if parallel {
        tags.par_iter().map(one).collect()
    } else {
        tags.iter().map(one).collect()
    }
}

/// One line per sentence: the bracketed parse or [`NO_PARSE`].
pub fn write_parses<W: Write>(mut out: W, header: &[String], outcomes: &[ParseOutcome]) -> io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    for o in outcomes {
        match o.tree() {
            Some(t) => writeln!(out, "{}", t.to_bracketed())?,
            None => writeln!(out, "{NO_PARSE}")?,
        }
    }
    out.flush()
}

/// Reads a parses file; `#` lines are skipped, unparsable lines count as no parse.
pub fn read_parses(text: &str) -> Vec<Option<ParseTree>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| match l.trim() {
            NO_PARSE | "" => None,
            t => ParseTree::from_bracketed(t),
        })
        .collect()
}

/// File-name stem for a pruning configuration, e.g. `n10_p0.02`.
pub fn spec_stem(spec: &PruneSpec) -> String {
    let mut s = format!("n{}_p{}", spec.min_count, spec.min_prob);
    if spec.renormalize {
        s.push_str("_r");
    }
    s
}

/// Outcome of one grid point.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub spec: PruneSpec,
    pub prune: PruneReport,
    pub outcomes: Vec<ParseOutcome>,
    pub elapsed: Duration,
    pub config_report: ConfigReport,
}

/// In-memory results of [`run_pipeline`]; the same data is on disk.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config_hash: String,
    pub stats: GrammarStats,
    pub grammar: Grammar,
    pub runs: Vec<GridRun>,
    pub comparison: Comparison,
    pub tagging_accuracy: (usize, usize),
    pub dropped_sentences: usize,
    pub log: RunLog,
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    Ok(BufWriter::new(File::create(path).map_err(BenchError::io(path))?))
}

/// Normalized train and test material selected from a corpus.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<Tree>,
    pub test: Vec<Tree>,
    pub dropped: usize,
}

/// Selects and normalizes train/test trees, applying the optional sample.
pub fn split(corpus: &Corpus, config: &RunConfig, normalizer: &Normalizer) -> Result<Split, BenchError> {
    let train_sel = Selection {
        range: config.train.clone().unwrap_or(0..usize::MAX),
        unit: config.unit,
    };
    let test_range = config.test.clone().ok_or_else(|| config_err("no test range given"))?;
    let test_sel = Selection {
        range: test_range.clone(),
        unit: config.unit,
    };
    let (train, dropped_train) = normalize_all(corpus.select(&train_sel).into_iter().map(|t| &t.tree), normalizer);
    let (mut test, dropped_test) = normalize_all(corpus.select(&test_sel).into_iter().map(|t| &t.tree), normalizer);
    if train.is_empty() {
        return Err(config_err(format!(
            "train range {} selects no sentences",
            format_range(&config.train)
        )));
    }
    if test.is_empty() {
        return Err(config_err(format!(
            "test range {}..{} selects no sentences",
            test_range.start, test_range.end
        )));
    }
    if let Some(k) = config.sample {
        if k < test.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut picked = sample(&mut rng, test.len(), k).into_vec();
            picked.sort_unstable();
            test = picked.into_iter().map(|i| test[i].clone()).collect();
        }
    }
    Ok(Split {
        train,
        test,
        dropped: dropped_train + dropped_test,
    })
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs learn, then for each grid point prune, tag, parse and evaluate.
///
/// Writes into `config.out_dir`: `grammar.tsv`, `stats.csv`, `model.hmm`,
/// `grammar_<stem>.tsv` and `parses_<stem>.txt` per grid point, `sweep.csv`,
/// `eval.csv`, `ranking.txt` and `run.log`. All files except `eval.csv`,
/// `ranking.txt` and `run.log` are identical across runs of the same config.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput, BenchError> {
    config.validate()?;
    let normalizer = config.normalizer()?;
    let hash = config.hash();
    let header = vec![format!("config_hash={hash}")];
    let mut log = RunLog::default();
    let out = &config.out_dir;

    let (corpus, _) = time_section("load", &mut log, || Corpus::load(&config.corpus));
    let corpus = corpus?;
    let data = split(&corpus, config, &normalizer)?;
    info!(
        "{} training and {} test sentences ({} dropped)",
        data.train.len(),
        data.test.len(),
        data.dropped
    );
    std::fs::create_dir_all(out).map_err(BenchError::io(out))?;

    let (grammar, learn_time) = time_section("learn", &mut log, || learn(&data.train));
    let train_tagged = tagged_sentences(&data.train);
    let stats = GrammarStats::compute(&grammar, &train_tagged).with_learn_time(learn_time.as_millis() as u64);
    {
        let path = out.join("grammar.tsv");
        let mut w = create(&path)?;
        grammar.write_tsv(&mut w, &header).map_err(BenchError::io(&path))?;
        w.flush().map_err(BenchError::io(&path))?;
    }
    {
        // learn_time_ms is a timing value; keep stats.csv deterministic
        let path = out.join("stats.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|source| BenchError::Csv {
            path: path.clone(),
            source,
        })?;
        let mut values = stats.values();
        values[9] = String::new();
        let csv_err = |source| BenchError::Csv {
            path: path.clone(),
            source,
        };
        w.write_record(STATS_CSV_HEADER).map_err(csv_err)?;
        w.write_record(&values).map_err(csv_err)?;
        w.flush().map_err(BenchError::io(&path))?;
    }

    let (model, _) = time_section("train_tagger", &mut log, || HmmModel::train(&train_tagged));
    let model = model?;
    {
        let path = out.join("model.hmm");
        let mut w = create(&path)?;
        model.write_to(&mut w, &header).map_err(BenchError::io(&path))?;
        w.flush().map_err(BenchError::io(&path))?;
    }

    let test_tagged = tagged_sentences(&data.test);
    let words: Vec<Vec<String>> = test_tagged
        .iter()
        .map(|s| s.iter().map(|(w, _)| w.clone()).collect())
        .collect();
    let gold_tags: Vec<Vec<&str>> = test_tagged
        .iter()
        .map(|s| s.iter().map(|(_, t)| t.as_str()).collect())
        .collect();

    let mut runs = Vec::new();
    let mut tagging_accuracy = (0, 0);
    for spec in config.specs() {
        let stem = spec_stem(&spec);
        let (pruned, prune_report) = prune(&grammar, spec);
        {
            let path = out.join(format!("grammar_{stem}.tsv"));
            let mut w = create(&path)?;
            let mut h = header.clone();
            h.push(format!("prune={spec}"));
            pruned.write_tsv(&mut w, &h).map_err(BenchError::io(&path))?;
            w.flush().map_err(BenchError::io(&path))?;
        }
        let parser = Parser::new(&pruned).with_timeout(config.timeout());

        let ((tags, outcomes), elapsed) = time_section(&format!("tag+parse {stem}"), &mut log, || {
            let tags = tag_all(&model, &words, config.parallel_sentences);
            let outcomes = parse_all(&parser, &tags, &config.root, config.parallel_sentences);
            (tags, outcomes)
        });
        tagging_accuracy = crate::hmm::token_accuracy(&gold_tags, &tags);
        {
            let path = out.join(format!("parses_{stem}.txt"));
            let mut h = header.clone();
            h.push(format!("prune={spec}"));
            write_parses(create(&path)?, &h, &outcomes).map_err(BenchError::io(&path))?;
        }
        let predictions: Vec<Option<ParseTree>> = outcomes.iter().map(|o| o.tree().cloned()).collect();
        // guard against a clock reading of zero on trivial inputs
        let seconds = elapsed.as_secs_f64().max(1e-9);
        let report = evaluate_run(&data.test, &predictions, seconds)?;
        info!(
            "{spec}: PT={} P={:.2}% R={:.2}% T={:.3}s parsed {}/{}",
            prune_report.pattern_types,
            report.precision_pct,
            report.recall_pct,
            seconds,
            report.parsed,
            report.sentences
        );
        runs.push(GridRun {
            spec,
            prune: prune_report,
            outcomes,
            elapsed,
            config_report: ConfigReport {
                spec,
                pattern_types: prune_report.pattern_types,
                report,
            },
        });
    }

    let prune_reports: Vec<PruneReport> = runs.iter().map(|r| r.prune).collect();
    let rows: Vec<ConfigReport> = runs.iter().map(|r| r.config_report).collect();
    for (name, result) in [
        ("sweep.csv", write_sweep_csv_file(&out.join("sweep.csv"), &prune_reports)),
        ("eval.csv", write_eval_csv_file(&out.join("eval.csv"), &rows)),
    ] {
        result.map_err(|source| BenchError::Csv {
            path: out.join(name),
            source,
        })?;
    }
    let comparison = compare_configs(&rows);
    write_ranking(&out.join("ranking.txt"), &rows, &comparison)?;
    write_run_log(&out.join("run.log"), config, &hash, &log, tagging_accuracy)?;

    Ok(PipelineOutput {
        config_hash: hash,
        stats,
        grammar,
        runs,
        comparison,
        tagging_accuracy,
        dropped_sentences: data.dropped,
        log,
    })
}

fn write_sweep_csv_file(path: &Path, reports: &[PruneReport]) -> csv::Result<()> {
    write_sweep_csv(File::create(path)?, reports)
}

fn write_eval_csv_file(path: &Path, rows: &[ConfigReport]) -> csv::Result<()> {
    write_eval_csv(File::create(path)?, rows)
}

fn write_ranking(path: &Path, rows: &[ConfigReport], cmp: &Comparison) -> Result<(), BenchError> {
    let mut s = String::new();
    for (title, order) in [("by PT", &cmp.by_pt), ("by RT", &cmp.by_rt)] {
        let _ = writeln!(s, "# {title}");
        let _ = writeln!(s, "rank\tmin_count\tmin_prob\tpt\trt\tprecision_pct\trecall_pct");
        for (rank, &i) in order.iter().enumerate() {
            let r = &rows[i];
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rank + 1,
                r.spec.min_count,
                r.spec.min_prob,
                r.report.pt,
                r.report.rt,
                r.report.precision_pct,
                r.report.recall_pct
            );
        }
    }
    std::fs::write(path, s).map_err(BenchError::io(path))
}

fn write_run_log(
    path: &Path,
    config: &RunConfig,
    hash: &str,
    log: &RunLog,
    accuracy: (usize, usize),
) -> Result<(), BenchError> {
    let mut s = String::new();
    let _ = writeln!(s, "config_hash={hash}");
    let _ = writeln!(s, "timestamp={}", unix_seconds());
    s.push_str(&config.canonical());
    let _ = writeln!(s, "tagging_correct={}", accuracy.0);
    let _ = writeln!(s, "tagging_total={}", accuracy.1);
    for (label, d) in &log.entries {
        let _ = writeln!(s, "time[{label}]_ms={:.3}", d.as_secs_f64() * 1e3);
    }
    std::fs::write(path, s).map_err(BenchError::io(path))
}

/// Reads `key=value` lines into a map, skipping blanks and `#` comments.
pub fn read_key_values(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        let mut c = RunConfig::default();
        c.apply_text("corpus = a.mrg\ntest = 0..10\nself_test = true\n").unwrap();
        c
    }

    #[test]
    fn config_text() {
        let mut c = base();
        c.apply_text("# comment\ngrid = 50:0, 60:0, 0:0.05, 10:0.02\nunit=sentences\ntimeout_ms=0")
            .unwrap();
        assert_eq!(c.grid.len(), 4);
        assert_eq!(c.grid[3], PruneSpec::new(10, 0.02));
        assert_eq!(c.unit, RangeUnit::Sentences);
        assert_eq!(c.timeout(), None);
        assert!(c.validate().is_ok());
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("no equals sign").is_err());
    }

    #[test]
    fn validation() {
        let mut c = base();
        c.self_test = false;
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        c.train = Some(10..20);
        assert!(c.validate().is_ok());
        c.grid.clear();
        assert!(c.validate().is_err());
        let mut c = base();
        assert!(c.set("test", "5..5").is_err());
        c.test = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = base();
        let mut b = base();
        b.out_dir = PathBuf::from("elsewhere");
        b.parallel_sentences = true;
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn parse_file_round_trip() {
        let t = ParseTree::from_bracketed("(S (NP DT NN) (VP VB))").unwrap();
        let outcomes = vec![ParseOutcome::Parsed(t.clone()), ParseOutcome::NoParse, ParseOutcome::TimedOut];
        let mut buf = Vec::new();
        write_parses(&mut buf, &["x=1".to_string()], &outcomes).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# x=1\n(S (NP DT NN) (VP VB))\n(NOPARSE)\n(NOPARSE)\n");
        let back = read_parses(&text);
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].as_ref().unwrap().to_bracketed(), t.to_bracketed());
        assert!(back[1].is_none() && back[2].is_none());
    }

    #[test]
    fn stems() {
        assert_eq!(spec_stem(&PruneSpec::new(10, 0.02)), "n10_p0.02");
        assert_eq!(spec_stem(&PruneSpec::by_count(50).renormalized()), "n50_p0_r");
    }

    #[test]
    fn timing_records() {
        let mut log = RunLog::default();
        let (v, d) = time_section("noop", &mut log, || 3);
        assert_eq!(v, 3);
        assert_eq!(log.get("noop"), Some(d));
    }
}
