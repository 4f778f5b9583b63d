use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser as ClapParser, Subcommand};

use treegram::bench::{
    self, parse_all, read_key_values, read_parses, run_pipeline, split, tag_all, write_parses,
    BenchError, RunConfig, OUT_DIR_ENV,
};
use treegram::corpus::{tagged_sentences, Corpus};
use treegram::eval::{evaluate_run, write_eval_csv, ConfigReport};
use treegram::grammar::{learn, Grammar, GrammarStats, STATS_CSV_HEADER};
use treegram::hmm::HmmModel;
use treegram::prune::{prune, sweep, write_sweep_csv, PruneSpec};
use treegram::Parser;

#[derive(ClapParser)]
#[command(name = "treegram", version, about = "Treebank grammar learning, pruning, parsing and evaluation")]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Corpus selection and normalization settings.
#[derive(Args, Default)]
struct CorpusArgs {
    /// Treebank files or directories (repeatable).
    #[arg(long)]
    corpus: Vec<String>,
    /// Training range START..END, or `all`.
    #[arg(long)]
    train: Option<String>,
    /// Test range START..END.
    #[arg(long)]
    test: Option<String>,
    /// Range unit: lines or sentences.
    #[arg(long)]
    unit: Option<String>,
    /// Allow the test range to overlap the training range.
    #[arg(long)]
    self_test: bool,
    /// TAB-separated POS mapping replacing the built-in compressed set.
    #[arg(long)]
    pos_map: Option<String>,
    /// Use the compressed POS set (true/false).
    #[arg(long)]
    compress: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Evaluate on a seeded random sample of this many test sentences.
    #[arg(long)]
    sample: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a grammar (and tagger) from the training range.
    Learn {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Grammar TSV output.
        #[arg(long)]
        out: PathBuf,
        /// Also train and write the HMM tagger.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also write grammar statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Prune a grammar file by count and probability thresholds.
    Prune {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        min_count: u64,
        #[arg(long, default_value_t = 0.0)]
        min_prob: f64,
        #[arg(long)]
        renormalize: bool,
    },
    /// Tag sentences with a trained model.
    Tag {
        #[arg(long)]
        model: PathBuf,
        /// One whitespace-tokenized sentence per line; omit to read the test range.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse tag sequences (one per line) with a grammar file.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-sentence budget in milliseconds; 0 disables it.
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        parallel_sentences: bool,
    },
    /// Score a parses file against the gold test range.
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        parses: PathBuf,
        /// Run time in seconds; defaults to the value recorded by `parse`.
        #[arg(long)]
        elapsed_s: Option<f64>,
        /// Grammar used for the parses, to report its pattern types.
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        min_count: u64,
        #[arg(long, default_value_t = 0.0)]
        min_prob: f64,
        /// CSV report path; key=value lines always go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report PA / PT / NT of a grammar file over a pruning grid.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        /// COUNT:PROB pairs, e.g. `1:0,5:0,10:0`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full learn, prune, tag, parse and evaluate run over a grid.
    Pipeline {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        renormalize: bool,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        out_dir: Option<String>,
        #[arg(long)]
        parallel_sentences: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treegram: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, BenchError> {
    let mut config = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        config.set("out_dir", &dir)?;
    }
    Ok(config)
}

impl CorpusArgs {
    fn apply(&self, config: &mut RunConfig) -> Result<(), BenchError> {
        if !self.corpus.is_empty() {
            config.set("corpus", &self.corpus.join(","))?;
        }
        let pairs = [
            ("train", &self.train),
            ("test", &self.test),
            ("unit", &self.unit),
            ("pos_map", &self.pos_map),
            ("compress", &self.compress),
            ("seed", &self.seed),
            ("sample", &self.sample),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if self.self_test {
            config.self_test = true;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<fs::File, BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    fs::File::create(path).map_err(BenchError::io(path))
}

fn read_grammar(path: &Path) -> Result<Grammar, BenchError> {
    let file = fs::File::open(path).map_err(BenchError::io(path))?;
    Ok(Grammar::read_tsv(BufReader::new(file))?)
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn elapsed_sidecar(parses: &Path) -> PathBuf {
    let mut name = parses.as_os_str().to_owned();
    name.push(".elapsed");
    PathBuf::from(name)
}

fn load_split(config: &RunConfig) -> Result<bench::Split, BenchError> {
    if config.corpus.is_empty() {
        return Err(BenchError::Config("no corpus path given".into()));
    }
    let normalizer = config.normalizer()?;
    let corpus = Corpus::load(&config.corpus)?;
    split(&corpus, config, &normalizer)
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let mut config = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Learn {
            corpus,
            out,
            model,
            stats,
        } => {
            corpus.apply(&mut config)?;
            if config.corpus.is_empty() {
                return Err(BenchError::Config("no corpus path given".into()));
            }
            let normalizer = config.normalizer()?;
            let loaded = Corpus::load(&config.corpus)?;
            let selection = treegram::corpus::Selection {
                range: config.train.clone().unwrap_or(0..usize::MAX),
                unit: config.unit,
            };
            let (trees, _) = treegram::corpus::normalize_all(
                loaded.select(&selection).into_iter().map(|t| &t.tree),
                &normalizer,
            );
            if trees.is_empty() {
                return Err(BenchError::Config("train range selects no sentences".into()));
            }
            let started = Instant::now();
            let grammar = learn(&trees);
            let learn_ms = started.elapsed().as_millis() as u64;
            let header = vec![format!("config_hash={}", config.hash())];
            grammar
                .write_tsv(create(&out)?, &header)
                .map_err(BenchError::io(&out))?;
            let tagged = tagged_sentences(&trees);
            if let Some(path) = stats {
                let s = GrammarStats::compute(&grammar, &tagged).with_learn_time(learn_ms);
                let mut w = csv::Writer::from_writer(create(&path)?);
                w.write_record(STATS_CSV_HEADER).map_err(csv_err(&path))?;
                w.write_record(s.values()).map_err(csv_err(&path))?;
                w.flush().map_err(BenchError::io(&path))?;
            }
            if let Some(path) = model {
                let m = HmmModel::train(&tagged)?;
                m.write_to(create(&path)?, &header).map_err(BenchError::io(&path))?;
            }
        }
        Command::Prune {
            input,
            out,
            min_count,
            min_prob,
            renormalize,
        } => {
            if !(0.0..=1.0).contains(&min_prob) {
                return Err(BenchError::Config(format!("min-prob {min_prob} outside [0, 1]")));
            }
            let mut spec = PruneSpec::new(min_count, min_prob);
            spec.renormalize = renormalize;
            let grammar = read_grammar(&input)?;
            let (pruned, report) = prune(&grammar, spec);
            let header = vec![format!("prune={spec}")];
            pruned
                .write_tsv(create(&out)?, &header)
                .map_err(BenchError::io(&out))?;
            println!(
                "pa={}\npt={}\nnt={}",
                report.pattern_occurrences, report.pattern_types, report.nonterminal_types
            );
        }
        Command::Tag {
            model,
            input,
            corpus,
            out,
        } => {
            let file = fs::File::open(&model).map_err(BenchError::io(&model))?;
            let hmm = HmmModel::read_from(BufReader::new(file))?;
            let sentences: Vec<Vec<String>> = match input {
                Some(path) => fs::read_to_string(&path)
                    .map_err(BenchError::io(&path))?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| l.split_whitespace().map(str::to_string).collect())
                    .collect(),
                None => {
                    corpus.apply(&mut config)?;
                    tagged_sentences(&load_split(&config)?.test)
                        .into_iter()
                        .map(|s| s.into_iter().map(|(w, _)| w).collect())
                        .collect()
                }
            };
            let tags = tag_all(&hmm, &sentences, config.parallel_sentences);
            let mut w = std::io::BufWriter::new(create(&out)?);
            for t in &tags {
                writeln!(w, "{}", t.join(" ")).map_err(BenchError::io(&out))?;
            }
            w.flush().map_err(BenchError::io(&out))?;
        }
        Command::Parse {
            grammar,
            root,
            input,
            out,
            timeout_ms,
            parallel_sentences,
        } => {
            if let Some(r) = root {
                config.set("root", &r)?;
            }
            if let Some(t) = timeout_ms {
                config.timeout_ms = t;
            }
            let g = read_grammar(&grammar)?;
            let tags: Vec<Vec<String>> = fs::read_to_string(&input)
                .map_err(BenchError::io(&input))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect();
            let parser = Parser::new(&g).with_timeout(config.timeout());
            let started = Instant::now();
            let outcomes = parse_all(&parser, &tags, &config.root, parallel_sentences || config.parallel_sentences);
            let elapsed = started.elapsed().as_secs_f64();
            write_parses(std::io::BufWriter::new(create(&out)?), &[], &outcomes).map_err(BenchError::io(&out))?;
            let sidecar = elapsed_sidecar(&out);
            fs::write(&sidecar, format!("elapsed_s={elapsed}\n")).map_err(BenchError::io(&sidecar))?;
            eprintln!(
                "parsed {}/{} sentences in {elapsed:.3}s",
                outcomes.iter().filter(|o| o.tree().is_some()).count(),
                outcomes.len()
            );
        }
        Command::Eval {
            corpus,
            parses,
            elapsed_s,
            grammar,
            min_count,
            min_prob,
            out,
        } => {
            corpus.apply(&mut config)?;
            let elapsed = match elapsed_s {
                Some(t) => t,
                None => {
                    let sidecar = elapsed_sidecar(&parses);
                    let text = fs::read_to_string(&sidecar).map_err(BenchError::io(&sidecar))?;
                    read_key_values(&text)
                        .get("elapsed_s")
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| BenchError::Config(format!("{} has no elapsed_s", sidecar.display())))?
                }
            };
            let golds = load_split(&config)?.test;
            let text = fs::read_to_string(&parses).map_err(BenchError::io(&parses))?;
            let predictions = read_parses(&text);
            let report = evaluate_run(&golds, &predictions, elapsed.max(1e-9))?;
            print!("{}", report.to_key_values());
            if let Some(path) = out {
                let pattern_types = match grammar {
                    Some(g) => read_grammar(&g)?.pattern_types(),
                    None => 0,
                };
                let row = ConfigReport {
                    spec: PruneSpec::new(min_count, min_prob),
                    pattern_types,
                    report,
                };
                write_eval_csv(create(&path)?, &[row]).map_err(csv_err(&path))?;
            }
        }
        Command::Sweep { input, grid, out } => {
            if let Some(g) = grid {
                config.set("grid", &g)?;
            }
            let g = read_grammar(&input)?;
            let reports = sweep(&g, &config.specs());
            write_sweep_csv(create(&out)?, &reports).map_err(csv_err(&out))?;
        }
        Command::Pipeline {
            corpus,
            grid,
            renormalize,
            root,
            timeout_ms,
            out_dir,
            parallel_sentences,
        } => {
            corpus.apply(&mut config)?;
            if let Some(g) = grid {
                config.set("grid", &g)?;
            }
            if let Some(r) = root {
                config.set("root", &r)?;
            }
            if let Some(t) = timeout_ms {
                config.timeout_ms = t;
            }
            if let Some(d) = out_dir {
                config.set("out_dir", &d)?;
            }
            config.renormalize |= renormalize;
            config.parallel_sentences |= parallel_sentences;
            let output = run_pipeline(&config)?;
            println!("config_hash={}", output.config_hash);
            println!("out_dir={}", config.out_dir.display());
            for run in &output.runs {
                let r = &run.config_report.report;
                println!(
                    "{}: pattern_types={} precision_pct={:.2} recall_pct={:.2} elapsed_s={:.3} pt={} rt={}",
                    run.spec, run.prune.pattern_types, r.precision_pct, r.recall_pct, r.elapsed_seconds, r.pt, r.rt
                );
            }
        }
    }
    Ok(())
}
