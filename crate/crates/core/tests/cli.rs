use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use treegram::bench::OUT_DIR_ENV;
use treegram::eval::EVAL_CSV_HEADER;
use treegram::prune::SWEEP_CSV_HEADER;
use treegram::synth::synthetic_treebank;

const GRID: &str = "50:0,60:0,0:0.05,10:0.02";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_treegram"));
    c.env_remove(OUT_DIR_ENV);
    c
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn corpus(dir: &Path) -> PathBuf {
    let path = dir.join("wsj_synth.mrg");
    fs::write(&path, synthetic_treebank(3, 300)).unwrap();
    path
}

fn pipeline(corpus: &Path, out: &Path, grid: &str) -> Output {
    run(bin().args(["pipeline", "--corpus"]).arg(corpus).args([
        "--test",
        "0..400",
        "--self-test",
        "--grid",
        grid,
        "--out-dir",
    ]).arg(out))
}

/// Data lines only, without `#` header comments.
fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn csv_rows(path: &Path, header: &[&str]) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let got: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(got, header);
    reader.records().map(Result::unwrap).collect()
}

#[test]
fn pipeline_writes_one_eval_row_per_grid_point() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path());
    let out = dir.path().join("run");
    assert!(pipeline(&c, &out, GRID).status.success());

    let rows = csv_rows(&out.join("eval.csv"), &EVAL_CSV_HEADER);
    assert_eq!(rows.len(), 4);
    let firsts: Vec<(&str, &str)> = rows.iter().map(|r| (&r[0], &r[1])).collect();
    assert_eq!(firsts, [("50", "0"), ("60", "0"), ("0", "0.05"), ("10", "0.02")]);
    for r in &rows {
        let p: f64 = r[3].parse().unwrap();
        let t: f64 = r[5].parse().unwrap();
        let pt: f64 = r[6].parse().unwrap();
        assert!(t > 0.0 && (0.0..=100.0).contains(&p));
        assert_eq!(pt, p / t);
    }
    let sweep = csv_rows(&out.join("sweep.csv"), &SWEEP_CSV_HEADER);
    assert_eq!(sweep.len(), 4);

    for name in ["grammar.tsv", "model.hmm", "grammar_n10_p0.02.tsv", "parses_n10_p0.02.txt", "run.log", "ranking.txt"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let hash_line = fs::read_to_string(out.join("grammar.tsv")).unwrap().lines().next().unwrap().to_string();
    assert!(hash_line.starts_with("# config_hash="));
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert!(log.contains(&hash_line[2..]) && log.contains("timestamp="));
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(pipeline(&c, &a, GRID).status.success());
    assert!(pipeline(&c, &b, GRID).status.success());
    let mut compared = 0;
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_str().unwrap();
        if matches!(name, "eval.csv" | "ranking.txt" | "run.log") {
            continue;
        }
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
        compared += 1;
    }
    assert!(compared >= 12);
}

#[test]
fn file_steps_compose_to_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let c = corpus(d);
    let out = d.join("run");
    assert!(pipeline(&c, &out, "10:0.02").status.success());

    let ok = |cmd: &mut Command| assert!(run(cmd).status.success());
    ok(bin().args(["learn", "--corpus"]).arg(&c).arg("--out").arg(d.join("g.tsv")).arg("--model").arg(d.join("m.hmm")));
    ok(bin()
        .args(["prune", "--min-count", "10", "--min-prob", "0.02", "--in"])
        .arg(d.join("g.tsv"))
        .arg("--out")
        .arg(d.join("p.tsv")));
    ok(bin()
        .args(["tag", "--test", "0..400", "--self-test", "--corpus"])
        .arg(&c)
        .arg("--model")
        .arg(d.join("m.hmm"))
        .arg("--out")
        .arg(d.join("tags.txt")));
    ok(bin()
        .args(["parse", "--root", "S", "--grammar"])
        .arg(d.join("p.tsv"))
        .arg("--in")
        .arg(d.join("tags.txt"))
        .arg("--out")
        .arg(d.join("parses.txt")));
    let eval = run(bin()
        .args(["eval", "--test", "0..400", "--self-test", "--corpus"])
        .arg(&c)
        .arg("--parses")
        .arg(d.join("parses.txt")));
    assert!(eval.status.success());

    assert_eq!(body(&d.join("g.tsv")), body(&out.join("grammar.tsv")));
    assert_eq!(body(&d.join("p.tsv")), body(&out.join("grammar_n10_p0.02.tsv")));
    assert_eq!(body(&d.join("parses.txt")), body(&out.join("parses_n10_p0.02.txt")));

    let kv = treegram::bench::read_key_values(&String::from_utf8(eval.stdout).unwrap());
    let row = &csv_rows(&out.join("eval.csv"), &EVAL_CSV_HEADER)[0];
    assert_eq!(kv["precision_pct"], &row[3]);
    assert_eq!(kv["recall_pct"], &row[4]);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path());
    let code = |cmd: &mut Command| cmd.output().unwrap().status.code();

    let empty_range = bin()
        .args(["pipeline", "--test", "5..5", "--self-test", "--corpus"])
        .arg(&c)
        .arg("--out-dir")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(empty_range.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&empty_range.stderr).contains("5..5"));
    // nothing was produced before the error
    assert!(!dir.path().join("x").exists());

    let overlap = bin().args(["pipeline", "--test", "0..100", "--corpus"]).arg(&c).arg("--out-dir").arg(dir.path().join("y")).output().unwrap();
    assert_eq!(overlap.status.code(), Some(1));

    let missing = bin()
        .args(["pipeline", "--test", "0..10", "--self-test", "--corpus", "/no/such/treebank"])
        .arg("--out-dir")
        .arg(dir.path().join("z"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/treebank"));

    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "corpus = x\nbogus_key = 1\n").unwrap();
    assert_eq!(code(bin().arg("pipeline").arg("--config").arg(&cfg)), Some(1));
    assert_eq!(code(bin().args(["pipeline", "--no-such-flag"])), Some(1));
    assert_eq!(code(bin().args(["prune", "--in", "/no/such/grammar.tsv", "--out", "/tmp/never.tsv"])), Some(2));
}

#[test]
fn config_file_and_environment_override() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path());
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# self-test run on synthetic data\ncorpus = {}\ntest = 0..200\nself_test = true\ngrid = 50:0, 10:0.02\nout_dir = {}\n",
            c.display(),
            dir.path().join("from_config").display()
        ),
    )
    .unwrap();
    let env_dir = dir.path().join("from_env");
    let out = run(bin().arg("pipeline").arg("--config").arg(&cfg).env(OUT_DIR_ENV, &env_dir));
    assert!(out.status.success());
    assert!(env_dir.join("eval.csv").exists());
    assert!(!dir.path().join("from_config").exists());
    assert_eq!(csv_rows(&env_dir.join("eval.csv"), &EVAL_CSV_HEADER).len(), 2);

    // command-line flags win over both
    let flag_dir = dir.path().join("from_flag");
    let out = run(bin()
        .arg("pipeline")
        .arg("--config")
        .arg(&cfg)
        .args(["--grid", "1:0"])
        .arg("--out-dir")
        .arg(&flag_dir)
        .env(OUT_DIR_ENV, &env_dir));
    assert!(out.status.success());
    assert_eq!(csv_rows(&flag_dir.join("eval.csv"), &EVAL_CSV_HEADER).len(), 1);
}

#[test]
fn sweep_command_reports_every_grid_point() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let c = corpus(d);
    assert!(run(bin().args(["learn", "--corpus"]).arg(&c).arg("--out").arg(d.join("g.tsv")).arg("--stats").arg(d.join("stats.csv"))).status.success());
    assert!(run(bin()
        .args(["sweep", "--grid", "1:0,5:0,8:0,10:0,12:0,50:0"])
        .arg("--in")
        .arg(d.join("g.tsv"))
        .arg("--out")
        .arg(d.join("sweep.csv")))
    .status
    .success());
    let rows = csv_rows(&d.join("sweep.csv"), &SWEEP_CSV_HEADER);
    assert_eq!(rows.len(), 6);
    let pts: Vec<u64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(pts.windows(2).all(|w| w[1] <= w[0]));
    let stats = csv_rows(&d.join("stats.csv"), &treegram::grammar::STATS_CSV_HEADER);
    assert_eq!(stats[0][2].parse::<u64>().unwrap(), pts[0]);
}
