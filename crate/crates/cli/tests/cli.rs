use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tokweigh"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy(name: &str) -> String {
    root().join("data/toy").join(name).display().to_string()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn bpe_weigh(extra: &[&str]) -> Output {
    let (input, merges, vocab) = (toy("corpus.conll"), toy("merges.txt"), toy("vocab.json"));
    let mut args = vec![
        "weigh", "--input", &input, "--merges", &merges, "--vocab", &vocab,
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn weigh_toy_matches_golden() {
    let out = bpe_weigh(&["--n", "50", "--seed", "3"]);
    assert_eq!(
        stdout(&out),
        fs::read_to_string(fixture("toy_weights.tsv")).unwrap()
    );
}

#[test]
fn weigh_defaults_stay_on_grid() {
    let out = bpe_weigh(&[]);
    let grid = [
        "0.333333", "0.400000", "0.500000", "0.600000", "0.700000", "0.800000", "0.900000",
        "1.000000",
    ];
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 24);
    for line in text.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 4);
        assert!(grid.contains(&cols[1]), "{line}");
    }
    let summary = stderr(&out);
    assert!(
        summary.contains("strategy=kmeans K=10 N=500 p=0.1 w_min=1/3"),
        "{summary}"
    );
    for w in grid {
        assert!(summary.contains(&format!("\n{w}\t")), "{summary}");
    }
}

#[test]
fn weigh_accepts_reference_settings() {
    bpe_weigh(&[
        "--strategy",
        "kmeans",
        "--k",
        "10",
        "--n",
        "500",
        "--p",
        "0.1",
        "--w-min",
        "0.3333",
    ]);
}

#[test]
fn weigh_is_thread_count_independent() {
    let one = bpe_weigh(&["--n", "40", "--strategy", "random", "--threads", "1"]);
    let four = bpe_weigh(&["--n", "40", "--strategy", "random", "--threads", "4"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn weigh_writes_inline_corpus() {
    let dir = TempDir::new().unwrap();
    let inline = dir.path().join("inline.conll");
    let sidecar = dir.path().join("w.tsv");
    bpe_weigh(&[
        "--n",
        "20",
        "--inline",
        inline.to_str().unwrap(),
        "--output",
        sidecar.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(inline).unwrap();
    assert!(
        text.starts_with("-DOCSTART- -X- -X- O\n\n# weight="),
        "{text}"
    );
    assert_eq!(text.matches("# weight=").count(), 24);
}

#[test]
fn missing_vocab_is_usage_error() {
    let input = toy("corpus.conll");
    let out = run(&["weigh", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--merges"));

    let out = run(&["weigh", "--input", &input, "--tokenizer", "wordpiece"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--vocab"));

    let out = run(&[
        "weigh",
        "--input",
        &input,
        "--merges",
        "/nonexistent/merges.txt",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--merges"));
}

#[test]
fn runtime_errors_exit_one_naming_stage() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.conll");
    fs::write(&bad, "abab I-PER\n").unwrap();
    let (merges, vocab) = (toy("merges.txt"), toy("vocab.json"));
    let out = run(&[
        "weigh",
        "--input",
        bad.to_str().unwrap(),
        "--merges",
        &merges,
        "--vocab",
        &vocab,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("reading corpus"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    let unknown = dir.path().join("unknown.conll");
    fs::write(&unknown, "zebra O\n").unwrap();
    let out = run(&[
        "weigh",
        "--input",
        unknown.to_str().unwrap(),
        "--merges",
        &merges,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("training predictor"));
}

#[test]
fn inject_is_deterministic_and_valid() {
    let dir = TempDir::new().unwrap();
    let input = toy("corpus.conll");
    let mut outputs = Vec::new();
    for run_idx in 0..2 {
        let corpus = dir.path().join(format!("c{run_idx}.conll"));
        let mask = dir.path().join(format!("m{run_idx}.txt"));
        ok(&[
            "inject",
            "--input",
            &input,
            "--fraction",
            "0.10",
            "--seed",
            "7",
            "--output",
            corpus.to_str().unwrap(),
            "--mask",
            mask.to_str().unwrap(),
        ]);
        outputs.push((
            fs::read(&corpus).unwrap(),
            fs::read_to_string(&mask).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(
        outputs[0].1,
        fs::read_to_string(fixture("toy_mask.txt")).unwrap()
    );
    let corpus = tokweigh::read_conll(&outputs[0].0[..], tokweigh::Scheme::Iob2).unwrap();
    assert_eq!(corpus.len(), 24);
}

#[test]
fn inject_fraction_bounds() {
    let input = toy("corpus.conll");
    for f in ["0", "1", "1.5"] {
        let out = run(&["inject", "--input", &input, "--fraction", f]);
        assert_eq!(out.status.code(), Some(2), "fraction {f}");
    }
}

#[test]
fn export_candidates_counts() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conll");
    fs::write(&corpus, "ababo B-PER\nthera B-LOC\n\na O\n\n").unwrap();
    let (merges, vocab) = (toy("merges.txt"), toy("vocab.json"));
    let args = [
        "export-candidates",
        "--input",
        corpus.to_str().unwrap(),
        "--merges",
        &merges,
        "--vocab",
        &vocab,
        "--k",
        "3",
        "--n",
        "20",
        "--p",
        "0.5",
        "--seed",
        "5",
    ];
    let first = stdout(&ok(&args));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.iter().filter(|l| l.starts_with("0\t")).count(), 3);
    assert_eq!(lines.iter().filter(|l| l.starts_with("1\t")).count(), 1);
    assert_eq!(stdout(&ok(&args)), first);
}

#[test]
fn external_predictions_round_trip() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.conll");
    fs::write(&corpus, "ababo B-PER\nonto I-PER\nto O\n\nthera B-LOC\n\n").unwrap();
    let (merges, vocab) = (toy("merges.txt"), toy("vocab.json"));
    let common = [
        "--input",
        corpus.to_str().unwrap(),
        "--merges",
        &merges,
        "--vocab",
        &vocab,
        "--k",
        "3",
        "--n",
        "20",
        "--p",
        "0.5",
        "--seed",
        "9",
    ];
    let mut args = vec!["export-candidates"];
    args.extend_from_slice(&common);
    let candidates = stdout(&ok(&args));

    let gold = ["B-PER I-PER O", "B-LOC"];
    let preds: String = candidates
        .lines()
        .map(|l| {
            let mut cols = l.split('\t');
            let (id, idx) = (cols.next().unwrap(), cols.next().unwrap());
            format!("{id}\t{idx}\t{}\n", gold[id.parse::<usize>().unwrap()])
        })
        .collect();
    let pred_path = dir.path().join("preds.tsv");
    fs::write(&pred_path, &preds).unwrap();

    let mut args = vec![
        "weigh",
        "--predictor",
        "external",
        "--predictions",
        pred_path.to_str().unwrap(),
    ];
    args.extend_from_slice(&common);
    let weights = stdout(&ok(&args));
    for line in weights.lines() {
        assert_eq!(line.split('\t').nth(1), Some("1.000000"), "{line}");
    }

    let partial: String = preds.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&pred_path, partial).unwrap();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("weighing") && err.contains("sample 0"),
        "{err}"
    );
}

#[test]
fn report_table_fixture() {
    let (w, m) = (fixture("published_weights.tsv"), fixture("published_mask.txt"));
    let out = ok(&[
        "report",
        "--weights",
        w.to_str().unwrap(),
        "--mask",
        m.to_str().unwrap(),
    ]);
    assert_eq!(
        stdout(&out),
        "samples=500\nclean=250\ncorrupted=250\nw_cor=0.9284\nw_incor=0.0048\nratio=193.4167\n"
    );
}

#[test]
fn report_empty_mask_and_mismatch() {
    let dir = TempDir::new().unwrap();
    let mask = dir.path().join("mask.txt");
    fs::write(&mask, "# changed_labels=0 total=10\n").unwrap();
    let w = fixture("toy_weights.tsv");
    let out = ok(&[
        "report",
        "--weights",
        w.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("w_incor=nan\n"));

    fs::write(&mask, "999\n").unwrap();
    let out = run(&[
        "report",
        "--weights",
        w.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synthetic_pipeline_separates() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let p = |name: &str| d.join(name).display().to_string();
    ok(&[
        "synth",
        "--sentences",
        "300",
        "--vocab-words",
        "80",
        "--seed",
        "2",
        "--out-dir",
        &p(""),
    ]);
    ok(&[
        "inject",
        "--input",
        &p("corpus.conll"),
        "--seed",
        "2",
        "--output",
        &p("noisy.conll"),
        "--mask",
        &p("mask.txt"),
    ]);
    ok(&[
        "weigh",
        "--input",
        &p("noisy.conll"),
        "--merges",
        &p("merges.txt"),
        "--vocab",
        &p("vocab.json"),
        "--n",
        "50",
        "--output",
        &p("w.tsv"),
    ]);
    let out = ok(&["report", "--weights", &p("w.tsv"), "--mask", &p("mask.txt")]);
    let text = stdout(&out);
    let ratio = text.lines().find_map(|l| l.strip_prefix("ratio=")).unwrap();
    let ratio: f64 = ratio.parse().unwrap();
    assert!(ratio > 1.0, "{text}");
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "merges = {:?}\nvocab = {:?}\nk = 3\nn = 20\nstrategy = \"random\"\n",
            toy("merges.txt"),
            toy("vocab.json")
        ),
    )
    .unwrap();
    let input = toy("corpus.conll");
    let out = ok(&[
        "weigh",
        "--config",
        cfg.to_str().unwrap(),
        "--input",
        &input,
    ]);
    assert!(
        stderr(&out).contains("strategy=random K=3 N=20"),
        "{}",
        stderr(&out)
    );
    let out = ok(&[
        "weigh",
        "--config",
        cfg.to_str().unwrap(),
        "--input",
        &input,
        "--k",
        "2",
    ]);
    assert!(
        stderr(&out).contains("strategy=random K=2 N=20"),
        "{}",
        stderr(&out)
    );

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = run(&[
        "weigh",
        "--config",
        cfg.to_str().unwrap(),
        "--input",
        &input,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let out = ok(&["weigh", "--help"]);
    let help = stdout(&out);
    for needle in [
        "--k <K>",
        "[default: 10]",
        "[default: 500]",
        "[default: 0.1]",
        "[default: 1/3]",
        "[default: kmeans]",
        "[default: 100]",
        "--seed",
        "--predictor",
        "--threads",
    ] {
        assert!(help.contains(needle), "missing {needle}:\n{help}");
    }
    let help = stdout(&ok(&["inject", "--help"]));
    assert!(help.contains("[default: 0.10]"));
}

#[test]
fn tokenize_shows_candidates() {
    let merges = toy("merges.txt");
    let out = ok(&[
        "tokenize", "--merges", &merges, "--p", "0.5", "--n", "4", "abab", "other",
    ]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("deterministic\tabab | o ther"));
    assert!(lines.count() >= 2);

    let vocab = toy("wordpiece.txt");
    let out = ok(&[
        "tokenize",
        "--tokenizer",
        "wordpiece",
        "--vocab",
        &vocab,
        "--p",
        "0",
        "acting",
    ]);
    assert_eq!(stdout(&out), "deterministic\tacting\n0\tacting\n");
}

#[test]
fn classification_with_naive_bayes() {
    let (input, vocab) = (toy("reviews.tsv"), toy("wordpiece.txt"));
    let out = ok(&[
        "weigh",
        "--task",
        "classification",
        "--input",
        &input,
        "--tokenizer",
        "wordpiece",
        "--vocab",
        &vocab,
        "--n",
        "20",
        "--k",
        "5",
    ]);
    assert_eq!(stdout(&out).lines().count(), 12);
    let out = run(&[
        "weigh",
        "--task",
        "classification",
        "--input",
        &input,
        "--tokenizer",
        "wordpiece",
        "--vocab",
        &vocab,
        "--predictor",
        "dictionary",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
