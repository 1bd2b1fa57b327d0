use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use tokweigh::scorer::StageTimings;
use tokweigh::synth::{self, SynthConfig};
use tokweigh::tokenizer::wordpiece::{DEFAULT_CONTINUATION_PREFIX, DEFAULT_UNK};
use tokweigh::{
    Corpus, DictionaryPredictor, ExternalPredictions, Fraction, InjectionConfig, MinWeight,
    NaiveBayes, Predictor, RegularizationConfig, Scheme, SelectionConfig, Task, Vocab, WeighConfig,
    WeightFormat, WeightTable,
};

use crate::config::{FileConfig, PredictorArg, SchemeArg, TaskArg, TokenizerArg};
use crate::error::{CliError, StageExt};
use crate::{
    Cli, Command, CorpusArgs, ExportArgs, InjectArgs, ReportArgs, SamplingArgs, SynthArgs,
    TokenizeArgs, TokenizerArgs, WeighArgs,
};

const DEFAULT_SEED: u64 = 0;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Weigh(a) => weigh(&a, &file),
        Command::Inject(a) => inject(&a, &file),
        Command::ExportCandidates(a) => export_candidates(&a, &file),
        Command::Report(a) => report(&a),
        Command::Tokenize(a) => tokenize(&a, &file),
        Command::Synth(a) => synth(&a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn existing(path: Option<PathBuf>, flag: &str) -> Result<Option<PathBuf>, CliError> {
    match path {
        Some(p) if !p.is_file() => Err(usage(format!("{flag}: no such file {}", p.display()))),
        other => Ok(other),
    }
}

fn required(path: Option<PathBuf>, flag: &str, why: &str) -> Result<PathBuf, CliError> {
    existing(path, flag)?.ok_or_else(|| usage(format!("{flag} is required {why}")))
}

fn task(corpus: &CorpusArgs, file: &FileConfig) -> Task {
    match corpus.task.or(file.task).unwrap_or(TaskArg::Ner) {
        TaskArg::Ner => Task::Ner,
        TaskArg::Classification => Task::Classification,
    }
}

fn scheme(flag: Option<SchemeArg>, file: &FileConfig) -> Scheme {
    match flag.or(file.scheme).unwrap_or(SchemeArg::Iob2) {
        SchemeArg::Iob1 => Scheme::Iob1,
        SchemeArg::Iob2 => Scheme::Iob2,
    }
}

struct VocabSource {
    kind: TokenizerArg,
    merges: Option<PathBuf>,
    vocab: Option<PathBuf>,
    marker: Option<String>,
    prefix: String,
    unk: String,
}

fn vocab_source(args: &TokenizerArgs, file: &FileConfig) -> Result<VocabSource, CliError> {
    let kind = args
        .tokenizer
        .or(file.tokenizer)
        .unwrap_or(TokenizerArg::Bpe);
    let merges = args.merges.clone().or(file.merges.clone());
    let vocab = args.vocab.clone().or(file.vocab.clone());
    let (merges, vocab) = match kind {
        TokenizerArg::Bpe => (
            Some(required(merges, "--merges", "for --tokenizer bpe")?),
            existing(vocab, "--vocab")?,
        ),
        TokenizerArg::Wordpiece => (
            None,
            Some(required(vocab, "--vocab", "for --tokenizer wordpiece")?),
        ),
    };
    Ok(VocabSource {
        kind,
        merges,
        vocab,
        marker: args
            .boundary_marker
            .clone()
            .or(file.boundary_marker.clone()),
        prefix: args
            .continuation_prefix
            .clone()
            .or(file.continuation_prefix.clone())
            .unwrap_or_else(|| DEFAULT_CONTINUATION_PREFIX.into()),
        unk: args
            .unk
            .clone()
            .or(file.unk.clone())
            .unwrap_or_else(|| DEFAULT_UNK.into()),
    })
}

fn read_text(path: &Path, stage: &'static str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Stage {
        stage,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_vocab(source: &VocabSource) -> Result<Vocab, CliError> {
    const STAGE: &str = "loading vocabulary";
    match source.kind {
        TokenizerArg::Bpe => {
            let merges = read_text(source.merges.as_ref().expect("checked"), STAGE)?;
            let inventory = source
                .vocab
                .as_ref()
                .map(|p| read_text(p, STAGE))
                .transpose()?;
            tokweigh::BpeVocab::from_files(&merges, inventory.as_deref(), source.marker.as_deref())
                .map(Vocab::Bpe)
                .stage(STAGE)
        }
        TokenizerArg::Wordpiece => {
            let text = read_text(source.vocab.as_ref().expect("checked"), STAGE)?;
            tokweigh::WordPieceVocab::from_text(&text, &source.prefix, &source.unk)
                .map(Vocab::WordPiece)
                .stage(STAGE)
        }
    }
}

fn read_corpus(path: &Path, task: Task, scheme: Scheme) -> Result<Corpus, CliError> {
    const STAGE: &str = "reading corpus";
    let f = File::open(path).map_err(|e| CliError::Stage {
        stage: STAGE,
        message: format!("{}: {e}", path.display()),
    })?;
    let reader = io::BufReader::new(f);
    match task {
        Task::Ner => tokweigh::read_conll(reader, scheme),
        Task::Classification => tokweigh::read_classification_tsv(reader),
    }
    .map_err(|e| CliError::Stage {
        stage: STAGE,
        message: format!("{}: {e}", path.display()),
    })
}

fn weigh_config(
    s: &SamplingArgs,
    file: &FileConfig,
    w_min: MinWeight,
) -> Result<WeighConfig, CliError> {
    let cfg = WeighConfig {
        k: s.k.or(file.k).unwrap_or(10),
        n: s.n.or(file.n).unwrap_or(500),
        p: s.p.or(file.p).unwrap_or(0.1),
        w_min,
        seed: s.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        strategy: s
            .strategy
            .or(file.strategy)
            .map_or(tokweigh::Strategy::KMeans, Into::into),
        kmeans_max_iters: s.kmeans_max_iters.or(file.kmeans_max_iters).unwrap_or(100),
        parallel: false,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Output file, or stdout when `path` is `None`.
fn sink(path: Option<&Path>, stage: &'static str) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Stage {
                stage,
                message: format!("{}: {e}", p.display()),
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn weigh(args: &WeighArgs, file: &FileConfig) -> Result<(), CliError> {
    let w_min = match &args.w_min {
        Some(s) => s.parse().map_err(|e| usage(format!("--w-min: {e}")))?,
        None => file.w_min()?.unwrap_or_default(),
    };
    let cfg = weigh_config(&args.sampling, file, w_min)?;
    let task = task(&args.corpus, file);
    let input = required(
        args.corpus.input.clone().or(file.input.clone()),
        "--input",
        "for weigh",
    )?;
    let source = vocab_source(&args.tokenizer, file)?;
    let predictor_kind = args.predictor.or(file.predictor).unwrap_or(match task {
        Task::Ner => PredictorArg::Dictionary,
        Task::Classification => PredictorArg::NaiveBayes,
    });
    match (predictor_kind, task) {
        (PredictorArg::Dictionary, Task::Classification) => {
            return Err(usage("--predictor dictionary needs --task ner"))
        }
        (PredictorArg::NaiveBayes, Task::Ner) => {
            return Err(usage("--predictor naive-bayes needs --task classification"))
        }
        _ => {}
    }
    let predictions = match predictor_kind {
        PredictorArg::External => Some(required(
            args.predictions.clone().or(file.predictions.clone()),
            "--predictions",
            "for --predictor external",
        )?),
        _ => None,
    };
    let threads = args.threads.or(file.threads).unwrap_or(1);

    let vocab = load_vocab(&source)?;
    let corpus = read_corpus(&input, task, scheme(args.corpus.scheme, file))?;
    let predictor: Box<dyn Predictor> = match predictor_kind {
        PredictorArg::Dictionary => {
            Box::new(DictionaryPredictor::train(&corpus, &vocab).stage("training predictor")?)
        }
        PredictorArg::NaiveBayes => {
            Box::new(NaiveBayes::train(&corpus, &vocab).stage("training predictor")?)
        }
        PredictorArg::External => {
            let path = predictions.expect("checked");
            let f = File::open(&path).stage("loading predictions")?;
            Box::new(ExternalPredictions::read(f, task).stage("loading predictions")?)
        }
    };

    let pool = thread_pool(threads)?;
    let cfg = WeighConfig {
        parallel: threads != 1,
        ..cfg
    };
    let outcome = pool
        .install(|| tokweigh::weigh_corpus(&corpus, &vocab, predictor.as_ref(), &cfg))
        .stage("weighing")?;

    const WRITE: &str = "writing weights";
    let mut out = sink(args.output.as_deref(), WRITE)?;
    tokweigh::write_weighted(&corpus, &outcome.table, &mut out, WeightFormat::Sidecar)
        .stage(WRITE)?;
    out.flush().stage(WRITE)?;
    drop(out);
    if let Some(path) = &args.inline {
        let mut out = sink(Some(path), WRITE)?;
        tokweigh::write_weighted(&corpus, &outcome.table, &mut out, WeightFormat::Inline)
            .stage(WRITE)?;
        out.flush().stage(WRITE)?;
    }

    let summary = summarize(&outcome.table, &cfg, &outcome.timings, threads);
    if args.output.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("--threads: {e}")))
}

/// Histogram over `max(w_min, c/K)` for `c = 0..=K`, plus any other weight
/// produced by samples with fewer than K candidates.
fn summarize(table: &WeightTable, cfg: &WeighConfig, t: &StageTimings, threads: usize) -> String {
    let mut hist = tokweigh::weight_histogram(table);
    for c in 0..=cfg.k as u64 {
        hist.entry(Fraction::new(c, cfg.k as u64).max(cfg.w_min.value()))
            .or_insert(0);
    }
    let mut s = format!(
        "weighed {} samples (strategy={} K={} N={} p={} w_min={} seed={})\n",
        table.len(),
        cfg.strategy,
        cfg.k,
        cfg.n,
        cfg.p,
        cfg.w_min,
        cfg.seed
    );
    s.push_str("weight\tcount\n");
    for (w, n) in hist {
        s.push_str(&format!("{}\t{n}\n", tokweigh::format_weight(w)));
    }
    s.push_str(&format!(
        "timing: sampling={:.3}s selection={:.3}s prediction={:.3}s wall={:.3}s threads={threads}\n",
        t.sampling.as_secs_f64(),
        t.selection.as_secs_f64(),
        t.prediction.as_secs_f64(),
        t.wall.as_secs_f64()
    ));
    s
}

fn inject(args: &InjectArgs, file: &FileConfig) -> Result<(), CliError> {
    let fraction = args.fraction.or(file.fraction).unwrap_or(0.10);
    let cfg = InjectionConfig::new(fraction, args.seed.or(file.seed).unwrap_or(DEFAULT_SEED))
        .map_err(|e| usage(format!("--fraction: {e}")))?;
    let input = required(
        args.input.clone().or(file.input.clone()),
        "--input",
        "for inject",
    )?;
    let corpus = read_corpus(&input, Task::Ner, scheme(args.scheme, file))?;
    let result = tokweigh::inject(&corpus, &cfg).stage("injecting labels")?;

    let mut out = sink(args.output.as_deref(), "writing corpus")?;
    tokweigh::write_conll(&result.corpus, &mut out).stage("writing corpus")?;
    out.flush().stage("writing corpus")?;
    if let Some(path) = &args.mask {
        let mut out = sink(Some(path), "writing mask")?;
        tokweigh::write_mask(&result, &mut out).stage("writing mask")?;
        out.flush().stage("writing mask")?;
    }
    eprintln!(
        "changed {} of {} labels (target {}) in {} samples",
        result.changed_labels(),
        result.total_labels,
        result.target,
        result.touched_samples.len()
    );
    if !result.budget_reached {
        eprintln!("warning: ran out of positions before reaching the target");
    }
    Ok(())
}

fn export_candidates(args: &ExportArgs, file: &FileConfig) -> Result<(), CliError> {
    let cfg = weigh_config(&args.sampling, file, MinWeight::default())?;
    let task = task(&args.corpus, file);
    let input = required(
        args.corpus.input.clone().or(file.input.clone()),
        "--input",
        "for export-candidates",
    )?;
    let source = vocab_source(&args.tokenizer, file)?;
    let vocab = load_vocab(&source)?;
    let corpus = read_corpus(&input, task, scheme(args.corpus.scheme, file))?;

    let mut out = sink(args.output.as_deref(), "writing candidates")?;
    for sample in corpus.samples() {
        let picked =
            tokweigh::selected_candidates(sample, &vocab, &cfg).stage("selecting candidates")?;
        tokweigh::write_candidates(&picked, &mut out).stage("writing candidates")?;
    }
    out.flush().stage("writing candidates")?;
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), CliError> {
    let weights = required(args.weights.clone(), "--weights", "for report")?;
    let mask = required(args.mask.clone(), "--mask", "for report")?;
    let table = tokweigh::read_sidecar(File::open(&weights).stage("reading weights")?)
        .stage("reading weights")?;
    let ids =
        tokweigh::read_mask(File::open(&mask).stage("reading mask")?).stage("reading mask")?;
    let report = tokweigh::weight_report(&table, &ids).stage("report")?;
    print!("{report}");
    Ok(())
}

fn tokenize(args: &TokenizeArgs, file: &FileConfig) -> Result<(), CliError> {
    let source = vocab_source(&args.tokenizer, file)?;
    let n = args.n.unwrap_or(10);
    let p = args.p.or(file.p).unwrap_or(0.1);
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let vocab = load_vocab(&source)?;
    let reg = RegularizationConfig::new(p, seed, vocab.scheme())
        .map_err(|e| usage(format!("--p: {e}")))?;

    const STAGE: &str = "tokenizing";
    let anchor = tokweigh::tokenize_deterministic(&args.words, &vocab).stage(STAGE)?;
    let mut pool = tokweigh::sample_candidates(&args.words, &vocab, &reg, n, 0).stage(STAGE)?;
    if let Some(k) = args.k {
        let strategy = args
            .strategy
            .or(file.strategy)
            .map_or(tokweigh::Strategy::KMeans, Into::into);
        let sel =
            SelectionConfig::new(strategy, k, seed).map_err(|e| usage(format!("--k: {e}")))?;
        pool = tokweigh::select(&pool, &anchor, &sel).stage("selecting candidates")?;
    }
    let mut out = io::stdout().lock();
    let mut line = |label: String, c: &tokweigh::Candidate| {
        let words: Vec<String> = (0..c.word_count())
            .map(|i| c.word_pieces(i).join(" "))
            .collect();
        writeln!(out, "{label}\t{}", words.join(" | "))
    };
    line("deterministic".into(), &anchor).stage("writing")?;
    for c in &pool {
        line(c.candidate_index.to_string(), c).stage("writing")?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        sentences: args.sentences.unwrap_or(defaults.sentences),
        vocab_words: args.vocab_words.unwrap_or(defaults.vocab_words),
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        ..defaults
    };
    if cfg.vocab_words < synth::ENTITY_TYPES.len() * 2 {
        return Err(usage(format!(
            "--vocab-words must be at least {}",
            synth::ENTITY_TYPES.len() * 2
        )));
    }
    let data = synth::generate(&cfg).stage("generating corpus")?;
    const STAGE: &str = "writing synthetic data";
    fs::create_dir_all(&args.out_dir).stage(STAGE)?;
    let mut out = sink(Some(&args.out_dir.join("corpus.conll")), STAGE)?;
    tokweigh::write_conll(&data.corpus, &mut out).stage(STAGE)?;
    out.flush().stage(STAGE)?;
    fs::write(args.out_dir.join("merges.txt"), data.vocab.merges_text()).stage(STAGE)?;
    fs::write(
        args.out_dir.join("vocab.json"),
        data.vocab.tokens_json() + "\n",
    )
    .stage(STAGE)?;
    eprintln!(
        "wrote {} sentences over {} words to {}",
        data.corpus.len(),
        data.lexicon.words.len(),
        args.out_dir.display()
    );
    Ok(())
}
