mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{PredictorArg, SchemeArg, StrategyArg, TaskArg, TokenizerArg};

/// Weigh training samples by how consistently a scouting model reproduces
/// their labels across diverse subword tokenizations.
#[derive(Debug, Parser)]
#[command(name = "tokweigh", version, propagate_version = true)]
pub struct Cli {
    /// TOML file supplying flag values; explicit flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a weight for every sample of a corpus
    Weigh(WeighArgs),
    /// Replace a fraction of NER labels with pseudo-errors
    Inject(InjectArgs),
    /// Write the selected candidates of every sample for an external model
    ExportCandidates(ExportArgs),
    /// Compare mean agreement of clean and corrupted samples
    Report(ReportArgs),
    /// Print sampled tokenizations of one sentence
    Tokenize(TokenizeArgs),
    /// Generate a seeded synthetic NER corpus with a BPE vocabulary
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Training corpus (CoNLL for ner, text<TAB>label for classification)
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,

    /// Task type [default: ner]
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,

    /// Tagging scheme of a CoNLL input, converted to IOB2 on read [default: iob2]
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Clone, Args)]
pub struct TokenizerArgs {
    /// Subword model: BPE with BPE-Dropout, or WordPiece with MaxMatch-Dropout [default: bpe]
    #[arg(long, value_enum)]
    pub tokenizer: Option<TokenizerArg>,

    /// BPE merges file, one `left right` pair per line in rank order
    #[arg(long, value_name = "FILE")]
    pub merges: Option<PathBuf>,

    /// Token inventory: JSON token->id map for bpe (optional), one token per line for wordpiece (required)
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,

    /// BPE word-start symbol prepended to every word before merging [default: none]
    #[arg(long, value_name = "SYMBOL")]
    pub boundary_marker: Option<String>,

    /// WordPiece prefix of word-internal pieces [default: ##]
    #[arg(long, value_name = "PREFIX")]
    pub continuation_prefix: Option<String>,

    /// WordPiece unknown token [default: [UNK]]
    #[arg(long, value_name = "TOKEN")]
    pub unk: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Candidates scored per sample (K) [default: 10]
    #[arg(long)]
    pub k: Option<usize>,

    /// Distinct tokenizations sampled per sample before selection (N) [default: 500]
    #[arg(long)]
    pub n: Option<usize>,

    /// Dropout probability of the stochastic tokenizer [default: 0.1]
    #[arg(long)]
    pub p: Option<f64>,

    /// How K candidates are chosen from the N sampled [default: kmeans]
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,

    /// Iteration cap for k-means selection [default: 100]
    #[arg(long)]
    pub kmeans_max_iters: Option<usize>,

    /// Seed for every random stage [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct WeighArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,

    /// Weight floor, as a fraction (1/3) or decimal [default: 1/3]
    #[arg(long, value_name = "W")]
    pub w_min: Option<String>,

    /// Scouting model [default: dictionary for ner, naive-bayes for classification]
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,

    /// Predictions TSV (sample_id, candidate_index, prediction) for --predictor external
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,

    /// Sidecar weight file (id, weight, C, k) [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Also write the corpus with a `# weight=` line before each sample
    #[arg(long, value_name = "FILE")]
    pub inline: Option<PathBuf>,

    /// Worker threads; 0 uses every core. Output does not depend on it [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct InjectArgs {
    /// NER corpus in CoNLL format
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,

    /// Tagging scheme of the input [default: iob2]
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,

    /// Share of labels to change, strictly between 0 and 1 [default: 0.10]
    #[arg(long)]
    pub fraction: Option<f64>,

    /// Seed of the injection [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Corrupted corpus [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Ids of samples with at least one changed label
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,

    /// Candidate TSV (sample_id, candidate_index, subwords) [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Sidecar weight file written by `weigh`
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,

    /// Mask file written by `inject`
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TokenizeArgs {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,

    /// Candidates to sample [default: 10]
    #[arg(long)]
    pub n: Option<usize>,

    /// Dropout probability [default: 0.1]
    #[arg(long)]
    pub p: Option<f64>,

    /// Keep only K candidates chosen by --strategy [default: keep all]
    #[arg(long)]
    pub k: Option<usize>,

    /// Selection strategy used with --k [default: kmeans]
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,

    /// Seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Words of the sentence
    #[arg(required = true, value_name = "WORD")]
    pub words: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of sentences [default: 1000]
    #[arg(long)]
    pub sentences: Option<usize>,

    /// Number of distinct words [default: 200]
    #[arg(long)]
    pub vocab_words: Option<usize>,

    /// Seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory receiving corpus.conll, merges.txt and vocab.json
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tokweigh: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
