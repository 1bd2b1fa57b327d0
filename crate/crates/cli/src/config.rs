//! Optional TOML defaults. Command-line flags win over the file, and the
//! file wins over built-in defaults.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use tokweigh::MinWeight;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskArg {
    Ner,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Iob1,
    Iob2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerArg {
    Bpe,
    Wordpiece,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Random,
    #[value(alias = "cos-sim")]
    #[serde(alias = "cos-sim")]
    Cossim,
    #[value(alias = "k-means")]
    #[serde(alias = "k-means")]
    Kmeans,
}

impl From<StrategyArg> for tokweigh::Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => tokweigh::Strategy::Random,
            StrategyArg::Cossim => tokweigh::Strategy::CosSim,
            StrategyArg::Kmeans => tokweigh::Strategy::KMeans,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorArg {
    Dictionary,
    NaiveBayes,
    External,
}

/// Keys mirror the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub task: Option<TaskArg>,
    pub scheme: Option<SchemeArg>,
    pub tokenizer: Option<TokenizerArg>,
    pub merges: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub boundary_marker: Option<String>,
    pub continuation_prefix: Option<String>,
    pub unk: Option<String>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub w_min: Option<String>,
    pub strategy: Option<StrategyArg>,
    pub kmeans_max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub predictor: Option<PredictorArg>,
    pub predictions: Option<PathBuf>,
    pub threads: Option<usize>,
    pub fraction: Option<f64>,
}

impl FileConfig {
    /// Relative paths in the file are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.input,
            &mut cfg.merges,
            &mut cfg.vocab,
            &mut cfg.predictions,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn w_min(&self) -> Result<Option<MinWeight>, CliError> {
        self.w_min
            .as_deref()
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Usage(format!("w-min in config file: {e}")))
            })
            .transpose()
    }
}
