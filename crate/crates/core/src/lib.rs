//! Per-sample annotation-error weights from tokenization diversity.
//!
//! A scouting predictor labels K diverse subword segmentations of each
//! training sample. Samples whose gold labels survive re-tokenization keep
//! a high weight; samples whose labels the predictor only reproduces by
//! accident are pushed towards the floor `w_min`.
//!
//! ```
//! use tokweigh::{weigh_sample, MinWeight};
//!
//! let agreements = [true, true, false, false, false, false, false, false, false, false];
//! let w = weigh_sample(&agreements, MinWeight::default()).unwrap();
//! assert_eq!(w.weight, tokweigh::Fraction::new(1, 3));
//! assert_eq!(w.raw_ratio(), tokweigh::Fraction::new(1, 5));
//! ```

pub mod corpus;
pub mod error;
pub mod noise;
pub mod scorer;
pub mod seed;
pub mod selector;
pub mod synth;
pub mod tags;
pub mod tokenizer;
pub mod weights;

pub use corpus::{
    format_weight, read_classification_tsv, read_conll, read_sidecar, write_classification_tsv,
    write_conll, write_weighted, Corpus, Labels, Sample, Scheme, Task, WeightFormat,
};
pub use error::{Error, Result};
pub use noise::{inject, read_mask, write_mask, InjectionConfig, InjectionResult};
pub use scorer::{
    agreement, selected_candidates, weigh_corpus, weigh_sample, weight_histogram, weight_report,
    weighted_loss, write_candidates, DictionaryPredictor, ExternalPredictions, NaiveBayes,
    Predictor, StageTimings, WeighConfig, WeighOutcome, WeightReport,
};
pub use selector::{
    build_tfidf, cosine, select, select_cossim, select_kmeans, select_random, SelectionConfig,
    Strategy, TfIdfSpace, TfIdfVector,
};
pub use tags::{iob1_to_iob2, iob2_spans, repair_iob2, validate_iob2, Span, Tag, Violation};
pub use tokenizer::{
    sample_candidates, tokenize_deterministic, tokenize_sample, BpeVocab, Candidate, DropoutScheme,
    RegularizationConfig, TokenId, Vocab, WordPieceVocab,
};
pub use weights::{parse_fraction, Fraction, MinWeight, SampleWeight, WeightTable};
