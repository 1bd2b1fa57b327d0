//! Shared inputs for the benchmarks.

use tokweigh::synth::{self, SynthConfig, SynthData};
use tokweigh::{sample_candidates, tokenize_deterministic, Candidate, RegularizationConfig, Vocab};

/// Synthetic corpus of `sentences` sentences over a 200-word lexicon.
pub fn corpus(sentences: usize) -> SynthData {
    synth::generate(&SynthConfig {
        sentences,
        ..SynthConfig::default()
    })
    .expect("synthetic corpus")
}

/// Candidate pool of `n` distinct tokenizations of the first sample, and
/// its deterministic tokenization.
pub fn pool(data: &SynthData, n: usize) -> (Vec<Candidate>, Candidate) {
    let vocab = Vocab::Bpe(data.vocab.clone());
    let words = &data.corpus.samples()[0].words;
    let cfg = RegularizationConfig::new(0.1, 0, vocab.scheme()).expect("valid p");
    let pool = sample_candidates(words, &vocab, &cfg, n, 0).expect("pool");
    let anchor = tokenize_deterministic(words, &vocab).expect("anchor");
    (pool, anchor)
}
