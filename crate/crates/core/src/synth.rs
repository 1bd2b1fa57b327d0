//! Seeded synthetic NER corpora with a matching BPE vocabulary.
//!
//! Words are built from consonant-vowel syllables. Every word has a fixed
//! role: outside word, entity head (always `B-T`) or entity tail (always
//! `I-T`, only after a head or tail of type `T`). The merges make each word a
//! single token under deterministic BPE, while dropout splits it into
//! syllables or characters.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Corpus, Labels, Sample, Task};
use crate::error::Result;
use crate::seed;
use crate::tokenizer::BpeVocab;

const CONSONANTS: &[char] = &[
    'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z',
];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
pub const ENTITY_TYPES: [&str; 4] = ["PER", "ORG", "LOC", "MISC"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub sentences: usize,
    pub vocab_words: usize,
    /// Share of the vocabulary used inside entities.
    pub entity_fraction: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 1000,
            vocab_words: 200,
            entity_fraction: 0.3,
            min_len: 5,
            max_len: 15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Outside,
    Head(usize),
    Tail(usize),
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub words: Vec<(String, Role)>,
}

impl Lexicon {
    fn by_role(&self, role: Role) -> Vec<&str> {
        self.words
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(w, _)| w.as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub vocab: BpeVocab,
    pub lexicon: Lexicon,
}

fn syllables(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars.chunks(2).map(|c| c.iter().collect()).collect()
}

/// Merges: every syllable's characters, then each word's syllables joined
/// left to right. A word is kept only if it still encodes to one token.
fn build_vocab<R: Rng + ?Sized>(n_words: usize, rng: &mut R) -> Result<(Vec<String>, BpeVocab)> {
    let mut merges: Vec<(String, String)> = Vec::new();
    for &c in CONSONANTS {
        for &v in VOWELS {
            merges.push((c.to_string(), v.to_string()));
        }
    }
    let mut pairs: HashSet<(String, String)> = merges.iter().cloned().collect();
    let mut words: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut vocab = BpeVocab::new(&merges, None, None)?;
    let mut attempts = 0;
    while words.len() < n_words && attempts < 100 * n_words {
        attempts += 1;
        let n_syll = rng.gen_range(2..=4);
        let word: String = (0..n_syll)
            .map(|_| {
                let c = CONSONANTS[rng.gen_range(0..CONSONANTS.len())];
                let v = VOWELS[rng.gen_range(0..VOWELS.len())];
                format!("{c}{v}")
            })
            .collect();
        if !seen.insert(word.clone()) {
            continue;
        }
        let sylls = syllables(&word);
        let mut extra = Vec::new();
        let mut acc = sylls[0].clone();
        for s in &sylls[1..] {
            let pair = (acc.clone(), s.clone());
            if !pairs.contains(&pair) {
                extra.push(pair);
            }
            acc.push_str(s);
        }
        let mut trial = merges.clone();
        trial.extend(extra.iter().cloned());
        let candidate = BpeVocab::new(&trial, None, None)?;
        if candidate.encode(&word)?.len() != 1 {
            continue;
        }
        pairs.extend(extra);
        merges = trial;
        vocab = candidate;
        words.push(word);
    }
    Ok((words, vocab))
}

fn assign_roles<R: Rng + ?Sized>(words: Vec<String>, entity_fraction: f64, rng: &mut R) -> Lexicon {
    let n_entity = ((words.len() as f64 * entity_fraction).round() as usize).min(words.len());
    let types = ENTITY_TYPES.len();
    let n_head = (n_entity * 2).div_ceil(3).max(types.min(n_entity));
    let mut shuffled = words;
    shuffled.shuffle(rng);
    let words = shuffled
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let role = if i < n_head {
                Role::Head(i % types)
            } else if i < n_entity {
                Role::Tail(i % types)
            } else {
                Role::Outside
            };
            (w, role)
        })
        .collect();
    Lexicon { words }
}

fn sentence<R: Rng + ?Sized>(
    lex: &Lexicon,
    cfg: &SynthConfig,
    rng: &mut R,
) -> (Vec<String>, Vec<String>) {
    let outside = lex.by_role(Role::Outside);
    let len = rng.gen_range(cfg.min_len..=cfg.max_len);
    let (mut words, mut tags) = (Vec::new(), Vec::new());
    while words.len() < len {
        let t = rng.gen_range(0..ENTITY_TYPES.len());
        let heads = lex.by_role(Role::Head(t));
        if !heads.is_empty() && rng.gen_bool(0.25) {
            words.push(heads[rng.gen_range(0..heads.len())].to_string());
            tags.push(format!("B-{}", ENTITY_TYPES[t]));
            let tails = lex.by_role(Role::Tail(t));
            let extra = if tails.is_empty() {
                0
            } else {
                rng.gen_range(0..=2)
            };
            for _ in 0..extra {
                if words.len() == len {
                    break;
                }
                words.push(tails[rng.gen_range(0..tails.len())].to_string());
                tags.push(format!("I-{}", ENTITY_TYPES[t]));
            }
        } else if !outside.is_empty() {
            words.push(outside[rng.gen_range(0..outside.len())].to_string());
            tags.push("O".to_string());
        }
    }
    (words, tags)
}

/// Generate a corpus and vocabulary from `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    let mut rng = seed::stream(cfg.seed, "synth", 0, 0);
    let (words, vocab) = build_vocab(cfg.vocab_words, &mut rng)?;
    let lexicon = assign_roles(words, cfg.entity_fraction, &mut rng);
    let samples = (0..cfg.sentences)
        .map(|id| {
            let (words, tags) = sentence(&lexicon, cfg, &mut rng);
            Sample {
                id,
                words,
                labels: Labels::Tags(tags),
                doc_boundary: false,
            }
        })
        .collect();
    Ok(SynthData {
        corpus: Corpus::new(samples, Task::Ner)?,
        vocab,
        lexicon,
    })
}
