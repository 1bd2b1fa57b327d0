//! Deterministic and stochastic subword segmentation of word sequences.

pub mod bpe;
pub mod wordpiece;

use std::collections::HashSet;

use rand::Rng;

pub use bpe::{parse_merges, BpeVocab, TokenId};
pub use wordpiece::WordPieceVocab;

use crate::error::{Error, Result};
use crate::seed;

/// Candidate draws allowed per requested distinct candidate.
pub const RETRY_FACTOR: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutScheme {
    BpeDropout,
    MaxMatchDropout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationConfig {
    pub p: f64,
    pub seed: u64,
    pub scheme: DropoutScheme,
}

impl RegularizationConfig {
    pub fn new(p: f64, seed: u64, scheme: DropoutScheme) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Contract(format!(
                "dropout probability {p} outside [0, 1]"
            )));
        }
        Ok(RegularizationConfig { p, seed, scheme })
    }
}

#[derive(Debug, Clone)]
pub enum Vocab {
    Bpe(BpeVocab),
    WordPiece(WordPieceVocab),
}

impl Vocab {
    pub fn scheme(&self) -> DropoutScheme {
        match self {
            Vocab::Bpe(_) => DropoutScheme::BpeDropout,
            Vocab::WordPiece(_) => DropoutScheme::MaxMatchDropout,
        }
    }

    pub fn token(&self, id: TokenId) -> &str {
        match self {
            Vocab::Bpe(v) => v.token(id),
            Vocab::WordPiece(v) => v.token(id),
        }
    }

    /// Deterministic segmentation of one word.
    pub fn encode(&self, word: &str) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        self.encode_into(
            word,
            None,
            &mut rand::rngs::mock::StepRng::new(0, 0),
            &mut ids,
        )?;
        Ok(ids.iter().map(|&id| self.token(id).to_string()).collect())
    }

    fn encode_into<R: Rng + ?Sized>(
        &self,
        word: &str,
        dropout: Option<f64>,
        rng: &mut R,
        out: &mut Vec<TokenId>,
    ) -> Result<()> {
        if word.is_empty() {
            return Err(Error::Contract("cannot segment an empty word".into()));
        }
        match (self, dropout) {
            (Vocab::Bpe(v), None) => out.extend(v.encode_ids(word)?),
            (Vocab::Bpe(v), Some(p)) => v.dropout_ids(word, p, rng, out)?,
            (Vocab::WordPiece(v), None) => v.encode_ids(word, out),
            (Vocab::WordPiece(v), Some(p)) => v.dropout_ids(word, p, rng, out),
        }
        Ok(())
    }

    /// Strip the word-boundary marker (BPE) or continuation prefix
    /// (WordPiece) from a subword, giving the characters it covers.
    pub fn surface<'a>(&self, subword: &'a str, word_initial: bool) -> &'a str {
        match self {
            Vocab::Bpe(v) => match (v.marker(), word_initial) {
                (Some(m), true) => subword.strip_prefix(m).unwrap_or(subword),
                _ => subword,
            },
            Vocab::WordPiece(v) if !word_initial => subword
                .strip_prefix(v.continuation_prefix())
                .unwrap_or(subword),
            Vocab::WordPiece(_) => subword,
        }
    }

    pub fn is_unk(&self, subword: &str) -> bool {
        matches!(self, Vocab::WordPiece(v) if v.unk_token() == subword)
    }
}

/// One segmentation of a sample's words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub subwords: Vec<String>,
    /// Index into `subwords` of each word's first piece.
    pub word_starts: Vec<usize>,
    pub sample_id: usize,
    pub candidate_index: usize,
}

impl Candidate {
    pub fn word_count(&self) -> usize {
        self.word_starts.len()
    }

    /// Pieces of word `i`.
    pub fn word_pieces(&self, i: usize) -> &[String] {
        let start = self.word_starts[i];
        let end = self
            .word_starts
            .get(i + 1)
            .copied()
            .unwrap_or(self.subwords.len());
        &self.subwords[start..end]
    }

    pub fn first_subwords(&self) -> impl Iterator<Item = &str> + '_ {
        self.word_starts.iter().map(|&s| self.subwords[s].as_str())
    }

    /// Rebuild the source words by joining each word's pieces with markers
    /// removed. Unk pieces are kept verbatim.
    pub fn surface_words(&self, vocab: &Vocab) -> Vec<String> {
        (0..self.word_count())
            .map(|i| {
                self.word_pieces(i)
                    .iter()
                    .enumerate()
                    .map(|(k, piece)| vocab.surface(piece, k == 0))
                    .collect()
            })
            .collect()
    }

    pub fn joined(&self) -> String {
        self.subwords.join(" ")
    }
}

fn segment_words<R: Rng + ?Sized>(
    words: &[String],
    vocab: &Vocab,
    dropout: Option<f64>,
    rng: &mut R,
    ids: &mut Vec<TokenId>,
    starts: &mut Vec<usize>,
) -> Result<()> {
    ids.clear();
    starts.clear();
    for word in words {
        starts.push(ids.len());
        vocab.encode_into(word, dropout, rng, ids)?;
    }
    Ok(())
}

fn build_candidate(vocab: &Vocab, ids: &[TokenId], starts: &[usize]) -> Candidate {
    Candidate {
        subwords: ids.iter().map(|&id| vocab.token(id).to_string()).collect(),
        word_starts: starts.to_vec(),
        sample_id: 0,
        candidate_index: 0,
    }
}

/// Segment every word independently, so word boundaries always survive.
/// `dropout = None` gives the deterministic segmentation and ignores `rng`.
pub fn tokenize_sample<R: Rng + ?Sized>(
    words: &[String],
    vocab: &Vocab,
    dropout: Option<f64>,
    rng: &mut R,
) -> Result<Candidate> {
    let mut ids = Vec::new();
    let mut starts = Vec::new();
    segment_words(words, vocab, dropout, rng, &mut ids, &mut starts)?;
    Ok(build_candidate(vocab, &ids, &starts))
}

pub fn tokenize_deterministic(words: &[String], vocab: &Vocab) -> Result<Candidate> {
    tokenize_sample(
        words,
        vocab,
        None,
        &mut rand::rngs::mock::StepRng::new(0, 0),
    )
}

/// Draw stochastic segmentations until `n` distinct subword sequences are
/// found or `RETRY_FACTOR * n` draws are spent. Candidates are indexed in
/// discovery order. Draw `d` of sample `sample_id` uses its own RNG stream,
/// so the result depends only on `(words, vocab, cfg, n, sample_id)`.
pub fn sample_candidates(
    words: &[String],
    vocab: &Vocab,
    cfg: &RegularizationConfig,
    n: usize,
    sample_id: usize,
) -> Result<Vec<Candidate>> {
    if n == 0 {
        return Err(Error::Contract(
            "candidate count N must be at least 1".into(),
        ));
    }
    if cfg.scheme != vocab.scheme() {
        return Err(Error::Contract(format!(
            "{:?} does not apply to this vocabulary",
            cfg.scheme
        )));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(Error::Contract(format!(
            "dropout probability {} outside [0, 1]",
            cfg.p
        )));
    }

    let mut seen: HashSet<(Vec<TokenId>, Vec<usize>)> = HashSet::new();
    let mut out = Vec::new();
    let mut ids = Vec::new();
    let mut starts = Vec::new();
    let budget = RETRY_FACTOR * n;
    for draw in 0..budget {
        let mut rng = seed::stream(cfg.seed, "draw", sample_id as u64, draw as u64);
        segment_words(words, vocab, Some(cfg.p), &mut rng, &mut ids, &mut starts)?;
        if seen.contains(&(ids.clone(), starts.clone())) {
            if cfg.p == 0.0 {
                break;
            }
            continue;
        }
        seen.insert((ids.clone(), starts.clone()));
        let mut candidate = build_candidate(vocab, &ids, &starts);
        candidate.sample_id = sample_id;
        candidate.candidate_index = out.len();
        out.push(candidate);
        if out.len() == n || cfg.p == 0.0 {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|w| w.to_string()).collect()
    }

    fn abab_vocab() -> BpeVocab {
        BpeVocab::new(&pairs(&[("a", "b"), ("ab", "ab")]), None, None).unwrap()
    }

    #[test]
    fn bpe_examples() {
        let v = abab_vocab();
        assert_eq!(v.encode("abab").unwrap(), words(&["abab"]));
        assert_eq!(v.encode("ba").unwrap(), words(&["b", "a"]));

        let v = BpeVocab::new(
            &pairs(&[("a", "b")]),
            Some(&words(&["a", "b", "c", "ab"])),
            None,
        )
        .unwrap();
        assert_eq!(v.encode("abc").unwrap(), words(&["ab", "c"]));
    }

    #[test]
    fn bpe_unknown_symbol() {
        let err = abab_vocab().encode("abz").unwrap_err();
        assert!(
            matches!(err, Error::UnknownSymbol { symbol: 'z', .. }),
            "{err}"
        );
    }

    #[test]
    fn bpe_rejects_ill_founded_merges() {
        let err = BpeVocab::new(&pairs(&[("ab", "c"), ("a", "b")]), None, None).unwrap_err();
        assert!(matches!(err, Error::Vocab(_)));
        let err = BpeVocab::new(&pairs(&[("a", "b"), ("a", "b")]), None, None).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err =
            BpeVocab::new(&pairs(&[("a", "b")]), Some(&words(&["a", "b"])), None).unwrap_err();
        assert!(err.to_string().contains("\"ab\""));
    }

    #[test]
    fn bpe_dropout_extremes() {
        let v = abab_vocab();
        let mut rng = stream(1, "t", 0, 0);
        assert_eq!(
            v.encode_dropout("abab", 0.0, &mut rng).unwrap(),
            words(&["abab"])
        );
        assert_eq!(
            v.encode_dropout("abab", 1.0, &mut rng).unwrap(),
            words(&["a", "b", "a", "b"])
        );
        let a = v
            .encode_dropout("abab", 0.1, &mut stream(9, "t", 0, 0))
            .unwrap();
        let b = v
            .encode_dropout("abab", 0.1, &mut stream(9, "t", 0, 0))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bpe_marker_is_atomic_first_symbol() {
        let v = BpeVocab::new(&pairs(&[("_", "a"), ("_a", "b")]), None, Some("_")).unwrap();
        assert_eq!(v.encode("ab").unwrap(), words(&["_ab"]));
        assert_eq!(v.encode("ba").unwrap(), words(&["_", "b", "a"]));
        let vocab = Vocab::Bpe(v);
        let c = tokenize_deterministic(&words(&["ab", "ba"]), &vocab).unwrap();
        assert_eq!(c.surface_words(&vocab), words(&["ab", "ba"]));
    }

    #[test]
    fn merges_file_parsing() {
        let text = "#version: 0.2\na b\n\nab c\r\n";
        assert_eq!(
            parse_merges(text).unwrap(),
            pairs(&[("a", "b"), ("ab", "c")])
        );
        assert!(matches!(
            parse_merges("a b c\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let v = BpeVocab::from_files("a b\n", Some(r#"{"a": 0, "b": 1, "ab": 2, "c": 3}"#), None)
            .unwrap();
        assert_eq!(v.encode("cab").unwrap(), words(&["c", "ab"]));
        assert!(BpeVocab::from_files("a b\n", Some("[1, 2]"), None).is_err());
    }

    fn unhappy_vocab() -> WordPieceVocab {
        WordPieceVocab::new(
            [
                "un", "##happy", "##hap", "##py", "u", "n", "##h", "##a", "##p", "##y", "happy",
            ],
            "##",
            "<unk>",
        )
        .unwrap()
    }

    #[test]
    fn maxmatch_examples() {
        let v = unhappy_vocab();
        assert_eq!(v.encode("unhappy"), words(&["un", "##happy"]));
        assert_eq!(v.encode("x"), words(&["<unk>"]));
        assert_eq!(v.encode("happy"), words(&["happy"]));
        // A dead end later in the word turns the whole word into unk.
        assert_eq!(v.encode("unx"), words(&["<unk>"]));
    }

    #[test]
    fn maxmatch_dropout_extremes() {
        let v = WordPieceVocab::new(["ab", "a", "##b"], "##", "<unk>").unwrap();
        let mut rng = stream(3, "t", 0, 0);
        assert_eq!(v.encode_dropout("ab", 1.0, &mut rng), words(&["a", "##b"]));
        assert_eq!(v.encode_dropout("ab", 0.0, &mut rng), words(&["ab"]));

        let v = unhappy_vocab();
        let a = v.encode_dropout("unhappy", 0.3, &mut stream(5, "t", 0, 0));
        let b = v.encode_dropout("unhappy", 0.3, &mut stream(5, "t", 0, 0));
        assert_eq!(a, b);
        // "##n" is missing, so rejecting "un" reaches a dead end.
        assert_eq!(
            v.encode_dropout("unhappy", 1.0, &mut rng),
            words(&["<unk>"])
        );
    }

    #[test]
    fn tokenize_sample_alignment() {
        let vocab = Vocab::Bpe(abab_vocab());
        let c = tokenize_deterministic(&words(&["abab", "ba"]), &vocab).unwrap();
        assert_eq!(c.subwords, words(&["abab", "b", "a"]));
        assert_eq!(c.word_starts, vec![0, 1]);
        assert_eq!(c.word_pieces(1), &words(&["b", "a"])[..]);
        assert_eq!(c.first_subwords().collect::<Vec<_>>(), vec!["abab", "b"]);

        let empty = tokenize_deterministic(&[], &vocab).unwrap();
        assert!(empty.subwords.is_empty() && empty.word_starts.is_empty());
    }

    #[test]
    fn sample_candidates_small_pools() {
        let vocab = Vocab::Bpe(abab_vocab());
        let cfg = RegularizationConfig::new(0.5, 11, DropoutScheme::BpeDropout).unwrap();
        let one = sample_candidates(&words(&["a"]), &vocab, &cfg, 10, 0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].subwords, words(&["a"]));

        let det = RegularizationConfig::new(0.0, 11, DropoutScheme::BpeDropout).unwrap();
        let c = sample_candidates(&words(&["abab"]), &vocab, &det, 5, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].subwords, words(&["abab"]));

        let c = sample_candidates(&words(&["abab"]), &vocab, &cfg, 10, 3).unwrap();
        assert!(c.len() <= 5);
        for (i, cand) in c.iter().enumerate() {
            assert_eq!(cand.candidate_index, i);
            assert_eq!(cand.sample_id, 3);
        }
    }

    #[test]
    fn sample_candidates_contract() {
        let vocab = Vocab::Bpe(abab_vocab());
        let cfg = RegularizationConfig::new(0.5, 11, DropoutScheme::MaxMatchDropout).unwrap();
        assert!(sample_candidates(&words(&["ab"]), &vocab, &cfg, 3, 0).is_err());
        let cfg = RegularizationConfig::new(0.5, 11, DropoutScheme::BpeDropout).unwrap();
        assert!(sample_candidates(&words(&["ab"]), &vocab, &cfg, 0, 0).is_err());
        assert!(RegularizationConfig::new(1.5, 0, DropoutScheme::BpeDropout).is_err());
    }
}
