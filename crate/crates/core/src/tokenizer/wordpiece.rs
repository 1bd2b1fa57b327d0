//! WordPiece greedy longest-match segmentation, with MaxMatch-Dropout.

use std::collections::HashMap;

use rand::Rng;

use super::bpe::TokenId;
use crate::error::{Error, Result};

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_UNK: &str = "[UNK]";

#[derive(Debug, Clone)]
pub struct WordPieceVocab {
    tokens: Vec<String>,
    token_ids: HashMap<String, TokenId>,
    continuation_prefix: String,
    unk: TokenId,
    /// Longest token measured in characters, prefix excluded.
    max_piece_chars: usize,
}

impl WordPieceVocab {
    /// The unk token is added to the inventory if it is not already there.
    pub fn new<I, S>(tokens: I, continuation_prefix: &str, unk_token: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if unk_token.is_empty() {
            return Err(Error::Vocab("empty unk token".into()));
        }
        let mut vocab = WordPieceVocab {
            tokens: Vec::new(),
            token_ids: HashMap::new(),
            continuation_prefix: continuation_prefix.to_string(),
            unk: 0,
            max_piece_chars: 0,
        };
        for t in tokens {
            let t: String = t.into();
            if t.is_empty() || vocab.token_ids.contains_key(&t) {
                continue;
            }
            let bare = t.strip_prefix(continuation_prefix).unwrap_or(&t);
            vocab.max_piece_chars = vocab.max_piece_chars.max(bare.chars().count());
            vocab
                .token_ids
                .insert(t.clone(), vocab.tokens.len() as TokenId);
            vocab.tokens.push(t);
        }
        vocab.unk = match vocab.token_ids.get(unk_token) {
            Some(&id) => id,
            None => {
                vocab.tokens.push(unk_token.to_string());
                let id = (vocab.tokens.len() - 1) as TokenId;
                vocab.token_ids.insert(unk_token.to_string(), id);
                id
            }
        };
        Ok(vocab)
    }

    /// One token per line; blank lines are ignored.
    pub fn from_text(text: &str, continuation_prefix: &str, unk_token: &str) -> Result<Self> {
        let tokens = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string);
        WordPieceVocab::new(tokens, continuation_prefix, unk_token)
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    pub fn unk_token(&self) -> &str {
        &self.tokens[self.unk as usize]
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_ids.contains_key(token)
    }

    /// Piece ids matching at `start`, longest first.
    fn matches_at(
        &self,
        chars: &[(usize, char)],
        word: &str,
        start: usize,
        buf: &mut String,
        found: &mut Vec<(TokenId, usize)>,
    ) {
        found.clear();
        let max_end = (start + self.max_piece_chars).min(chars.len());
        for end in (start + 1..=max_end).rev() {
            let from = chars[start].0;
            let to = chars.get(end).map_or(word.len(), |c| c.0);
            buf.clear();
            if start > 0 {
                buf.push_str(&self.continuation_prefix);
            }
            buf.push_str(&word[from..to]);
            if let Some(&id) = self.token_ids.get(buf.as_str()) {
                found.push((id, end));
            }
        }
    }

    /// Shared segmentation loop. `reject(piece_chars)` decides whether a
    /// candidate other than the shortest available one is passed over.
    fn segment(&self, word: &str, out: &mut Vec<TokenId>, mut reject: impl FnMut(usize) -> bool) {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        let mut buf = String::new();
        let mut found = Vec::new();
        let mark = out.len();
        let mut start = 0;
        while start < chars.len() {
            self.matches_at(&chars, word, start, &mut buf, &mut found);
            if found.is_empty() {
                out.truncate(mark);
                out.push(self.unk);
                return;
            }
            let last = found.len() - 1;
            let mut chosen = found[last];
            for (k, &(id, end)) in found.iter().enumerate() {
                let piece_chars = end - start;
                if k == last || piece_chars == 1 || !reject(piece_chars) {
                    chosen = (id, end);
                    break;
                }
            }
            out.push(chosen.0);
            start = chosen.1;
        }
    }

    pub fn encode_ids(&self, word: &str, out: &mut Vec<TokenId>) {
        self.segment(word, out, |_| false);
    }

    /// Longest-match with each multi-character candidate rejected with
    /// probability `p`. Single characters and the shortest available match
    /// at each position are always accepted. A later dead end still yields
    /// the unk token for the whole word.
    pub fn dropout_ids<R: Rng + ?Sized>(
        &self,
        word: &str,
        p: f64,
        rng: &mut R,
        out: &mut Vec<TokenId>,
    ) {
        self.segment(word, out, |_| rng.gen::<f64>() < p);
    }

    pub fn encode(&self, word: &str) -> Vec<String> {
        let mut ids = Vec::new();
        self.encode_ids(word, &mut ids);
        ids.iter().map(|&id| self.token(id).to_string()).collect()
    }

    pub fn encode_dropout<R: Rng + ?Sized>(&self, word: &str, p: f64, rng: &mut R) -> Vec<String> {
        let mut ids = Vec::new();
        self.dropout_ids(word, p, rng, &mut ids);
        ids.iter().map(|&id| self.token(id).to_string()).collect()
    }
}
