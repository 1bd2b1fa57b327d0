//! Character-level BPE with optional merge dropout.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy)]
struct Merge {
    left: TokenId,
    right: TokenId,
    result: TokenId,
}

/// Ranked merges plus the token inventory they produce.
///
/// Every merge operand must be an alphabet symbol or the result of a
/// lower-ranked merge. Under that condition greedy lowest-rank merging and a
/// single rank-ordered pass produce the same segmentation, which is what lets
/// dropout with `p = 0` reproduce the deterministic encoder.
#[derive(Debug, Clone)]
pub struct BpeVocab {
    tokens: Vec<String>,
    token_ids: HashMap<String, TokenId>,
    merges: Vec<Merge>,
    pair_ranks: FxHashMap<(TokenId, TokenId), u32>,
    char_ids: FxHashMap<char, TokenId>,
    marker: Option<TokenId>,
}

fn pair_key(line: usize, left: &str, right: &str) -> Result<(String, String)> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::Vocab(format!("merge {line} has an empty operand")));
    }
    Ok((left.to_string(), right.to_string()))
}

impl BpeVocab {
    /// Build from merges in rank order. `tokens` lists the inventory; when
    /// `None`, it is every merge operand and result. `marker` is an atomic
    /// symbol prepended to each word before merging.
    pub fn new(
        merges: &[(String, String)],
        tokens: Option<&[String]>,
        marker: Option<&str>,
    ) -> Result<Self> {
        let mut vocab = BpeVocab {
            tokens: Vec::new(),
            token_ids: HashMap::new(),
            merges: Vec::with_capacity(merges.len()),
            pair_ranks: FxHashMap::default(),
            char_ids: FxHashMap::default(),
            marker: None,
        };
        let explicit = tokens.is_some();
        if let Some(tokens) = tokens {
            for t in tokens {
                vocab.intern(t);
            }
        }
        if let Some(m) = marker {
            if m.is_empty() {
                return Err(Error::Vocab("empty word-boundary marker".into()));
            }
            if explicit && !vocab.token_ids.contains_key(m) {
                return Err(Error::Vocab(format!("marker {m:?} is not a token")));
            }
            vocab.marker = Some(vocab.intern(m));
        }

        // Symbols available so far: alphabet characters, the marker, and
        // results of already-ranked merges.
        let is_atom = |s: &str, marker: Option<&str>| {
            let mut chars = s.chars();
            chars.next().is_some() && chars.next().is_none() || Some(s) == marker
        };
        let mut produced: HashSet<String> = HashSet::new();
        for (rank, (left, right)) in merges.iter().enumerate() {
            for operand in [left, right] {
                if !is_atom(operand, marker) && !produced.contains(operand.as_str()) {
                    return Err(Error::Vocab(format!(
                        "merge {rank} ({left} {right}): operand {operand:?} is neither a \
                         single character nor produced by an earlier merge"
                    )));
                }
            }
            let result = format!("{left}{right}");
            for t in [left.as_str(), right.as_str(), result.as_str()] {
                if explicit && !vocab.token_ids.contains_key(t) {
                    return Err(Error::Vocab(format!(
                        "merge {rank} ({left} {right}): {t:?} missing from token inventory"
                    )));
                }
            }
            let merge = Merge {
                left: vocab.intern(left),
                right: vocab.intern(right),
                result: vocab.intern(&result),
            };
            if vocab
                .pair_ranks
                .insert((merge.left, merge.right), rank as u32)
                .is_some()
            {
                return Err(Error::Vocab(format!("duplicate merge ({left} {right})")));
            }
            vocab.merges.push(merge);
            produced.insert(result);
        }

        for (id, token) in vocab.tokens.iter().enumerate() {
            let mut chars = token.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                vocab.char_ids.insert(c, id as TokenId);
            }
        }
        Ok(vocab)
    }

    /// Parse a merges file (`left right` per line, `#` lines skipped) and an
    /// optional JSON `token -> id` inventory.
    pub fn from_files(
        merges_text: &str,
        vocab_json: Option<&str>,
        marker: Option<&str>,
    ) -> Result<Self> {
        let merges = parse_merges(merges_text)?;
        let tokens = match vocab_json {
            Some(json) => {
                let map: HashMap<String, u64> = serde_json::from_str(json)
                    .map_err(|e| Error::Vocab(format!("token inventory is not a JSON map: {e}")))?;
                let mut entries: Vec<(String, u64)> = map.into_iter().collect();
                entries.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                Some(entries.into_iter().map(|(t, _)| t).collect::<Vec<_>>())
            }
            None => None,
        };
        BpeVocab::new(&merges, tokens.as_deref(), marker)
    }

    fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.token_ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.token_ids.insert(token.to_string(), id);
        id
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_ids.contains_key(token)
    }

    /// Token inventory indexed by id.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// The inventory as a JSON `token -> id` map, readable by [`Self::from_files`].
    pub fn tokens_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .tokens
            .iter()
            .enumerate()
            .map(|(id, t)| (t.clone(), serde_json::Value::from(id)))
            .collect();
        serde_json::to_string_pretty(&map).expect("string keys serialize")
    }

    /// Merges in the text form read by [`parse_merges`].
    pub fn merges_text(&self) -> String {
        self.merges().map(|(l, r)| format!("{l} {r}\n")).collect()
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    /// The merges in rank order, as `(left, right)` strings.
    pub fn merges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.merges
            .iter()
            .map(|m| (self.token(m.left), self.token(m.right)))
    }

    pub fn marker(&self) -> Option<&str> {
        self.marker.map(|id| self.token(id))
    }

    fn initial_symbols(&self, word: &str, out: &mut Vec<TokenId>) -> Result<()> {
        out.clear();
        out.extend(self.marker);
        for c in word.chars() {
            let id = self.char_ids.get(&c).ok_or_else(|| Error::UnknownSymbol {
                word: word.to_string(),
                symbol: c,
            })?;
            out.push(*id);
        }
        Ok(())
    }

    fn rank(&self, left: TokenId, right: TokenId) -> Option<u32> {
        self.pair_ranks.get(&(left, right)).copied()
    }

    /// Greedy lowest-rank merging until no merge applies.
    pub fn encode_ids(&self, word: &str) -> Result<Vec<TokenId>> {
        let mut syms = Vec::with_capacity(word.len() + 1);
        self.initial_symbols(word, &mut syms)?;
        loop {
            let mut best: Option<(u32, usize)> = None;
            for (i, pair) in syms.windows(2).enumerate() {
                if let Some(r) = self.rank(pair[0], pair[1]) {
                    if best.is_none_or(|(b, _)| r < b) {
                        best = Some((r, i));
                    }
                }
            }
            let Some((rank, i)) = best else { break };
            syms[i] = self.merges[rank as usize].result;
            syms.remove(i + 1);
        }
        Ok(syms)
    }

    /// Rank-ordered merging where each merge occurrence is skipped with
    /// probability `p`. Ranks are visited in ascending order; within a rank,
    /// occurrences are scanned left to right with one draw each.
    pub fn dropout_ids<R: Rng + ?Sized>(
        &self,
        word: &str,
        p: f64,
        rng: &mut R,
        out: &mut Vec<TokenId>,
    ) -> Result<()> {
        let mut syms = Vec::with_capacity(word.len() + 1);
        self.initial_symbols(word, &mut syms)?;
        let mut scratch = Vec::with_capacity(syms.len());
        let mut floor = 0u32;
        loop {
            let next = syms
                .windows(2)
                .filter_map(|pair| self.rank(pair[0], pair[1]))
                .filter(|&r| r >= floor)
                .min();
            let Some(rank) = next else { break };
            let merge = self.merges[rank as usize];
            scratch.clear();
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == merge.left && syms[i + 1] == merge.right {
                    if rng.gen::<f64>() < p {
                        scratch.push(syms[i]);
                        i += 1;
                    } else {
                        scratch.push(merge.result);
                        i += 2;
                    }
                } else {
                    scratch.push(syms[i]);
                    i += 1;
                }
            }
            std::mem::swap(&mut syms, &mut scratch);
            floor = rank + 1;
        }
        out.extend_from_slice(&syms);
        Ok(())
    }

    pub fn encode(&self, word: &str) -> Result<Vec<String>> {
        Ok(self.to_strings(&self.encode_ids(word)?))
    }

    pub fn encode_dropout<R: Rng + ?Sized>(
        &self,
        word: &str,
        p: f64,
        rng: &mut R,
    ) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        self.dropout_ids(word, p, rng, &mut ids)?;
        Ok(self.to_strings(&ids))
    }

    fn to_strings(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&id| self.token(id).to_string()).collect()
    }
}

/// Parse `left right` lines; blank and `#`-prefixed lines are skipped.
pub fn parse_merges(text: &str) -> Result<Vec<(String, String)>> {
    let mut merges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) => merges.push(pair_key(idx + 1, l, r)?),
            _ => {
                return Err(Error::parse(
                    idx + 1,
                    "merge lines must have exactly two symbols",
                ))
            }
        }
    }
    Ok(merges)
}
