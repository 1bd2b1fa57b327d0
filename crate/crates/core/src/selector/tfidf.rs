use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tokenizer::Candidate;

/// Sparse L2-normalized TF-IDF vector over the terms of one [`TfIdfSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfVector {
    /// `(term index, weight)` sorted by term index, weights > 0.
    entries: Vec<(usize, f64)>,
    norm: f64,
}

impl TfIdfVector {
    fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        TfIdfVector { entries, norm }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Euclidean length of the weights.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, term: usize) -> f64 {
        self.entries
            .binary_search_by_key(&term, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn dot(&self, other: &TfIdfVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector indexed by term.
    pub(crate) fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(t, w)| w * dense[t]).sum()
    }
}

/// TF-IDF vectors for one sample's candidate pool plus its anchor
/// (deterministic) segmentation. Every candidate and the anchor count as
/// documents for the idf statistics.
#[derive(Debug, Clone)]
pub struct TfIdfSpace {
    terms: Vec<String>,
    idf: Vec<f64>,
    documents: Vec<TfIdfVector>,
    anchor: TfIdfVector,
}

impl TfIdfSpace {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.idf[i])
    }

    /// One vector per candidate, in input order.
    pub fn documents(&self) -> &[TfIdfVector] {
        &self.documents
    }

    pub fn anchor(&self) -> &TfIdfVector {
        &self.anchor
    }
}

/// `tf` is the raw count of a subword in a sequence,
/// `idf(t) = ln((1 + D) / (1 + df(t))) + 1` with `D` the number of documents,
/// and each `tf * idf` vector is scaled to unit length.
pub fn build_tfidf(candidates: &[Candidate], anchor: &Candidate) -> Result<TfIdfSpace> {
    if candidates.is_empty() {
        return Err(Error::Contract(
            "TF-IDF needs at least one candidate".into(),
        ));
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut counts: Vec<Vec<(usize, f64)>> = Vec::with_capacity(candidates.len() + 1);

    for doc in candidates.iter().chain(std::iter::once(anchor)) {
        let mut local: HashMap<usize, f64> = HashMap::new();
        for subword in &doc.subwords {
            let next = index.len();
            let t = *index.entry(subword.as_str()).or_insert_with(|| {
                terms.push(subword.clone());
                next
            });
            *local.entry(t).or_insert(0.0) += 1.0;
        }
        counts.push(local.into_iter().collect());
    }

    let n_docs = counts.len() as f64;
    let mut df = vec![0usize; terms.len()];
    for doc in &counts {
        for &(t, _) in doc {
            df[t] += 1;
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let mut vectors: Vec<TfIdfVector> = counts
        .into_iter()
        .map(|doc| {
            let raw = TfIdfVector::from_entries(
                doc.into_iter().map(|(t, tf)| (t, tf * idf[t])).collect(),
            );
            if raw.norm > 0.0 {
                let scale = raw.norm;
                TfIdfVector::from_entries(
                    raw.entries
                        .into_iter()
                        .map(|(t, w)| (t, w / scale))
                        .collect(),
                )
            } else {
                raw
            }
        })
        .collect();
    let anchor = vectors.pop().expect("anchor document");
    Ok(TfIdfSpace {
        terms,
        idf,
        documents: vectors,
        anchor,
    })
}

/// `dot(u, v) / (|u| |v|)`, clamped to `[0, 1]`.
pub fn cosine(u: &TfIdfVector, v: &TfIdfVector) -> Result<f64> {
    if u.norm == 0.0 || v.norm == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok((u.dot(v) / (u.norm * v.norm)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(subwords: &[&str], index: usize) -> Candidate {
        Candidate {
            subwords: subwords.iter().map(|s| s.to_string()).collect(),
            word_starts: vec![0],
            sample_id: 0,
            candidate_index: index,
        }
    }

    #[test]
    fn identical_documents_have_cosine_one() {
        let space = build_tfidf(&[cand(&["a", "b"], 0)], &cand(&["a", "b"], 1)).unwrap();
        let c = cosine(&space.documents()[0], space.anchor()).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothed_idf_by_hand() {
        // D = 2 documents: [a, b] and [a, c].
        let space = build_tfidf(&[cand(&["a", "b"], 0)], &cand(&["a", "c"], 1)).unwrap();
        assert!((space.idf("a").unwrap() - 1.0).abs() < 1e-12);
        let expected = (3.0f64 / 2.0).ln() + 1.0;
        assert!((space.idf("b").unwrap() - expected).abs() < 1e-12);
        assert!((space.idf("c").unwrap() - expected).abs() < 1e-12);

        // Normalized weights of [a, b]: (1, idf_b) / sqrt(1 + idf_b^2).
        let doc = &space.documents()[0];
        let len = (1.0 + expected * expected).sqrt();
        assert!((doc.get(space.term_index("a").unwrap()) - 1.0 / len).abs() < 1e-12);
        assert!((doc.get(space.term_index("b").unwrap()) - expected / len).abs() < 1e-12);
        assert!((doc.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_documents_are_orthogonal() {
        let space = build_tfidf(&[cand(&["x"], 0)], &cand(&["y"], 1)).unwrap();
        assert_eq!(cosine(&space.documents()[0], space.anchor()).unwrap(), 0.0);
    }

    #[test]
    fn cosine_of_unnormalized_counts() {
        let u = TfIdfVector::from_entries(vec![(0, 1.0)]);
        let v = TfIdfVector::from_entries(vec![(0, 1.0), (1, 1.0)]);
        assert!((cosine(&u, &v).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_norm_is_degenerate() {
        let space = build_tfidf(&[cand(&[], 0)], &cand(&["a"], 1)).unwrap();
        assert!(matches!(
            cosine(&space.documents()[0], space.anchor()),
            Err(Error::DegenerateVector)
        ));
        assert!(build_tfidf(&[], &cand(&["a"], 0)).is_err());
    }

    #[test]
    fn repeated_subwords_count_as_tf() {
        let space = build_tfidf(&[cand(&["a", "a", "b"], 0)], &cand(&["b"], 1)).unwrap();
        let doc = &space.documents()[0];
        let (ia, ib) = (
            space.term_index("a").unwrap(),
            space.term_index("b").unwrap(),
        );
        let idf_a = space.idf("a").unwrap();
        let ratio = doc.get(ia) / doc.get(ib);
        assert!((ratio - 2.0 * idf_a / space.idf("b").unwrap()).abs() < 1e-12);
    }
}
