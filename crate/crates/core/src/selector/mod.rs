//! Choosing K diverse candidates out of a sampled pool.

pub mod kmeans;
pub mod tfidf;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use tfidf::{build_tfidf, cosine, TfIdfSpace, TfIdfVector};

use crate::error::{Error, Result};
use crate::seed;
use crate::tokenizer::Candidate;

/// Scores closer than this are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Random,
    CosSim,
    #[default]
    KMeans,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::CosSim, Strategy::KMeans];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::CosSim => "cossim",
            Strategy::KMeans => "kmeans",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "random" => Ok(Strategy::Random),
            "cossim" => Ok(Strategy::CosSim),
            "kmeans" => Ok(Strategy::KMeans),
            _ => Err(Error::Format(format!("unknown selection strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    pub k: usize,
    pub kmeans_max_iters: usize,
    pub seed: u64,
}

impl SelectionConfig {
    pub fn new(strategy: Strategy, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Contract("K must be at least 1".into()));
        }
        Ok(SelectionConfig {
            strategy,
            k,
            kmeans_max_iters: 100,
            seed,
        })
    }
}

fn check_pool(pool: &[Candidate], k: usize) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::Contract("candidate pool is empty".into()));
    }
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    Ok(())
}

fn by_candidate_index(pool: &[Candidate], mut picks: Vec<usize>) -> Vec<usize> {
    picks.sort_by_key(|&i| pool[i].candidate_index);
    picks
}

/// Uniform sample of `min(k, |pool|)` positions without replacement, in
/// candidate_index order.
pub fn select_random_indices<R: Rng + ?Sized>(
    pool: &[Candidate],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_pool(pool, k)?;
    let take = k.min(pool.len());
    let picks = rand::seq::index::sample(rng, pool.len(), take).into_vec();
    Ok(by_candidate_index(pool, picks))
}

pub fn select_random<R: Rng + ?Sized>(
    pool: &[Candidate],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Candidate>> {
    Ok(gather(pool, &select_random_indices(pool, k, rng)?))
}

/// Greedy max-min diversity: first the candidate least similar to the
/// anchor, then repeatedly the candidate whose highest similarity to the
/// anchor or any earlier pick is smallest. Positions come back in pick
/// order; ties go to the lowest candidate_index.
pub fn select_cossim_indices(
    pool: &[Candidate],
    anchor: &Candidate,
    k: usize,
) -> Result<Vec<usize>> {
    check_pool(pool, k)?;
    let space = build_tfidf(pool, anchor)?;
    let docs = space.documents();
    let mut worst = docs
        .iter()
        .map(|d| cosine(d, space.anchor()))
        .collect::<Result<Vec<f64>>>()?;
    let mut taken = vec![false; pool.len()];
    let mut picks = Vec::with_capacity(k.min(pool.len()));
    while picks.len() < k.min(pool.len()) {
        let mut best: Option<usize> = None;
        for i in (0..pool.len()).filter(|&i| !taken[i]) {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (s, bs) = (worst[i], worst[b]);
                    let tie = (s - bs).abs() <= TIE_EPS;
                    if (!tie && s < bs)
                        || (tie && pool[i].candidate_index < pool[b].candidate_index)
                    {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let pick = best.expect("untaken candidates remain");
        taken[pick] = true;
        picks.push(pick);
        for i in (0..pool.len()).filter(|&i| !taken[i]) {
            worst[i] = worst[i].max(cosine(&docs[i], &docs[pick])?);
        }
    }
    Ok(picks)
}

pub fn select_cossim(pool: &[Candidate], anchor: &Candidate, k: usize) -> Result<Vec<Candidate>> {
    Ok(gather(pool, &select_cossim_indices(pool, anchor, k)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSelection {
    /// Selected pool positions in candidate_index order.
    pub selected: Vec<usize>,
    /// Cluster of each pool position.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

/// Cluster the pool's TF-IDF vectors (the anchor contributes only to idf)
/// and return, per cluster, the member nearest its centroid. A pool no
/// larger than `k` is returned whole, one singleton cluster per candidate.
pub fn select_kmeans_detailed<R: Rng + ?Sized>(
    pool: &[Candidate],
    anchor: &Candidate,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<KMeansSelection> {
    check_pool(pool, k)?;
    if pool.len() <= k {
        let all: Vec<usize> = (0..pool.len()).collect();
        return Ok(KMeansSelection {
            selected: by_candidate_index(pool, all.clone()),
            assignment: all,
            iterations: 0,
        });
    }
    let space = build_tfidf(pool, anchor)?;
    let dims = space.terms().len();
    let clustering = kmeans::kmeans(space.documents(), dims, k, max_iters, rng);
    let order: Vec<usize> = pool.iter().map(|c| c.candidate_index).collect();
    let reps = kmeans::representatives(space.documents(), dims, &clustering, &order);
    Ok(KMeansSelection {
        selected: by_candidate_index(pool, reps),
        assignment: clustering.assignment,
        iterations: clustering.iterations,
    })
}

pub fn select_kmeans(
    pool: &[Candidate],
    anchor: &Candidate,
    cfg: &SelectionConfig,
) -> Result<Vec<Candidate>> {
    let mut rng = selection_rng(cfg, pool, "kmeans");
    let sel = select_kmeans_detailed(pool, anchor, cfg.k, cfg.kmeans_max_iters, &mut rng)?;
    Ok(gather(pool, &sel.selected))
}

fn selection_rng(cfg: &SelectionConfig, pool: &[Candidate], stage: &str) -> seed::StreamRng {
    let sample_id = pool.first().map_or(0, |c| c.sample_id) as u64;
    seed::stream(cfg.seed, stage, sample_id, 0)
}

/// Dispatch on `cfg.strategy`. Randomized strategies draw from a stream
/// keyed by the pool's sample id.
pub fn select_indices(
    pool: &[Candidate],
    anchor: &Candidate,
    cfg: &SelectionConfig,
) -> Result<Vec<usize>> {
    match cfg.strategy {
        Strategy::Random => {
            select_random_indices(pool, cfg.k, &mut selection_rng(cfg, pool, "random"))
        }
        Strategy::CosSim => select_cossim_indices(pool, anchor, cfg.k),
        Strategy::KMeans => Ok(select_kmeans_detailed(
            pool,
            anchor,
            cfg.k,
            cfg.kmeans_max_iters,
            &mut selection_rng(cfg, pool, "kmeans"),
        )?
        .selected),
    }
}

pub fn select(
    pool: &[Candidate],
    anchor: &Candidate,
    cfg: &SelectionConfig,
) -> Result<Vec<Candidate>> {
    Ok(gather(pool, &select_indices(pool, anchor, cfg)?))
}

fn gather(pool: &[Candidate], picks: &[usize]) -> Vec<Candidate> {
    picks.iter().map(|&i| pool[i].clone()).collect()
}
