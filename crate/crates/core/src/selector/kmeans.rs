//! Lloyd's k-means over sparse unit TF-IDF vectors with k-means++ seeding.

use rand::Rng;

use super::tfidf::TfIdfVector;

/// Centroid movement below which iteration stops.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster of each point.
    pub assignment: Vec<usize>,
    /// Final centroids, dense over the term space.
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

struct Points<'a> {
    vectors: &'a [TfIdfVector],
    sq_norms: Vec<f64>,
    dims: usize,
}

impl<'a> Points<'a> {
    fn new(vectors: &'a [TfIdfVector], dims: usize) -> Self {
        let sq_norms = vectors.iter().map(|v| v.dot(v)).collect();
        Points {
            vectors,
            sq_norms,
            dims,
        }
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn dist2_to(&self, i: usize, centroid: &[f64], centroid_sq: f64) -> f64 {
        (self.sq_norms[i] - 2.0 * self.vectors[i].dot_dense(centroid) + centroid_sq).max(0.0)
    }

    fn dist2_between(&self, i: usize, j: usize) -> f64 {
        (self.sq_norms[i] - 2.0 * self.vectors[i].dot(&self.vectors[j]) + self.sq_norms[j]).max(0.0)
    }

    fn dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        for &(t, w) in self.vectors[i].entries() {
            out[t] = w;
        }
        out
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// k-means++: first center uniform, then each next center drawn with
/// probability proportional to squared distance from the nearest chosen
/// center. When every remaining point coincides with a center, the lowest
/// unchosen index is taken.
fn seed_centers<R: Rng + ?Sized>(points: &Points<'_>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let mut centers = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| points.dist2_between(i, centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive entry")
        } else {
            (0..n)
                .find(|i| !centers.contains(i))
                .expect("k never exceeds the number of points")
        };
        centers.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(points.dist2_between(i, next));
        }
    }
    centers
}

fn assign(points: &Points<'_>, centroids: &[Vec<f64>], assignment: &mut [usize]) {
    let sq: Vec<f64> = centroids.iter().map(|c| sq_norm(c)).collect();
    for (i, slot) in assignment.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (j, c) in centroids.iter().enumerate() {
            let d = points.dist2_to(i, c, sq[j]);
            if d < best.0 {
                best = (d, j);
            }
        }
        *slot = best.1;
    }
}

/// Give each empty cluster the point farthest from its own centroid, taken
/// from a cluster that keeps at least one member.
fn reseed_empty(points: &Points<'_>, centroids: &mut [Vec<f64>], assignment: &mut [usize]) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignment.iter() {
        sizes[a] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let sq: Vec<f64> = centroids.iter().map(|c| sq_norm(c)).collect();
        let mut best: Option<(f64, usize)> = None;
        for (i, &home) in assignment.iter().enumerate() {
            if sizes[home] < 2 {
                continue;
            }
            let d = points.dist2_to(i, &centroids[home], sq[home]);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, i));
            }
        }
        let Some((_, i)) = best else { break };
        sizes[assignment[i]] -= 1;
        assignment[i] = j;
        sizes[j] = 1;
        centroids[j] = points.dense(i);
    }
}

fn means(points: &Points<'_>, assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; points.dims]; k];
    let mut sizes = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        sizes[a] += 1;
        for &(t, w) in points.vectors[i].entries() {
            sums[a][t] += w;
        }
    }
    for (sum, &size) in sums.iter_mut().zip(&sizes) {
        if size > 0 {
            let inv = 1.0 / size as f64;
            sum.iter_mut().for_each(|x| *x *= inv);
        }
    }
    sums
}

/// Cluster `vectors` (all over a `dims`-term space) into `k` non-empty
/// clusters. Requires `1 <= k <= vectors.len()`.
pub fn kmeans<R: Rng + ?Sized>(
    vectors: &[TfIdfVector],
    dims: usize,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Clustering {
    assert!(k >= 1 && k <= vectors.len(), "k must lie in 1..=n");
    let points = Points::new(vectors, dims);
    let mut centroids: Vec<Vec<f64>> = seed_centers(&points, k, rng)
        .into_iter()
        .map(|i| points.dense(i))
        .collect();
    let mut assignment = vec![0usize; points.len()];
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        assign(&points, &centroids, &mut assignment);
        reseed_empty(&points, &mut centroids, &mut assignment);
        let updated = means(&points, &assignment, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < CONVERGENCE_TOL {
            break;
        }
    }

    assign(&points, &centroids, &mut assignment);
    reseed_empty(&points, &mut centroids, &mut assignment);
    let centroids = means(&points, &assignment, k);
    Clustering {
        assignment,
        centroids,
        iterations,
    }
}

/// For each cluster, the member closest to the centroid. Ties go to the
/// member with the smaller `order` key.
pub fn representatives(
    vectors: &[TfIdfVector],
    dims: usize,
    clustering: &Clustering,
    order: &[usize],
) -> Vec<usize> {
    let points = Points::new(vectors, dims);
    let k = clustering.centroids.len();
    let sq: Vec<f64> = clustering.centroids.iter().map(|c| sq_norm(c)).collect();
    let mut best: Vec<Option<(f64, usize)>> = vec![None; k];
    for (i, &c) in clustering.assignment.iter().enumerate() {
        let d = points.dist2_to(i, &clustering.centroids[c], sq[c]);
        let better = match best[c] {
            None => true,
            Some((bd, bi)) => d < bd || (d == bd && order[i] < order[bi]),
        };
        if better {
            best[c] = Some((d, i));
        }
    }
    best.into_iter().flatten().map(|(_, i)| i).collect()
}
