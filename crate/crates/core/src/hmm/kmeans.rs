use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::GaussianHmm;
use super::{HmmError, COV_FLOOR};
use crate::signal_io::MetricSample;

const MAX_LLOYD_ITER: usize = 100;
const RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub sse: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_points<O: AsRef<[f64]>>(points: &[O], k: usize) -> Result<usize, HmmError> {
    if k == 0 {
        return Err(HmmError::DegenerateInput("cluster count must be positive".into()));
    }
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    if dim == 0 {
        return Err(HmmError::DegenerateInput("no observations".into()));
    }
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim || p.iter().any(|v| !v.is_finite()) {
            return Err(HmmError::DegenerateInput(format!("observation {i} is not a finite {dim}-vector")));
        }
    }
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.as_ref().iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    if keys.len() < k {
        return Err(HmmError::DegenerateInput(format!(
            "{} distinct observations for {k} clusters",
            keys.len()
        )));
    }
    Ok(dim)
}

/// k-means++ seeding from the data points.
fn seed_centroids<O: AsRef<[f64]>>(points: &[O], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].as_ref().to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p.as_ref(), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick].as_ref().to_vec();
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd<O: AsRef<[f64]>>(points: &[O], mut centroids: Vec<Vec<f64>>, dim: usize) -> KMeans {
    let k = centroids.len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITER {
        let mut changed = false;
        for (label, p) in labels.iter_mut().zip(points) {
            let (c, _) = nearest(p.as_ref(), &centroids);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&label, p) in labels.iter().zip(points) {
            counts[label] += 1;
            for (s, v) in sums[label].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the worst-served point.
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p.as_ref(), &centroids[labels[i]])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                centroids[c] = points[far].as_ref().to_vec();
            }
        }
    }
    for (label, p) in labels.iter_mut().zip(points) {
        *label = nearest(p.as_ref(), &centroids).0;
    }
    let centroids = hartigan(points, &mut labels, k, dim);
    let sse = labels
        .iter()
        .zip(points)
        .map(|(&c, p)| sq_dist(p.as_ref(), &centroids[c]))
        .sum();
    KMeans { centroids, labels, sse }
}

fn cluster_means<O: AsRef<[f64]>>(points: &[O], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (&label, p) in labels.iter().zip(points) {
        counts[label] += 1;
        for (s, v) in sums[label].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    for (sum, &n) in sums.iter_mut().zip(&counts) {
        sum.iter_mut().for_each(|s| *s /= n.max(1) as f64);
    }
    (sums, counts)
}

/// Single-point moves that strictly lower the SSE, until none is left.
fn hartigan<O: AsRef<[f64]>>(points: &[O], labels: &mut [usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let (mut centroids, mut counts) = cluster_means(points, labels, k, dim);
    for _ in 0..MAX_LLOYD_ITER {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            let from = labels[i];
            if counts[from] < 2 {
                continue;
            }
            let nf = counts[from] as f64;
            let loss = nf / (nf - 1.0) * sq_dist(p, &centroids[from]);
            let mut best = (from, 0.0);
            for to in (0..k).filter(|&c| c != from) {
                let nt = counts[to] as f64;
                let delta = nt / (nt + 1.0) * sq_dist(p, &centroids[to]) - loss;
                if delta < best.1 - 1e-12 * loss.max(f64::MIN_POSITIVE) {
                    best = (to, delta);
                }
            }
            if best.0 != from {
                labels[i] = best.0;
                moved = true;
                (centroids, counts) = cluster_means(points, labels, k, dim);
            }
        }
        if !moved {
            break;
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding and a Hartigan refinement, best
/// of several seeded restarts.
pub fn kmeans<O: AsRef<[f64]>>(points: &[O], k: usize, seed: u64) -> Result<KMeans, HmmError> {
    let dim = check_points(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..RESTARTS {
        let run = lloyd(points, seed_centroids(points, k, &mut rng), dim);
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Initial model: K-means centroids as means, per-cluster covariance plus
/// `COV_FLOOR * I`, and seeded random stochastic `pi` and `trans`.
pub fn kmeans_init(samples: &[MetricSample], m: usize, seed: u64) -> Result<GaussianHmm, HmmError> {
    let observations: Vec<[f64; 3]> = samples.iter().map(MetricSample::vector).collect();
    let clusters = kmeans(&observations, m, seed)?;
    let dim = clusters.centroids[0].len();
    let mut covs = vec![DMatrix::zeros(dim, dim); m];
    let mut counts = vec![0usize; m];
    for (&c, p) in clusters.labels.iter().zip(observations) {
        counts[c] += 1;
        for a in 0..dim {
            let da = p[a] - clusters.centroids[c][a];
            for b in 0..dim {
                covs[c][(a, b)] += da * (p[b] - clusters.centroids[c][b]);
            }
        }
    }
    for (cov, &n) in covs.iter_mut().zip(&counts) {
        *cov /= n.max(1) as f64;
        *cov += DMatrix::identity(dim, dim) * COV_FLOOR;
    }

    // Own stream, independent of how many draws K-means consumed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut draw_row = || {
        let row: Vec<f64> = (0..m).map(|_| 1.0 - rng.random::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        row.into_iter().map(|v| v / sum).collect::<Vec<_>>()
    };
    let pi = draw_row();
    let trans = (0..m).map(|_| draw_row()).collect();
    let model = GaussianHmm {
        pi,
        trans,
        means: clusters.centroids,
        covs,
        thought_assignment: None,
    };
    model.validate()?;
    Ok(model)
}
