//! Reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use neuroswarm::hmm::GaussianHmm;
use neuroswarm::signal_io::MetricSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian density through a cofactor inverse and determinant.
pub fn density3(o: [f64; 3], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let c = |i: usize, j: usize| cov[(i, j)];
    let cof = [
        [
            c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1),
            -(c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0)),
            c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0),
        ],
        [
            -(c(0, 1) * c(2, 2) - c(0, 2) * c(2, 1)),
            c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0),
            -(c(0, 0) * c(2, 1) - c(0, 1) * c(2, 0)),
        ],
        [
            c(0, 1) * c(1, 2) - c(0, 2) * c(1, 1),
            -(c(0, 0) * c(1, 2) - c(0, 2) * c(1, 0)),
            c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0),
        ],
    ];
    let det = c(0, 0) * cof[0][0] + c(0, 1) * cof[0][1] + c(0, 2) * cof[0][2];
    let d = [o[0] - mean[0], o[1] - mean[1], o[2] - mean[2]];
    // inverse[i][j] = cof[j][i] / det
    let mut q = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            q += d[i] * cof[j][i] / det * d[j];
        }
    }
    (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powi(3) * det).sqrt()
}

/// Every state path, weighted by its joint probability with `obs`.
/// Returns the filtering posterior at the last step and the total likelihood.
pub fn enumerate_paths(model: &GaussianHmm, obs: &[[f64; 3]]) -> (Vec<f64>, f64) {
    let m = model.pi.len();
    let n = obs.len();
    let mut last = vec![0.0; m];
    let mut path = vec![0usize; n];
    let total_paths = m.pow(n as u32);
    for code in 0..total_paths {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % m;
            c /= m;
        }
        let mut p = model.pi[path[0]] * density3(obs[0], &model.means[path[0]], &model.covs[path[0]]);
        for t in 1..n {
            p *= model.trans[path[t - 1]][path[t]] * density3(obs[t], &model.means[path[t]], &model.covs[path[t]]);
        }
        last[path[n - 1]] += p;
    }
    let total: f64 = last.iter().sum();
    (last.iter().map(|v| v / total).collect(), total)
}

fn random_spd(rng: &mut ChaCha8Rng, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
    let c = &a * a.transpose() * scale + DMatrix::identity(3, 3) * (0.2 * scale);
    (&c + c.transpose()) * 0.5
}

fn random_distribution(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Random valid 2-state model with metric-scale emissions.
pub fn random_model(rng: &mut ChaCha8Rng) -> GaussianHmm {
    GaussianHmm {
        pi: random_distribution(rng, 2),
        trans: (0..2).map(|_| random_distribution(rng, 2)).collect(),
        means: (0..2).map(|_| (0..3).map(|_| rng.random_range(0.1..0.9)).collect()).collect(),
        covs: (0..2)
            .map(|_| {
                let scale = rng.random_range(0.005..0.05);
                random_spd(rng, scale)
            })
            .collect(),
        thought_assignment: None,
    }
}

pub fn random_observations(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect()
}

pub fn to_samples(obs: &[[f64; 3]], step_ms: u64) -> Vec<MetricSample> {
    obs.iter()
        .enumerate()
        .map(|(k, v)| MetricSample::from_vector(k as u64 * step_ms, *v).unwrap())
        .collect()
}

/// Sticky two-state generator with isotropic noise, clamped to `[0, 1]`.
pub struct TwoStateGenerator {
    pub means: [[f64; 3]; 2],
    pub sigma: f64,
    pub stay: f64,
}

impl Default for TwoStateGenerator {
    fn default() -> Self {
        Self {
            means: [[0.2; 3], [0.8; 3]],
            sigma: 0.1,
            stay: 0.98,
        }
    }
}

impl TwoStateGenerator {
    pub fn sample(&self, n: usize, seed: u64) -> (Vec<usize>, Vec<MetricSample>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = usize::from(rng.random::<f64>() < 0.5);
        let mut states = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 && rng.random::<f64>() >= self.stay {
                state = 1 - state;
            }
            let mut v = [0.0; 3];
            for d in 0..3 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v[d] = (self.means[state][d] + self.sigma * z).clamp(0.0, 1.0);
            }
            states.push(state);
            obs.push(MetricSample::from_vector(k as u64 * 500, v).unwrap());
        }
        (states, obs)
    }
}

/// Smallest distance between `means` and `truth` over both state orders.
pub fn mean_error_up_to_permutation(means: &[Vec<f64>], truth: &[[f64; 3]; 2]) -> f64 {
    let err = |order: [usize; 2]| {
        (0..2)
            .flat_map(|i| (0..3).map(move |d| (i, d)))
            .map(|(i, d)| (means[order[i]][d] - truth[i][d]).abs())
            .fold(0.0, f64::max)
    };
    err([0, 1]).min(err([1, 0]))
}

/// Observations drawn from `model` itself so densities stay representable.
pub fn sample_from_model(model: &GaussianHmm, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let pick = |p: &[f64], rng: &mut ChaCha8Rng| usize::from(rng.random::<f64>() >= p[0]);
    let mut state = pick(&model.pi, rng);
    (0..n)
        .map(|k| {
            if k > 0 {
                state = pick(&model.trans[state], rng);
            }
            let l = model.covs[state].clone().cholesky().unwrap().l();
            let z = nalgebra::DVector::from_fn(3, |_, _| StandardNormal.sample(rng));
            let x = l * z;
            [0, 1, 2].map(|d| (model.means[state][d] + x[d]).clamp(0.0, 1.0))
        })
        .collect()
}
