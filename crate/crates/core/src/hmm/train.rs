use nalgebra::DMatrix;

use super::model::{floor_covariance, GaussianHmm};
use super::{HmmError, COV_FLOOR};
use crate::signal_io::MetricSample;

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Smoothed state posteriors of one observation sequence.
#[derive(Debug, Clone)]
pub struct Posteriors {
    /// `gamma[t][i] = P(state i at t | all observations)`.
    pub gamma: Vec<Vec<f64>>,
    /// Expected transition counts, summed over time.
    pub transitions: Vec<Vec<f64>>,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm parameter change of the last update.
    pub final_change: f64,
    /// Log-likelihood of the model entering each iteration, then of the
    /// returned model.
    pub log_likelihoods: Vec<f64>,
    /// Smoothed posteriors under the returned model.
    pub gamma: Vec<Vec<f64>>,
    pub times_ms: Vec<u64>,
    pub warnings: Vec<String>,
}

/// Scaled forward-backward pass.
///
/// Emissions are shifted by their per-step maximum log density before
/// exponentiation, so a sequence never underflows as long as one state
/// explains each observation.
pub fn forward_backward(model: &GaussianHmm, observations: &[[f64; 3]]) -> Result<Posteriors, HmmError> {
    let m = model.states();
    let n = observations.len();
    let fail = |what: String| HmmError::NumericalFailure { iteration: 0, what };
    if n == 0 {
        return Err(HmmError::TooFewObservations { needed: 1, got: 0 });
    }
    let emissions = model.emissions()?;

    let mut shift = vec![0.0; n];
    let mut lik = vec![vec![0.0; m]; n];
    for (t, o) in observations.iter().enumerate() {
        let logs: Vec<f64> = emissions.iter().map(|e| e.log_density(o)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(fail(format!("emission log density {top} at t={t}")));
        }
        shift[t] = top;
        for (slot, lg) in lik[t].iter_mut().zip(&logs) {
            *slot = (lg - top).exp();
        }
    }

    let mut alpha = vec![vec![0.0; m]; n];
    let mut scale = vec![0.0; n];
    for t in 0..n {
        for j in 0..m {
            let prior = if t == 0 {
                model.pi[j]
            } else {
                (0..m).map(|i| alpha[t - 1][i] * model.trans[i][j]).sum()
            };
            alpha[t][j] = prior * lik[t][j];
        }
        let c: f64 = alpha[t].iter().sum();
        if !(c > 0.0 && c.is_finite()) {
            return Err(fail(format!("forward normalizer {c} at t={t}")));
        }
        scale[t] = c;
        alpha[t].iter_mut().for_each(|a| *a /= c);
    }

    let mut beta = vec![vec![1.0; m]; n];
    for t in (0..n - 1).rev() {
        for i in 0..m {
            beta[t][i] = (0..m)
                .map(|j| model.trans[i][j] * lik[t + 1][j] * beta[t + 1][j])
                .sum::<f64>()
                / scale[t + 1];
        }
    }

    let mut transitions = vec![vec![0.0; m]; m];
    for t in 0..n - 1 {
        for (i, row) in transitions.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += alpha[t][i] * model.trans[i][j] * lik[t + 1][j] * beta[t + 1][j] / scale[t + 1];
            }
        }
    }
    let gamma: Vec<Vec<f64>> = alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| {
            let g: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|v| v / s).collect()
        })
        .collect();
    if gamma.iter().flatten().any(|g| !g.is_finite()) {
        return Err(fail("non-finite state posterior".into()));
    }
    let log_likelihood = scale.iter().zip(&shift).map(|(c, s)| c.ln() + s).sum();
    Ok(Posteriors {
        gamma,
        transitions,
        log_likelihood,
    })
}

fn reestimate(
    model: &GaussianHmm,
    post: &Posteriors,
    observations: &[[f64; 3]],
    iteration: usize,
    warnings: &mut Vec<String>,
) -> GaussianHmm {
    let m = model.states();
    let l = model.dim();
    let mut next = model.clone();
    next.pi = post.gamma[0].clone();

    for (i, row) in post.transitions.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            next.trans[i] = row.iter().map(|v| v / total).collect();
        }
    }

    for i in 0..m {
        let weight: f64 = post.gamma.iter().map(|g| g[i]).sum();
        if weight <= 0.0 {
            warnings.push(format!("iteration {iteration}: state {i} has no posterior mass; kept its emission"));
            continue;
        }
        let mut mean = vec![0.0; l];
        for (g, o) in post.gamma.iter().zip(observations) {
            for (slot, v) in mean.iter_mut().zip(o) {
                *slot += g[i] * v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= weight);
        let mut cov = DMatrix::zeros(l, l);
        for (g, o) in post.gamma.iter().zip(observations) {
            for a in 0..l {
                let da = o[a] - mean[a];
                for b in a..l {
                    cov[(a, b)] += g[i] * da * (o[b] - mean[b]);
                }
            }
        }
        for a in 0..l {
            for b in a..l {
                cov[(a, b)] /= weight;
                cov[(b, a)] = cov[(a, b)];
            }
        }
        if floor_covariance(&mut cov, COV_FLOOR) {
            warnings.push(format!(
                "iteration {iteration}: covariance of state {i} collapsed; eigenvalues floored at {COV_FLOOR:e}"
            ));
        }
        next.means[i] = mean;
        next.covs[i] = cov;
    }
    next
}

fn has_nan(model: &GaussianHmm) -> bool {
    model.pi.iter().chain(model.trans.iter().flatten()).chain(model.means.iter().flatten()).any(|v| v.is_nan())
        || model.covs.iter().any(|c| c.iter().any(|v| v.is_nan()))
}

/// EM re-estimation until the max-norm parameter change drops below `tol`
/// or `max_iter` updates have run.
pub fn baum_welch(
    init: &GaussianHmm,
    samples: &[MetricSample],
    max_iter: usize,
    tol: f64,
) -> Result<(GaussianHmm, TrainingReport), HmmError> {
    init.validate()?;
    let m = init.states();
    if init.dim() != 3 {
        return Err(HmmError::InvalidModel(format!("model dimension {} but metrics are 3-vectors", init.dim())));
    }
    if samples.len() < 2 * m {
        return Err(HmmError::TooFewObservations {
            needed: 2 * m,
            got: samples.len(),
        });
    }
    let observations: Vec<[f64; 3]> = samples.iter().map(MetricSample::vector).collect();
    let at = |iteration: usize| {
        move |e: HmmError| match e {
            HmmError::NumericalFailure { what, .. } => HmmError::NumericalFailure { iteration, what },
            other => other,
        }
    };

    let mut model = init.clone();
    let mut warnings = Vec::new();
    let mut log_likelihoods = Vec::new();
    let mut iterations = 0;
    let mut final_change = f64::INFINITY;
    let mut converged = false;
    for iteration in 1..=max_iter {
        let post = forward_backward(&model, &observations).map_err(at(iteration))?;
        log_likelihoods.push(post.log_likelihood);
        let next = reestimate(&model, &post, &observations, iteration, &mut warnings);
        if has_nan(&next) {
            return Err(HmmError::NumericalFailure {
                iteration,
                what: "NaN in re-estimated parameters".into(),
            });
        }
        final_change = next.max_change(&model);
        model = next;
        iterations = iteration;
        if final_change < tol {
            converged = true;
            break;
        }
    }
    let post = forward_backward(&model, &observations).map_err(at(iterations + 1))?;
    log_likelihoods.push(post.log_likelihood);
    model.validate()?;
    if !converged && max_iter > 0 {
        log::warn!("Baum-Welch stopped after {iterations} iterations with change {final_change:e}");
    }
    Ok((
        model,
        TrainingReport {
            iterations,
            converged,
            final_change,
            log_likelihoods,
            gamma: post.gamma,
            times_ms: samples.iter().map(|s| s.t_ms).collect(),
            warnings,
        },
    ))
}
