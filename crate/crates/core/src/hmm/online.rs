use serde::{Deserialize, Serialize};

use super::model::{Emission, GaussianHmm};
use super::HmmError;
use crate::signal_io::MetricSample;
use crate::Thought;

/// Below this log density `exp` returns zero.
const LOG_UNDERFLOW: f64 = -745.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtEstimate {
    pub t_ms: u64,
    pub state: usize,
    pub posterior: Vec<f64>,
    pub thought: Option<Thought>,
    /// Every state's emission density underflowed; the update used a
    /// uniform likelihood.
    #[serde(default)]
    pub low_confidence: bool,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn filter_update(
    model: &GaussianHmm,
    emissions: &[Emission],
    prev: Option<&[f64]>,
    sample: &MetricSample,
) -> Result<ThoughtEstimate, HmmError> {
    let m = model.states();
    let prior: Vec<f64> = match prev {
        None => model.pi.clone(),
        Some(p) => {
            if p.len() != m {
                return Err(HmmError::InvalidModel(format!("posterior of length {} for {m} states", p.len())));
            }
            (0..m).map(|j| (0..m).map(|i| p[i] * model.trans[i][j]).sum()).collect()
        }
    };
    let o = sample.vector();
    let logs: Vec<f64> = emissions.iter().map(|e| e.log_density(&o)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut low_confidence = !(top.is_finite() && top > LOG_UNDERFLOW);
    let mut weights: Vec<f64> = if low_confidence {
        prior.clone()
    } else {
        prior.iter().zip(&logs).map(|(p, lg)| p * (lg - top).exp()).collect()
    };
    let mut total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        low_confidence = true;
        weights = prior;
        total = weights.iter().sum();
    }
    let posterior: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let state = argmax(&posterior);
    Ok(ThoughtEstimate {
        t_ms: sample.t_ms,
        state,
        thought: model.thought_of(state),
        posterior,
        low_confidence,
    })
}

/// One normalized forward update. `prev = None` starts from `pi`.
pub fn forward_step(
    model: &GaussianHmm,
    prev: Option<&[f64]>,
    sample: &MetricSample,
) -> Result<ThoughtEstimate, HmmError> {
    filter_update(model, &model.emissions()?, prev, sample)
}

/// Streaming thought estimator holding the running posterior.
#[derive(Debug, Clone)]
pub struct ThoughtDecoder {
    model: GaussianHmm,
    emissions: Vec<Emission>,
    posterior: Option<Vec<f64>>,
}

impl ThoughtDecoder {
    pub fn new(model: GaussianHmm) -> Result<Self, HmmError> {
        model.validate()?;
        let emissions = model.emissions()?;
        Ok(Self {
            model,
            emissions,
            posterior: None,
        })
    }

    pub fn model(&self) -> &GaussianHmm {
        &self.model
    }

    pub fn posterior(&self) -> Option<&[f64]> {
        self.posterior.as_deref()
    }

    pub fn step(&mut self, sample: &MetricSample) -> Result<ThoughtEstimate, HmmError> {
        let estimate = filter_update(&self.model, &self.emissions, self.posterior.as_deref(), sample)?;
        self.posterior = Some(estimate.posterior.clone());
        Ok(estimate)
    }

    pub fn reset(&mut self) {
        self.posterior = None;
    }
}
