use super::config::{SessionConfig, SessionMode};
use super::PipelineError;
use crate::hmm::{
    assign_thoughts, baum_welch, kmeans_init, Assignment, GaussianHmm, ThoughtDecoder, ThoughtSchedule, TrainingReport,
};
use crate::signal_io::MetricSample;
use crate::Thought;

/// Shortest accepted training recording.
pub const MIN_TRAINING_S: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: GaussianHmm,
    pub report: TrainingReport,
    pub assignment: Assignment,
}

/// K-means initialization, Baum-Welch and thought assignment over the
/// metric stream of a training recording; saves the model when the config
/// names a model path.
pub fn run_training_session(
    config: &SessionConfig,
    schedule: &ThoughtSchedule,
) -> Result<TrainingOutcome, PipelineError> {
    if config.mode != SessionMode::Train {
        return Err(PipelineError::Config("training needs mode = \"train\"".into()));
    }
    config.validate()?;
    schedule.validate()?;
    let trace = config.signals()?.expect("validated");
    let samples: Vec<MetricSample> = trace.metric_samples().copied().collect();
    let covered_s = samples.len() as f64 / trace.header.metric_rate_hz;
    if covered_s + 1e-9 < MIN_TRAINING_S {
        return Err(PipelineError::Validation(format!(
            "training needs {MIN_TRAINING_S} s of metrics, trace has {covered_s:.1} s"
        )));
    }
    for thought in Thought::ALL {
        let visits = schedule.visits(thought);
        if visits < 2 {
            return Err(PipelineError::Validation(format!(
                "schedule visits {thought} {visits} time(s); at least 2 needed"
            )));
        }
    }
    let (first, last) = (samples[0].t_ms, samples[samples.len() - 1].t_ms);
    if schedule.start_ms() > first || schedule.end_ms() < last {
        return Err(PipelineError::Validation(format!(
            "schedule covers {}..{} ms but metrics span {first}..{last} ms",
            schedule.start_ms(),
            schedule.end_ms()
        )));
    }

    let init = kmeans_init(&samples, Thought::ALL.len(), config.seed)?;
    let (mut model, mut report) = baum_welch(&init, &samples, config.max_iter, config.tol)?;
    let assignment = assign_thoughts(&report, schedule, config.agreement_floor)?;
    if assignment.tie {
        report
            .warnings
            .push("state/thought agreement tied; kept the identity assignment".into());
    }
    model.thought_assignment = Some(assignment.thoughts.clone());
    model.validate()?;
    if let Some(path) = &config.model {
        model.save(path)?;
    }
    Ok(TrainingOutcome {
        model,
        report,
        assignment,
    })
}

/// Fraction of samples whose online estimate matches the schedule.
pub fn decode_agreement(
    model: &GaussianHmm,
    samples: &[MetricSample],
    schedule: &ThoughtSchedule,
) -> Result<f64, PipelineError> {
    let mut decoder = ThoughtDecoder::new(model.clone())?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for s in samples {
        let estimate = decoder.step(s)?;
        if let Some(expected) = schedule.label_at(s.t_ms) {
            total += 1;
            hits += usize::from(estimate.thought == Some(expected));
        }
    }
    if total == 0 {
        return Err(PipelineError::Validation("schedule covers no sample".into()));
    }
    Ok(hits as f64 / total as f64)
}
