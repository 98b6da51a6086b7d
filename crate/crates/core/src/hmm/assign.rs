use serde::{Deserialize, Serialize};

use super::{HmmError, TrainingReport};
use crate::Thought;

pub const DEFAULT_AGREEMENT_FLOOR: f64 = 0.6;

const TIE_TOL: f64 = 1e-12;

/// One interval `[start_ms, end_ms)` of the training protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start_ms: u64,
    pub end_ms: u64,
    pub thought: Thought,
}

/// The thought the user was asked to hold over time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThoughtSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl ThoughtSchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self, HmmError> {
        let schedule = Self { entries };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Back-to-back segments of `segment_ms` each, starting at 0.
    pub fn alternating(thoughts: &[Thought], segment_ms: u64) -> Self {
        Self {
            entries: thoughts
                .iter()
                .enumerate()
                .map(|(k, &thought)| ScheduleEntry {
                    start_ms: k as u64 * segment_ms,
                    end_ms: (k as u64 + 1) * segment_ms,
                    thought,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), HmmError> {
        if self.entries.is_empty() {
            return Err(HmmError::Schedule("empty schedule".into()));
        }
        for (k, e) in self.entries.iter().enumerate() {
            if e.start_ms >= e.end_ms {
                return Err(HmmError::Schedule(format!("entry {k} has empty interval")));
            }
            if k > 0 && e.start_ms < self.entries[k - 1].end_ms {
                return Err(HmmError::Schedule(format!("entry {k} overlaps or precedes entry {}", k - 1)));
            }
        }
        Ok(())
    }

    pub fn start_ms(&self) -> u64 {
        self.entries.first().map_or(0, |e| e.start_ms)
    }

    pub fn end_ms(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.end_ms)
    }

    /// The label at `t_ms`; the final end point belongs to the last entry.
    pub fn label_at(&self, t_ms: u64) -> Option<Thought> {
        let last = self.entries.last()?;
        if t_ms == last.end_ms {
            return Some(last.thought);
        }
        let k = self.entries.partition_point(|e| e.start_ms <= t_ms);
        let e = self.entries.get(k.checked_sub(1)?)?;
        (t_ms < e.end_ms).then_some(e.thought)
    }

    /// Number of maximal runs of `thought`.
    pub fn visits(&self, thought: Thought) -> usize {
        let mut runs = 0;
        let mut previous = None;
        for e in &self.entries {
            if e.thought == thought && previous != Some(thought) {
                runs += 1;
            }
            previous = Some(e.thought);
        }
        runs
    }
}

/// A state-to-thought mapping and how well it explains the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `thoughts[state]`.
    pub thoughts: Vec<Thought>,
    /// Mean posterior mass on the scheduled thought's state.
    pub agreement: f64,
    /// Another candidate scored equally and the identity order won.
    pub tie: bool,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    // Lexicographic, so the identity comes first.
    out.sort();
    out
}

/// Picks the state-to-thought bijection whose posteriors best match the
/// schedule, searching every permutation.
pub fn assign_thoughts(report: &TrainingReport, schedule: &ThoughtSchedule, floor: f64) -> Result<Assignment, HmmError> {
    schedule.validate()?;
    let m = report.gamma.first().map_or(0, Vec::len);
    if m != Thought::ALL.len() {
        return Err(HmmError::Schedule(format!(
            "{m} states cannot map one-to-one onto {} thoughts",
            Thought::ALL.len()
        )));
    }
    if report.times_ms.len() != report.gamma.len() || report.gamma.is_empty() {
        return Err(HmmError::Schedule("report has no timed posteriors".into()));
    }
    for thought in Thought::ALL {
        if schedule.visits(thought) == 0 {
            return Err(HmmError::Schedule(format!("schedule never visits {thought}")));
        }
    }
    let labels = report
        .times_ms
        .iter()
        .map(|&t| {
            schedule
                .label_at(t)
                .ok_or_else(|| HmmError::Schedule(format!("schedule does not cover t={t} ms")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut best: Option<Assignment> = None;
    for order in permutations(m) {
        // State `s` maps to `Thought::ALL[order[s]]`.
        let thoughts: Vec<Thought> = order.iter().map(|&k| Thought::ALL[k]).collect();
        let agreement = labels
            .iter()
            .zip(&report.gamma)
            .map(|(label, g)| {
                let state = thoughts.iter().position(|t| t == label).expect("bijection");
                g[state]
            })
            .sum::<f64>()
            / labels.len() as f64;
        match &mut best {
            None => {
                best = Some(Assignment {
                    thoughts,
                    agreement,
                    tie: false,
                })
            }
            Some(b) if agreement > b.agreement + TIE_TOL => {
                *b = Assignment {
                    thoughts,
                    agreement,
                    tie: false,
                }
            }
            Some(b) if (agreement - b.agreement).abs() <= TIE_TOL => b.tie = true,
            Some(_) => {}
        }
    }
    let best = best.expect("at least one permutation");
    if best.agreement < floor {
        return Err(HmmError::AmbiguousTraining {
            agreement: best.agreement,
            floor,
        });
    }
    Ok(best)
}
