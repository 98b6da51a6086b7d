use std::time::{Duration, Instant};

use super::{Record, TraceError, TraceFile};

/// Worst-case lateness of a paced delivery relative to its schedule, ms.
pub const REPLAY_JITTER_MS: f64 = 3.0;

/// Iterator delivering trace records in file order, paced so that record
/// `k` is released `(t_k - t_0) / speed` after the first. Speed 0 releases
/// everything immediately.
pub struct Replay {
    records: std::vec::IntoIter<Record>,
    speed: f64,
    origin: Option<(Instant, u64)>,
}

pub fn replay(trace: TraceFile, speed: f64) -> Result<Replay, TraceError> {
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(TraceError::Speed(speed));
    }
    Ok(Replay {
        records: trace.records.into_iter(),
        speed,
        origin: None,
    })
}

impl Replay {
    pub fn is_batch(&self) -> bool {
        self.speed == 0.0
    }
}

impl Iterator for Replay {
    type Item = Record;

    fn next(&mut self) -> Option<Record> {
        let record = self.records.next()?;
        if self.speed > 0.0 {
            let (start, t0) = *self.origin.get_or_insert_with(|| (Instant::now(), record.t_ms()));
            let offset_ms = (record.t_ms() - t0) as f64 / self.speed;
            let due = start + Duration::from_secs_f64(offset_ms / 1000.0);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        Some(record)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.records.size_hint()
    }
}
