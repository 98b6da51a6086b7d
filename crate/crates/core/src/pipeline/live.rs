use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, SyncSender, TryRecvError, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::config::{SessionConfig, SessionMode};
use super::control::{ControlLoop, FrameRecord};
use super::wire::ClientMessage;
use super::PipelineError;
use crate::hmm::GaussianHmm;
use crate::signal_io::{replay, Record};

/// Frames buffered per subscriber before new frames are dropped for it.
const SUBSCRIBER_BUFFER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveOptions {
    /// Trace seconds per wall second; must be positive.
    pub replay_speed: f64,
    /// Session length in trace seconds. Defaults to the configured
    /// duration, then the end of the trace; without either the session runs
    /// until stopped.
    pub duration_s: Option<f64>,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            replay_speed: 1.0,
            duration_s: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveSummary {
    pub frames: u64,
    pub underruns: u64,
    pub wall_s: f64,
    pub last_frame: Option<FrameRecord>,
}

type Subscribers = Arc<Mutex<Vec<SyncSender<Arc<FrameRecord>>>>>;

/// Cloneable handle for subscribing to a session's frames.
#[derive(Clone)]
pub struct FrameFeed(Subscribers);

impl FrameFeed {
    pub fn subscribe(&self) -> Receiver<Arc<FrameRecord>> {
        let (tx, rx) = mpsc::sync_channel(SUBSCRIBER_BUFFER);
        self.0.lock().expect("subscriber list").push(tx);
        rx
    }
}

/// A control session paced on the wall clock. Signal records stream in from
/// an ingestion thread; frames are broadcast to subscribers, and operator
/// commands are applied at the start of the next tick.
pub struct LiveSession {
    stop: Arc<AtomicBool>,
    commands: Sender<ClientMessage>,
    subscribers: Subscribers,
    sim: Option<JoinHandle<Result<LiveSummary, PipelineError>>>,
    ingest: Option<JoinHandle<()>>,
}

impl LiveSession {
    pub fn start(config: &SessionConfig, options: LiveOptions) -> Result<Self, PipelineError> {
        if config.mode == SessionMode::Train {
            return Err(PipelineError::Config("live sessions need mode replay or live-sim".into()));
        }
        if !(options.replay_speed > 0.0 && options.replay_speed.is_finite()) {
            return Err(PipelineError::Config(format!(
                "live replay speed must be positive, got {}",
                options.replay_speed
            )));
        }
        config.validate()?;
        let model = GaussianHmm::load(config.model.as_ref().expect("validated"))?;
        let control = ControlLoop::new(config, model)?;
        let trace = config.signals()?;
        let times: Vec<u64> = trace.iter().flat_map(|t| t.records.iter().map(Record::t_ms)).collect();
        let end_ms = options
            .duration_s
            .or(config.duration_s)
            .map(|d| d * 1000.0)
            .or_else(|| times.last().map(|&t| t as f64));

        let stop = Arc::new(AtomicBool::new(false));
        let subscribers: Subscribers = Arc::default();
        let (record_tx, record_rx) = mpsc::channel();
        let (command_tx, command_rx) = mpsc::channel();

        let ingest = trace.map(|trace| {
            let stop = Arc::clone(&stop);
            let paced = replay(trace, options.replay_speed).expect("speed checked");
            std::thread::spawn(move || {
                for record in paced {
                    if stop.load(Ordering::Relaxed) || record_tx.send(record).is_err() {
                        break;
                    }
                }
            })
        });
        let sim = {
            let ticker = Ticker {
                control,
                speed: options.replay_speed,
                end_ms,
                times,
                records: record_rx,
                commands: command_rx,
                subscribers: Arc::clone(&subscribers),
                stop: Arc::clone(&stop),
            };
            std::thread::spawn(move || ticker.run())
        };
        Ok(Self {
            stop,
            commands: command_tx,
            subscribers,
            sim: Some(sim),
            ingest,
        })
    }

    /// Receives every frame produced from now on. A subscriber that falls
    /// more than a buffer behind misses frames.
    pub fn subscribe(&self) -> Receiver<Arc<FrameRecord>> {
        self.feed().subscribe()
    }

    pub fn feed(&self) -> FrameFeed {
        FrameFeed(Arc::clone(&self.subscribers))
    }

    pub fn commands(&self) -> Sender<ClientMessage> {
        self.commands.clone()
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }

    pub fn is_finished(&self) -> bool {
        self.sim.as_ref().is_none_or(JoinHandle::is_finished)
    }

    /// Waits for the session to end.
    pub fn join(mut self) -> Result<LiveSummary, PipelineError> {
        let summary = self.sim.take().expect("joined once").join().expect("sim thread panicked");
        self.stop();
        if let Some(ingest) = self.ingest.take() {
            let _ = ingest.join();
        }
        summary
    }
}

impl Drop for LiveSession {
    fn drop(&mut self) {
        self.stop();
    }
}

struct Ticker {
    control: ControlLoop,
    speed: f64,
    end_ms: Option<f64>,
    /// Timestamps of every trace record, in delivery order.
    times: Vec<u64>,
    records: Receiver<Record>,
    commands: Receiver<ClientMessage>,
    subscribers: Subscribers,
    stop: Arc<AtomicBool>,
}

impl Ticker {
    fn run(mut self) -> Result<LiveSummary, PipelineError> {
        let started = Instant::now();
        let period_s = self.control.period_ms() / 1000.0;
        let mut pending = VecDeque::new();
        let mut received = 0usize;
        let mut ingest_done = self.times.is_empty();
        let mut summary = LiveSummary {
            frames: 0,
            underruns: 0,
            wall_s: 0.0,
            last_frame: None,
        };
        while !self.stop.load(Ordering::Relaxed) {
            let now = self.control.time_ms();
            if self.end_ms.is_some_and(|end| now >= end) {
                break;
            }
            let due = started + Duration::from_secs_f64(self.control.tick() as f64 * period_s / self.speed);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }

            loop {
                match self.records.try_recv() {
                    Ok(record) => {
                        pending.push_back(record);
                        received += 1;
                    }
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => {
                        ingest_done = true;
                        break;
                    }
                }
            }
            while let Some(record) = pending.front().filter(|r| r.t_ms() as f64 <= now) {
                self.control.ingest(record)?;
                pending.pop_front();
            }
            // A record more than one period overdue has not arrived.
            let overdue = self.times[received.min(self.times.len())..]
                .first()
                .is_some_and(|&t| (t as f64) + self.control.period_ms() < now);
            let underrun = !ingest_done && overdue;
            if ingest_done && pending.is_empty() {
                self.control.finish_signals();
            }

            while let Ok(message) = self.commands.try_recv() {
                if let Err(e) = self.control.command(&message) {
                    log::warn!("rejected operator command {message:?}: {e}");
                }
            }
            let frame = Arc::new(self.control.advance(underrun)?);
            summary.frames += 1;
            summary.underruns += u64::from(underrun);
            self.broadcast(&frame);
            summary.last_frame = Some((*frame).clone());
        }
        summary.wall_s = started.elapsed().as_secs_f64();
        // Dropping the senders tells subscribers the session is over.
        self.subscribers.lock().expect("subscriber list").clear();
        Ok(summary)
    }

    fn broadcast(&self, frame: &Arc<FrameRecord>) {
        let mut subscribers = self.subscribers.lock().expect("subscriber list");
        subscribers.retain(|tx| match tx.try_send(Arc::clone(frame)) {
            Ok(()) | Err(TrySendError::Full(_)) => true,
            Err(TrySendError::Disconnected(_)) => false,
        });
    }
}
