use std::path::Path;
use std::time::{Duration, Instant};

use neuroswarm::hmm::{GaussianHmm, ThoughtSchedule};
use neuroswarm::pipeline::{
    decode_agreement, read_recording, record_frames, run_control_session, run_training_session, ClientMessage,
    FrameRecord, LiveOptions, LiveSession, MissionPlan, ParamSource, SessionConfig, SessionMode,
};
use neuroswarm::signal_io::{synthesize, MetricSegment, SynthSpec};
use neuroswarm::swarm::{equilibrium_distance, Formation, GainPreset};
use neuroswarm::{Direction, Thought};
use sha2::{Digest, Sha256};

fn train_model(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("model-{seed}.txt"));
    let config = MissionPlan::rectangle(30.0).training_config(&path, seed);
    run_training_session(&config, config.schedule.as_ref().unwrap()).unwrap();
    path
}

fn file_hash(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn training_reproduces_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let plan = MissionPlan::rectangle(30.0);
    let config = plan.training_config(dir.path().join("model.txt"), 7);
    let schedule = config.schedule.clone().unwrap();
    let outcome = run_training_session(&config, &schedule).unwrap();
    assert!(outcome.assignment.agreement >= 0.95, "{:?}", outcome.assignment);

    let trace = config.signals().unwrap().unwrap();
    let samples: Vec<_> = trace.metric_samples().copied().collect();
    let model = GaussianHmm::load(dir.path().join("model.txt")).unwrap();
    let agreement = decode_agreement(&model, &samples, &schedule).unwrap();
    assert!(agreement >= 0.95, "agreement {agreement}");
}

#[test]
fn single_label_schedule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = MissionPlan::rectangle(30.0).training_config(dir.path().join("m.txt"), 1);
    let one_label = ThoughtSchedule::alternating(&[Thought::Aggregate; 4], 15_000);
    let err = run_training_session(&config, &one_label).unwrap_err();
    assert_eq!(err.kind(), neuroswarm::pipeline::FailureKind::Validation, "{err}");
}

#[test]
fn short_or_uncovered_training_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let plan = MissionPlan::rectangle(30.0);
    let mut config = plan.training_config(dir.path().join("m.txt"), 1);
    let short = ThoughtSchedule::alternating(&[Thought::Disperse, Thought::Aggregate, Thought::Disperse, Thought::Aggregate], 5_000);
    config.synth = Some(plan.training_spec(&short));
    assert!(run_training_session(&config, &short).is_err());

    let config = plan.training_config(dir.path().join("m.txt"), 1);
    let shorter_schedule =
        ThoughtSchedule::alternating(&[Thought::Disperse, Thought::Aggregate, Thought::Disperse, Thought::Aggregate], 10_000);
    assert!(run_training_session(&config, &shorter_schedule).is_err());
}

#[test]
fn retraining_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_model(dir.path(), 3);
    let b = dir.path().join("again.txt");
    std::fs::copy(&a, &b).unwrap();
    let a = train_model(dir.path(), 3);
    assert_eq!(file_hash(&a), file_hash(&b));
}

fn silent_aggregate_config(model: &Path, robots: usize, duration_s: f64) -> SessionConfig {
    let mut spec = SynthSpec::new(duration_s);
    spec.metrics.push(MetricSegment {
        start_s: 0.0,
        end_s: duration_s,
        mean: [0.2; 3],
        sigma: 0.05,
    });
    SessionConfig {
        mode: SessionMode::Replay,
        model: Some(model.to_path_buf()),
        robots,
        initial_thought: Thought::Disperse,
        formation: Formation::Grid {
            center: [0.0, 0.0],
            spacing: 2.0,
        },
        gains: GainPreset::hardware(),
        synth: Some(spec),
        ..SessionConfig::default()
    }
}

#[test]
fn silent_aggregate_trace_converges_to_the_aggregate_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let config = silent_aggregate_config(&model, 2, 300.0);
    let frames = run_control_session(&config).unwrap();
    assert_eq!(frames.len(), 9000);
    let want = GainPreset::hardware().gains(Thought::Aggregate, 2).unwrap();
    for f in &frames[30..] {
        assert_eq!(f.theta.v, [0.0, 0.0]);
        assert_eq!((f.theta.a, f.theta.b), (want.a, want.b));
        assert_eq!(f.eye, None);
    }
    let last = frames.last().unwrap();
    let p = last.positions();
    let d = (p[0][0] - p[1][0]).hypot(p[0][1] - p[1][1]);
    let delta = equilibrium_distance(want.a, want.b, config.robot_radius);
    assert!((d - delta).abs() < 0.01 * delta, "d={d} delta={delta}");
}

#[test]
fn operator_left_overrides_a_silent_stream() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let mut config = silent_aggregate_config(&model, 5, 10.0);
    config.drive_speed = 0.1;
    let mut control = neuroswarm::pipeline::ControlLoop::new(&config, GaussianHmm::load(&model).unwrap()).unwrap();
    control.advance(false).unwrap();
    control.command(&ClientMessage::Eye { dir: Direction::Left }).unwrap();
    let frame = control.advance(false).unwrap();
    assert_eq!(frame.theta.v, [-0.1, 0.0]);
    assert_eq!(frame.theta.source, ParamSource::OperatorInjected);
}

#[test]
fn recordings_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    assert_eq!(record_frames(&[], &empty, "h0").unwrap(), 0);
    let back = read_recording(&empty).unwrap();
    assert!(back.complete && back.frames.is_empty());
    assert_eq!(back.header.config_hash, "h0");

    let model = train_model(dir.path(), 5);
    let mut config = silent_aggregate_config(&model, 6, 40.0);
    config.formation = Formation::Spiral {
        center: [1.0, -2.0],
        spacing: 0.7,
    };
    let frames: Vec<FrameRecord> = run_control_session(&config).unwrap()[..1000].to_vec();
    let path = dir.path().join("run.jsonl");
    assert_eq!(record_frames(&frames, &path, &config.hash()).unwrap(), 1000);
    let back = read_recording(&path).unwrap();
    assert!(back.complete);
    assert_eq!(back.header.config_hash, config.hash());
    assert_eq!(back.frames, frames);
}

#[test]
fn truncated_recording_is_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let config = silent_aggregate_config(&model, 3, 1.0);
    let frames = run_control_session(&config).unwrap();
    let path = dir.path().join("run.jsonl");
    record_frames(&frames, &path, "h").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let cut: Vec<&str> = text.lines().take(5).collect();
    std::fs::write(&path, cut.join("\n")).unwrap();
    let back = read_recording(&path).unwrap();
    assert!(!back.complete);
    assert_eq!(back.frames.len(), 4);
}

#[test]
fn batch_sessions_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let plan = MissionPlan::rectangle(10.0);
    let mut config = plan.session_config(&model, 11);
    config.robots = 16;
    let a = run_control_session(&config).unwrap();
    let b = run_control_session(&config).unwrap();
    let (pa, pb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    record_frames(&a, &pa, &config.hash()).unwrap();
    record_frames(&b, &pb, &config.hash()).unwrap();
    assert_eq!(file_hash(&pa), file_hash(&pb));
}

/// Every parameter change in a batch run is explained by a decoded event.
#[test]
fn decoded_parameters_follow_the_script() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let plan = MissionPlan::rectangle(10.0);
    let mut config = plan.session_config(&model, 2);
    config.robots = 8;
    let frames = run_control_session(&config).unwrap();
    let drive = |f: &FrameRecord| f.theta.v;
    let mut changes = 0;
    for w in frames.windows(2) {
        if drive(&w[0]) != drive(&w[1]) {
            changes += 1;
            assert_eq!(w[1].theta.source, ParamSource::Decoded);
            assert!(w[1].theta.t_ms <= w[1].t_ms);
        }
    }
    assert_eq!(changes, 4);
    // Drive follows each leg's saccade within one decoding window plus a tick.
    for (leg, (start, _)) in plan.legs.iter().zip(plan.leg_intervals()) {
        let after = frames.iter().find(|f| f.t_ms as f64 >= start * 1000.0 + 1500.0).unwrap();
        assert_eq!(after.eye, Some(leg.direction), "leg starting at {start}");
    }
}

#[test]
fn live_session_keeps_the_loop_rate() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let mut config = silent_aggregate_config(&model, 128, 3.0);
    config.mode = SessionMode::LiveSim;
    config.formation = Formation::Grid {
        center: [0.0, 0.0],
        spacing: 0.5,
    };
    let session = LiveSession::start(&config, LiveOptions::default()).unwrap();
    let frames = session.subscribe();
    let summary = session.join().unwrap();
    let rate = summary.frames as f64 / summary.wall_s;
    assert!((rate - 30.0).abs() <= 3.0, "rate {rate} over {} s", summary.wall_s);
    assert_eq!(summary.frames, 90);
    assert_eq!(summary.underruns, 0);
    let received: Vec<_> = frames.try_iter().collect();
    assert_eq!(received.len(), 90);
    assert!(received.windows(2).all(|w| w[0].tick + 1 == w[1].tick));
}

#[test]
fn live_session_applies_operator_commands() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let mut config = silent_aggregate_config(&model, 4, 60.0);
    config.mode = SessionMode::LiveSim;
    let session = LiveSession::start(&config, LiveOptions::default()).unwrap();
    let frames = session.subscribe();
    frames.recv_timeout(Duration::from_secs(2)).unwrap();
    session.commands().send(ClientMessage::Eye { dir: Direction::Up }).unwrap();
    let deadline = Instant::now() + Duration::from_secs(2);
    let mut seen = None;
    while Instant::now() < deadline {
        let f = frames.recv_timeout(Duration::from_secs(1)).unwrap();
        if f.theta.source == ParamSource::OperatorInjected {
            seen = Some(f);
            break;
        }
    }
    let f = seen.expect("command applied");
    assert_eq!(f.theta.v, [0.0, config.drive_speed]);
    session.stop();
    session.join().unwrap();
}

#[test]
fn speeded_live_replay_finishes_early() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_model(dir.path(), 5);
    let mut config = silent_aggregate_config(&model, 2, 4.0);
    config.mode = SessionMode::LiveSim;
    let options = LiveOptions {
        replay_speed: 2.0,
        duration_s: None,
    };
    let summary = LiveSession::start(&config, options).unwrap().join().unwrap();
    assert!((summary.wall_s - 2.0).abs() < 0.2, "wall {}", summary.wall_s);
    assert_eq!(summary.frames, 120);
}

#[test]
fn synthesized_session_signals_are_seeded() {
    let spec = MissionPlan::rectangle(10.0).synth_spec();
    assert_eq!(synthesize(&spec, 4).unwrap(), synthesize(&spec, 4).unwrap());
    assert_ne!(synthesize(&spec, 4).unwrap(), synthesize(&spec, 5).unwrap());
}
