use std::time::{Duration, Instant};

use neuroswarm::signal_io::{
    parse_trace, quantize, read_trace, replay, synthesize, write_trace, EogFrame, MetricSample, MetricSegment, Record, SaccadeEvent,
    SynthSpec, TraceFile, TraceHeader, REPLAY_JITTER_MS,
};
use neuroswarm::Direction;
use proptest::prelude::*;

#[test]
fn a_minute_at_128_hz_is_7680_frames() {
    let mut spec = SynthSpec::new(60.0);
    spec.metrics.push(MetricSegment {
        start_s: 0.0,
        end_s: 60.0,
        mean: [0.5; 3],
        sigma: 0.1,
    });
    let trace = synthesize(&spec, 0).unwrap();
    assert_eq!(trace.eog_frames().count(), 7680);
    assert_eq!(trace.metric_samples().count(), 120);
}

#[test]
fn batch_replay_preserves_order_and_count() {
    let trace = synthesize(&SynthSpec::new(60.0), 1).unwrap();
    let records = trace.records.clone();
    let started = Instant::now();
    let delivered: Vec<Record> = replay(trace, 0.0).unwrap().collect();
    assert!(started.elapsed() < Duration::from_millis(500));
    assert_eq!(delivered.iter().filter(|r| matches!(r, Record::Eog(_))).count(), 7680);
    assert_eq!(delivered, records);
}

#[test]
fn double_speed_replay_takes_half_the_trace_time() {
    let trace = synthesize(&SynthSpec::new(10.0), 2).unwrap();
    let span_s = trace.records.last().unwrap().t_ms() as f64 / 1000.0;
    let started = Instant::now();
    let n = replay(trace, 2.0).unwrap().count();
    let wall = started.elapsed().as_secs_f64();
    assert_eq!(n, 1280);
    assert!((wall - span_s / 2.0).abs() <= 0.1 * span_s / 2.0, "wall {wall} s for {span_s} s");
}

#[test]
fn real_time_delivery_gap_tracks_timestamps() {
    let trace = synthesize(&SynthSpec::new(1.0), 3).unwrap();
    let mut stream = replay(trace, 1.0).unwrap();
    let first = stream.next().unwrap();
    let t0 = Instant::now();
    let (second, gap) = loop {
        let r = stream.next().unwrap();
        if r.t_ms() > first.t_ms() {
            break (r, t0.elapsed());
        }
    };
    let want_ms = (second.t_ms() - first.t_ms()) as f64;
    let got_ms = gap.as_secs_f64() * 1000.0;
    assert!((got_ms - want_ms).abs() <= REPLAY_JITTER_MS, "gap {got_ms} ms, want {want_ms} ms");
}

#[test]
fn negative_speed_is_rejected() {
    assert!(replay(TraceFile::default(), -1.0).is_err());
}

#[test]
fn left_saccade_raises_f7_and_lowers_f8() {
    let mut spec = SynthSpec::new(3.0);
    spec.saccades.push(SaccadeEvent {
        time_s: 1.0,
        direction: Direction::Left,
        amplitude_uv: 150.0,
        width_ms: 250.0,
    });
    let trace = synthesize(&spec, 0).unwrap();
    let (f7, f8) = trace.eog_frames().fold((0.0f64, 0.0f64), |(hi, lo), f| {
        (hi.max(f.potentials[2]), lo.min(f.potentials[3]))
    });
    assert!((f7 - 150.0).abs() < 1.0, "{f7}");
    assert!((f8 + 150.0).abs() < 1.0, "{f8}");
}

#[test]
fn trace_files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SynthSpec::new(8.0);
    spec.noise_sigma_uv = 12.0;
    spec.saccades.push(SaccadeEvent {
        time_s: 6.0,
        direction: Direction::Up,
        amplitude_uv: 110.0,
        width_ms: 250.0,
    });
    let trace = synthesize(&spec, 9).unwrap();
    let path = dir.path().join("t.trace");
    write_trace(&path, &trace).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.to_text(), std::fs::read_to_string(&path).unwrap());
}

fn trace_strategy() -> impl Strategy<Value = TraceFile> {
    let eog = prop::collection::vec((1u64..20, prop::array::uniform4(-5000.0f64..5000.0)), 0..40);
    let metrics = prop::collection::vec((1u64..600, prop::array::uniform3(0.0f64..=1.0)), 0..10);
    (eog, metrics).prop_map(|(eog, metrics)| {
        let mut records = Vec::new();
        let mut t = 0;
        for (dt, p) in eog {
            t += dt;
            records.push(Record::Eog(EogFrame {
                t_ms: t,
                potentials: p.map(quantize),
            }));
        }
        let mut t = 0;
        for (dt, m) in metrics {
            t += dt;
            let [e, x, md] = m.map(quantize);
            records.push(Record::Metric(MetricSample::new(t, e, x, md).unwrap()));
        }
        records.sort_by_key(|r| (r.t_ms(), matches!(r, Record::Metric(_))));
        TraceFile {
            header: TraceHeader::default(),
            records,
        }
    })
}

proptest! {
    #[test]
    fn parse_inverts_to_text(trace in trace_strategy()) {
        let text = trace.to_text();
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn replay_never_reorders(trace in trace_strategy()) {
        let records = trace.records.clone();
        let delivered: Vec<Record> = replay(trace, 0.0).unwrap().collect();
        prop_assert_eq!(delivered, records);
    }
}
