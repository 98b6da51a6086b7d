use std::time::{Duration, Instant};

use neuroswarm::pipeline::{server, LiveOptions, LiveSession, MissionPlan, SessionConfig, SessionMode};
use neuroswarm::swarm::Formation;
use serde_json::Value;
use tungstenite::Message;

fn live_config(dir: &std::path::Path) -> SessionConfig {
    let model = dir.join("model.txt");
    let training = MissionPlan::rectangle(30.0).training_config(&model, 1);
    neuroswarm::pipeline::run_training_session(&training, training.schedule.as_ref().unwrap()).unwrap();
    SessionConfig {
        mode: SessionMode::LiveSim,
        model: Some(model),
        robots: 3,
        drive_speed: 0.5,
        duration_s: Some(30.0),
        formation: Formation::Grid {
            center: [0.0, 0.0],
            spacing: 1.0,
        },
        ..SessionConfig::default()
    }
}

fn next_json(ws: &mut tungstenite::WebSocket<impl std::io::Read + std::io::Write>) -> Value {
    loop {
        if let Message::Text(text) = ws.read().unwrap() {
            return serde_json::from_str(text.as_str()).unwrap();
        }
    }
}

#[test]
fn websocket_clients_stream_frames_and_steer() {
    let dir = tempfile::tempdir().unwrap();
    let session = LiveSession::start(&live_config(dir.path()), LiveOptions::default()).unwrap();
    let server = server::serve("127.0.0.1:0", &session).unwrap();
    let url = format!("ws://{}", server.local_addr());
    let (mut ws, _) = tungstenite::connect(url.as_str()).unwrap();

    let frame = next_json(&mut ws);
    assert_eq!(frame["type"], "frame");
    assert_eq!(frame["robots"].as_array().unwrap().len(), 3);
    assert_eq!(frame["eye"], "None");
    for key in ["t_ms", "centroid", "theta", "thought"] {
        assert!(frame.get(key).is_some(), "missing {key}");
    }

    ws.send(Message::text(r#"{"type":"teleport"}"#)).unwrap();
    let deadline = Instant::now() + Duration::from_secs(3);
    let mut error = None;
    while Instant::now() < deadline {
        let msg = next_json(&mut ws);
        if msg["type"] == "error" {
            error = Some(msg);
            break;
        }
    }
    let error = error.expect("error reply");
    assert!(error["message"].as_str().unwrap().contains("teleport"));

    ws.send(Message::text(r#"{"type":"eye","dir":"Left","note":"ignored"}"#)).unwrap();
    let deadline = Instant::now() + Duration::from_secs(3);
    let mut steered = None;
    while Instant::now() < deadline {
        let msg = next_json(&mut ws);
        if msg["type"] == "frame" && msg["theta"]["source"] == "operator-injected" {
            steered = Some(msg);
            break;
        }
    }
    let steered = steered.expect("steered frame");
    assert_eq!(steered["eye"], "Left");
    assert_eq!(steered["theta"]["v"][0].as_f64(), Some(-0.5));

    ws.send(Message::text(r#"{"type":"halt"}"#)).unwrap();
    let deadline = Instant::now() + Duration::from_secs(3);
    let mut halted = false;
    while Instant::now() < deadline && !halted {
        let msg = next_json(&mut ws);
        halted = msg["type"] == "frame" && msg["theta"]["v"] == serde_json::json!([0.0, 0.0]);
    }
    assert!(halted);

    let _ = ws.close(None);
    session.stop();
    server.shutdown();
    let summary = session.join().unwrap();
    assert!(summary.frames > 0);
}

#[test]
fn a_closed_client_leaves_the_session_running() {
    let dir = tempfile::tempdir().unwrap();
    let session = LiveSession::start(&live_config(dir.path()), LiveOptions::default()).unwrap();
    let server = server::serve("127.0.0.1:0", &session).unwrap();
    let url = format!("ws://{}", server.local_addr());
    {
        let (mut ws, _) = tungstenite::connect(url.as_str()).unwrap();
        next_json(&mut ws);
        ws.close(None).unwrap();
    }
    let (mut ws, _) = tungstenite::connect(url.as_str()).unwrap();
    let a = next_json(&mut ws)["tick"].as_u64().unwrap();
    let b = next_json(&mut ws)["tick"].as_u64().unwrap();
    assert!(b > a);
    assert!(!session.is_finished());
    session.stop();
    server.shutdown();
    session.join().unwrap();
}
