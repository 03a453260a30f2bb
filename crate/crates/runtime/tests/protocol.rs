//! The HTTP + WebSocket service, exercised over real sockets.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use fizi_core::{load_layout, BackgroundModel, FrameRgb};
use fizi_runtime::config::Settings;
use fizi_runtime::run::{FrameLoop, RunSummary};
use fizi_runtime::learn::learn_background;
use fizi_runtime::source::{FrameSource, Pacer, SourceError, VecSource};
use fizi_runtime::synth::{self, Scene};
use fizi_runtime::{serve_ui, Pipeline, ServiceHandle, Sink};
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

/// Repeats a frame list until stopped, optionally paced.
struct LoopingSource {
    frames: Vec<FrameRgb>,
    next: usize,
    limit: Option<usize>,
    pacer: Option<Pacer>,
    stop: Arc<AtomicBool>,
}

impl FrameSource for LoopingSource {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        if self.stop.load(Ordering::Relaxed) || self.limit.is_some_and(|l| self.next >= l) {
            return Ok(None);
        }
        if let Some(p) = &mut self.pacer {
            p.wait();
        }
        let f = self.frames[self.next % self.frames.len()].clone();
        self.next += 1;
        Ok(Some(f))
    }
}

struct Harness {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: JoinHandle<(RunSummary, ServiceHandle)>,
}

impl Harness {
    fn finish(self) -> (RunSummary, ServiceHandle) {
        self.stop.store(true, Ordering::Relaxed);
        self.thread.join().unwrap()
    }
}

fn scene(color: [u8; 3]) -> Scene {
    Scene {
        noise: 0,
        blob_color: color,
        blob_radius: 8.0,
        ..Scene::bundled()
    }
}

/// Starts the service and a frame loop over `frames`. The loop waits for
/// `clients` connections before its first frame.
fn start(
    settings: Settings,
    frames: Vec<FrameRgb>,
    fps: Option<u32>,
    limit: Option<usize>,
    clients: usize,
) -> Harness {
    let svc = serve_ui("127.0.0.1:0".parse().unwrap(), None).unwrap();
    let addr = svc.local_addr();
    let stop = Arc::new(AtomicBool::new(false));
    let bg = model(&scene([0; 3]), 10);
    let pipeline =
        Pipeline::new(settings, load_layout(synth::BUNDLED_LAYOUT).unwrap(), Some(bg)).unwrap();
    let mut source = LoopingSource {
        frames,
        next: 0,
        limit,
        pacer: fps.map(Pacer::new),
        stop: stop.clone(),
    };
    let thread = std::thread::spawn(move || {
        let deadline = Instant::now() + Duration::from_secs(10);
        while svc.hub().client_count() < clients && Instant::now() < deadline {
            std::thread::sleep(Duration::from_millis(5));
        }
        let mut sink = Sink::with_connector(Box::new(|| {
            Ok(Box::new(std::io::sink()) as Box<dyn Write + Send>)
        }))
        .unwrap();
        let summary = FrameLoop::new(pipeline, 30)
            .run(&mut source, &mut sink, Some(&svc))
            .unwrap();
        (summary, svc)
    });
    Harness { addr, stop, thread }
}

fn model(scene: &Scene, n: usize) -> BackgroundModel {
    let mut source = VecSource::new(scene.learning_frames(n));
    learn_background(&mut source, n, 10, &Default::default()).unwrap()
}

async fn connect(addr: SocketAddr) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws"))
        .await
        .unwrap();
    ws
}

/// Next text message as JSON, skipping binary video messages.
async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("timed out waiting for a message")
            .expect("connection closed")
            .expect("websocket error");
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn next_of_type(ws: &mut Ws, kind: &str) -> Value {
    loop {
        let v = next_json(ws).await;
        if v["type"] == kind {
            return v;
        }
    }
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn set_params_is_echoed_and_applied_to_the_next_frame() {
    // channel spread 35: kept with S=30, rejected as gray with S=40
    let frames = scene([190, 160, 155]).sequence(&[Some((45.0, 22.0))]);
    let h = start(Settings::default(), frames, Some(30), None, 1);
    let mut ws = connect(h.addr).await;

    let layout = next_of_type(&mut ws, "layout").await;
    assert!(layout["xml"].as_str().unwrap().contains("throttle"));
    let before = loop {
        let s = next_of_type(&mut ws, "state").await;
        if s["mode"] == "running" {
            break s;
        }
    };
    assert_eq!(before["params"]["S"], json!(30));
    assert!(before["mask_pixels"].as_u64().unwrap() > 100, "{before}");

    send(&mut ws, json!({"type": "set_params", "params": {"S": 40}})).await;
    let sent_after = before["frame"].as_u64().unwrap();
    let echo = loop {
        let s = next_of_type(&mut ws, "state").await;
        if s["params"]["S"] == json!(40) {
            break s;
        }
        assert_eq!(s["params"]["S"], json!(30));
        assert!(s["mask_pixels"].as_u64().unwrap() > 100);
    };
    assert_eq!(echo["mask_pixels"], json!(0), "mask computed with the echoed S must be empty");
    println!(
        "echo at frame {} (last state seen before sending: frame {sent_after})",
        echo["frame"]
    );
    let next = next_of_type(&mut ws, "state").await;
    assert_eq!(next["params"]["S"], json!(40));
    assert_eq!(next["mask_pixels"], json!(0));
    drop(ws);
    h.finish();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn relearn_goes_through_learning_back_to_running_with_a_new_model() {
    let mut settings = Settings::default();
    settings.background.frames = 5;
    let frames = scene(synth::SKIN).sequence(&[Some((45.0, 22.0))]);
    let h = start(settings, frames, Some(60), None, 1);
    let mut ws = connect(h.addr).await;

    let first = loop {
        let s = next_of_type(&mut ws, "state").await;
        if s["mode"] == "running" {
            break s;
        }
    };
    let old = first["background"]["checksum"].as_str().unwrap().to_string();
    send(&mut ws, json!({"type": "relearn_background"})).await;

    let mut saw_learning = false;
    let mut notices = Vec::new();
    let after = loop {
        let v = next_json(&mut ws).await;
        match v["type"].as_str().unwrap() {
            "notice" => notices.push(v["kind"].as_str().unwrap().to_string()),
            "state" if v["mode"] == "learning" => saw_learning = true,
            "state" if saw_learning => break v,
            _ => {}
        }
    };
    assert_eq!(after["mode"], "running");
    let new = after["background"]["checksum"].as_str().unwrap();
    assert_ne!(new, old);
    assert_eq!(after["background"]["frames_learned"], json!(5));
    assert_eq!(notices, ["learning", "learned"]);
    drop(ws);
    h.finish();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_messages_get_errors_and_the_connection_stays_open() {
    let frames = scene(synth::SKIN).sequence(&[None]);
    let h = start(Settings::default(), frames, Some(60), None, 1);
    let mut ws = connect(h.addr).await;

    ws.send(Message::Text("this is not json".into())).await.unwrap();
    let err = next_of_type(&mut ws, "error").await;
    assert!(err["message"].as_str().unwrap().contains("malformed"), "{err}");

    send(&mut ws, json!({"type": "launch_missiles"})).await;
    next_of_type(&mut ws, "error").await;

    send(&mut ws, json!({"type": "set_params", "params": {"S": "forty"}})).await;
    let err = next_of_type(&mut ws, "error").await;
    assert!(err["message"].as_str().unwrap().contains('S'), "{err}");

    send(&mut ws, json!({"type": "set_params", "params": {"S": 35, "hue_lo": 900}})).await;
    next_of_type(&mut ws, "error").await;

    ws.send(Message::Binary(vec![1, 2, 3].into())).await.unwrap();
    next_of_type(&mut ws, "error").await;

    send(&mut ws, json!({"type": "set_params", "params": {"S": 35}})).await;
    loop {
        let s = next_of_type(&mut ws, "state").await;
        if s["params"]["S"] == json!(35) {
            assert_eq!(s["params"]["hue_lo"], json!(340.0));
            break;
        }
    }
    drop(ws);
    h.finish();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn set_layout_replaces_zones_and_rejects_bad_documents() {
    let frames = scene(synth::SKIN).sequence(&[None]);
    let h = start(Settings::default(), frames, Some(60), None, 1);
    let mut ws = connect(h.addr).await;
    next_of_type(&mut ws, "layout").await;

    send(&mut ws, json!({"type": "set_layout", "xml": "<interface><zone id=\"go\" type=\"button\" x=\"1\" y=\"1\" w=\"9\" h=\"9\" on_click=\"action:quit\"/></interface>"})).await;
    let layout = next_of_type(&mut ws, "layout").await;
    assert!(layout["xml"].as_str().unwrap().contains("id=\"go\""), "{layout}");

    for bad in [
        "<interface><zone id=\"x\" type=\"button\" x=\"1\" y=\"1\" w=\"9\" h=\"9\" on_click=\"spawn\"/></interface>",
        "<interface><zone",
    ] {
        send(&mut ws, json!({"type": "set_layout", "xml": bad})).await;
        let err = next_of_type(&mut ws, "error").await;
        assert!(err["message"].as_str().unwrap().contains("layout"), "{err}");
    }
    drop(ws);
    h.finish();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stalled_video_consumer_never_blocks_state() {
    let big = Scene {
        width: 320,
        height: 240,
        ..scene(synth::SKIN)
    };
    let frames = big.sequence(&[Some((100.0, 100.0)), Some((140.0, 120.0))]);
    let n = 120;
    let mut settings = Settings::default();
    settings.segmentation.min_blob_fraction = 0.001;

    // a background of the right size for the larger frames
    let svc = serve_ui("127.0.0.1:0".parse().unwrap(), None).unwrap();
    let addr = svc.local_addr();
    let bg = model(&big, 5);
    let pipeline =
        Pipeline::new(settings, load_layout(synth::BUNDLED_LAYOUT).unwrap(), Some(bg)).unwrap();
    let mut source = LoopingSource {
        frames,
        next: 0,
        limit: Some(n),
        pacer: None,
        stop: Arc::new(AtomicBool::new(false)),
    };

    let _stalled = connect(addr).await; // never read
    let mut reader = connect(addr).await;
    let runner = std::thread::spawn(move || {
        while svc.hub().client_count() < 2 {
            std::thread::sleep(Duration::from_millis(5));
        }
        let mut sink = Sink::with_connector(Box::new(|| {
            Ok(Box::new(std::io::sink()) as Box<dyn Write + Send>)
        }))
        .unwrap();
        let start = Instant::now();
        let summary = FrameLoop::new(pipeline, 30)
            .run(&mut source, &mut sink, Some(&svc))
            .unwrap();
        (summary, start.elapsed(), svc.hub().dropped_video())
    });

    let mut frames_seen = Vec::new();
    while frames_seen.len() < n {
        let s = next_of_type(&mut reader, "state").await;
        frames_seen.push(s["frame"].as_u64().unwrap());
    }
    let (summary, elapsed, dropped) = runner.join().unwrap();
    assert_eq!(summary.frames, n as u64);
    assert_eq!(frames_seen, (0..n as u64).collect::<Vec<_>>());
    assert!(dropped > 0, "the stalled client should have lost video");
    assert!(elapsed < Duration::from_secs(30), "loop took {elapsed:?}");
    println!("{n} frames in {elapsed:?}, {dropped} video messages dropped");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn binary_messages_carry_frames_and_masks() {
    let frames = scene(synth::SKIN).sequence(&[Some((45.0, 22.0))]);
    let h = start(Settings::default(), frames, Some(30), None, 1);
    let mut ws = connect(h.addr).await;
    let (mut saw_frame, mut saw_mask) = (false, false);
    while !(saw_frame && saw_mask) {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .unwrap()
            .unwrap()
            .unwrap();
        if let Message::Binary(b) = msg {
            match b[0] {
                0x01 => {
                    assert_eq!(&b[1..9], b"FIZIRAW1");
                    assert_eq!(u32::from_le_bytes(b[9..13].try_into().unwrap()), 120);
                    assert_eq!(u32::from_le_bytes(b[13..17].try_into().unwrap()), 90);
                    assert_eq!(b.len(), 1 + 16 + 120 * 90 * 3);
                    saw_frame = true;
                }
                0x02 => {
                    let mask = fizi_core::imaging::pnm::decode_pgm_mask(&b[1..]).unwrap();
                    assert!(mask.get(45, 22));
                    saw_mask = true;
                }
                t => panic!("unknown tag {t}"),
            }
        }
    }
    drop(ws);
    h.finish();
}

fn http_get(addr: SocketAddr, path: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serves_static_assets() {
    let svc = serve_ui("127.0.0.1:0".parse().unwrap(), None).unwrap();
    let page = http_get(svc.local_addr(), "/");
    assert!(page.starts_with("HTTP/1.1 200"), "{page}");
    assert!(page.contains("/ws"));
    drop(svc);

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>ui bundle</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let svc = serve_ui("127.0.0.1:0".parse().unwrap(), Some(dir.path().to_path_buf())).unwrap();
    let addr = svc.local_addr();
    assert!(http_get(addr, "/").contains("<h1>ui bundle</h1>"));
    let js = http_get(addr, "/app.js");
    assert!(js.contains("console.log(1)") && js.to_lowercase().contains("javascript"), "{js}");
    assert!(http_get(addr, "/missing.css").starts_with("HTTP/1.1 404"));
}
