use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::*;
use crate::bundle::{load_bundles, repo_bundles_dir};
use crate::interaction::SessionState;
use crate::overlay::OverlayPrimitive;
use crate::tracker::Homography;

fn bundles() -> &'static BTreeMap<String, Arc<ChartBundle>> {
    static B: OnceLock<BTreeMap<String, Arc<ChartBundle>>> = OnceLock::new();
    B.get_or_init(|| load_bundles(&repo_bundles_dir()).unwrap())
}

fn server() -> Server {
    let mut config = ServiceConfig::default();
    config.credentials.insert("senior".into(), 2);
    Server::new(bundles().clone(), config)
}

/// Minimal client: tracks its own seq and session id.
struct Client<'a> {
    server: &'a Server,
    id: String,
    seq: u64,
}

impl<'a> Client<'a> {
    fn create(server: &'a Server, payload: serde_json::Value) -> (Self, Vec<WireMessage>) {
        let msg = WireMessage::new(None, 1, MessageKind::Create, payload);
        let out = server.handle(&msg, None);
        assert_eq!(out[0].kind, MessageKind::State, "{out:?}");
        let id = out[0].session_id.clone().unwrap();
        (Self { server, id, seq: 1 }, out)
    }

    fn send(&mut self, kind: MessageKind, payload: serde_json::Value) -> Vec<WireMessage> {
        self.seq += 1;
        let msg = WireMessage::new(Some(&self.id), self.seq, kind, payload);
        self.server.handle(&msg, None)
    }

    fn say(&mut self, text: &str) -> Vec<WireMessage> {
        self.send(MessageKind::Command, json!({ "text": text }))
    }

    fn frame(&mut self, img: &RgbImage, timestamp: f64) -> Vec<WireMessage> {
        self.seq += 1;
        let msg = WireMessage::new(
            Some(&self.id),
            self.seq,
            MessageKind::Frame,
            json!({ "timestamp": timestamp }),
        );
        self.server
            .handle_binary(&encode_binary(&msg, &encode_png(img)))
    }

    fn state(&mut self) -> StatePayload {
        let out = self.send(MessageKind::StateRequest, json!({}));
        serde_json::from_value(out[0].payload.clone()).unwrap()
    }
}

fn overlay_of(m: &WireMessage) -> OverlayPayload {
    assert_eq!(m.kind, MessageKind::Overlay);
    serde_json::from_value(m.payload.clone()).unwrap()
}

fn error_code(m: &WireMessage) -> ErrorCode {
    assert_eq!(m.kind, MessageKind::Error, "{m:?}");
    serde_json::from_value::<ErrorPayload>(m.payload.clone())
        .unwrap()
        .code
}

#[test]
fn create_returns_default_state() {
    let s = server();
    let (_, out) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    let state: StatePayload = serde_json::from_value(out[0].payload.clone()).unwrap();
    assert_eq!(state.snapshot.state, SessionState::new(0));
    assert_eq!(state.snapshot.state.revision, 0);
    assert_eq!(state.session.chart_id, "gdp_demo");
    assert_eq!(state.session.render_mode, RenderMode::Vector);
    assert_eq!(out[0].seq, 1);
}

#[test]
fn create_rejects_unknown_chart_and_role() {
    let s = server();
    let out = s.handle(
        &WireMessage::new(None, 1, MessageKind::Create, json!({ "chart_id": "nope" })),
        None,
    );
    assert_eq!(error_code(&out[0]), ErrorCode::UnknownChart);
    let out = s.handle(
        &WireMessage::new(
            None,
            1,
            MessageKind::Create,
            json!({ "chart_id": "gdp_demo", "role": "intern" }),
        ),
        None,
    );
    assert_eq!(error_code(&out[0]), ErrorCode::UnknownRole);
    assert_eq!(s.session_count(), 0);
}

#[test]
fn role_resolves_through_credential_map() {
    let s = server();
    let (c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo", "role": "senior" }));
    assert_eq!(s.snapshot_state(&c.id).unwrap().session.credential, 2);
}

#[test]
fn filter_command_chimes_then_patches_each_asian_country() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    let out = c.say("Filter out countries in Asia");
    assert_eq!(out.len(), 2);
    let fb: FeedbackPayload = serde_json::from_value(out[0].payload.clone()).unwrap();
    assert_eq!(fb.feedback, Feedback::Chime);
    let ds = &bundles()["gdp_demo"].dataset;
    let asian: BTreeSet<_> = ds
        .records()
        .iter()
        .filter(|r| ds.value(r.id, "continent").and_then(|v| v.as_category()) == Some("Asia"))
        .map(|r| r.id)
        .collect();
    let overlay = overlay_of(&out[1]).overlay;
    let patched: BTreeSet<_> = overlay
        .primitives
        .iter()
        .filter_map(|p| match p {
            OverlayPrimitive::OcclusionPatch { record_id, .. } => Some(*record_id),
            _ => None,
        })
        .collect();
    assert_eq!(patched, asian);
    assert_eq!(overlay.revision, fb.revision);
}

#[test]
fn clearance_violation_is_feedback_error_without_overlay() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo", "credential": 1 }));
    let out = c.say("highlight countries with debt_ratio above 100");
    assert_eq!(out.len(), 1);
    let fb: FeedbackPayload = serde_json::from_value(out[0].payload.clone()).unwrap();
    assert!(
        matches!(fb.feedback, Feedback::Error { ref message } if message.contains("clearance"))
    );
    assert_eq!(c.state().snapshot.state.revision, 0);
}

#[test]
fn protocol_errors_keep_the_session_usable() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    let stale = WireMessage::new(
        Some(&c.id),
        1,
        MessageKind::Command,
        json!({ "text": "reset" }),
    );
    let out = s.handle(&stale, None);
    assert_eq!(error_code(&out[0]), ErrorCode::OutOfOrder);
    assert_eq!(
        error_code(&s.handle_text("{not json")[0]),
        ErrorCode::Malformed
    );
    let unknown =
        json!({ "session_id": c.id, "seq": 50, "kind": "teleport", "payload": {} }).to_string();
    assert_eq!(
        error_code(&s.handle_text(&unknown)[0]),
        ErrorCode::UnknownKind
    );
    assert_eq!(
        error_code(&c.send(MessageKind::Overlay, json!({}))[0]),
        ErrorCode::UnexpectedKind
    );
    assert_eq!(
        error_code(&c.send(MessageKind::Command, json!({ "txt": 1 }))[0]),
        ErrorCode::Malformed
    );
    let out = c.say("filter out countries in Europe");
    assert_eq!(out[0].kind, MessageKind::Feedback);
    assert_eq!(c.state().snapshot.state.revision, 1);
}

#[test]
fn unknown_session_is_reported() {
    let s = server();
    let out = s.handle(
        &WireMessage::new(Some("ghost"), 1, MessageKind::StateRequest, json!({})),
        None,
    );
    let err: ErrorPayload = serde_json::from_value(out[0].payload.clone()).unwrap();
    assert_eq!(err.code, ErrorCode::UnknownSession);
    assert_eq!(err.message, "no such session");
    assert_eq!(
        s.snapshot_state("ghost").unwrap_err().message,
        "no such session"
    );
}

#[test]
fn server_seq_increases_per_session() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    let mut seqs = vec![1];
    for text in ["filter out countries in Asia", "nonsense words", "reset"] {
        seqs.extend(c.say(text).iter().map(|m| m.seq));
    }
    seqs.push(c.state().snapshot.state.revision);
    let served = &seqs[..seqs.len() - 1];
    assert!(served.windows(2).all(|w| w[1] == w[0] + 1), "{served:?}");
}

#[test]
fn binary_framing_round_trips_and_rejects_truncation() {
    let msg = WireMessage::new(
        Some("s"),
        7,
        MessageKind::Frame,
        json!({ "timestamp": 1.25 }),
    );
    let bytes = encode_binary(&msg, b"PNGDATA");
    let (back, png) = decode_binary(&bytes).unwrap();
    assert_eq!(back, msg);
    assert_eq!(png, b"PNGDATA");
    assert_eq!(decode_binary(&bytes[..2]), Err(ProtocolError::Truncated));
    assert_eq!(decode_binary(&bytes[..10]), Err(ProtocolError::Truncated));
}

#[test]
fn frames_track_then_lose_the_target() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    c.say("filter out countries in Europe");
    let baseline = &bundles()["gdp_demo"].baseline;
    let out = c.frame(baseline, 0.5);
    let o = overlay_of(&out[0]).overlay;
    assert_eq!(o.tracking, crate::session::Tracking::Locked);
    assert_eq!(o.frame_timestamp, Some(0.5));
    assert!(
        o.homography
            .unwrap()
            .corner_error(&Homography::identity(), 640.0, 480.0)
            < 1.0
    );
    assert!(!o.primitives.is_empty());

    let blank = RgbImage::from_pixel(640, 480, image::Rgb([90, 90, 90]));
    let mut last = None;
    for i in 0..6 {
        last = Some(overlay_of(&c.frame(&blank, 1.0 + i as f64)[0]).overlay);
    }
    let last = last.unwrap();
    assert_eq!(last.tracking, crate::session::Tracking::Lost);
    assert!(last.primitives.is_empty());

    let bad = c.frame(&RgbImage::new(8, 8), 9.0);
    assert_eq!(error_code(&bad[0]), ErrorCode::BadFrame);
}

#[test]
fn frame_space_pointer_maps_through_the_homography() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "univ_demo" }));
    let b = &bundles()["univ_demo"];
    let h = Homography::translation(20.0, 10.0);
    let frame = crate::synth::warp_image(&b.baseline, &h, &crate::synth::FrameOptions::default());
    c.frame(&frame, 0.0);
    let mark = b.marks[16].center;
    let p = h.project(mark);
    let out = c.send(
        MessageKind::Pointer,
        json!({ "kind": "move", "position": { "x": p.x, "y": p.y }, "space": "frame" }),
    );
    assert_eq!(out.len(), 1);
    assert_eq!(c.state().snapshot.state.focused, Some(16));
}

#[test]
fn raster_mode_matches_vector_rasterization() {
    let s = server();
    let (mut v, _) = Client::create(&s, json!({ "chart_id": "gdp_demo" }));
    let (mut r, _) = Client::create(
        &s,
        json!({ "chart_id": "gdp_demo", "render_mode": "raster" }),
    );
    let b = &bundles()["gdp_demo"];
    let h =
        Homography::from_array([0.97, 0.03, 12.0, -0.02, 0.98, 9.0, 1e-5, 0.0, 1.0], 1.0).unwrap();
    let frame = crate::synth::warp_image(&b.baseline, &h, &crate::synth::FrameOptions::default());
    for c in [&mut v, &mut r] {
        c.say("highlight countries in Africa");
        c.send(
            MessageKind::Pointer,
            json!({ "kind": "move", "position": { "x": 200.0, "y": 150.0 } }),
        );
    }
    let cases = [
        (v.frame(&frame, 1.0), r.frame(&frame, 1.0)),
        (
            v.say("filter out countries in Asia"),
            r.say("filter out countries in Asia"),
        ),
    ];
    for (vo, ro) in cases {
        let vo = overlay_of(vo.last().unwrap());
        let ro = overlay_of(ro.last().unwrap());
        assert!(vo.raster_png.is_none());
        assert_eq!(vo.overlay, ro.overlay);
        let png = base64::engine::general_purpose::STANDARD
            .decode(ro.raster_png.unwrap())
            .unwrap();
        let served = image::load_from_memory(&png).unwrap().to_rgb8();
        let base = if vo.overlay.tracking == crate::session::Tracking::Flat {
            &b.baseline
        } else {
            &frame
        };
        let local = composite(base, &vo.overlay.rasterize()).unwrap();
        assert_eq!(served, local);
    }
}

#[test]
fn every_state_change_yields_one_matching_overlay() {
    let s = server();
    let (mut c, _) = Client::create(&s, json!({ "chart_id": "univ_demo" }));
    let inputs: Vec<(MessageKind, serde_json::Value)> = vec![
        (
            MessageKind::Command,
            json!({ "text": "highlight universities with faculty above 10" }),
        ),
        (
            MessageKind::Pointer,
            json!({ "kind": "move", "position": { "x": 173.6, "y": 96.3 } }),
        ),
        (
            MessageKind::Pointer,
            json!({ "kind": "move", "position": { "x": 173.6, "y": 96.3 } }),
        ),
        (MessageKind::Pointer, json!({ "kind": "select" })),
        (
            MessageKind::Command,
            json!({ "text": "filter out universities with students below 200" }),
        ),
        (MessageKind::Command, json!({ "text": "frobnicate" })),
        (MessageKind::Pointer, json!({ "kind": "exit" })),
        (MessageKind::Command, json!({ "text": "hide details" })),
    ];
    let mut last_rev = 0;
    for (kind, payload) in inputs {
        let out = c.send(kind, payload);
        let rev = c.state().snapshot.state.revision;
        let overlays: Vec<_> = out
            .iter()
            .filter(|m| m.kind == MessageKind::Overlay)
            .collect();
        if rev != last_rev {
            assert_eq!(overlays.len(), 1);
            assert_eq!(overlay_of(overlays[0]).overlay.revision, rev);
        } else {
            assert!(overlays.is_empty());
        }
        last_rev = rev;
    }
}

#[test]
fn concurrent_sessions_equal_their_serial_replays() {
    let s = server();
    let phrases = [
        "filter out countries in Asia",
        "filter out countries with gdp above 30000",
        "show only countries in Europe",
        "highlight countries with life expectancy below 70",
        "highlight countries in Africa",
        "clear filters",
        "clear highlights",
        "hide details",
        "reset",
        "highlight countries with population above 100",
    ];
    let scripts: Vec<Vec<String>> = (0..8)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            (0..25)
                .map(|_| phrases[rng.gen_range(0..phrases.len())].to_string())
                .collect()
        })
        .collect();
    let ids: Vec<String> = (0..8)
        .map(|_| Client::create(&s, json!({ "chart_id": "gdp_demo" })).0.id)
        .collect();
    thread::scope(|scope| {
        for (id, script) in ids.iter().zip(&scripts) {
            let s = &s;
            scope.spawn(move || {
                let mut c = Client {
                    server: s,
                    id: id.clone(),
                    seq: 1,
                };
                for text in script {
                    c.say(text);
                }
            });
        }
    });
    for (id, script) in ids.iter().zip(&scripts) {
        let mut serial = Interaction::new(Arc::clone(&bundles()["gdp_demo"]), 0);
        for text in script {
            serial.say(text);
        }
        assert_eq!(s.snapshot_state(id).unwrap().snapshot, serial.snapshot());
    }
}
