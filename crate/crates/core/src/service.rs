//! Transport-independent session service: a registry of live sessions over
//! registered chart bundles, and the wire protocol that drives them.
//!
//! Text messages are JSON envelopes. Frames travel as binary messages: a
//! 4-byte big-endian header length, the JSON envelope, then the PNG bytes.

use std::collections::{BTreeMap, HashMap};
use std::io::Cursor;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use base64::Engine;
use image::{ImageFormat, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::ChartBundle;
use crate::geometry::Point;
use crate::interaction::{Effect, PointerEvent};
use crate::overlay::composite;
use crate::session::{
    build_overlay, ChartMeta, Feedback, FrameTracker, FrameView, Interaction, Overlay, RenderMode,
    Snapshot, Tracking,
};
use crate::tracker::{GrayImage, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Create,
    Frame,
    Command,
    Pointer,
    StateRequest,
    Overlay,
    Feedback,
    State,
    Error,
}

impl MessageKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "create" => Self::Create,
            "frame" => Self::Frame,
            "command" => Self::Command,
            "pointer" => Self::Pointer,
            "state_request" => Self::StateRequest,
            "overlay" => Self::Overlay,
            "feedback" => Self::Feedback,
            "state" => Self::State,
            "error" => Self::Error,
            _ => return None,
        })
    }

    pub fn from_client(self) -> bool {
        matches!(
            self,
            Self::Create | Self::Frame | Self::Command | Self::Pointer | Self::StateRequest
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(default)]
    pub session_id: Option<String>,
    pub seq: u64,
    pub kind: MessageKind,
    #[serde(default)]
    pub payload: serde_json::Value,
}

impl WireMessage {
    pub fn new(
        session_id: Option<&str>,
        seq: u64,
        kind: MessageKind,
        payload: impl Serialize,
    ) -> Self {
        Self {
            session_id: session_id.map(str::to_string),
            seq,
            kind,
            payload: serde_json::to_value(payload).unwrap_or(serde_json::Value::Null),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message kind '{0}'")]
    UnknownKind(String),
    #[error("binary message shorter than its header")]
    Truncated,
}

#[derive(Deserialize)]
struct RawEnvelope {
    #[serde(default)]
    session_id: Option<String>,
    seq: u64,
    kind: String,
    #[serde(default)]
    payload: serde_json::Value,
}

fn parse_envelope(bytes: &[u8]) -> Result<WireMessage, ProtocolError> {
    let raw: RawEnvelope =
        serde_json::from_slice(bytes).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let kind = MessageKind::parse(&raw.kind).ok_or(ProtocolError::UnknownKind(raw.kind))?;
    Ok(WireMessage {
        session_id: raw.session_id,
        seq: raw.seq,
        kind,
        payload: raw.payload,
    })
}

pub fn decode_text(text: &str) -> Result<WireMessage, ProtocolError> {
    parse_envelope(text.as_bytes())
}

/// Splits a binary frame message into its envelope and PNG bytes.
pub fn decode_binary(bytes: &[u8]) -> Result<(WireMessage, &[u8]), ProtocolError> {
    if bytes.len() < 4 {
        return Err(ProtocolError::Truncated);
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let body = &bytes[4..];
    if body.len() < len {
        return Err(ProtocolError::Truncated);
    }
    let msg = parse_envelope(&body[..len])?;
    Ok((msg, &body[len..]))
}

pub fn encode_binary(msg: &WireMessage, png: &[u8]) -> Vec<u8> {
    let header = msg.to_json().into_bytes();
    let mut out = Vec::with_capacity(4 + header.len() + png.len());
    out.extend_from_slice(&(header.len() as u32).to_be_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(png);
    out
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    // Encoding into memory cannot fail for a well-formed RgbImage.
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("png encoding");
    buf.into_inner()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatePayload {
    pub chart_id: String,
    #[serde(default)]
    pub credential: Option<u32>,
    /// Named credential from the server's credential map.
    #[serde(default)]
    pub role: Option<String>,
    #[serde(default)]
    pub render_mode: RenderMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandPayload {
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointerSpace {
    #[default]
    Chart,
    Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerPayload {
    #[serde(flatten)]
    pub event: PointerEvent,
    #[serde(default)]
    pub space: PointerSpace,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FramePayload {
    /// Client capture time, echoed on the overlay.
    #[serde(default)]
    pub timestamp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub chart_id: String,
    pub credential: u32,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub render_mode: RenderMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub session: SessionDescriptor,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPayload {
    #[serde(flatten)]
    pub overlay: Overlay,
    /// Base64 PNG of the overlay composited onto the frame (raster mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster_png: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPayload {
    #[serde(flatten)]
    pub feedback: Feedback,
    pub revision: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownKind,
    UnexpectedKind,
    UnknownSession,
    UnknownChart,
    UnknownRole,
    OutOfOrder,
    BadFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    /// Seq of the offending client message, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_reply_to: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct ServiceError {
    pub code: ErrorCode,
    pub message: String,
}

impl ServiceError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn no_session() -> Self {
        Self::new(ErrorCode::UnknownSession, "no such session")
    }
}

impl From<ProtocolError> for ServiceError {
    fn from(e: ProtocolError) -> Self {
        let code = match e {
            ProtocolError::UnknownKind(_) => ErrorCode::UnknownKind,
            _ => ErrorCode::Malformed,
        };
        Self::new(code, e.to_string())
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

struct LiveSession {
    descriptor: SessionDescriptor,
    bundle: Arc<ChartBundle>,
    interaction: Mutex<Interaction>,
    tracker: Mutex<FrameTracker>,
    view: Mutex<FrameView>,
    /// Latest decoded frame, kept for raster replies between frames.
    last_frame: Mutex<Option<Arc<RgbImage>>>,
    last_inbound: Mutex<u64>,
    next_outbound: Mutex<u64>,
}

impl LiveSession {
    fn accept_seq(&self, seq: u64) -> Result<(), ServiceError> {
        let mut last = lock(&self.last_inbound);
        if seq <= *last {
            return Err(ServiceError::new(
                ErrorCode::OutOfOrder,
                format!("seq {seq} is not after {}", *last),
            ));
        }
        *last = seq;
        Ok(())
    }

    fn overlay(&self, snapshot_state: &crate::interaction::SessionState) -> Overlay {
        let view = lock(&self.view).clone();
        build_overlay(&self.bundle, snapshot_state, &view)
    }

    fn overlay_payload(&self, overlay: Overlay) -> OverlayPayload {
        let raster_png = (self.descriptor.render_mode == RenderMode::Raster).then(|| {
            let frame = lock(&self.last_frame).clone();
            let base = match (&frame, overlay.tracking) {
                (Some(f), t) if t != Tracking::Flat => f.as_ref(),
                _ => &self.bundle.baseline,
            };
            let img = match composite(base, &overlay.rasterize()) {
                Ok(img) => img,
                Err(_) => base.clone(),
            };
            base64::engine::general_purpose::STANDARD.encode(encode_png(&img))
        });
        OverlayPayload {
            overlay,
            raster_png,
        }
    }

    fn state_payload(&self) -> StatePayload {
        StatePayload {
            session: self.descriptor.clone(),
            snapshot: lock(&self.interaction).snapshot(),
        }
    }
}

/// A decoded frame waiting for the tracker.
pub struct FrameJob {
    session: Arc<LiveSession>,
    seq: u64,
    timestamp: Option<f64>,
    png: Vec<u8>,
}

impl FrameJob {
    pub fn session_id(&self) -> &str {
        &self.session.descriptor.session_id
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Named credential levels accepted in `create` messages.
    pub credentials: BTreeMap<String, u32>,
    pub tracker: TrackerConfig,
}

/// Registered bundles plus live sessions.
pub struct Server {
    bundles: BTreeMap<String, Arc<ChartBundle>>,
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<LiveSession>>>,
    counter: AtomicU64,
}

impl Server {
    pub fn new(bundles: BTreeMap<String, Arc<ChartBundle>>, config: ServiceConfig) -> Self {
        Self {
            bundles,
            config,
            sessions: RwLock::new(HashMap::new()),
            counter: AtomicU64::new(0),
        }
    }

    pub fn charts(&self) -> Vec<ChartMeta> {
        self.bundles.values().map(|b| ChartMeta::of(b)).collect()
    }

    pub fn bundle(&self, chart_id: &str) -> Option<&Arc<ChartBundle>> {
        self.bundles.get(chart_id)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().map(|s| s.len()).unwrap_or(0)
    }

    fn session(&self, id: Option<&str>) -> Result<Arc<LiveSession>, ServiceError> {
        let id = id.ok_or_else(ServiceError::no_session)?;
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(ServiceError::no_session)
    }

    pub fn close_session(&self, id: &str) -> bool {
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(id)
            .is_some()
    }

    /// Full state snapshot of a live session.
    pub fn snapshot_state(&self, session_id: &str) -> Result<StatePayload, ServiceError> {
        Ok(self.session(Some(session_id))?.state_payload())
    }

    fn error_message(
        session_id: Option<&str>,
        in_reply_to: Option<u64>,
        e: ServiceError,
    ) -> WireMessage {
        WireMessage::new(
            session_id,
            0,
            MessageKind::Error,
            ErrorPayload {
                code: e.code,
                message: e.message,
                in_reply_to,
            },
        )
    }

    /// Stamps outbound seqs and hands messages to `sink` under the session's
    /// outbound lock, so concurrent producers never reorder a session's
    /// stream.
    fn emit(
        &self,
        session: Option<&LiveSession>,
        msgs: Vec<WireMessage>,
        sink: &mut dyn FnMut(WireMessage),
    ) {
        match session {
            Some(s) => {
                let mut next = lock(&s.next_outbound);
                for mut m in msgs {
                    *next += 1;
                    m.seq = *next;
                    sink(m);
                }
            }
            None => msgs.into_iter().for_each(sink),
        }
    }

    /// Handles a text message, returning the replies.
    pub fn handle_text(&self, text: &str) -> Vec<WireMessage> {
        let mut out = Vec::new();
        self.handle_text_with(text, &mut |m| out.push(m));
        out
    }

    pub fn handle_text_with(&self, text: &str, sink: &mut dyn FnMut(WireMessage)) {
        match decode_text(text) {
            Ok(msg) => self.handle_with(&msg, None, sink),
            Err(e) => self.emit(None, vec![Self::error_message(None, None, e.into())], sink),
        }
    }

    /// Handles a binary frame message end to end.
    pub fn handle_binary(&self, bytes: &[u8]) -> Vec<WireMessage> {
        let mut out = Vec::new();
        match self.accept_binary(bytes) {
            Ok(job) => self.process_frame(job, &mut |m| out.push(m)),
            Err(msgs) => out = msgs,
        }
        out
    }

    /// Validates a binary frame message without tracking it. Errors come back
    /// as ready-to-send replies.
    pub fn accept_binary(&self, bytes: &[u8]) -> Result<FrameJob, Vec<WireMessage>> {
        let mut errs = Vec::new();
        let (msg, png) = match decode_binary(bytes) {
            Ok(v) => v,
            Err(e) => {
                self.emit(
                    None,
                    vec![Self::error_message(None, None, e.into())],
                    &mut |m| errs.push(m),
                );
                return Err(errs);
            }
        };
        match self.accept_frame(&msg, png.to_vec()) {
            Ok(job) => Ok(job),
            Err(e) => {
                let session = self.session(msg.session_id.as_deref()).ok();
                let reply = Self::error_message(msg.session_id.as_deref(), Some(msg.seq), e);
                self.emit(session.as_deref(), vec![reply], &mut |m| errs.push(m));
                Err(errs)
            }
        }
    }

    fn accept_frame(&self, msg: &WireMessage, png: Vec<u8>) -> Result<FrameJob, ServiceError> {
        if msg.kind != MessageKind::Frame {
            return Err(ServiceError::new(
                ErrorCode::UnexpectedKind,
                "binary messages must be frames",
            ));
        }
        let session = self.session(msg.session_id.as_deref())?;
        let payload: FramePayload = parse_payload(&msg.payload)?;
        session.accept_seq(msg.seq)?;
        Ok(FrameJob {
            session,
            seq: msg.seq,
            timestamp: payload.timestamp,
            png,
        })
    }

    /// Tracks a frame and emits its overlay. Reads the latest committed
    /// interaction state; commands may be applied while this runs.
    pub fn process_frame(&self, job: FrameJob, sink: &mut dyn FnMut(WireMessage)) {
        let s = &job.session;
        let id = s.descriptor.session_id.clone();
        let decoded = image::load_from_memory(&job.png)
            .map(|i| i.to_rgb8())
            .map_err(|e| e.to_string())
            .and_then(|rgb| {
                GrayImage::from_rgb(&rgb)
                    .map(|g| (rgb, g))
                    .map_err(|e| e.to_string())
            });
        let (rgb, gray) = match decoded {
            Ok(v) => v,
            Err(message) => {
                let err = ServiceError::new(ErrorCode::BadFrame, message);
                self.emit(
                    Some(s),
                    vec![Self::error_message(Some(&id), Some(job.seq), err)],
                    sink,
                );
                return;
            }
        };
        let view = {
            let mut tracker = lock(&s.tracker);
            tracker.process(&s.bundle, &gray, job.timestamp).clone()
        };
        *lock(&s.view) = view.clone();
        if s.descriptor.render_mode == RenderMode::Raster {
            *lock(&s.last_frame) = Some(Arc::new(rgb));
        }
        let state = lock(&s.interaction).state().clone();
        let overlay = build_overlay(&s.bundle, &state, &view);
        let payload = s.overlay_payload(overlay);
        self.emit(
            Some(s),
            vec![WireMessage::new(
                Some(&id),
                0,
                MessageKind::Overlay,
                payload,
            )],
            sink,
        );
    }

    /// Handles a decoded message. Frames need their PNG in `png`.
    pub fn handle_with(
        &self,
        msg: &WireMessage,
        png: Option<&[u8]>,
        sink: &mut dyn FnMut(WireMessage),
    ) {
        let sid = msg.session_id.as_deref();
        if msg.kind == MessageKind::Frame {
            let Some(png) = png else {
                let err = ServiceError::new(
                    ErrorCode::BadFrame,
                    "frames must be sent as binary messages",
                );
                let session = self.session(sid).ok();
                self.emit(
                    session.as_deref(),
                    vec![Self::error_message(sid, Some(msg.seq), err)],
                    sink,
                );
                return;
            };
            match self.accept_frame(msg, png.to_vec()) {
                Ok(job) => self.process_frame(job, sink),
                Err(e) => {
                    let session = self.session(sid).ok();
                    self.emit(
                        session.as_deref(),
                        vec![Self::error_message(sid, Some(msg.seq), e)],
                        sink,
                    );
                }
            }
            return;
        }
        let result = match msg.kind {
            MessageKind::Create => self.create(msg),
            MessageKind::Command => self.command(msg),
            MessageKind::Pointer => self.pointer(msg),
            MessageKind::StateRequest => self.state_request(msg),
            _ => Err(ServiceError::new(
                ErrorCode::UnexpectedKind,
                format!("'{:?}' is a server message kind", msg.kind),
            )),
        };
        match result {
            Ok((session, msgs)) => self.emit(Some(&session), msgs, sink),
            Err(e) => {
                let session = self.session(sid).ok();
                self.emit(
                    session.as_deref(),
                    vec![Self::error_message(sid, Some(msg.seq), e)],
                    sink,
                );
            }
        }
    }

    pub fn handle(&self, msg: &WireMessage, png: Option<&[u8]>) -> Vec<WireMessage> {
        let mut out = Vec::new();
        self.handle_with(msg, png, &mut |m| out.push(m));
        out
    }

    fn create(
        &self,
        msg: &WireMessage,
    ) -> Result<(Arc<LiveSession>, Vec<WireMessage>), ServiceError> {
        let p: CreatePayload = parse_payload(&msg.payload)?;
        let bundle = self.bundles.get(&p.chart_id).cloned().ok_or_else(|| {
            ServiceError::new(
                ErrorCode::UnknownChart,
                format!("no chart '{}'", p.chart_id),
            )
        })?;
        let credential = match (&p.role, p.credential) {
            (Some(role), _) => *self.config.credentials.get(role).ok_or_else(|| {
                ServiceError::new(ErrorCode::UnknownRole, format!("no role '{role}'"))
            })?,
            (None, c) => c.unwrap_or(0),
        };
        let n = self.counter.fetch_add(1, Ordering::Relaxed) + 1;
        let session_id = format!("s{n}-{:08x}", rand::thread_rng().gen::<u32>());
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let session = Arc::new(LiveSession {
            descriptor: SessionDescriptor {
                session_id: session_id.clone(),
                chart_id: p.chart_id,
                credential,
                created_at,
                render_mode: p.render_mode,
            },
            interaction: Mutex::new(Interaction::new(Arc::clone(&bundle), credential)),
            tracker: Mutex::new(FrameTracker::new(&bundle, self.config.tracker)),
            view: Mutex::new(FrameView::flat(&bundle)),
            last_frame: Mutex::new(None),
            last_inbound: Mutex::new(msg.seq),
            next_outbound: Mutex::new(0),
            bundle,
        });
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(session_id.clone(), Arc::clone(&session));
        let state = WireMessage::new(
            Some(&session_id),
            0,
            MessageKind::State,
            session.state_payload(),
        );
        Ok((session, vec![state]))
    }

    /// Replies for an input that produced `effects`: feedback when the input
    /// was a command or gesture, and one overlay when the state changed.
    fn replies(
        &self,
        s: &LiveSession,
        effects: &[Effect],
        state: &crate::interaction::SessionState,
    ) -> Vec<WireMessage> {
        let id = Some(s.descriptor.session_id.as_str());
        let mut out = Vec::new();
        if let Some(feedback) = Feedback::from_effects(effects) {
            let payload = FeedbackPayload {
                feedback,
                revision: state.revision,
            };
            out.push(WireMessage::new(id, 0, MessageKind::Feedback, payload));
        }
        if effects
            .iter()
            .any(|e| matches!(e, Effect::StateChanged { .. }))
        {
            let payload = s.overlay_payload(s.overlay(state));
            out.push(WireMessage::new(id, 0, MessageKind::Overlay, payload));
        }
        out
    }

    fn command(
        &self,
        msg: &WireMessage,
    ) -> Result<(Arc<LiveSession>, Vec<WireMessage>), ServiceError> {
        let s = self.session(msg.session_id.as_deref())?;
        let p: CommandPayload = parse_payload(&msg.payload)?;
        let (effects, state) = {
            let mut interaction = lock(&s.interaction);
            s.accept_seq(msg.seq)?;
            let effects = interaction.say(&p.text);
            (effects, interaction.state().clone())
        };
        let out = self.replies(&s, &effects, &state);
        Ok((s, out))
    }

    fn pointer(
        &self,
        msg: &WireMessage,
    ) -> Result<(Arc<LiveSession>, Vec<WireMessage>), ServiceError> {
        let s = self.session(msg.session_id.as_deref())?;
        let p: PointerPayload = parse_payload(&msg.payload)?;
        let event = match (p.event, p.space) {
            (PointerEvent::Move { position }, PointerSpace::Frame) => {
                let chart = lock(&s.view).to_chart(position).ok_or_else(|| {
                    ServiceError::new(
                        ErrorCode::Malformed,
                        "frame-space pointer while the chart is not tracked",
                    )
                })?;
                PointerEvent::Move { position: chart }
            }
            (e, _) => e,
        };
        if let PointerEvent::Move { position } = &event {
            if !Point::is_finite(*position) {
                return Err(ServiceError::new(
                    ErrorCode::Malformed,
                    "pointer position must be finite",
                ));
            }
        }
        let (effects, state) = {
            let mut interaction = lock(&s.interaction);
            s.accept_seq(msg.seq)?;
            let effects = interaction.pointer(&event);
            (effects, interaction.state().clone())
        };
        let out = self.replies(&s, &effects, &state);
        Ok((s, out))
    }

    fn state_request(
        &self,
        msg: &WireMessage,
    ) -> Result<(Arc<LiveSession>, Vec<WireMessage>), ServiceError> {
        let s = self.session(msg.session_id.as_deref())?;
        let payload = {
            let interaction = lock(&s.interaction);
            s.accept_seq(msg.seq)?;
            StatePayload {
                session: s.descriptor.clone(),
                snapshot: interaction.snapshot(),
            }
        };
        let id = s.descriptor.session_id.clone();
        Ok((
            s,
            vec![WireMessage::new(Some(&id), 0, MessageKind::State, payload)],
        ))
    }
}

fn parse_payload<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, ServiceError> {
    serde_path_to_error::deserialize(v.clone())
        .map_err(|e| ServiceError::new(ErrorCode::Malformed, format!("payload {e}")))
}

#[cfg(test)]
mod tests;
