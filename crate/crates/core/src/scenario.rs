//! Scripted interaction scenarios (`.scn`): timed say/pointer/select/exit and
//! frame steps replayed through a session, producing composited frames, a
//! final snapshot and an event log.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::ChartBundle;
use crate::geometry::Point;
use crate::interaction::{Effect, PointerEvent, SessionState};
use crate::overlay::composite;
use crate::session::{Feedback, Interaction, Overlay, RenderMode, Session, Snapshot};
use crate::synth::{warp_image, FrameOptions};
use crate::tracker::{GrayImage, Homography, TrackerConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("serializing {what}: {source}")]
    Json {
        what: &'static str,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FrameSource {
    /// The baseline chart image itself.
    Identity {
        #[serde(default)]
        noise: f64,
    },
    /// The baseline seen through `h` on a 640x480 frame.
    Warp {
        h: [f64; 9],
        #[serde(default)]
        noise: f64,
    },
    /// A PNG, relative to the script's directory.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Say { text: String },
    Pointer { x: f64, y: f64 },
    Select,
    Exit,
    Frame(FrameSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: f64,
    /// 1-based source line.
    pub line: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioScript {
    /// Bundle the script was written for, if declared.
    pub chart: Option<String>,
    pub seed: u64,
    pub credential: u32,
    pub steps: Vec<Step>,
}

fn parse_err(line: usize, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.to_string(),
    }
}

fn number<T: std::str::FromStr>(
    line: usize,
    what: &str,
    tok: Option<&str>,
) -> Result<T, ScenarioError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what} '{tok}' is not a number")))
}

fn finite(line: usize, what: &str, tok: Option<&str>) -> Result<f64, ScenarioError> {
    let v: f64 = number(line, what, tok)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("{what} must be finite")))
    }
}

fn noise_suffix<'a>(
    line: usize,
    mut rest: impl Iterator<Item = &'a str>,
) -> Result<f64, ScenarioError> {
    match rest.next() {
        None => Ok(0.0),
        Some("noise") => {
            let s = finite(line, "noise", rest.next())?;
            if s < 0.0 {
                return Err(parse_err(line, "noise must be >= 0"));
            }
            match rest.next() {
                None => Ok(s),
                Some(t) => Err(parse_err(line, format!("unexpected '{t}'"))),
            }
        }
        Some(t) => Err(parse_err(line, format!("unexpected '{t}'"))),
    }
}

fn parse_frame(line: usize, rest: &str) -> Result<FrameSource, ScenarioError> {
    let mut toks = rest.split_whitespace();
    match toks.next() {
        Some("identity") => Ok(FrameSource::Identity {
            noise: noise_suffix(line, toks)?,
        }),
        Some("warp") => {
            let mut h = [0.0; 9];
            for (i, v) in h.iter_mut().enumerate() {
                *v = finite(line, &format!("h{i}"), toks.next())?;
            }
            if Homography::from_array(h, 1.0).is_err() {
                return Err(parse_err(line, "warp matrix is singular"));
            }
            Ok(FrameSource::Warp {
                h,
                noise: noise_suffix(line, toks)?,
            })
        }
        Some("file") => {
            let path = rest.trim_start()["file".len()..].trim();
            if path.is_empty() {
                return Err(parse_err(line, "missing frame path"));
            }
            Ok(FrameSource::File {
                path: path.to_string(),
            })
        }
        Some(other) => Err(parse_err(line, format!("unknown frame source '{other}'"))),
        None => Err(parse_err(line, "missing frame source")),
    }
}

/// Parses a `.scn` script. Header lines (`chart ID`, `seed N`,
/// `credential N`) come before the first step; `#` starts a comment line.
pub fn parse_scenario(text: &str) -> Result<ScenarioScript, ScenarioError> {
    let mut script = ScenarioScript::default();
    let mut last_t = f64::NEG_INFINITY;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (head, rest) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        let rest = rest.trim();
        match head {
            "seed" | "credential" | "chart" => {
                if !script.steps.is_empty() {
                    return Err(parse_err(
                        line,
                        format!("'{head}' must precede the first step"),
                    ));
                }
                match head {
                    "seed" => script.seed = number(line, "seed", Some(rest))?,
                    "credential" => script.credential = number(line, "credential", Some(rest))?,
                    _ if rest.is_empty() || rest.contains(char::is_whitespace) => {
                        return Err(parse_err(line, "chart takes one bundle id"))
                    }
                    _ => script.chart = Some(rest.to_string()),
                }
                continue;
            }
            _ => {}
        }
        let t = finite(line, "time", Some(head))?;
        if t < last_t {
            return Err(parse_err(line, format!("time {t} is before {last_t}")));
        }
        last_t = t;
        let (verb, args) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        let args = args.trim();
        let no_args = |a: Action| {
            if args.is_empty() {
                Ok(a)
            } else {
                Err(parse_err(line, format!("'{verb}' takes no arguments")))
            }
        };
        let action = match verb {
            "say" if !args.is_empty() => Action::Say {
                text: args.to_string(),
            },
            "say" => return Err(parse_err(line, "missing command text")),
            "pointer" => {
                let mut toks = args.split_whitespace();
                let x = finite(line, "x", toks.next())?;
                let y = finite(line, "y", toks.next())?;
                if let Some(t) = toks.next() {
                    return Err(parse_err(line, format!("unexpected '{t}'")));
                }
                Action::Pointer { x, y }
            }
            "select" => no_args(Action::Select)?,
            "exit" => no_args(Action::Exit)?,
            "frame" => Action::Frame(parse_frame(line, args)?),
            "" => return Err(parse_err(line, "missing action")),
            other => return Err(parse_err(line, format!("unknown action '{other}'"))),
        };
        script.steps.push(Step { t, line, action });
    }
    Ok(script)
}

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t: f64,
    pub kind: String,
    pub payload: serde_json::Value,
}

impl LogEvent {
    fn new(t: f64, kind: &str, payload: impl Serialize) -> Self {
        Self {
            t,
            kind: kind.to_string(),
            payload: serde_json::to_value(payload).unwrap_or(serde_json::Value::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFailure {
    pub line: usize,
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub mode: RenderMode,
    pub tracker: TrackerConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: RenderMode::Raster,
            tracker: TrackerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub snapshot: Snapshot,
    pub events: Vec<LogEvent>,
    pub failures: Vec<StepFailure>,
    /// Overlay of every frame step, in order.
    pub overlays: Vec<Overlay>,
    /// Composited frames, in order.
    pub frames: Vec<RgbImage>,
    /// Final state composited onto the baseline in chart space.
    pub final_image: RgbImage,
}

impl ScenarioRun {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The camera image for the `index`-th frame step of a script seeded with
/// `seed`.
pub fn frame_image(
    bundle: &ChartBundle,
    src: &FrameSource,
    seed: u64,
    index: usize,
    base: &Path,
) -> Result<RgbImage, String> {
    let opts = |noise: f64| FrameOptions {
        noise_sigma: noise,
        seed: seed.wrapping_add(index as u64),
        ..FrameOptions::default()
    };
    match src {
        FrameSource::Identity { noise } => Ok(warp_image(
            &bundle.baseline,
            &Homography::identity(),
            &FrameOptions {
                width: bundle.baseline.width(),
                height: bundle.baseline.height(),
                ..opts(*noise)
            },
        )),
        FrameSource::Warp { h, noise } => {
            let h = Homography::from_array(*h, 1.0).map_err(|e| e.to_string())?;
            Ok(warp_image(&bundle.baseline, &h, &opts(*noise)))
        }
        FrameSource::File { path } => {
            let p = base.join(path);
            image::open(&p)
                .map(|img| img.to_rgb8())
                .map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

/// Replays `script` through a fresh session. Frame files resolve against
/// `base_dir`. Step failures are collected, not fatal.
pub fn run_scenario(
    bundle: Arc<ChartBundle>,
    script: &ScenarioScript,
    base_dir: &Path,
    opts: &RunOptions,
) -> ScenarioRun {
    let tracker = TrackerConfig {
        ransac: crate::tracker::RansacConfig {
            seed: script.seed,
            ..opts.tracker.ransac
        },
        ..opts.tracker
    };
    let mut session = Session::new(Arc::clone(&bundle), script.credential, tracker);
    let mut events = Vec::new();
    let mut failures = Vec::new();
    let mut overlays = Vec::new();
    let mut frames = Vec::new();
    let mut fail = |events: &mut Vec<LogEvent>, step: &Step, message: String| {
        events.push(LogEvent::new(
            step.t,
            "error",
            serde_json::json!({ "line": step.line, "message": message }),
        ));
        failures.push(StepFailure {
            line: step.line,
            t: step.t,
            message,
        });
    };
    for step in &script.steps {
        let effects = match &step.action {
            Action::Say { text } => {
                events.push(LogEvent::new(
                    step.t,
                    "command",
                    serde_json::json!({ "text": text }),
                ));
                session.interaction.say(text)
            }
            Action::Pointer { x, y } => {
                let ev = PointerEvent::Move {
                    position: Point::new(*x, *y),
                };
                events.push(LogEvent::new(step.t, "pointer", &ev));
                session.interaction.pointer(&ev)
            }
            Action::Select | Action::Exit => {
                let ev = if step.action == Action::Select {
                    PointerEvent::Select
                } else {
                    PointerEvent::Exit
                };
                events.push(LogEvent::new(step.t, "pointer", &ev));
                session.interaction.pointer(&ev)
            }
            Action::Frame(src) => {
                let index = overlays.len();
                let rgb = match frame_image(&bundle, src, script.seed, index, base_dir) {
                    Ok(img) => img,
                    Err(message) => {
                        fail(&mut events, step, message);
                        continue;
                    }
                };
                let gray = match GrayImage::from_rgb(&rgb) {
                    Ok(g) => g,
                    Err(e) => {
                        fail(&mut events, step, e.to_string());
                        continue;
                    }
                };
                let overlay = session.process_frame(&gray, Some(step.t));
                events.push(LogEvent::new(
                    step.t,
                    "frame",
                    serde_json::json!({
                        "frame": src,
                        "tracking": overlay.tracking,
                        "homography": overlay.homography,
                    }),
                ));
                match composite(&rgb, &overlay.rasterize()) {
                    Ok(img) => frames.push(img),
                    Err(e) => fail(&mut events, step, e.to_string()),
                }
                overlays.push(overlay);
                Vec::new()
            }
        };
        for e in &effects {
            events.push(LogEvent::new(step.t, "effect", e));
        }
        if let Some(Feedback::Error { message }) = Feedback::from_effects(&effects) {
            fail(&mut events, step, message);
        }
    }
    let flat = session.flat_overlay();
    let final_image =
        composite(&bundle.baseline, &flat.rasterize()).unwrap_or_else(|_| bundle.baseline.clone());
    ScenarioRun {
        snapshot: session.interaction.snapshot(),
        events,
        failures,
        overlays,
        frames,
        final_image,
    }
}

/// Rebuilds the interaction state from an event log. Frames, effects and
/// errors are outputs and are skipped.
pub fn replay_events(
    bundle: Arc<ChartBundle>,
    credential: u32,
    events: &[LogEvent],
) -> SessionState {
    let mut interaction = Interaction::new(bundle, credential);
    for ev in events {
        match ev.kind.as_str() {
            "command" => {
                if let Some(text) = ev.payload.get("text").and_then(|t| t.as_str()) {
                    interaction.say(text);
                }
            }
            "pointer" => {
                if let Ok(p) = serde_json::from_value::<PointerEvent>(ev.payload.clone()) {
                    interaction.pointer(&p);
                }
            }
            _ => {}
        }
    }
    interaction.state().clone()
}

pub fn snapshot_json(snapshot: &Snapshot) -> Result<String, ScenarioError> {
    serde_json::to_string_pretty(snapshot)
        .map(|s| s + "\n")
        .map_err(|source| ScenarioError::Json {
            what: "snapshot",
            source,
        })
}

pub fn events_jsonl(events: &[LogEvent]) -> Result<String, ScenarioError> {
    let mut out = String::new();
    for e in events {
        out += &serde_json::to_string(e).map_err(|source| ScenarioError::Json {
            what: "event",
            source,
        })?;
        out.push('\n');
    }
    Ok(out)
}

/// Writes `frame_NNN.png` (raster) or `frame_NNN.json` (vector) per frame
/// step, plus `final.png`, `snapshot.json` and `events.jsonl`.
pub fn write_artifacts(
    run: &ScenarioRun,
    mode: RenderMode,
    out_dir: &Path,
) -> Result<(), ScenarioError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let save = |img: &RgbImage, path: PathBuf| {
        img.save(&path)
            .map_err(|source| ScenarioError::Image { path, source })
    };
    for (i, (overlay, frame)) in run.overlays.iter().zip(&run.frames).enumerate() {
        match mode {
            RenderMode::Raster => save(frame, out_dir.join(format!("frame_{i:03}.png")))?,
            RenderMode::Vector => {
                let path = out_dir.join(format!("frame_{i:03}.json"));
                let text = serde_json::to_string_pretty(overlay).map_err(|source| {
                    ScenarioError::Json {
                        what: "overlay",
                        source,
                    }
                })?;
                fs::write(&path, text + "\n").map_err(io(&path))?;
            }
        }
    }
    save(&run.final_image, out_dir.join("final.png"))?;
    let path = out_dir.join("snapshot.json");
    fs::write(&path, snapshot_json(&run.snapshot)?).map_err(io(&path))?;
    let path = out_dir.join("events.jsonl");
    fs::write(&path, events_jsonl(&run.events)?).map_err(io(&path))?;
    Ok(())
}

/// Directory of the scenarios shipped with the repository.
pub fn repo_scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Counts effects of a kind, for assertions over logs.
pub fn count_effects(events: &[LogEvent], pred: impl Fn(&Effect) -> bool) -> usize {
    events
        .iter()
        .filter(|e| e.kind == "effect")
        .filter_map(|e| serde_json::from_value::<Effect>(e.payload.clone()).ok())
        .filter(|e| pred(e))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{load_bundle, repo_bundles_dir};

    fn bundle(id: &str) -> Arc<ChartBundle> {
        Arc::new(load_bundle(&repo_bundles_dir().join(id)).unwrap())
    }

    #[test]
    fn parses_every_action() {
        let text = "# demo\nchart gdp_demo\nseed 9\ncredential 1\n\n0 say filter out countries in Asia\n0.5 pointer 10 20.5\n1 select\n1 exit\n2 frame identity\n2 frame identity noise 2\n3 frame warp 1 0 5 0 1 -3 0 0 1 noise 1.5\n4 frame file shots/a b.png\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.chart.as_deref(), Some("gdp_demo"));
        assert_eq!(s.seed, 9);
        assert_eq!(s.credential, 1);
        assert_eq!(s.steps.len(), 8);
        assert_eq!(s.steps[0].line, 6);
        assert_eq!(
            s.steps[0].action,
            Action::Say {
                text: "filter out countries in Asia".into()
            }
        );
        assert_eq!(s.steps[1].action, Action::Pointer { x: 10.0, y: 20.5 });
        assert_eq!(
            s.steps[5].action,
            Action::Frame(FrameSource::Identity { noise: 2.0 })
        );
        assert_eq!(
            s.steps[6].action,
            Action::Frame(FrameSource::Warp {
                h: [1.0, 0.0, 5.0, 0.0, 1.0, -3.0, 0.0, 0.0, 1.0],
                noise: 1.5
            })
        );
        assert_eq!(
            s.steps[7].action,
            Action::Frame(FrameSource::File {
                path: "shots/a b.png".into()
            })
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("0 say x\n1 jump\n", 2),
            ("seed x\n", 1),
            ("1 say a\n0 say b\n", 2),
            ("0 pointer 1\n", 1),
            ("0 select now\n", 1),
            ("0 frame warp 1 2 3\n", 1),
            ("0 frame warp 0 0 0 0 0 0 0 0 0\n", 1),
            ("\n\n0 say a\nseed 3\n", 4),
            ("0 frame identity noise -1\n", 1),
            ("nan say a\n", 1),
            ("chart a b\n", 1),
        ];
        for (text, want) in cases {
            match parse_scenario(text) {
                Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_script_yields_baseline() {
        let b = bundle("gdp_demo");
        let run = run_scenario(
            Arc::clone(&b),
            &ScenarioScript::default(),
            Path::new("."),
            &RunOptions::default(),
        );
        assert!(run.succeeded());
        assert!(run.frames.is_empty());
        assert_eq!(run.final_image, b.baseline);
        assert_eq!(run.snapshot.state, SessionState::new(0));
    }

    #[test]
    fn bad_command_fails_citing_the_rule() {
        let script = parse_scenario("0 say Filter out nonsense\n1 say reset\n").unwrap();
        let run = run_scenario(
            bundle("gdp_demo"),
            &script,
            Path::new("."),
            &RunOptions::default(),
        );
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].line, 1);
        assert!(
            run.failures[0].message.contains("rule `"),
            "{}",
            run.failures[0].message
        );
        assert_eq!(run.snapshot.state.revision, 1);
    }

    #[test]
    fn runs_are_deterministic_and_replayable() {
        let b = bundle("gdp_demo");
        let text = "seed 4\n0 say filter out countries in Europe\n0.2 pointer 300 200\n0.4 select\n1 frame warp 0.95 0.02 10 -0.02 0.95 8 0 0 1 noise 2\n1.5 exit\n2 frame identity\n";
        let script = parse_scenario(text).unwrap();
        let a = run_scenario(
            Arc::clone(&b),
            &script,
            Path::new("."),
            &RunOptions::default(),
        );
        let c = run_scenario(
            Arc::clone(&b),
            &script,
            Path::new("."),
            &RunOptions::default(),
        );
        assert_eq!(a.frames, c.frames);
        assert_eq!(a.final_image, c.final_image);
        assert_eq!(
            events_jsonl(&a.events).unwrap(),
            events_jsonl(&c.events).unwrap()
        );
        assert_eq!(
            snapshot_json(&a.snapshot).unwrap(),
            snapshot_json(&c.snapshot).unwrap()
        );
        assert_eq!(
            replay_events(b, script.credential, &a.events),
            a.snapshot.state
        );
        assert_eq!(a.frames.len(), 2);
    }

    #[test]
    fn missing_frame_file_is_a_step_failure() {
        let script = parse_scenario("0 frame file does-not-exist.png\n").unwrap();
        let run = run_scenario(
            bundle("gdp_demo"),
            &script,
            Path::new("/nonexistent"),
            &RunOptions::default(),
        );
        assert_eq!(run.failures.len(), 1);
        assert!(run.frames.is_empty());
    }

    #[test]
    fn artifacts_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let script =
            parse_scenario("0 say highlight countries in Africa\n1 frame identity\n").unwrap();
        let run = run_scenario(
            bundle("gdp_demo"),
            &script,
            Path::new("."),
            &RunOptions::default(),
        );
        write_artifacts(&run, RenderMode::Raster, dir.path()).unwrap();
        for f in [
            "frame_000.png",
            "final.png",
            "snapshot.json",
            "events.jsonl",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        write_artifacts(&run, RenderMode::Vector, dir.path()).unwrap();
        let overlay: Overlay =
            serde_json::from_str(&fs::read_to_string(dir.path().join("frame_000.json")).unwrap())
                .unwrap();
        assert_eq!(overlay, run.overlays[0]);
        let log = fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
        for line in log.lines() {
            let ev: LogEvent = serde_json::from_str(line).unwrap();
            assert!(["command", "pointer", "frame", "effect", "error"].contains(&ev.kind.as_str()));
        }
        assert_eq!(count_effects(&run.events, |e| *e == Effect::Chime), 1);
    }

    #[test]
    fn shipped_scenarios_run_cleanly() {
        for name in ["bob", "filter_one", "highlight_two"] {
            let text =
                fs::read_to_string(repo_scenarios_dir().join(format!("{name}.scn"))).unwrap();
            let script = parse_scenario(&text).unwrap();
            let b = bundle(script.chart.as_deref().unwrap());
            let run = run_scenario(b, &script, &repo_scenarios_dir(), &RunOptions::default());
            assert!(run.succeeded(), "{name}: {:?}", run.failures);
            for o in &run.overlays {
                assert!(
                    o.tracking == crate::session::Tracking::Locked,
                    "{name}: {:?}",
                    o.tracking
                );
            }
            if name == "bob" {
                let st = &run.snapshot.state;
                assert!(!st.linked_view_open);
                assert_eq!(st.highlights.iter().copied().collect::<Vec<_>>(), vec![16]);
                assert_eq!(st.focused, None);
            }
        }
    }
}
