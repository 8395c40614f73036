//! A viewer's session over one chart bundle: interaction state driven by
//! command text and pointer events, plus a frame tracker that places the
//! overlay in camera space. Both the scenario runner and the network service
//! drive sessions through this module, so their results agree.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::ChartBundle;
use crate::chart::{aggregate_selection, ChartKind, LinkedBar, RecordId};
use crate::color::Rgb;
use crate::command::{parse_command, CommandAst, Vocabulary};
use crate::geometry::{Point, Rect};
use crate::interaction::{
    apply_command, linked_selection, pointer_event, visible_records, Effect, PointerEvent,
    SessionState,
};
use crate::overlay::{
    plan_overlay, rasterize_overlay, warp_primitives, OverlayFrame, OverlayPrimitive,
};
use crate::tracker::{track_frame, GrayImage, Homography, TrackState, TrackStatus, TrackerConfig};

pub const SNAPSHOT_FORMAT: &str = "arlens-snapshot/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    #[default]
    Vector,
    Raster,
}

/// Where the overlay currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tracking {
    /// No camera frame yet: the overlay is drawn in chart space.
    Flat,
    Locked,
    Held,
    Lost,
}

impl From<TrackStatus> for Tracking {
    fn from(s: TrackStatus) -> Self {
        match s {
            TrackStatus::Locked => Tracking::Locked,
            TrackStatus::Held => Tracking::Held,
            TrackStatus::Lost => Tracking::Lost,
        }
    }
}

/// Result of a command as reported to the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Feedback {
    Chime,
    Error { message: String },
}

impl Feedback {
    pub fn from_effects(effects: &[Effect]) -> Option<Feedback> {
        effects.iter().find_map(|e| match e {
            Effect::Chime => Some(Feedback::Chime),
            Effect::Error { message } => Some(Feedback::Error {
                message: message.clone(),
            }),
            Effect::StateChanged { .. } => None,
        })
    }
}

/// Chart facts a client needs to redraw a snapshot without the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMeta {
    pub id: String,
    pub title: String,
    pub kind: ChartKind,
    pub image_size: [u32; 2],
    pub plot_area: Rect,
    pub background_color: Rgb,
    pub record_count: usize,
    pub detail_attributes: Vec<String>,
}

impl ChartMeta {
    pub fn of(bundle: &ChartBundle) -> Self {
        let spec = &bundle.spec;
        Self {
            id: spec.id.clone(),
            title: spec.title.clone(),
            kind: spec.kind,
            image_size: spec.image_size,
            plot_area: spec.plot_area,
            background_color: spec.background_color,
            record_count: bundle.dataset.len(),
            detail_attributes: spec.detail_attributes.clone(),
        }
    }
}

/// Self-describing copy of a session's interaction state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub chart: ChartMeta,
    pub state: SessionState,
    pub visible: BTreeSet<RecordId>,
    pub linked_selection: BTreeSet<RecordId>,
    /// Empty when the chart has no linked view or the session cannot see it.
    pub linked_bars: Vec<LinkedBar>,
}

/// Overlay for one revision of the state, in chart space (`Flat`) or warped
/// into a camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub revision: u64,
    pub tracking: Tracking,
    pub width: u32,
    pub height: u32,
    /// Chart-to-frame map the primitives were warped with.
    pub homography: Option<Homography>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_timestamp: Option<f64>,
    pub primitives: Vec<OverlayPrimitive>,
}

impl Overlay {
    pub fn rasterize(&self) -> OverlayFrame {
        rasterize_overlay(&self.primitives, self.width, self.height)
    }
}

/// Interaction half of a session: command and pointer input.
#[derive(Debug, Clone)]
pub struct Interaction {
    bundle: Arc<ChartBundle>,
    vocab: Vocabulary,
    state: SessionState,
}

impl Interaction {
    pub fn new(bundle: Arc<ChartBundle>, credential: u32) -> Self {
        let vocab = Vocabulary::from_chart(&bundle.spec, &bundle.dataset);
        Self {
            bundle,
            vocab,
            state: SessionState::new(credential),
        }
    }

    pub fn bundle(&self) -> &Arc<ChartBundle> {
        &self.bundle
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn parse(&self, text: &str) -> Result<CommandAst, crate::command::CommandError> {
        parse_command(text, &self.vocab)
    }

    /// Parses and applies command text. Parse failures surface as an error
    /// effect and leave the state alone.
    pub fn say(&mut self, text: &str) -> Vec<Effect> {
        match self.parse(text) {
            Ok(ast) => self.apply(&ast),
            Err(e) => vec![Effect::Error {
                message: e.to_string(),
            }],
        }
    }

    pub fn apply(&mut self, ast: &CommandAst) -> Vec<Effect> {
        let (next, effects) = apply_command(&self.state, ast, &self.bundle.dataset);
        self.state = next;
        effects
    }

    /// Pointer input in chart coordinates.
    pub fn pointer(&mut self, event: &PointerEvent) -> Vec<Effect> {
        let slop = self.bundle.spec.overlay.hit_slop_px;
        let (next, effects) = pointer_event(
            &self.state,
            event,
            &self.bundle.marks,
            &self.bundle.dataset,
            slop,
        );
        self.state = next;
        effects
    }

    pub fn snapshot(&self) -> Snapshot {
        snapshot_of(&self.bundle, &self.state)
    }

    /// Chart-space overlay for the current state.
    pub fn plan(&self) -> Vec<OverlayPrimitive> {
        plan_overlay(
            &self.bundle.spec,
            &self.bundle.marks,
            &self.state,
            &self.bundle.dataset,
        )
    }
}

pub fn snapshot_of(bundle: &ChartBundle, state: &SessionState) -> Snapshot {
    let dataset = &bundle.dataset;
    let selection = linked_selection(state, dataset);
    let linked_bars = bundle
        .spec
        .linked_view
        .as_ref()
        .filter(|c| {
            state.can_see(dataset, &c.group_attribute) && state.can_see(dataset, &c.value_attribute)
        })
        .and_then(|c| {
            aggregate_selection(
                dataset,
                &selection,
                &c.group_attribute,
                &c.value_attribute,
                c.aggregate,
            )
            .ok()
        })
        .unwrap_or_default();
    Snapshot {
        format: SNAPSHOT_FORMAT.to_string(),
        chart: ChartMeta::of(bundle),
        state: state.clone(),
        visible: visible_records(state, dataset),
        linked_selection: selection,
        linked_bars,
    }
}

/// Latest tracking result for a session.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameView {
    pub tracking: Tracking,
    pub homography: Option<Homography>,
    pub width: u32,
    pub height: u32,
    pub timestamp: Option<f64>,
}

impl FrameView {
    pub fn flat(bundle: &ChartBundle) -> Self {
        Self {
            tracking: Tracking::Flat,
            homography: None,
            width: bundle.spec.width(),
            height: bundle.spec.height(),
            timestamp: None,
        }
    }

    /// Maps a frame-space point back to chart space, if the chart is placed.
    pub fn to_chart(&self, p: Point) -> Option<Point> {
        match (&self.tracking, &self.homography) {
            (Tracking::Flat, _) => Some(p),
            (_, Some(h)) => h.inverse().map(|inv| inv.project(p)),
            _ => None,
        }
    }
}

/// Tracking half of a session.
#[derive(Debug, Clone)]
pub struct FrameTracker {
    config: TrackerConfig,
    track: TrackState,
    view: FrameView,
}

impl FrameTracker {
    pub fn new(bundle: &ChartBundle, config: TrackerConfig) -> Self {
        Self {
            config,
            track: TrackState::new(config.smoothing_alpha),
            view: FrameView::flat(bundle),
        }
    }

    pub fn view(&self) -> &FrameView {
        &self.view
    }

    pub fn track_state(&self) -> &TrackState {
        &self.track
    }

    pub fn process(
        &mut self,
        bundle: &ChartBundle,
        frame: &GrayImage,
        timestamp: Option<f64>,
    ) -> &FrameView {
        let (next, outcome) = track_frame(&self.track, frame, &bundle.target, &self.config);
        self.track = next;
        self.view = FrameView {
            tracking: outcome.status.into(),
            homography: outcome.homography,
            width: frame.width(),
            height: frame.height(),
            timestamp,
        };
        &self.view
    }
}

/// Warps the chart-space plan into the view. A lost target shows nothing.
pub fn build_overlay(bundle: &ChartBundle, state: &SessionState, view: &FrameView) -> Overlay {
    let planned = || plan_overlay(&bundle.spec, &bundle.marks, state, &bundle.dataset);
    let primitives = match (view.tracking, &view.homography) {
        (Tracking::Flat, _) => planned(),
        (Tracking::Lost, _) | (_, None) => Vec::new(),
        (_, Some(h)) => warp_primitives(&planned(), h),
    };
    Overlay {
        revision: state.revision,
        tracking: view.tracking,
        width: view.width,
        height: view.height,
        homography: view.homography.filter(|_| view.tracking != Tracking::Flat),
        frame_timestamp: view.timestamp,
        primitives,
    }
}

/// Single-owner session: both halves behind one `&mut`.
#[derive(Debug, Clone)]
pub struct Session {
    pub interaction: Interaction,
    pub tracker: FrameTracker,
}

impl Session {
    pub fn new(bundle: Arc<ChartBundle>, credential: u32, config: TrackerConfig) -> Self {
        let tracker = FrameTracker::new(&bundle, config);
        Self {
            interaction: Interaction::new(bundle, credential),
            tracker,
        }
    }

    pub fn bundle(&self) -> &Arc<ChartBundle> {
        self.interaction.bundle()
    }

    pub fn state(&self) -> &SessionState {
        self.interaction.state()
    }

    pub fn overlay(&self) -> Overlay {
        build_overlay(self.bundle(), self.state(), self.tracker.view())
    }

    /// Overlay in chart space regardless of tracking.
    pub fn flat_overlay(&self) -> Overlay {
        build_overlay(self.bundle(), self.state(), &FrameView::flat(self.bundle()))
    }

    pub fn process_frame(&mut self, frame: &GrayImage, timestamp: Option<f64>) -> Overlay {
        let bundle = Arc::clone(self.interaction.bundle());
        self.tracker.process(&bundle, frame, timestamp);
        self.overlay()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{load_bundle, repo_bundles_dir};
    use crate::interaction::hidden_records;
    use crate::overlay::composite;
    use crate::synth::{warp_image, FrameOptions};

    fn gdp() -> Arc<ChartBundle> {
        Arc::new(load_bundle(&repo_bundles_dir().join("gdp_demo")).unwrap())
    }

    #[test]
    fn fresh_snapshot_is_empty() {
        let s = Session::new(gdp(), 0, TrackerConfig::default());
        let snap = s.interaction.snapshot();
        assert_eq!(snap.format, SNAPSHOT_FORMAT);
        assert_eq!(snap.state.revision, 0);
        assert!(snap.state.filters.is_empty());
        assert!(snap.linked_selection.is_empty());
        assert_eq!(snap.visible.len(), snap.chart.record_count);
        assert!(s.overlay().primitives.is_empty());
        assert_eq!(s.overlay().tracking, Tracking::Flat);
    }

    #[test]
    fn filter_command_patches_every_match() {
        let bundle = gdp();
        let mut s = Session::new(Arc::clone(&bundle), 0, TrackerConfig::default());
        let effects = s.interaction.say("Filter out countries in Asia");
        assert_eq!(Feedback::from_effects(&effects), Some(Feedback::Chime));
        let asian = bundle
            .dataset
            .records()
            .iter()
            .filter(|r| {
                bundle
                    .dataset
                    .value(r.id, "continent")
                    .and_then(|v| v.as_category())
                    == Some("Asia")
            })
            .count();
        let overlay = s.overlay();
        let patches = overlay
            .primitives
            .iter()
            .filter(|p| p.kind() == "occlusion_patch")
            .count();
        assert_eq!(patches, asian);
        assert_eq!(hidden_records(s.state(), &bundle.dataset).len(), asian);
        assert_eq!(overlay.revision, 1);
    }

    #[test]
    fn parse_error_is_feedback_without_state_change() {
        let mut s = Session::new(gdp(), 0, TrackerConfig::default());
        let effects = s.interaction.say("Filter out nonsense");
        assert!(matches!(
            Feedback::from_effects(&effects),
            Some(Feedback::Error { .. })
        ));
        assert_eq!(s.state().revision, 0);
    }

    #[test]
    fn clearance_is_enforced_per_session() {
        let mut low = Session::new(gdp(), 0, TrackerConfig::default());
        let mut high = Session::new(gdp(), 2, TrackerConfig::default());
        let cmd = "highlight countries with debt_ratio above 100";
        assert!(matches!(
            Feedback::from_effects(&low.interaction.say(cmd)),
            Some(Feedback::Error { .. })
        ));
        assert_eq!(
            Feedback::from_effects(&high.interaction.say(cmd)),
            Some(Feedback::Chime)
        );
    }

    #[test]
    fn tracked_overlay_follows_frame_and_lost_shows_nothing() {
        let bundle = gdp();
        let mut s = Session::new(Arc::clone(&bundle), 0, TrackerConfig::default());
        s.interaction.say("filter out countries in Europe");
        let h = Homography::translation(12.0, -7.0);
        let frame = warp_image(&bundle.baseline, &h, &FrameOptions::default());
        let overlay = s.process_frame(&GrayImage::from_rgb(&frame).unwrap(), Some(1.5));
        assert_eq!(overlay.tracking, Tracking::Locked);
        assert_eq!(overlay.frame_timestamp, Some(1.5));
        let flat = s.flat_overlay();
        for (w, f) in overlay.primitives.iter().zip(&flat.primitives) {
            if let (
                OverlayPrimitive::OcclusionPatch { footprint: a, .. },
                OverlayPrimitive::OcclusionPatch { footprint: b, .. },
            ) = (w, f)
            {
                let expect = h.project(b.center());
                assert!(a.center().distance(expect) < 1.0);
            }
        }
        let composite_ok = composite(&frame, &overlay.rasterize());
        assert!(composite_ok.is_ok());

        let blank = GrayImage::filled(640, 480, 96).unwrap();
        let mut last = None;
        for _ in 0..6 {
            last = Some(s.process_frame(&blank, None));
        }
        let last = last.unwrap();
        assert_eq!(last.tracking, Tracking::Lost);
        assert!(last.primitives.is_empty());
        assert!(last.homography.is_none());
    }

    #[test]
    fn frame_points_map_back_to_chart() {
        let bundle = gdp();
        let view = FrameView {
            tracking: Tracking::Locked,
            homography: Some(Homography::scaling(2.0)),
            width: 640,
            height: 480,
            timestamp: None,
        };
        let p = view.to_chart(Point::new(200.0, 100.0)).unwrap();
        assert!(p.distance(Point::new(100.0, 50.0)) < 1e-9);
        assert_eq!(FrameView::flat(&bundle).to_chart(p), Some(p));
    }
}
