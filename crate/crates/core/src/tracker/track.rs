use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureSet};
use super::homography::{estimate_homography_dlt, rect_corners, Homography};
use super::image::GrayImage;
use super::matching::match_features;
use super::ransac::{ransac_homography, RansacConfig};
use super::refine::refine_homography;
use super::TrackError;
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub max_features: usize,
    pub match_ratio: f64,
    pub ransac: RansacConfig,
    pub smoothing_alpha: f64,
    /// Frames a lost target keeps its last pose.
    pub grace_frames: u32,
    /// Subpixel patch alignment after the robust fit.
    pub refine: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            max_features: 1000,
            match_ratio: 0.8,
            ransac: RansacConfig::default(),
            smoothing_alpha: 0.5,
            grace_frames: 5,
            refine: true,
        }
    }
}

/// What the tracker looks for: the chart's baseline luminance and its
/// features. Immutable and shareable between sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackTarget {
    pub image: GrayImage,
    pub features: FeatureSet,
}

impl TrackTarget {
    pub fn new(image: GrayImage, max_features: usize) -> Result<Self, TrackError> {
        let features = extract_features(&image, max_features)?;
        Ok(Self { image, features })
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub previous: Option<Homography>,
    pub smoothing_alpha: f64,
    pub frames_lost: u32,
    pub frame_index: u64,
}

impl TrackState {
    pub fn new(smoothing_alpha: f64) -> Self {
        Self {
            previous: None,
            smoothing_alpha: if smoothing_alpha > 0.0 && smoothing_alpha <= 1.0 {
                smoothing_alpha
            } else {
                1.0
            },
            frames_lost: 0,
            frame_index: 0,
        }
    }
}

impl Default for TrackState {
    fn default() -> Self {
        Self::new(TrackerConfig::default().smoothing_alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Locked,
    /// Detection failed; the last pose is reused within the grace window.
    Held,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    pub homography: Option<Homography>,
    pub status: TrackStatus,
    pub keypoints: usize,
    pub matches: usize,
    pub inliers: usize,
    pub failure: Option<TrackError>,
}

fn detect(
    frame: &GrayImage,
    target: &TrackTarget,
    config: &TrackerConfig,
    frame_index: u64,
) -> (Result<Homography, TrackError>, usize, usize, usize) {
    let reference = &target.features;
    let features = match extract_features(frame, config.max_features) {
        Ok(f) => f,
        Err(e) => return (Err(e), 0, 0, 0),
    };
    let matches = match_features(&features, reference, config.match_ratio);
    let src: Vec<Point> = matches
        .iter()
        .map(|m| {
            let k = reference.keypoints[m.train];
            Point::new(k.x, k.y)
        })
        .collect();
    let dst: Vec<Point> = matches
        .iter()
        .map(|m| {
            let k = features.keypoints[m.query];
            Point::new(k.x, k.y)
        })
        .collect();
    let ransac = RansacConfig {
        seed: config.ransac.seed.wrapping_add(frame_index),
        ..config.ransac
    };
    match ransac_homography(&src, &dst, &ransac) {
        Ok(r) => {
            let mut h = r.homography;
            if config.refine {
                let points: Vec<Point> = reference
                    .keypoints
                    .iter()
                    .map(|k| Point::new(k.x, k.y))
                    .collect();
                if let Some(refined) = refine_homography(&h, &target.image, &points, frame) {
                    h = refined;
                }
            }
            (Ok(h), features.len(), matches.len(), r.inliers.len())
        }
        Err(e) => (Err(e), features.len(), matches.len(), 0),
    }
}

/// Blends the projected reference corners toward the new estimate and
/// refits. alpha = 1 returns the raw estimate untouched.
fn smooth(raw: Homography, previous: &Homography, alpha: f64, size: (f64, f64)) -> Homography {
    if alpha >= 1.0 {
        return raw;
    }
    let corners = rect_corners(size.0, size.1);
    let blended: Vec<Point> = corners
        .iter()
        .map(|&c| previous.project(c).lerp(raw.project(c), alpha))
        .collect();
    match estimate_homography_dlt(&corners, &blended) {
        Ok(h) if h.keeps_rect_convex(size.0, size.1) => h.with_confidence(raw.confidence()),
        _ => raw,
    }
}

/// One tracking step: extract, match against the reference, fit, smooth.
pub fn track_frame(
    state: &TrackState,
    frame: &GrayImage,
    target: &TrackTarget,
    config: &TrackerConfig,
) -> (TrackState, TrackOutcome) {
    let (result, keypoints, matches, inliers) = detect(frame, target, config, state.frame_index);
    let size = (target.width() as f64, target.height() as f64);
    let mut next = state.clone();
    next.frame_index += 1;
    let (homography, status, failure) = match result {
        Ok(raw) => {
            let h = match &state.previous {
                Some(prev) => smooth(raw, prev, state.smoothing_alpha, size),
                None => raw,
            };
            next.previous = Some(h);
            next.frames_lost = 0;
            (Some(h), TrackStatus::Locked, None)
        }
        Err(e) => {
            next.frames_lost = state.frames_lost.saturating_add(1);
            if next.previous.is_some() && next.frames_lost <= config.grace_frames {
                (next.previous, TrackStatus::Held, Some(e))
            } else {
                next.previous = None;
                (None, TrackStatus::Lost, Some(e))
            }
        }
    };
    (
        next,
        TrackOutcome {
            homography,
            status,
            keypoints,
            matches,
            inliers,
            failure,
        },
    )
}
