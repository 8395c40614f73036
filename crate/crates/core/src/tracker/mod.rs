//! Planar target tracking: finds the reference chart in a frame and
//! estimates the chart-to-frame homography.

mod features;
mod homography;
mod image;
mod matching;
mod ransac;
mod refine;
mod track;

pub use features::{extract_features, Descriptor, FeatureSet, Keypoint, FAST_ARC, FAST_THRESHOLD};
pub use homography::{estimate_homography_dlt, rect_corners, Homography};
pub use image::{GrayImage, MIN_IMAGE_SIDE};
pub use matching::{match_features, FeatureMatch};
pub use ransac::{ransac_homography, RansacConfig, RansacResult, MIN_CONSENSUS};
pub use refine::refine_homography;
pub use track::{track_frame, TrackOutcome, TrackState, TrackStatus, TrackTarget, TrackerConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("image {width}x{height} is below the {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} minimum")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("image buffer holds {found} samples, expected {expected}")]
    BadImageBuffer { expected: usize, found: usize },
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no consensus: best model had {best} inliers, need {needed}")]
    NoConsensus { best: usize, needed: usize },
}
