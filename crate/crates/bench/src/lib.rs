//! Inputs shared by the criterion benches: the demo bundle, a synthetic
//! camera frame of it and the correspondences the tracker would fit.

use std::sync::Arc;

use arlens_core::bundle::{load_bundle, repo_bundles_dir, ChartBundle};
use arlens_core::synth::{moving_warp, warp_image, FrameOptions};
use arlens_core::tracker::{
    extract_features, match_features, GrayImage, Homography, TrackerConfig,
};
use arlens_core::Point;

pub fn bundle(id: &str) -> Arc<ChartBundle> {
    Arc::new(load_bundle(&repo_bundles_dir().join(id)).expect("demo bundle"))
}

/// Mid-sequence 640x480 view of `bundle` with a little noise and clutter.
pub struct Fixture {
    pub bundle: Arc<ChartBundle>,
    pub frame: GrayImage,
    pub truth: Homography,
    /// Matched target and frame keypoints, in target order.
    pub src: Vec<Point>,
    pub dst: Vec<Point>,
}

impl Fixture {
    pub fn new(id: &str) -> Self {
        let bundle = bundle(id);
        let (w, h) = (bundle.spec.width() as f64, bundle.spec.height() as f64);
        let truth = moving_warp(15, 30, w, h);
        let rgb = warp_image(
            &bundle.baseline,
            &truth,
            &FrameOptions {
                noise_sigma: 2.0,
                clutter_fraction: 0.1,
                seed: 7,
                ..FrameOptions::default()
            },
        );
        let frame = GrayImage::from_rgb(&rgb).expect("frame size");
        let config = TrackerConfig::default();
        let features = extract_features(&frame, config.max_features).expect("features");
        let matches = match_features(&bundle.target.features, &features, config.match_ratio);
        let key = |k: &arlens_core::tracker::Keypoint| Point::new(k.x, k.y);
        let src = matches
            .iter()
            .map(|m| key(&bundle.target.features.keypoints[m.query]))
            .collect();
        let dst = matches
            .iter()
            .map(|m| key(&features.keypoints[m.train]))
            .collect();
        Self {
            bundle,
            frame,
            truth,
            src,
            dst,
        }
    }
}
