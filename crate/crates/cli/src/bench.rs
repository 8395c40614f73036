//! `arlens track-bench`: tracks a synthetic warp sequence of a bundle's
//! baseline and reports corner-error and timing percentiles.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use arlens_core::bundle::ChartBundle;
use arlens_core::synth::{moving_warp, warp_image, FrameOptions, FrameTruth};
use arlens_core::tracker::{
    track_frame, GrayImage, RansacConfig, TrackState, TrackStatus, TrackerConfig,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub frames: usize,
    /// Fraction of each frame covered by clutter rectangles.
    pub outliers: f64,
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: usize,
    pub status: TrackStatus,
    /// Mean corner distance to ground truth; `None` when no pose was output.
    pub corner_error: Option<f64>,
    pub max_corner_error: Option<f64>,
    pub keypoints: usize,
    pub matches: usize,
    pub inliers: usize,
    pub millis: f64,
    pub truth: FrameTruth,
}

/// Runs the sequence. `on_frame` sees each synthetic frame with its truth.
pub fn run(
    bundle: &ChartBundle,
    opts: &BenchOptions,
    mut on_frame: impl FnMut(usize, &image::RgbImage, &FrameTruth),
) -> Vec<FrameResult> {
    let (w, h) = (bundle.spec.width() as f64, bundle.spec.height() as f64);
    let config = TrackerConfig {
        ransac: RansacConfig {
            seed: opts.seed,
            ..RansacConfig::default()
        },
        ..TrackerConfig::default()
    };
    let mut state = TrackState::new(config.smoothing_alpha);
    let mut out = Vec::with_capacity(opts.frames);
    for i in 0..opts.frames {
        let truth_h = moving_warp(i, opts.frames, w, h);
        let frame = warp_image(
            &bundle.baseline,
            &truth_h,
            &FrameOptions {
                noise_sigma: opts.noise,
                clutter_fraction: opts.outliers,
                seed: opts.seed.wrapping_add(i as u64),
                ..FrameOptions::default()
            },
        );
        let truth = FrameTruth {
            frame: i,
            h: truth_h.to_array(),
        };
        on_frame(i, &frame, &truth);
        let gray = GrayImage::from_rgb(&frame).expect("synthetic frames meet the size minimum");
        let start = Instant::now();
        let (next, outcome) = track_frame(&state, &gray, &bundle.target, &config);
        let millis = start.elapsed().as_secs_f64() * 1e3;
        state = next;
        let err = |f: fn(&_, &_, f64, f64) -> f64| {
            outcome
                .homography
                .as_ref()
                .map(|est| f(est, &truth_h, w, h))
        };
        out.push(FrameResult {
            frame: i,
            status: outcome.status,
            corner_error: err(arlens_core::tracker::Homography::corner_error),
            max_corner_error: err(arlens_core::tracker::Homography::max_corner_error),
            keypoints: outcome.keypoints,
            matches: outcome.matches,
            inliers: outcome.inliers,
            millis,
            truth,
        });
    }
    out
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub const PERCENTILES: [f64; 4] = [50.0, 90.0, 95.0, 99.0];

fn summary_row(out: &mut String, name: &str, mut values: Vec<f64>) {
    values.sort_by(f64::total_cmp);
    let _ = write!(out, "{name},{}", values.len());
    for q in PERCENTILES {
        let _ = write!(out, ",{:.6}", percentile(&values, q));
    }
    let max = values.last().copied().unwrap_or(f64::NAN);
    let mean = if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    let _ = writeln!(out, ",{max:.6},{mean:.6}");
}

/// Percentile table. Frames without a pose are left out of the error rows.
pub fn summary_csv(results: &[FrameResult]) -> String {
    let mut out = String::from("metric,n,p50,p90,p95,p99,max,mean\n");
    summary_row(
        &mut out,
        "corner_error_px",
        results.iter().filter_map(|r| r.corner_error).collect(),
    );
    summary_row(
        &mut out,
        "max_corner_error_px",
        results.iter().filter_map(|r| r.max_corner_error).collect(),
    );
    summary_row(
        &mut out,
        "track_ms",
        results.iter().map(|r| r.millis).collect(),
    );
    out
}

fn status_name(s: TrackStatus) -> &'static str {
    match s {
        TrackStatus::Locked => "locked",
        TrackStatus::Held => "held",
        TrackStatus::Lost => "lost",
    }
}

pub fn frames_csv(results: &[FrameResult]) -> String {
    let mut out = String::from(
        "frame,status,corner_error_px,max_corner_error_px,keypoints,matches,inliers,track_ms\n",
    );
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            r.frame,
            status_name(r.status),
            opt(r.corner_error),
            opt(r.max_corner_error),
            r.keypoints,
            r.matches,
            r.inliers,
            r.millis
        );
    }
    out
}

/// Writes `frame_NNN.png` and its `frame_NNN.json` truth sidecar.
pub fn save_frame(
    dir: &Path,
    i: usize,
    frame: &image::RgbImage,
    truth: &FrameTruth,
) -> anyhow::Result<()> {
    frame.save(dir.join(format!("frame_{i:03}.png")))?;
    std::fs::write(
        dir.join(format!("frame_{i:03}.json")),
        serde_json::to_string(truth)? + "\n",
    )?;
    Ok(())
}
