use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::homography::{estimate_homography_dlt, has_collinear_triple, Homography};
use super::TrackError;
use crate::geometry::{cross, Point};

/// A four-point sample always agrees with its own hypothesis, so consensus
/// needs at least four supporting points beyond it.
pub const MIN_CONSENSUS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_threshold_px: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_threshold_px: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    /// Indices into the correspondence lists, ascending.
    pub inliers: Vec<usize>,
}

/// Forward plus backward reprojection distance, squared.
fn symmetric_transfer_sq(h: &Homography, inv: &Homography, s: Point, d: Point) -> f64 {
    let fwd = h.project(s).distance_sq(d);
    let bwd = inv.project(d).distance_sq(s);
    let e = fwd + bwd;
    if e.is_finite() {
        e
    } else {
        f64::INFINITY
    }
}

fn consensus(h: &Homography, src: &[Point], dst: &[Point], threshold: f64) -> Vec<usize> {
    let Some(inv) = h.inverse() else {
        return Vec::new();
    };
    let t2 = threshold * threshold;
    (0..src.len())
        .filter(|&i| symmetric_transfer_sq(h, &inv, src[i], dst[i]) <= t2)
        .collect()
}

/// A projective map preserves the orientation of every triangle or flips
/// all of them; mixed signs mean the sample cannot be a valid view.
fn orientation_consistent(s: &[Point; 4], d: &[Point; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let signs: Vec<bool> = TRIPLES
        .iter()
        .map(|t| {
            let a = cross(s[t[0]], s[t[1]], s[t[2]]);
            let b = cross(d[t[0]], d[t[1]], d[t[2]]);
            a * b > 0.0
        })
        .collect();
    signs.iter().all(|&v| v) || signs.iter().all(|&v| !v)
}

fn bounding_size(pts: &[Point]) -> (f64, f64, f64, f64) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x0, y0, x1, y1)
}

fn keeps_region_convex(h: &Homography, region: (f64, f64, f64, f64)) -> bool {
    let (x0, y0, x1, y1) = region;
    let shift = Homography::translation(x0, y0);
    match h.compose(&shift) {
        Ok(shifted) => shifted.keeps_rect_convex(x1 - x0, y1 - y0),
        Err(_) => false,
    }
}

/// Robust fit of `src[i] -> dst[i]`. Hypotheses that fold the source
/// bounding box into a non-convex quadrilateral are discarded.
pub fn ransac_homography(
    src: &[Point],
    dst: &[Point],
    config: &RansacConfig,
) -> Result<RansacResult, TrackError> {
    let n = src.len();
    if dst.len() != n {
        return Err(TrackError::Degenerate(
            "correspondence lists differ in length".into(),
        ));
    }
    if n < MIN_CONSENSUS {
        return Err(TrackError::TooFewPoints {
            needed: MIN_CONSENSUS,
            got: n,
        });
    }
    let region = bounding_size(src);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..config.iterations {
        let idx = sample(&mut rng, n, 4);
        let s = [
            src[idx.index(0)],
            src[idx.index(1)],
            src[idx.index(2)],
            src[idx.index(3)],
        ];
        let d = [
            dst[idx.index(0)],
            dst[idx.index(1)],
            dst[idx.index(2)],
            dst[idx.index(3)],
        ];
        if has_collinear_triple(&s, 1.0) || has_collinear_triple(&d, 1.0) {
            continue;
        }
        if !orientation_consistent(&s, &d) {
            continue;
        }
        let Ok(h) = estimate_homography_dlt(&s, &d) else {
            continue;
        };
        if !keeps_region_convex(&h, region) {
            continue;
        }
        let inliers = consensus(&h, src, dst, config.inlier_threshold_px);
        if inliers.len() > best.len() {
            best = inliers;
            if best.len() == n {
                break;
            }
        }
    }
    if best.len() < MIN_CONSENSUS {
        return Err(TrackError::NoConsensus {
            best: best.len(),
            needed: MIN_CONSENSUS,
        });
    }
    // Refit on the consensus set, then once more on the refit's own consensus.
    let mut inliers = best;
    let mut homography = refit(src, dst, &inliers)?;
    let again = consensus(&homography, src, dst, config.inlier_threshold_px);
    if again.len() >= inliers.len() {
        if let Ok(h) = refit(src, dst, &again) {
            homography = h;
            inliers = again;
        }
    }
    if !keeps_region_convex(&homography, region) {
        return Err(TrackError::Degenerate("refit folds the target".into()));
    }
    let confidence = inliers.len() as f64 / n as f64;
    Ok(RansacResult {
        homography: homography.with_confidence(confidence),
        inliers,
    })
}

fn refit(src: &[Point], dst: &[Point], inliers: &[usize]) -> Result<Homography, TrackError> {
    let s: Vec<Point> = inliers.iter().map(|&i| src[i]).collect();
    let d: Vec<Point> = inliers.iter().map(|&i| dst[i]).collect();
    estimate_homography_dlt(&s, &d)
}
