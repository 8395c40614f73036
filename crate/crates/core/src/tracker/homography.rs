//! Projective maps between chart space and frame space, and the normalized
//! direct linear transform used to fit them.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::TrackError;
use crate::geometry::{cross, is_strictly_convex, Point};

/// 3x3 projective map with a confidence (inlier fraction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "HomographyRepr", try_from = "HomographyRepr")]
pub struct Homography {
    matrix: Matrix3<f64>,
    confidence: f64,
}

#[derive(Serialize, Deserialize)]
struct HomographyRepr {
    h: [f64; 9],
    confidence: f64,
}

impl From<Homography> for HomographyRepr {
    fn from(h: Homography) -> Self {
        HomographyRepr {
            h: h.to_array(),
            confidence: h.confidence,
        }
    }
}

impl TryFrom<HomographyRepr> for Homography {
    type Error = TrackError;

    fn try_from(r: HomographyRepr) -> Result<Self, Self::Error> {
        Homography::from_array(r.h, r.confidence)
    }
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
            confidence: 1.0,
        }
    }

    /// Normalizes so the bottom-right entry is 1 (or, when it is zero, to unit
    /// Frobenius norm) and rejects singular matrices.
    pub fn from_matrix(m: Matrix3<f64>, confidence: f64) -> Result<Self, TrackError> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(TrackError::Degenerate("non-finite homography".into()));
        }
        let scale = if m[(2, 2)].abs() > 1e-12 {
            m[(2, 2)]
        } else {
            m.norm()
        };
        if scale == 0.0 {
            return Err(TrackError::Degenerate("zero matrix".into()));
        }
        let matrix = m / scale;
        if matrix.determinant().abs() <= 1e-12 {
            return Err(TrackError::Degenerate("singular homography".into()));
        }
        Ok(Self {
            matrix,
            confidence: confidence.clamp(0.0, 1.0),
        })
    }

    /// Row-major entries.
    pub fn from_array(h: [f64; 9], confidence: f64) -> Result<Self, TrackError> {
        Self::from_matrix(Matrix3::from_row_slice(&h), confidence)
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::from_array([1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0], 1.0).expect("invertible")
    }

    pub fn scaling(s: f64) -> Self {
        Self::from_array([s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0], 1.0).expect("invertible")
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence.clamp(0.0, 1.0);
        self
    }

    pub fn to_array(&self) -> [f64; 9] {
        let m = &self.matrix;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn project(&self, p: Point) -> Point {
        project_matrix(&self.matrix, p)
    }

    pub fn inverse(&self) -> Option<Homography> {
        let inv = self.matrix.try_inverse()?;
        Homography::from_matrix(inv, self.confidence).ok()
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Homography, TrackError> {
        Homography::from_matrix(
            self.matrix * first.matrix,
            self.confidence.min(first.confidence),
        )
    }

    /// Determinant of the map's Jacobian at `p` (local area scale).
    pub fn jacobian_det(&self, p: Point) -> f64 {
        let m = &self.matrix;
        let w = m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)];
        m.determinant() / (w * w * w)
    }

    /// Whether the four corners of a `width` x `height` rectangle map to a
    /// strictly convex quadrilateral in front of the camera.
    pub fn keeps_rect_convex(&self, width: f64, height: f64) -> bool {
        let corners = rect_corners(width, height);
        let m = &self.matrix;
        let in_front = corners
            .iter()
            .all(|c| m[(2, 0)] * c.x + m[(2, 1)] * c.y + m[(2, 2)] > 1e-9);
        in_front && is_strictly_convex(&corners.map(|c| self.project(c)))
    }

    /// Mean distance between where `self` and `other` send the corners of a
    /// `width` x `height` rectangle.
    pub fn corner_error(&self, other: &Homography, width: f64, height: f64) -> f64 {
        self.corner_distances(other, width, height)
            .iter()
            .sum::<f64>()
            / 4.0
    }

    /// Worst of the four corner distances.
    pub fn max_corner_error(&self, other: &Homography, width: f64, height: f64) -> f64 {
        self.corner_distances(other, width, height)
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn corner_distances(&self, other: &Homography, width: f64, height: f64) -> [f64; 4] {
        rect_corners(width, height).map(|c| self.project(c).distance(other.project(c)))
    }
}

pub fn rect_corners(width: f64, height: f64) -> [Point; 4] {
    [
        Point::new(0.0, 0.0),
        Point::new(width, 0.0),
        Point::new(width, height),
        Point::new(0.0, height),
    ]
}

#[inline]
pub(crate) fn project_matrix(m: &Matrix3<f64>, p: Point) -> Point {
    let v = m * Vector3::new(p.x, p.y, 1.0);
    Point::new(v[0] / v[2], v[1] / v[2])
}

/// Translates the centroid to the origin and scales the mean distance from
/// it to sqrt(2).
fn normalizing_transform(pts: &[Point]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let mean = pts.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    let s = if mean > 1e-300 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

/// True when some three of the four points are (nearly) collinear.
pub(crate) fn has_collinear_triple(pts: &[Point; 4], tol: f64) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| cross(pts[t[0]], pts[t[1]], pts[t[2]]).abs() <= tol)
}

/// Normalized DLT from at least four correspondences `src[i] -> dst[i]`.
pub fn estimate_homography_dlt(src: &[Point], dst: &[Point]) -> Result<Homography, TrackError> {
    let n = src.len();
    if n < 4 || dst.len() != n {
        return Err(TrackError::TooFewPoints {
            needed: 4,
            got: n.min(dst.len()),
        });
    }
    if !src.iter().chain(dst).all(|p| p.is_finite()) {
        return Err(TrackError::Degenerate("non-finite point".into()));
    }
    let ts = normalizing_transform(src);
    let td = normalizing_transform(dst);
    let src_n: Vec<Point> = src.iter().map(|&p| project_matrix(&ts, p)).collect();
    let dst_n: Vec<Point> = dst.iter().map(|&p| project_matrix(&td, p)).collect();
    if n == 4 {
        let s: [Point; 4] = [src_n[0], src_n[1], src_n[2], src_n[3]];
        let d: [Point; 4] = [dst_n[0], dst_n[1], dst_n[2], dst_n[3]];
        if has_collinear_triple(&s, 1e-9) || has_collinear_triple(&d, 1e-9) {
            return Err(TrackError::Degenerate("three collinear points".into()));
        }
    }
    // Pad to at least 9 rows so the SVD yields a full right-singular basis.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src_n.iter().zip(&dst_n).enumerate() {
        let r = 2 * i;
        a[(r, 0)] = s.x;
        a[(r, 1)] = s.y;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -d.x * s.x;
        a[(r, 7)] = -d.x * s.y;
        a[(r, 8)] = -d.x;
        a[(r + 1, 3)] = s.x;
        a[(r + 1, 4)] = s.y;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -d.y * s.x;
        a[(r + 1, 7)] = -d.y * s.y;
        a[(r + 1, 8)] = -d.y;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| TrackError::Degenerate("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let smallest = order[0];
    let largest = sv[order[order.len() - 1]];
    if sv[order[1]] <= 1e-10 * largest {
        return Err(TrackError::Degenerate("rank-deficient system".into()));
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| TrackError::Degenerate("normalization".into()))?;
    Homography::from_matrix(td_inv * hn * ts, 1.0)
}
