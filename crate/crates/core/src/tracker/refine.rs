//! Subpixel polish of a tracked homography: each reference keypoint's patch
//! is aligned against the frame resampled through the current estimate
//! (translational Lucas-Kanade in chart space), then the map is refit.

use super::homography::{estimate_homography_dlt, Homography};
use super::image::GrayImage;
use crate::geometry::Point;

const HALF: i32 = 7;
const MAX_ITERS: usize = 12;
const MAX_SHIFT: f64 = 3.0;
const MIN_NCC: f64 = 0.9;
/// Minimum smaller eigenvalue of the patch structure tensor, per pixel.
const MIN_TEXTURE: f64 = 20.0;
/// Refit residual beyond which a refined correspondence is dropped.
const MAX_RESIDUAL: f64 = 1.0;

struct Template {
    center: Point,
    values: Vec<f64>,
    grad: Vec<(f64, f64)>,
    /// Inverse of the 2x2 Gauss-Newton Hessian.
    inv: [f64; 4],
}

fn template(reference: &GrayImage, p: Point) -> Option<Template> {
    let (cx, cy) = (p.x.round() as i32, p.y.round() as i32);
    let (w, h) = (reference.width() as i32, reference.height() as i32);
    if cx - HALF - 1 < 0 || cy - HALF - 1 < 0 || cx + HALF + 1 >= w || cy + HALF + 1 >= h {
        return None;
    }
    let g = |x: i32, y: i32| reference.get(x as usize, y as usize) as f64;
    let n = ((2 * HALF + 1) * (2 * HALF + 1)) as usize;
    let mut values = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for dy in -HALF..=HALF {
        for dx in -HALF..=HALF {
            let (x, y) = (cx + dx, cy + dy);
            let gx = (g(x + 1, y) - g(x - 1, y)) * 0.5;
            let gy = (g(x, y + 1) - g(x, y - 1)) * 0.5;
            values.push(g(x, y));
            grad.push((gx, gy));
            a += gx * gx;
            b += gx * gy;
            c += gy * gy;
        }
    }
    let det = a * c - b * b;
    let min_eig = 0.5 * ((a + c) - ((a - c).powi(2) + 4.0 * b * b).sqrt());
    if det <= 0.0 || min_eig < MIN_TEXTURE * n as f64 {
        return None;
    }
    Some(Template {
        center: Point::new(cx as f64, cy as f64),
        values,
        grad,
        inv: [c / det, -b / det, -b / det, a / det],
    })
}

fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Chart-space shift that best aligns the template with the frame seen
/// through `h`. Bias and gain differences are removed per iteration.
fn align(t: &Template, frame: &GrayImage, h: &Homography) -> Option<Point> {
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut warped = vec![0.0; t.values.len()];
    let tmean = t.values.iter().sum::<f64>() / t.values.len() as f64;
    for _ in 0..MAX_ITERS {
        let mut k = 0;
        for dy in -HALF..=HALF {
            for dx in -HALF..=HALF {
                let q = h.project(Point::new(
                    t.center.x + dx as f64 + sx,
                    t.center.y + dy as f64 + sy,
                ));
                warped[k] = frame.sample(q.x, q.y)?;
                k += 1;
            }
        }
        let wmean = warped.iter().sum::<f64>() / warped.len() as f64;
        let (mut ex, mut ey) = (0.0, 0.0);
        for (i, (gx, gy)) in t.grad.iter().enumerate() {
            let e = (warped[i] - wmean) - (t.values[i] - tmean);
            ex += gx * e;
            ey += gy * e;
        }
        let step_x = t.inv[0] * ex + t.inv[1] * ey;
        let step_y = t.inv[2] * ex + t.inv[3] * ey;
        sx -= step_x;
        sy -= step_y;
        if sx.hypot(sy) > MAX_SHIFT {
            return None;
        }
        if step_x.hypot(step_y) < 1e-3 {
            break;
        }
    }
    (ncc(&t.values, &warped) >= MIN_NCC).then_some(Point::new(sx, sy))
}

/// Polishes `h` using patches around `points` of the reference image.
/// Returns `None` when too few patches align.
pub fn refine_homography(
    h: &Homography,
    reference: &GrayImage,
    points: &[Point],
    frame: &GrayImage,
) -> Option<Homography> {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for &p in points {
        let Some(t) = template(reference, p) else {
            continue;
        };
        let Some(shift) = align(&t, frame, h) else {
            continue;
        };
        src.push(t.center);
        dst.push(h.project(Point::new(t.center.x + shift.x, t.center.y + shift.y)));
    }
    if src.len() < 8 {
        return None;
    }
    let mut fit = estimate_homography_dlt(&src, &dst).ok()?;
    // One trim pass drops patches that locked onto a repeated structure.
    let keep: Vec<usize> = (0..src.len())
        .filter(|&i| fit.project(src[i]).distance(dst[i]) <= MAX_RESIDUAL)
        .collect();
    if keep.len() >= 8 && keep.len() < src.len() {
        let s: Vec<Point> = keep.iter().map(|&i| src[i]).collect();
        let d: Vec<Point> = keep.iter().map(|&i| dst[i]).collect();
        fit = estimate_homography_dlt(&s, &d).ok()?;
    }
    Some(fit.with_confidence(h.confidence()))
}
