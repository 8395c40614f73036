//! Synthetic camera frames: a baseline image seen through a known homography.

use image::{Rgb as Px, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::geometry::Point;
use crate::tracker::Homography;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameOptions {
    pub width: u32,
    pub height: u32,
    pub background: Rgb,
    /// Gaussian pixel noise standard deviation, in 8-bit levels.
    pub noise_sigma: f64,
    /// Fraction of the frame covered by random opaque rectangles.
    pub clutter_fraction: f64,
    pub seed: u64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            background: Rgb([96, 96, 96]),
            noise_sigma: 0.0,
            clutter_fraction: 0.0,
            seed: 0,
        }
    }
}

fn bilinear(src: &RgbImage, x: f64, y: f64) -> Option<[f64; 3]> {
    let (w, h) = (src.width() as f64, src.height() as f64);
    if !(x >= -0.5 && y >= -0.5 && x <= w - 0.5 && y <= h - 0.5) {
        return None;
    }
    let xc = x.clamp(0.0, w - 1.0);
    let yc = y.clamp(0.0, h - 1.0);
    let x0 = xc.floor() as u32;
    let y0 = yc.floor() as u32;
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let p = |xx: u32, yy: u32| src.get_pixel(xx, yy).0[c] as f64;
        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
        let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
        *o = top * (1.0 - fy) + bot * fy;
    }
    Some(out)
}

/// Renders `baseline` into a frame through `h` (chart space to frame space).
pub fn warp_image(baseline: &RgbImage, h: &Homography, opts: &FrameOptions) -> RgbImage {
    let inv = h.inverse().unwrap_or_else(Homography::identity);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut frame = RgbImage::from_pixel(opts.width, opts.height, Px(opts.background.0));
    for y in 0..opts.height {
        for x in 0..opts.width {
            let s = inv.project(Point::new(x as f64, y as f64));
            if let Some(v) = bilinear(baseline, s.x, s.y) {
                frame.put_pixel(x, y, Px(v.map(|c| c.round().clamp(0.0, 255.0) as u8)));
            }
        }
    }
    if opts.clutter_fraction > 0.0 {
        add_clutter(&mut frame, opts.clutter_fraction, &mut rng);
    }
    if opts.noise_sigma > 0.0 {
        add_noise(&mut frame, opts.noise_sigma, &mut rng);
    }
    frame
}

fn add_clutter(frame: &mut RgbImage, fraction: f64, rng: &mut ChaCha8Rng) {
    let (w, h) = (frame.width(), frame.height());
    let target = (fraction.clamp(0.0, 1.0) * (w * h) as f64) as u64;
    let mut covered = vec![false; (w * h) as usize];
    let mut count = 0u64;
    while count < target {
        let rw = rng.gen_range(4..=(w / 8).max(5));
        let rh = rng.gen_range(4..=(h / 8).max(5));
        let x0 = rng.gen_range(0..w.saturating_sub(rw).max(1));
        let y0 = rng.gen_range(0..h.saturating_sub(rh).max(1));
        let color = Px([rng.gen(), rng.gen(), rng.gen()]);
        for y in y0..(y0 + rh).min(h) {
            for x in x0..(x0 + rw).min(w) {
                frame.put_pixel(x, y, color);
                let i = (y * w + x) as usize;
                if !covered[i] {
                    covered[i] = true;
                    count += 1;
                }
            }
        }
    }
}

fn add_noise(frame: &mut RgbImage, sigma: f64, rng: &mut ChaCha8Rng) {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for p in frame.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = (*c as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Ground truth written next to each synthetic frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame: usize,
    #[serde(rename = "H")]
    pub h: [f64; 9],
}

/// A slow, rest-to-rest camera drift over `frames` frames: the view of a
/// `width` x `height` chart shrinks slightly, rolls, slides and tilts. Corner
/// speed peaks below one pixel per frame, as for a viewer holding still.
pub fn moving_warp(index: usize, frames: usize, width: f64, height: f64) -> Homography {
    let t = if frames > 1 {
        index as f64 / (frames - 1) as f64
    } else {
        0.0
    };
    let e = (1.0 - (std::f64::consts::PI * t).cos()) / 2.0;
    let s = 0.86 - 0.01 * e;
    let theta = 0.01 * e;
    let (tx, ty) = (6.0 * e, -4.0 * e);
    let (px, py) = (2e-5 * e, -1e-5 * e);
    let (cx, cy) = (width / 2.0, height / 2.0);
    let (c, sn) = (theta.cos() * s, theta.sin() * s);
    // Similarity about the chart center, then a keystone tilt about it.
    let similarity = Homography::from_array(
        [
            c,
            -sn,
            cx - c * cx + sn * cy + tx,
            sn,
            c,
            cy - sn * cx - c * cy + ty,
            0.0,
            0.0,
            1.0,
        ],
        1.0,
    )
    .expect("invertible");
    let tilt = Homography::from_array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, px, py, 1.0], 1.0)
        .expect("invertible");
    let tilt = Homography::translation(cx, cy)
        .compose(&tilt)
        .and_then(|m| m.compose(&Homography::translation(-cx, -cy)))
        .expect("invertible");
    tilt.compose(&similarity).expect("invertible")
}
