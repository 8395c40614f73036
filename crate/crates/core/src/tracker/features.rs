//! Segment-test corners ranked by Harris response, described by 256 binary
//! intensity comparisons on a box-smoothed 31x31 patch. No orientation or
//! scale normalization: the chart is assumed roughly upright.

use std::sync::LazyLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::image::{GrayImage, IntegralImage};
use super::TrackError;

pub const FAST_THRESHOLD: i16 = 20;
pub const FAST_ARC: usize = 9;
const PATCH_RADIUS: i32 = 15;
const SMOOTH_RADIUS: i32 = 2;
const HARRIS_RADIUS: i32 = 3;
const HARRIS_K: f32 = 0.04;
// Gaussian window, sigma 1.5, unnormalized.
const HARRIS_WEIGHTS: [f32; 7] = [0.1353, 0.4111, 0.8007, 1.0, 0.8007, 0.4111, 0.1353];
const NMS_RADIUS: i32 = 3;
/// Keypoints closer than this to the border have no full descriptor patch.
pub const BORDER: u32 = (PATCH_RADIUS + SMOOTH_RADIUS + 1) as u32;

const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub response: f32,
}

/// 256-bit binary descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    #[inline]
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
    pub width: u32,
    pub height: u32,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Fixed comparison pairs, offsets drawn from an isotropic Gaussian.
static PATTERN: LazyLock<Vec<[(i32, i32); 2]>> = LazyLock::new(|| {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b51_d35c);
    let normal = Normal::new(0.0, 31.0 / 5.0).expect("valid sigma");
    let mut draw = || {
        let v: f64 = normal.sample(&mut rng);
        (v.round() as i32).clamp(-PATCH_RADIUS, PATCH_RADIUS)
    };
    (0..256)
        .map(|_| [(draw(), draw()), (draw(), draw())])
        .collect()
});

fn passes_segment_test(img: &GrayImage, x: usize, y: usize) -> bool {
    let w = img.width() as isize;
    let data = img.data();
    let center = (y as isize) * w + x as isize;
    let p = data[center as usize] as i16;
    let class = |k: usize| -> i8 {
        let (dx, dy) = CIRCLE[k];
        let v = data[(center + dy as isize * w + dx as isize) as usize] as i16;
        if v > p + FAST_THRESHOLD {
            1
        } else if v < p - FAST_THRESHOLD {
            -1
        } else {
            0
        }
    };
    // Any 9-arc covers at least two of the four compass points.
    let compass = [class(0), class(4), class(8), class(12)];
    let bright = compass.iter().filter(|&&c| c == 1).count();
    let dark = compass.iter().filter(|&&c| c == -1).count();
    if bright < 2 && dark < 2 {
        return false;
    }
    let classes: [i8; 16] = std::array::from_fn(class);
    for sign in [1i8, -1] {
        let mut run = 0;
        for k in 0..32 {
            if classes[k % 16] == sign {
                run += 1;
                if run >= FAST_ARC {
                    return true;
                }
            } else {
                run = 0;
            }
        }
    }
    false
}

fn harris(img: &GrayImage, x: i32, y: i32) -> f32 {
    let (mut sxx, mut syy, mut sxy) = (0f32, 0f32, 0f32);
    for dy in -HARRIS_RADIUS..=HARRIS_RADIUS {
        for dx in -HARRIS_RADIUS..=HARRIS_RADIUS {
            let px = (x + dx) as usize;
            let py = (y + dy) as usize;
            let gx = (img.get(px + 1, py) as f32 - img.get(px - 1, py) as f32) * 0.5;
            let gy = (img.get(px, py + 1) as f32 - img.get(px, py - 1) as f32) * 0.5;
            let wt = HARRIS_WEIGHTS[(dy + HARRIS_RADIUS) as usize]
                * HARRIS_WEIGHTS[(dx + HARRIS_RADIUS) as usize];
            sxx += wt * gx * gx;
            syy += wt * gy * gy;
            sxy += wt * gx * gy;
        }
    }
    let det = sxx * syy - sxy * sxy;
    let trace = sxx + syy;
    det - HARRIS_K * trace * trace
}

fn parabola_offset(left: f32, center: f32, right: f32) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5) as f64
}

fn describe(smooth: &IntegralImage, x: i32, y: i32) -> Descriptor {
    // Every box has the same area, so comparing sums compares means.
    let sample = |dx: i32, dy: i32| {
        let (cx, cy) = (x + dx, y + dy);
        smooth.box_sum(
            (cx - SMOOTH_RADIUS) as usize,
            (cy - SMOOTH_RADIUS) as usize,
            (cx + SMOOTH_RADIUS) as usize,
            (cy + SMOOTH_RADIUS) as usize,
        )
    };
    let mut d = Descriptor::default();
    for (i, [a, b]) in PATTERN.iter().enumerate() {
        if sample(a.0, a.1) < sample(b.0, b.1) {
            d.0[i / 64] |= 1 << (i % 64);
        }
    }
    d
}

/// Detects up to `max_features` corners and describes each one. The result
/// is a pure function of the pixels.
pub fn extract_features(image: &GrayImage, max_features: usize) -> Result<FeatureSet, TrackError> {
    let w = image.width() as i32;
    let h = image.height() as i32;
    if image.width() < super::image::MIN_IMAGE_SIDE || image.height() < super::image::MIN_IMAGE_SIDE
    {
        return Err(TrackError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
        });
    }
    let b = BORDER as i32;
    let mut score = vec![0f32; (w * h) as usize];
    let mut candidates = Vec::new();
    for y in b..h - b {
        for x in b..w - b {
            if passes_segment_test(image, x as usize, y as usize) {
                let r = harris(image, x, y);
                if r > 0.0 {
                    score[(y * w + x) as usize] = r;
                    candidates.push((x, y));
                }
            }
        }
    }
    let mut kept: Vec<Keypoint> = Vec::new();
    for &(x, y) in &candidates {
        let s = score[(y * w + x) as usize];
        let mut is_max = true;
        'nms: for dy in -NMS_RADIUS..=NMS_RADIUS {
            for dx in -NMS_RADIUS..=NMS_RADIUS {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let o = score[(ny * w + nx) as usize];
                let earlier = (dy, dx) < (0, 0);
                if o > s || (earlier && o == s) {
                    is_max = false;
                    break 'nms;
                }
            }
        }
        if !is_max {
            continue;
        }
        let ox = parabola_offset(harris(image, x - 1, y), s, harris(image, x + 1, y));
        let oy = parabola_offset(harris(image, x, y - 1), s, harris(image, x, y + 1));
        kept.push(Keypoint {
            x: x as f64 + ox,
            y: y as f64 + oy,
            response: s,
        });
    }
    kept.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    kept.truncate(max_features);
    let smooth = IntegralImage::new(image);
    let descriptors = kept
        .iter()
        .map(|k| describe(&smooth, k.x.round() as i32, k.y.round() as i32))
        .collect();
    Ok(FeatureSet {
        keypoints: kept,
        descriptors,
        width: image.width(),
        height: image.height(),
    })
}
