use super::TrackError;

/// Smallest accepted frame edge, in pixels.
pub const MIN_IMAGE_SIDE: u32 = 32;

/// Row-major 8-bit luminance image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, TrackError> {
        if width < MIN_IMAGE_SIDE || height < MIN_IMAGE_SIDE {
            return Err(TrackError::ImageTooSmall { width, height });
        }
        if data.len() != width as usize * height as usize {
            return Err(TrackError::BadImageBuffer {
                expected: width as usize * height as usize,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, TrackError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Rec. 601 luma of an RGB image, rounded to the nearest integer.
    pub fn from_rgb(rgb: &image::RgbImage) -> Result<Self, TrackError> {
        let data = rgb
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
            })
            .collect();
        Self::new(rgb.width(), rgb.height(), data)
    }

    pub fn from_luma(img: &image::GrayImage) -> Result<Self, TrackError> {
        Self::new(img.width(), img.height(), img.as_raw().clone())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width as usize + x]
    }

    /// Bilinear sample at a pixel-center coordinate; `None` outside the
    /// convex hull of pixel centers.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width as usize - 2);
        let y0 = (y.floor() as usize).min(self.height as usize - 2);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let p = |xx: usize, yy: usize| self.get(xx, yy) as f64;
        let top = p(x0, y0) + (p(x0 + 1, y0) - p(x0, y0)) * fx;
        let bot = p(x0, y0 + 1) + (p(x0 + 1, y0 + 1) - p(x0, y0 + 1)) * fx;
        Some(top + (bot - top) * fy)
    }
}

/// Summed-area table for constant-time box sums.
pub(crate) struct IntegralImage {
    width: usize,
    sums: Vec<u32>,
}

impl IntegralImage {
    pub(crate) fn new(img: &GrayImage) -> Self {
        let w = img.width as usize;
        let h = img.height as usize;
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += img.data[y * w + x] as u32;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { width: w, sums }
    }

    /// Sum over the inclusive box `[x0, x1] x [y0, y1]`.
    #[inline]
    pub(crate) fn box_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = self.width + 1;
        self.sums[(y1 + 1) * s + x1 + 1] + self.sums[y0 * s + x0]
            - self.sums[y0 * s + x1 + 1]
            - self.sums[(y1 + 1) * s + x0]
    }
}
