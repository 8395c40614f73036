//! Premultiplied RGBA canvas with 4x4 supersampled coverage and a 5x7
//! bitmap font. Shared by the baseline renderer and the overlay compositor.

use image::RgbImage;

use crate::color::Rgb;
use crate::geometry::{Point, Rect};

pub const GLYPH_WIDTH: u32 = 5;
pub const GLYPH_HEIGHT: u32 = 7;
/// Horizontal advance per character at scale 1.
pub const GLYPH_ADVANCE: u32 = 6;

const SUBSAMPLES: usize = 4;

/// Rows top to bottom; bit 4 is the leftmost column. ASCII 32..=126.
#[rustfmt::skip]
const FONT: [[u8; 7]; 95] = [
    [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00], //  
    [0x04, 0x04, 0x04, 0x04, 0x04, 0x00, 0x04], // !
    [0x0a, 0x0a, 0x0a, 0x00, 0x00, 0x00, 0x00], // "
    [0x0a, 0x0a, 0x1f, 0x0a, 0x1f, 0x0a, 0x0a], // #
    [0x04, 0x0f, 0x14, 0x0e, 0x05, 0x1e, 0x04], // $
    [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03], // %
    [0x0c, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0d], // &
    [0x04, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00], // '
    [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02], // (
    [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08], // )
    [0x00, 0x04, 0x15, 0x0e, 0x15, 0x04, 0x00], // *
    [0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00], // +
    [0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08], // ,
    [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00], // -
    [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c], // .
    [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00], // /
    [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e], // 0
    [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e], // 1
    [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f], // 2
    [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e], // 3
    [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02], // 4
    [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e], // 5
    [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e], // 6
    [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08], // 7
    [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e], // 8
    [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c], // 9
    [0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00], // :
    [0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x04, 0x08], // ;
    [0x02, 0x04, 0x08, 0x10, 0x08, 0x04, 0x02], // <
    [0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00], // =
    [0x08, 0x04, 0x02, 0x01, 0x02, 0x04, 0x08], // >
    [0x0e, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04], // ?
    [0x0e, 0x11, 0x01, 0x0d, 0x15, 0x15, 0x0e], // @
    [0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11], // A
    [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e], // B
    [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e], // C
    [0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c], // D
    [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f], // E
    [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10], // F
    [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f], // G
    [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11], // H
    [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e], // I
    [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c], // J
    [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11], // K
    [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f], // L
    [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11], // M
    [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11], // N
    [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e], // O
    [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10], // P
    [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d], // Q
    [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11], // R
    [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e], // S
    [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04], // T
    [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e], // U
    [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04], // V
    [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a], // W
    [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11], // X
    [0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04], // Y
    [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f], // Z
    [0x0e, 0x08, 0x08, 0x08, 0x08, 0x08, 0x0e], // [
    [0x00, 0x10, 0x08, 0x04, 0x02, 0x01, 0x00], // \
    [0x0e, 0x02, 0x02, 0x02, 0x02, 0x02, 0x0e], // ]
    [0x04, 0x0a, 0x11, 0x00, 0x00, 0x00, 0x00], // ^
    [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f], // _
    [0x08, 0x04, 0x02, 0x00, 0x00, 0x00, 0x00], // `
    [0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f], // a
    [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e], // b
    [0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e], // c
    [0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f], // d
    [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e], // e
    [0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08], // f
    [0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e], // g
    [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11], // h
    [0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e], // i
    [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c], // j
    [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12], // k
    [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e], // l
    [0x00, 0x00, 0x1a, 0x15, 0x15, 0x11, 0x11], // m
    [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11], // n
    [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e], // o
    [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10], // p
    [0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01], // q
    [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10], // r
    [0x00, 0x00, 0x0e, 0x10, 0x0e, 0x01, 0x1e], // s
    [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06], // t
    [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d], // u
    [0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04], // v
    [0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0a], // w
    [0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11], // x
    [0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e], // y
    [0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f], // z
    [0x02, 0x04, 0x04, 0x08, 0x04, 0x04, 0x02], // {
    [0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04], // |
    [0x08, 0x04, 0x04, 0x02, 0x04, 0x04, 0x08], // }
    [0x00, 0x00, 0x08, 0x15, 0x02, 0x00, 0x00], // ~
];

fn glyph(c: char) -> &'static [u8; 7] {
    let code = c as u32;
    if (32..=126).contains(&code) {
        &FONT[(code - 32) as usize]
    } else {
        &FONT[('?' as u32 - 32) as usize]
    }
}

pub fn text_width(text: &str, scale: u32) -> u32 {
    let n = text.chars().count() as u32;
    if n == 0 {
        0
    } else {
        (n * GLYPH_ADVANCE - 1) * scale
    }
}

pub fn text_height(scale: u32) -> u32 {
    GLYPH_HEIGHT * scale
}

/// Rounded x / 255 for x in 0..=255*255.
#[inline]
fn div255(x: u32) -> u32 {
    (x + 128 + ((x + 128) >> 8)) >> 8
}

#[inline]
pub fn premultiply(color: Rgb, alpha: u8) -> [u8; 4] {
    let a = alpha as u32;
    let [r, g, b] = color.0;
    [
        div255(r as u32 * a) as u8,
        div255(g as u32 * a) as u8,
        div255(b as u32 * a) as u8,
        alpha,
    ]
}

/// Premultiplied source-over.
#[inline]
pub fn over(src: [u8; 4], dst: [u8; 4]) -> [u8; 4] {
    let inv = 255 - src[3] as u32;
    [
        (src[0] as u32 + div255(dst[0] as u32 * inv)) as u8,
        (src[1] as u32 + div255(dst[1] as u32 * inv)) as u8,
        (src[2] as u32 + div255(dst[2] as u32 * inv)) as u8,
        (src[3] as u32 + div255(dst[3] as u32 * inv)) as u8,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    width: u32,
    height: u32,
    data: Vec<[u8; 4]>,
}

impl Canvas {
    pub fn transparent(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![[0; 4]; (width as usize) * (height as usize)],
        }
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        let [r, g, b] = color.0;
        Self {
            width,
            height,
            data: vec![[r, g, b, 255]; (width as usize) * (height as usize)],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 4]] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        self.data[(y * self.width + x) as usize]
    }

    pub fn is_transparent(&self) -> bool {
        self.data.iter().all(|p| p[3] == 0)
    }

    /// Flat RGBA bytes, premultiplied.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().flatten().copied().collect()
    }

    #[inline]
    fn blend(&mut self, x: u32, y: u32, src: [u8; 4]) {
        let i = (y * self.width + x) as usize;
        self.data[i] = over(src, self.data[i]);
    }

    /// Pixel range whose centers lie near `[lo, hi]`, clipped to `limit`.
    fn span(lo: f64, hi: f64, limit: u32) -> Option<(u32, u32)> {
        if !(lo.is_finite() && hi.is_finite()) || limit == 0 {
            return None;
        }
        let a = (lo - 0.5).floor().max(0.0);
        let b = (hi + 0.5).ceil().min(limit as f64 - 1.0);
        (a <= b).then_some((a as u32, b as u32))
    }

    /// Paints coverage computed by `inside` over the pixel box.
    fn fill_coverage(
        &mut self,
        bounds: (f64, f64, f64, f64),
        color: Rgb,
        alpha: u8,
        inside: impl Fn(f64, f64) -> bool,
    ) {
        let (x0, y0, x1, y1) = bounds;
        let (Some((xa, xb)), Some((ya, yb))) = (
            Self::span(x0, x1, self.width),
            Self::span(y0, y1, self.height),
        ) else {
            return;
        };
        let step = 1.0 / SUBSAMPLES as f64;
        let offsets: [f64; SUBSAMPLES] = std::array::from_fn(|k| (k as f64 + 0.5) * step - 0.5);
        for y in ya..=yb {
            for x in xa..=xb {
                let mut count = 0u32;
                for oy in offsets {
                    for ox in offsets {
                        if inside(x as f64 + ox, y as f64 + oy) {
                            count += 1;
                        }
                    }
                }
                if count == 0 {
                    continue;
                }
                let total = (SUBSAMPLES * SUBSAMPLES) as u32;
                let a = (count * alpha as u32 + total / 2) / total;
                self.blend(x, y, premultiply(color, a as u8));
            }
        }
    }

    pub fn fill_disc(&mut self, center: Point, radius: f64, color: Rgb, alpha: u8) {
        if radius.is_nan() || radius <= 0.0 || !center.is_finite() {
            return;
        }
        let r2 = radius * radius;
        self.fill_coverage(
            (
                center.x - radius,
                center.y - radius,
                center.x + radius,
                center.y + radius,
            ),
            color,
            alpha,
            |x, y| {
                let (dx, dy) = (x - center.x, y - center.y);
                dx * dx + dy * dy <= r2
            },
        );
    }

    /// Annulus between `inner` and `outer` radii.
    pub fn fill_ring(&mut self, center: Point, inner: f64, outer: f64, color: Rgb, alpha: u8) {
        if !(outer > inner && inner >= 0.0) || !center.is_finite() {
            return;
        }
        let (i2, o2) = (inner * inner, outer * outer);
        self.fill_coverage(
            (
                center.x - outer,
                center.y - outer,
                center.x + outer,
                center.y + outer,
            ),
            color,
            alpha,
            |x, y| {
                let d2 = (x - center.x).powi(2) + (y - center.y).powi(2);
                d2 <= o2 && d2 > i2
            },
        );
    }

    /// Fills a simple polygon (even-odd rule).
    pub fn fill_polygon(&mut self, pts: &[Point], color: Rgb, alpha: u8) {
        if pts.len() < 3 || !pts.iter().all(|p| p.is_finite()) {
            return;
        }
        let x0 = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let x1 = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let y0 = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let y1 = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        self.fill_coverage((x0, y0, x1, y1), color, alpha, |x, y| {
            let mut inside = false;
            let mut j = pts.len() - 1;
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                if (a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x {
                    inside = !inside;
                }
                j = i;
            }
            inside
        });
    }

    /// Rect edges are pixel boundaries: a rect from x=9.5 to x=10.5 covers
    /// exactly pixel column 10.
    pub fn fill_rect(&mut self, rect: Rect, color: Rgb, alpha: u8) {
        if rect.is_degenerate() {
            return;
        }
        let (x0, y0, x1, y1) = (rect.x, rect.y, rect.right(), rect.bottom());
        self.fill_coverage((x0, y0, x1, y1), color, alpha, |x, y| {
            x >= x0 && x < x1 && y >= y0 && y < y1
        });
    }

    /// Draws text with its top-left glyph pixel at `(x, y)`. Glyph pixels
    /// are opaque squares of side `scale`.
    pub fn draw_text(&mut self, x: i64, y: i64, text: &str, scale: u32, color: Rgb) {
        let src = premultiply(color, 255);
        let s = scale.max(1) as i64;
        for (n, c) in text.chars().enumerate() {
            let gx = x + n as i64 * GLYPH_ADVANCE as i64 * s;
            for (row, bits) in glyph(c).iter().enumerate() {
                for col in 0..GLYPH_WIDTH as i64 {
                    if bits & (1 << (GLYPH_WIDTH as i64 - 1 - col)) == 0 {
                        continue;
                    }
                    for dy in 0..s {
                        for dx in 0..s {
                            let px = gx + col * s + dx;
                            let py = y + row as i64 * s + dy;
                            if px >= 0
                                && py >= 0
                                && px < self.width as i64
                                && py < self.height as i64
                            {
                                self.blend(px as u32, py as u32, src);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Drops alpha from an opaque canvas.
    pub fn to_rgb(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width, self.height);
        for (p, s) in out.pixels_mut().zip(&self.data) {
            p.0 = [s[0], s[1], s[2]];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn div255_is_rounded_division() {
        for x in 0..=255 * 255 {
            assert_eq!(div255(x), ((x as f64) / 255.0).round() as u32, "{x}");
        }
    }

    #[test]
    fn over_extremes() {
        let dst = [10, 20, 30, 255];
        assert_eq!(over([0, 0, 0, 0], dst), dst);
        assert_eq!(over([1, 2, 3, 255], dst), [1, 2, 3, 255]);
    }

    #[test]
    fn opaque_disc_has_a_thin_antialiased_ring() {
        let mut c = Canvas::transparent(64, 64);
        let (center, r) = (Point::new(31.3, 30.8), 12.5);
        c.fill_disc(center, r, Rgb([200, 10, 10]), 255);
        for y in 0..64 {
            for x in 0..64 {
                let a = c.pixel(x, y)[3];
                let d = Point::new(x as f64, y as f64).distance(center);
                // Pixel square lies entirely inside or outside the circle
                // when its center is more than half a diagonal away.
                if d + std::f64::consts::FRAC_1_SQRT_2 < r {
                    assert_eq!(a, 255, "({x},{y})");
                } else if d - std::f64::consts::FRAC_1_SQRT_2 > r {
                    assert_eq!(a, 0, "({x},{y})");
                }
                if a != 0 && a != 255 {
                    assert!((d - r).abs() <= 1.0, "({x},{y}) d={d}");
                }
            }
        }
    }

    #[test]
    fn half_alpha_rect() {
        let mut c = Canvas::filled(8, 8, Rgb([100, 0, 200]));
        c.fill_rect(Rect::new(-0.5, -0.5, 8.0, 8.0), Rgb([200, 250, 0]), 128);
        for p in c.pixels() {
            for (got, want) in p.iter().zip([150.0, 125.0, 100.0]) {
                assert!((*got as f64 - want).abs() <= 1.0, "{p:?}");
            }
            assert_eq!(p[3], 255);
        }
    }

    #[test]
    fn pixel_aligned_rect_is_crisp() {
        let mut c = Canvas::transparent(10, 10);
        c.fill_rect(Rect::new(2.5, 3.5, 3.0, 1.0), Rgb::BLACK, 255);
        for y in 0..10 {
            for x in 0..10 {
                let want = if (3..6).contains(&x) && y == 4 {
                    255
                } else {
                    0
                };
                assert_eq!(c.pixel(x, y)[3], want, "({x},{y})");
            }
        }
    }

    #[test]
    fn polygon_matches_rect() {
        let mut a = Canvas::transparent(20, 20);
        let mut b = Canvas::transparent(20, 20);
        let r = Rect::new(3.2, 4.7, 9.1, 6.3);
        a.fill_rect(r, Rgb([9, 99, 199]), 255);
        b.fill_polygon(&r.corners(), Rgb([9, 99, 199]), 255);
        assert_eq!(a, b);
    }

    #[test]
    fn text_draws_glyph_pixels() {
        let mut c = Canvas::transparent(20, 10);
        c.draw_text(1, 1, "I", 1, Rgb::BLACK);
        // 'I' top row is .###.
        assert_eq!(c.pixel(1, 1)[3], 0);
        assert_eq!(c.pixel(2, 1)[3], 255);
        assert_eq!(c.pixel(4, 1)[3], 255);
        assert_eq!(c.pixel(5, 1)[3], 0);
        assert_eq!(text_width("ab", 2), 22);
        assert!(FONT.iter().skip(1).all(|g| g.iter().any(|r| *r != 0)));
    }
}
