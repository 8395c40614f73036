use image::RgbImage;

use super::{Footprint, OverlayPrimitive};
use crate::color::Rgb;
use crate::geometry::{Point, Rect};
use crate::raster::{over, text_width, Canvas, GLYPH_HEIGHT};

/// Premultiplied RGBA overlay at camera-frame resolution.
pub type OverlayFrame = Canvas;

const TOOLTIP_PAD: f64 = 4.0;
const LINE_HEIGHT: f64 = (GLYPH_HEIGHT + 3) as f64;
const CURSOR_STROKE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OverlayError {
    #[error("overlay is {overlay:?} but frame is {frame:?}")]
    DimensionMismatch {
        overlay: (u32, u32),
        frame: (u32, u32),
    },
}

/// Tooltip box placed above-right of the anchor, flipped to the other side
/// on any axis where it would leave the frame. Edges fall on pixel
/// boundaries.
pub fn tooltip_rect(anchor: Point, offset: f64, lines: &[String], width: u32, height: u32) -> Rect {
    let text_w = lines.iter().map(|l| text_width(l, 1)).max().unwrap_or(0) as f64;
    let w = text_w + 2.0 * TOOLTIP_PAD;
    let h = lines.len() as f64 * LINE_HEIGHT - 3.0 + 2.0 * TOOLTIP_PAD;
    let mut x = anchor.x + offset;
    if x + w > width as f64 - 0.5 {
        x = anchor.x - offset - w;
    }
    let mut y = anchor.y - offset - h;
    if y < -0.5 {
        y = (anchor.y + offset).min(height as f64 - 0.5 - h);
    }
    Rect::new(x.round() - 0.5, y.round() - 0.5, w, h)
}

fn fill_footprint(canvas: &mut Canvas, f: &Footprint, color: Rgb) {
    match f {
        Footprint::Disc { center, radius } => canvas.fill_disc(*center, *radius, color, 255),
        Footprint::Quad { corners } => canvas.fill_polygon(corners, color, 255),
    }
}

/// One-pixel outline of a closed polygon, edge by edge.
fn stroke_closed(canvas: &mut Canvas, pts: &[Point; 4], color: Rgb) {
    for i in 0..4 {
        let (a, b) = (pts[i], pts[(i + 1) % 4]);
        let len = a.distance(b);
        if len < 1e-9 {
            continue;
        }
        let (nx, ny) = (-(b.y - a.y) / len * 0.5, (b.x - a.x) / len * 0.5);
        canvas.fill_polygon(
            &[
                Point::new(a.x + nx, a.y + ny),
                Point::new(b.x + nx, b.y + ny),
                Point::new(b.x - nx, b.y - ny),
                Point::new(a.x - nx, a.y - ny),
            ],
            color,
            255,
        );
    }
}

fn centered_text(canvas: &mut Canvas, anchor: Point, text: &str, color: Rgb) {
    let w = text_width(text, 1) as f64;
    canvas.draw_text(
        (anchor.x - w / 2.0).round() as i64,
        anchor.y.round() as i64,
        text,
        1,
        color,
    );
}

/// Painter's algorithm over frame-space primitives.
pub fn rasterize_overlay(primitives: &[OverlayPrimitive], width: u32, height: u32) -> OverlayFrame {
    let mut canvas = Canvas::transparent(width, height);
    for p in primitives {
        match p {
            OverlayPrimitive::OcclusionPatch {
                footprint,
                apron_px,
                fill,
                ..
            } => fill_footprint(&mut canvas, &footprint.grown(*apron_px), *fill),
            OverlayPrimitive::HighlightLayer {
                footprint, fill, ..
            } => fill_footprint(&mut canvas, footprint, *fill),
            OverlayPrimitive::TooltipBox {
                anchor,
                offset_px,
                lines,
                background,
                text_color,
                ..
            } => {
                let r = tooltip_rect(*anchor, *offset_px, lines, width, height);
                canvas.fill_rect(r, *text_color, 255);
                canvas.fill_rect(
                    Rect::new(r.x + 1.0, r.y + 1.0, r.width - 2.0, r.height - 2.0),
                    *background,
                    255,
                );
                for (i, line) in lines.iter().enumerate() {
                    canvas.draw_text(
                        (r.x + 0.5 + TOOLTIP_PAD) as i64,
                        (r.y + 0.5 + TOOLTIP_PAD + i as f64 * LINE_HEIGHT) as i64,
                        line,
                        1,
                        *text_color,
                    );
                }
            }
            OverlayPrimitive::LinkedChartPanel {
                corners,
                background,
                border,
                bar_fill,
                text_color,
                bars,
                labels,
            } => {
                canvas.fill_polygon(corners, *background, 255);
                for b in bars {
                    canvas.fill_polygon(&b.corners, *bar_fill, 255);
                }
                for l in labels {
                    centered_text(&mut canvas, l.anchor, &l.text, *text_color);
                }
                stroke_closed(&mut canvas, corners, *border);
            }
            OverlayPrimitive::GazeCursor {
                position,
                radius,
                color,
            } => {
                let inner = (radius - CURSOR_STROKE).max(0.0);
                canvas.fill_ring(*position, inner, *radius, *color, 255);
            }
        }
    }
    canvas
}

/// Source-over of the premultiplied overlay onto an opaque frame.
pub fn composite(frame: &RgbImage, overlay: &OverlayFrame) -> Result<RgbImage, OverlayError> {
    if frame.dimensions() != (overlay.width(), overlay.height()) {
        return Err(OverlayError::DimensionMismatch {
            overlay: (overlay.width(), overlay.height()),
            frame: frame.dimensions(),
        });
    }
    let mut out = frame.clone();
    for (px, src) in out.pixels_mut().zip(overlay.pixels()) {
        if src[3] == 0 {
            continue;
        }
        let [r, g, b, _] = over(*src, [px.0[0], px.0[1], px.0[2], 255]);
        px.0 = [r, g, b];
    }
    Ok(out)
}
