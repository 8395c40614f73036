use super::{Footprint, OverlayPrimitive, PanelBar, PanelLabel};
use crate::geometry::Point;
use crate::tracker::Homography;

fn corners(h: &Homography, c: &[Point; 4]) -> [Point; 4] {
    c.map(|p| h.project(p))
}

/// Circular radius scaled by the local area change of the map.
fn radius(h: &Homography, center: Point, r: f64) -> f64 {
    r * h.jacobian_det(center).abs().sqrt()
}

fn footprint(h: &Homography, f: &Footprint) -> Footprint {
    match f {
        Footprint::Disc { center, radius: r } => Footprint::Disc {
            center: h.project(*center),
            radius: radius(h, *center, *r),
        },
        Footprint::Quad { corners: c } => Footprint::Quad {
            corners: corners(h, c),
        },
    }
}

/// Maps chart-space primitives into frame space. Tooltip boxes keep their
/// screen-aligned layout and only move with their anchor.
pub fn warp_primitives(primitives: &[OverlayPrimitive], h: &Homography) -> Vec<OverlayPrimitive> {
    primitives
        .iter()
        .map(|p| match p {
            OverlayPrimitive::OcclusionPatch {
                record_id,
                footprint: f,
                apron_px,
                fill,
            } => OverlayPrimitive::OcclusionPatch {
                record_id: *record_id,
                footprint: footprint(h, f),
                apron_px: *apron_px,
                fill: *fill,
            },
            OverlayPrimitive::HighlightLayer {
                record_id,
                footprint: f,
                fill,
            } => OverlayPrimitive::HighlightLayer {
                record_id: *record_id,
                footprint: footprint(h, f),
                fill: *fill,
            },
            OverlayPrimitive::TooltipBox {
                record_id,
                anchor,
                offset_px,
                lines,
                background,
                text_color,
            } => OverlayPrimitive::TooltipBox {
                record_id: *record_id,
                anchor: h.project(*anchor),
                offset_px: *offset_px,
                lines: lines.clone(),
                background: *background,
                text_color: *text_color,
            },
            OverlayPrimitive::LinkedChartPanel {
                corners: c,
                background,
                border,
                bar_fill,
                text_color,
                bars,
                labels,
            } => OverlayPrimitive::LinkedChartPanel {
                corners: corners(h, c),
                background: *background,
                border: *border,
                bar_fill: *bar_fill,
                text_color: *text_color,
                bars: bars
                    .iter()
                    .map(|b| PanelBar {
                        category: b.category.clone(),
                        value: b.value,
                        corners: corners(h, &b.corners),
                    })
                    .collect(),
                labels: labels
                    .iter()
                    .map(|l| PanelLabel {
                        anchor: h.project(l.anchor),
                        text: l.text.clone(),
                    })
                    .collect(),
            },
            OverlayPrimitive::GazeCursor {
                position,
                radius: r,
                color,
            } => OverlayPrimitive::GazeCursor {
                position: h.project(*position),
                radius: radius(h, *position, *r),
                color: *color,
            },
        })
        .collect()
}
