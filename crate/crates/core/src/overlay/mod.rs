//! Overlay primitives: planned in chart space from a session snapshot,
//! warped into frame space through the tracked homography, rasterized and
//! composited over the camera frame.

mod plan;
mod rasterize;
mod warp;


use serde::{Deserialize, Serialize};

use crate::chart::RecordId;
use crate::color::Rgb;
use crate::geometry::Point;

pub use plan::{panel_rect, plan_overlay};
pub use rasterize::{composite, rasterize_overlay, tooltip_rect, OverlayError, OverlayFrame};
pub use warp::warp_primitives;

/// A filled region: a disc for scatter marks, a quadrilateral for bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Footprint {
    Disc { center: Point, radius: f64 },
    Quad { corners: [Point; 4] },
}

impl Footprint {
    /// Disc radius grown by `d`; quads move each corner `d` away from the
    /// centroid along both axes of the quad.
    pub fn grown(&self, d: f64) -> Footprint {
        match self {
            Footprint::Disc { center, radius } => Footprint::Disc {
                center: *center,
                radius: radius + d,
            },
            Footprint::Quad { corners } => {
                let c = self.center();
                let grow = |p: Point| {
                    let (dx, dy) = (p.x - c.x, p.y - c.y);
                    Point::new(p.x + d * dx.signum(), p.y + d * dy.signum())
                };
                Footprint::Quad {
                    corners: corners.map(grow),
                }
            }
        }
    }

    pub fn center(&self) -> Point {
        match self {
            Footprint::Disc { center, .. } => *center,
            Footprint::Quad { corners } => Point::new(
                corners.iter().map(|p| p.x).sum::<f64>() / 4.0,
                corners.iter().map(|p| p.y).sum::<f64>() / 4.0,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelBar {
    pub category: String,
    pub value: f64,
    pub corners: [Point; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelLabel {
    /// Top-center of the text.
    pub anchor: Point,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OverlayPrimitive {
    OcclusionPatch {
        record_id: RecordId,
        footprint: Footprint,
        /// Extra coverage at raster time so anti-aliased mark fringes vanish.
        apron_px: f64,
        fill: Rgb,
    },
    HighlightLayer {
        record_id: RecordId,
        footprint: Footprint,
        fill: Rgb,
    },
    /// Drawn axis-aligned at the anchor whatever the warp.
    TooltipBox {
        record_id: RecordId,
        anchor: Point,
        offset_px: f64,
        lines: Vec<String>,
        background: Rgb,
        text_color: Rgb,
    },
    LinkedChartPanel {
        corners: [Point; 4],
        background: Rgb,
        border: Rgb,
        bar_fill: Rgb,
        text_color: Rgb,
        bars: Vec<PanelBar>,
        labels: Vec<PanelLabel>,
    },
    GazeCursor {
        position: Point,
        radius: f64,
        color: Rgb,
    },
}

impl OverlayPrimitive {
    pub fn kind(&self) -> &'static str {
        match self {
            OverlayPrimitive::OcclusionPatch { .. } => "occlusion_patch",
            OverlayPrimitive::HighlightLayer { .. } => "highlight_layer",
            OverlayPrimitive::TooltipBox { .. } => "tooltip_box",
            OverlayPrimitive::LinkedChartPanel { .. } => "linked_chart_panel",
            OverlayPrimitive::GazeCursor { .. } => "gaze_cursor",
        }
    }
}
