use std::collections::BTreeSet;

use super::{Footprint, OverlayPrimitive, PanelBar, PanelLabel};
use crate::chart::{
    derive_linked_chart, format_number, Aggregate, ChartSpec, Dataset, MarkExtent, MarkGeometry,
    RecordId,
};
use crate::geometry::{Point, Rect};
use crate::interaction::{hidden_records, linked_selection, tooltip_visible, SessionState};
use crate::raster::{text_width, GLYPH_ADVANCE};

const PANEL_GAP: f64 = 10.0;
const CURSOR_RADIUS: f64 = 6.0;

/// Linked-view panel in the margin right of the plot area, clipped to the
/// image.
pub fn panel_rect(spec: &ChartSpec) -> Rect {
    let plot = spec.plot_area;
    let x = plot.right() + PANEL_GAP;
    let width = (plot.width * spec.overlay.panel_width_fraction)
        .min(spec.width() as f64 - x - 2.0)
        .max(1.0);
    Rect::new(x, plot.y, width, plot.height)
}

fn mark_footprint(mark: &MarkGeometry, scale: f64) -> Footprint {
    match mark.extent {
        MarkExtent::Circle { radius } => Footprint::Disc {
            center: mark.center,
            radius: radius * scale,
        },
        MarkExtent::Rect { rect } => {
            let w = rect.width * scale;
            let h = rect.height * scale;
            let c = rect.center();
            Footprint::Quad {
                corners: Rect::new(c.x - w / 2.0, c.y - h / 2.0, w, h).corners(),
            }
        }
    }
}

fn tooltip_lines(
    spec: &ChartSpec,
    dataset: &Dataset,
    state: &SessionState,
    id: RecordId,
) -> Vec<String> {
    spec.detail_attributes
        .iter()
        .filter(|a| state.can_see(dataset, a))
        .filter_map(|a| {
            let v = dataset.value(id, a)?;
            let unit = dataset
                .attribute(a)
                .and_then(|s| s.unit.as_deref())
                .map(|u| format!(" {u}"))
                .unwrap_or_default();
            Some(format!("{a}: {v}{unit}"))
        })
        .collect()
}

/// Shortens `text` to fit `width` pixels at scale 1.
fn fit_text(text: &str, width: f64) -> String {
    let max = ((width + 1.0) / GLYPH_ADVANCE as f64).floor().max(1.0) as usize;
    if text.chars().count() <= max {
        text.to_string()
    } else {
        text.chars().take(max).collect()
    }
}

fn linked_panel(
    spec: &ChartSpec,
    dataset: &Dataset,
    state: &SessionState,
) -> Option<OverlayPrimitive> {
    let cfg = spec.linked_view.as_ref()?;
    if !state.can_see(dataset, &cfg.group_attribute)
        || !state.can_see(dataset, &cfg.value_attribute)
    {
        return None;
    }
    let selection: BTreeSet<RecordId> = linked_selection(state, dataset);
    if selection.is_empty() && !state.linked_view_open {
        return None;
    }
    let panel = panel_rect(spec);
    let fill = spec.mark_style.fill_color;
    let chart = derive_linked_chart(
        dataset,
        &selection,
        &cfg.group_attribute,
        &cfg.value_attribute,
        cfg.aggregate,
        panel,
        fill,
        spec.background_color,
    )
    .ok()?;
    let title = match cfg.aggregate {
        Aggregate::Count => format!("count by {}", cfg.group_attribute),
        Aggregate::Sum => format!("sum {} by {}", cfg.value_attribute, cfg.group_attribute),
        Aggregate::Mean => format!("mean {} by {}", cfg.value_attribute, cfg.group_attribute),
    };
    let mut labels = vec![PanelLabel {
        anchor: Point::new(panel.center().x, panel.y + 5.0),
        text: fit_text(&title, panel.width - 4.0),
    }];
    let mut bars = Vec::with_capacity(chart.bars.len());
    for (bar, mark) in chart.bars.iter().zip(&chart.marks) {
        let MarkExtent::Rect { rect } = mark.extent else {
            continue;
        };
        let slot = rect.width / spec.mark_style.bar_width_fraction.max(0.1);
        bars.push(PanelBar {
            category: bar.category.clone(),
            value: bar.value,
            corners: rect.corners(),
        });
        let value_text = fit_text(&format_number(bar.value), slot);
        let label_y = (rect.y - 9.0).max(panel.y + 14.0);
        labels.push(PanelLabel {
            anchor: Point::new(rect.center().x, label_y),
            text: value_text,
        });
        labels.push(PanelLabel {
            anchor: Point::new(rect.center().x, panel.bottom() - 12.0),
            text: fit_text(&bar.category, slot),
        });
    }
    if bars.is_empty() {
        labels.push(PanelLabel {
            anchor: panel.center(),
            text: fit_text("no selection", panel.width - 4.0),
        });
    }
    labels.retain(|l| !l.text.is_empty() && text_width(&l.text, 1) > 0);
    Some(OverlayPrimitive::LinkedChartPanel {
        corners: panel.corners(),
        background: spec.background_color,
        border: spec.axis_color,
        bar_fill: fill,
        text_color: spec.overlay.text_color,
        bars,
        labels,
    })
}

/// Chart-space overlay for a session snapshot, back to front: patches,
/// highlights, linked panel, tooltip, cursor.
pub fn plan_overlay(
    spec: &ChartSpec,
    marks: &[MarkGeometry],
    state: &SessionState,
    dataset: &Dataset,
) -> Vec<OverlayPrimitive> {
    let style = &spec.overlay;
    let by_id = |id: RecordId| marks.iter().find(|m| m.record_id == id);
    let mut out = Vec::new();
    for id in hidden_records(state, dataset) {
        if let Some(m) = by_id(id) {
            out.push(OverlayPrimitive::OcclusionPatch {
                record_id: id,
                footprint: mark_footprint(m, style.patch_scale),
                apron_px: style.patch_apron_px,
                fill: spec.background_color,
            });
        }
    }
    let highlight = spec
        .mark_style
        .fill_color
        .brighten(style.highlight_lightness);
    for &id in &state.highlights {
        if let Some(m) = by_id(id) {
            out.push(OverlayPrimitive::HighlightLayer {
                record_id: id,
                footprint: mark_footprint(m, 1.0),
                fill: highlight,
            });
        }
    }
    if let Some(panel) = linked_panel(spec, dataset, state) {
        out.push(panel);
    }
    if tooltip_visible(state) {
        if let Some(m) = state.focused.and_then(by_id) {
            let lines = tooltip_lines(spec, dataset, state, m.record_id);
            if !lines.is_empty() {
                out.push(OverlayPrimitive::TooltipBox {
                    record_id: m.record_id,
                    anchor: m.center,
                    offset_px: style.tooltip_offset_px,
                    lines,
                    background: style.tooltip_background,
                    text_color: style.text_color,
                });
            }
        }
    }
    if let Some(p) = state.pointer {
        out.push(OverlayPrimitive::GazeCursor {
            position: p,
            radius: CURSOR_RADIUS,
            color: style.cursor_color,
        });
    }
    out
}
