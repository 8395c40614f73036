//! Baseline rendering of a static chart: the image a presenter would show
//! and the reference the tracker learns.

use image::RgbImage;

use crate::chart::{layout_marks, ChartError, ChartKind, ChartSpec, Dataset, MarkExtent, Scale};
use crate::geometry::Rect;
use crate::raster::{text_width, Canvas};

const TICKS: usize = 5;
const TICK_LEN: f64 = 4.0;
const GRID_WEIGHT: f64 = 0.12;

/// Axis label with the attribute's unit, if any.
fn axis_title(spec: &ChartSpec, attribute: &str) -> String {
    match spec.attribute(attribute).and_then(|a| a.unit.as_deref()) {
        Some(unit) => format!("{attribute} ({unit})"),
        None => attribute.to_string(),
    }
}

/// Pixel index whose center is nearest `v`.
fn px(v: f64) -> f64 {
    v.round()
}

/// A one-pixel-wide vertical line through pixel column `x`.
fn span_rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
    Rect::new(x0, y0, x1 - x0, y1 - y0)
}

fn vline(x: f64, y0: f64, y1: f64) -> Rect {
    span_rect(px(x) - 0.5, y0.min(y1), px(x) + 0.5, y0.max(y1))
}

fn hline(y: f64, x0: f64, x1: f64) -> Rect {
    span_rect(x0.min(x1), px(y) - 0.5, x0.max(x1), px(y) + 0.5)
}

pub fn render_chart(spec: &ChartSpec, dataset: &Dataset) -> Result<Canvas, ChartError> {
    let marks = layout_marks(spec, dataset)?;
    let mut canvas = Canvas::filled(spec.width(), spec.height(), spec.background_color);
    let plot = spec.plot_area;
    let axis = spec.axis_color;
    let grid = spec.background_color.mix(axis, GRID_WEIGHT);
    let (left, right) = (plot.x - 0.5, plot.right() - 0.5);
    let (top, bottom) = (plot.y - 0.5, plot.bottom() - 0.5);

    // Gridlines and ticks.
    let y_ticks = spec.y_encoding.scale.ticks(TICKS);
    for (y, label) in &y_ticks {
        if matches!(spec.y_encoding.scale, Scale::Linear { .. }) {
            canvas.fill_rect(hline(*y, left, right), grid, 255);
        }
        canvas.fill_rect(hline(*y, left - TICK_LEN, left), axis, 255);
        let w = text_width(label, 1) as f64;
        canvas.draw_text(
            (left - TICK_LEN - 3.0 - w).round() as i64,
            (y - 3.0).round() as i64,
            label,
            1,
            axis,
        );
    }
    let x_ticks = spec.x_encoding.scale.ticks(TICKS);
    for (x, label) in &x_ticks {
        if matches!(spec.x_encoding.scale, Scale::Linear { .. }) {
            canvas.fill_rect(vline(*x, top, bottom), grid, 255);
        }
        canvas.fill_rect(vline(*x, bottom, bottom + TICK_LEN), axis, 255);
        let w = text_width(label, 1) as f64;
        canvas.draw_text(
            (x - w / 2.0).round() as i64,
            (bottom + TICK_LEN + 3.0).round() as i64,
            label,
            1,
            axis,
        );
    }

    // Axes along the left and bottom plot edges, just outside the area.
    canvas.fill_rect(span_rect(left - 1.0, top, left, bottom + 1.0), axis, 255);
    canvas.fill_rect(
        span_rect(left - 1.0, bottom, right, bottom + 1.0),
        axis,
        255,
    );

    // Titles.
    let title_w = text_width(&spec.title, 2) as f64;
    canvas.draw_text(
        ((spec.width() as f64 - title_w) / 2.0).round() as i64,
        8,
        &spec.title,
        2,
        axis,
    );
    let xt = axis_title(spec, &spec.x_encoding.attribute);
    canvas.draw_text(
        (plot.center().x - text_width(&xt, 1) as f64 / 2.0).round() as i64,
        (bottom + TICK_LEN + 16.0).round() as i64,
        &xt,
        1,
        axis,
    );
    let yt = axis_title(spec, &spec.y_encoding.attribute);
    canvas.draw_text(
        left.round() as i64,
        (top - 14.0).round() as i64,
        &yt,
        1,
        axis,
    );

    // Marks last so they sit on top of the grid.
    let fill = spec.mark_style.fill_color;
    for m in &marks {
        match m.extent {
            MarkExtent::Circle { radius } => canvas.fill_disc(m.center, radius, fill, 255),
            MarkExtent::Rect { rect } => canvas.fill_rect(rect, fill, 255),
        }
    }
    if spec.kind == ChartKind::Bar {
        // Redraw the baseline over bar bottoms.
        canvas.fill_rect(
            span_rect(left - 1.0, bottom, right, bottom + 1.0),
            axis,
            255,
        );
    }
    Ok(canvas)
}

pub fn render_chart_rgb(spec: &ChartSpec, dataset: &Dataset) -> Result<RgbImage, ChartError> {
    render_chart(spec, dataset).map(|c| c.to_rgb())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{AttributeKind, AttributeSchema, Encoding, Value};

    pub(crate) fn demo() -> (ChartSpec, Dataset) {
        let spec: ChartSpec = crate::chart::parse_chart_spec(
            br#"{
                "format": "arlens-chart/1",
                "id": "t",
                "title": "Test",
                "kind": "scatterplot",
                "image_size": [320, 240],
                "plot_area": {"x": 50, "y": 40, "width": 240, "height": 160},
                "schema": [
                    {"name": "a", "kind": "quantitative"},
                    {"name": "b", "kind": "quantitative"}
                ],
                "x_encoding": {"attribute": "a", "scale": {"type": "linear", "domain": [0, 10], "range": [50, 290]}},
                "y_encoding": {"attribute": "b", "scale": {"type": "linear", "domain": [0, 10], "range": [200, 40]}},
                "mark_style": {"radius_px": 6, "fill_color": [40, 90, 200]},
                "background_color": [255, 255, 255]
            }"#,
        )
        .unwrap();
        let ds = Dataset::from_rows(
            spec.schema.clone(),
            vec![
                vec![Value::Number(2.0), Value::Number(3.0)],
                vec![Value::Number(7.0), Value::Number(8.0)],
            ],
        )
        .unwrap();
        (spec, ds)
    }

    #[test]
    fn marks_are_painted_with_fill_color() {
        let (spec, ds) = demo();
        let img = render_chart_rgb(&spec, &ds).unwrap();
        let marks = layout_marks(&spec, &ds).unwrap();
        for m in marks {
            let c = m.center;
            assert_eq!(img.get_pixel(c.x as u32, c.y as u32).0, [40, 90, 200]);
        }
        assert_eq!(img.dimensions(), (320, 240));
    }

    #[test]
    fn rendering_is_deterministic_and_opaque() {
        let (spec, ds) = demo();
        let a = render_chart(&spec, &ds).unwrap();
        assert!(a.pixels().iter().all(|p| p[3] == 255));
        assert_eq!(a, render_chart(&spec, &ds).unwrap());
    }

    #[test]
    fn unit_appears_in_axis_title() {
        let (mut spec, _) = demo();
        spec.schema[0] = AttributeSchema::new("a", AttributeKind::Quantitative).with_unit("USD");
        spec.x_encoding = Encoding {
            attribute: "a".into(),
            scale: spec.x_encoding.scale.clone(),
        };
        assert_eq!(axis_title(&spec, "a"), "a (USD)");
    }
}
