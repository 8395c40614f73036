use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{validate_schema, AttributeKind, AttributeSchema};
use super::scale::Scale;
use super::ChartError;
use crate::color::Rgb;
use crate::geometry::Rect;

/// Value of the `format` tag every chart-spec document must carry.
pub const CHART_FORMAT: &str = "arlens-chart/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Scatterplot,
    Bar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub attribute: String,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkStyle {
    #[serde(default = "default_radius")]
    pub radius_px: f64,
    #[serde(default = "default_bar_width")]
    pub bar_width_fraction: f64,
    pub fill_color: Rgb,
}

fn default_radius() -> f64 {
    5.0
}

fn default_bar_width() -> f64 {
    0.8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Count,
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedViewConfig {
    pub group_attribute: String,
    pub value_attribute: String,
    pub aggregate: Aggregate,
}

/// Tunables for overlay geometry. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlayStyle {
    /// Occlusion patch radius as a multiple of the mark radius.
    pub patch_scale: f64,
    /// Extra anti-alias apron around patches, in pixels.
    pub patch_apron_px: f64,
    /// Relative HSL lightness increase for highlight layers.
    pub highlight_lightness: f64,
    pub tooltip_offset_px: f64,
    /// Linked panel width as a fraction of the plot-area width.
    pub panel_width_fraction: f64,
    pub hit_slop_px: f64,
    pub text_color: Rgb,
    pub tooltip_background: Rgb,
    pub cursor_color: Rgb,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            patch_scale: 1.5,
            patch_apron_px: 1.0,
            highlight_lightness: 0.2,
            tooltip_offset_px: 12.0,
            panel_width_fraction: 0.4,
            hit_slop_px: 4.0,
            text_color: Rgb::new(20, 20, 20),
            tooltip_background: Rgb::new(250, 250, 235),
            cursor_color: Rgb::new(230, 60, 40),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSource {
    /// Path relative to the chart-spec file.
    pub path: String,
    pub format: DatasetFormat,
}

/// Declarative description of a static chart in image pixel space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub format: String,
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub kind: ChartKind,
    pub image_size: [u32; 2],
    pub plot_area: Rect,
    pub schema: Vec<AttributeSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSource>,
    pub x_encoding: Encoding,
    pub y_encoding: Encoding,
    pub mark_style: MarkStyle,
    pub background_color: Rgb,
    #[serde(default = "default_axis_color")]
    pub axis_color: Rgb,
    #[serde(default)]
    pub detail_attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_view: Option<LinkedViewConfig>,
    /// Attribute name -> alternative words that refer to it in commands.
    #[serde(default)]
    pub synonyms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub overlay: OverlayStyle,
}

fn default_axis_color() -> Rgb {
    Rgb::new(60, 60, 60)
}

impl ChartSpec {
    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.schema.iter().find(|a| a.name == name)
    }

    pub fn width(&self) -> u32 {
        self.image_size[0]
    }

    pub fn height(&self) -> u32 {
        self.image_size[1]
    }

    pub fn image_rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width() as f64, self.height() as f64)
    }

    /// Checks every structural invariant, reporting the offending field path.
    pub fn validate(&self) -> Result<(), ChartError> {
        if self.format != CHART_FORMAT {
            return Err(ChartError::invalid(
                "format",
                format!("expected \"{CHART_FORMAT}\", found \"{}\"", self.format),
            ));
        }
        if self.id.is_empty() {
            return Err(ChartError::invalid("id", "chart id must not be empty"));
        }
        validate_schema(&self.schema)?;
        if self.image_size[0] == 0 || self.image_size[1] == 0 {
            return Err(ChartError::invalid("image_size", "image must not be empty"));
        }
        if self.plot_area.is_degenerate() || !self.image_rect().contains_rect(&self.plot_area) {
            return Err(ChartError::invalid(
                "plot_area",
                "plot area must be non-empty and inside the image bounds",
            ));
        }
        for (path, enc) in [
            ("x_encoding", &self.x_encoding),
            ("y_encoding", &self.y_encoding),
        ] {
            let attr = self.attribute(&enc.attribute).ok_or_else(|| {
                ChartError::invalid(
                    format!("{path}.attribute"),
                    format!("unknown attribute '{}'", enc.attribute),
                )
            })?;
            if attr.kind != enc.scale.kind() {
                return Err(ChartError::ScaleKindMismatch {
                    path: path.to_string(),
                });
            }
            enc.scale.validate(&format!("{path}.scale"))?;
        }
        match self.kind {
            ChartKind::Scatterplot => {
                if !(self.mark_style.radius_px > 0.0 && self.mark_style.radius_px.is_finite()) {
                    return Err(ChartError::invalid(
                        "mark_style.radius_px",
                        "radius must be positive",
                    ));
                }
            }
            ChartKind::Bar => {
                if !matches!(self.x_encoding.scale, Scale::Band { .. })
                    || !matches!(self.y_encoding.scale, Scale::Linear { .. })
                {
                    return Err(ChartError::invalid(
                        "kind",
                        "bar charts need a band x scale and a linear y scale",
                    ));
                }
                let f = self.mark_style.bar_width_fraction;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(ChartError::invalid(
                        "mark_style.bar_width_fraction",
                        "bar width fraction must lie in (0, 1]",
                    ));
                }
            }
        }
        for (i, name) in self.detail_attributes.iter().enumerate() {
            if self.attribute(name).is_none() {
                return Err(ChartError::invalid(
                    format!("detail_attributes[{i}]"),
                    format!("unknown attribute '{name}'"),
                ));
            }
        }
        if let Some(linked) = &self.linked_view {
            self.require_kind(
                "linked_view.group_attribute",
                &linked.group_attribute,
                AttributeKind::Categorical,
            )?;
            self.require_kind(
                "linked_view.value_attribute",
                &linked.value_attribute,
                AttributeKind::Quantitative,
            )?;
        }
        for name in self.synonyms.keys() {
            if self.attribute(name).is_none() {
                return Err(ChartError::invalid(
                    format!("synonyms.{name}"),
                    format!("unknown attribute '{name}'"),
                ));
            }
        }
        let o = &self.overlay;
        for (field, v) in [
            ("overlay.patch_scale", o.patch_scale),
            ("overlay.panel_width_fraction", o.panel_width_fraction),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ChartError::invalid(field, "must be positive"));
            }
        }
        for (field, v) in [
            ("overlay.patch_apron_px", o.patch_apron_px),
            ("overlay.highlight_lightness", o.highlight_lightness),
            ("overlay.tooltip_offset_px", o.tooltip_offset_px),
            ("overlay.hit_slop_px", o.hit_slop_px),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ChartError::invalid(
                    field,
                    "must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }

    fn require_kind(&self, path: &str, name: &str, kind: AttributeKind) -> Result<(), ChartError> {
        match self.attribute(name) {
            None => Err(ChartError::invalid(
                path,
                format!("unknown attribute '{name}'"),
            )),
            Some(a) if a.kind != kind => Err(ChartError::invalid(
                path,
                format!("attribute '{name}' must be {kind}"),
            )),
            Some(_) => Ok(()),
        }
    }
}

/// Parses and validates a chart-spec JSON document.
pub fn parse_chart_spec(bytes: &[u8]) -> Result<ChartSpec, ChartError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ChartError::Malformed {
        path: ".".into(),
        message: format!("not UTF-8: {e}"),
    })?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ChartSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        if path == "kind" && message.contains("unknown variant") {
            ChartError::UnknownKind(message)
        } else {
            ChartError::Malformed { path, message }
        }
    })?;
    spec.validate()?;
    Ok(spec)
}
