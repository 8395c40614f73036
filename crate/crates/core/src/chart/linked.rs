use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::dataset::{AttributeKind, AttributeSchema, Dataset, RecordId, Value};
use super::layout::{layout_marks, MarkGeometry};
use super::scale::Scale;
use super::spec::{
    Aggregate, ChartKind, ChartSpec, Encoding, MarkStyle, OverlayStyle, CHART_FORMAT,
};
use super::ChartError;
use crate::color::Rgb;
use crate::geometry::Rect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedBar {
    pub category: String,
    pub value: f64,
    /// Number of selected records in the category.
    pub count: usize,
}

/// Bar chart derived from a selection of the main chart's records.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedChart {
    /// `None` when the selection is empty (a band scale needs categories).
    pub spec: Option<ChartSpec>,
    /// Bar geometry; `record_id` is the bar index, not a dataset record.
    pub marks: Vec<MarkGeometry>,
    pub bars: Vec<LinkedBar>,
}

/// Groups the selected records by `group_attribute` and aggregates
/// `value_attribute` per group. Groups are ordered by first appearance in the
/// whole dataset.
pub fn aggregate_selection(
    dataset: &Dataset,
    selection: &BTreeSet<RecordId>,
    group_attribute: &str,
    value_attribute: &str,
    aggregate: Aggregate,
) -> Result<Vec<LinkedBar>, ChartError> {
    let gi = kind_checked(dataset, group_attribute, AttributeKind::Categorical)?;
    let vi = kind_checked(dataset, value_attribute, AttributeKind::Quantitative)?;
    for &id in selection {
        if !dataset.contains_id(id) {
            return Err(ChartError::UnknownRecord(id));
        }
    }
    let mut order: Vec<&str> = Vec::new();
    let mut acc: HashMap<&str, (f64, usize)> = HashMap::new();
    for rec in dataset.records() {
        let Value::Category(group) = &rec.values[gi] else {
            continue;
        };
        if !order.contains(&group.as_str()) {
            order.push(group);
        }
        if !selection.contains(&rec.id) {
            continue;
        }
        let v = rec.values[vi].as_number().unwrap_or(0.0);
        let slot = acc.entry(group).or_insert((0.0, 0));
        slot.0 += v;
        slot.1 += 1;
    }
    Ok(order
        .into_iter()
        .filter_map(|g| {
            let &(sum, count) = acc.get(g)?;
            let value = match aggregate {
                Aggregate::Count => count as f64,
                Aggregate::Sum => sum,
                Aggregate::Mean => sum / count as f64,
            };
            Some(LinkedBar {
                category: g.to_string(),
                value,
                count,
            })
        })
        .collect())
}

fn kind_checked(dataset: &Dataset, name: &str, kind: AttributeKind) -> Result<usize, ChartError> {
    let idx = dataset
        .attribute_index(name)
        .ok_or_else(|| ChartError::UnknownAttribute(name.to_string()))?;
    let found = dataset.schema()[idx].kind;
    if found != kind {
        return Err(ChartError::AttributeKindMismatch {
            attribute: name.to_string(),
            expected: kind,
        });
    }
    Ok(idx)
}

/// Inner plot area of a linked panel: room for a title above and labels below.
pub fn linked_plot_area(panel: Rect) -> Rect {
    Rect::new(
        panel.x + 6.0,
        panel.y + 18.0,
        (panel.width - 12.0).max(1.0),
        (panel.height - 34.0).max(1.0),
    )
}

/// Builds the linked bar chart inside `panel` (main-chart pixel coordinates).
#[allow(clippy::too_many_arguments)]
pub fn derive_linked_chart(
    dataset: &Dataset,
    selection: &BTreeSet<RecordId>,
    group_attribute: &str,
    value_attribute: &str,
    aggregate: Aggregate,
    panel: Rect,
    fill_color: Rgb,
    background_color: Rgb,
) -> Result<LinkedChart, ChartError> {
    let bars = aggregate_selection(
        dataset,
        selection,
        group_attribute,
        value_attribute,
        aggregate,
    )?;
    if bars.is_empty() {
        return Ok(LinkedChart {
            spec: None,
            marks: Vec::new(),
            bars,
        });
    }
    let area = linked_plot_area(panel);
    let lo = bars.iter().map(|b| b.value).fold(0.0f64, f64::min);
    let mut hi = bars.iter().map(|b| b.value).fold(0.0f64, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let value_label = match aggregate {
        Aggregate::Count => "count".to_string(),
        Aggregate::Sum => format!("sum of {value_attribute}"),
        Aggregate::Mean => format!("mean {value_attribute}"),
    };
    let schema = vec![
        AttributeSchema::new(group_attribute, AttributeKind::Categorical),
        AttributeSchema::new(value_label.clone(), AttributeKind::Quantitative),
    ];
    let spec = ChartSpec {
        format: CHART_FORMAT.into(),
        id: format!("linked:{group_attribute}:{value_attribute}"),
        title: format!("{value_label} by {group_attribute}"),
        kind: ChartKind::Bar,
        image_size: [
            (panel.right().ceil().max(1.0)) as u32,
            (panel.bottom().ceil().max(1.0)) as u32,
        ],
        plot_area: area,
        schema: schema.clone(),
        dataset: None,
        x_encoding: Encoding {
            attribute: group_attribute.to_string(),
            scale: Scale::band(
                bars.iter().map(|b| b.category.clone()).collect(),
                [area.x, area.right()],
                0.1,
            ),
        },
        y_encoding: Encoding {
            attribute: value_label,
            scale: Scale::linear([lo, hi], [area.bottom(), area.y]),
        },
        mark_style: MarkStyle {
            radius_px: 1.0,
            bar_width_fraction: 0.9,
            fill_color,
        },
        background_color,
        axis_color: Rgb::new(60, 60, 60),
        detail_attributes: Vec::new(),
        linked_view: None,
        synonyms: Default::default(),
        overlay: OverlayStyle::default(),
    };
    let rows = bars
        .iter()
        .map(|b| vec![Value::Category(b.category.clone()), Value::Number(b.value)]);
    let bar_data = Dataset::from_rows(schema, rows)?;
    let marks = layout_marks(&spec, &bar_data)?;
    Ok(LinkedChart {
        spec: Some(spec),
        marks,
        bars,
    })
}
