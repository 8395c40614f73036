use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, RecordId};
use super::spec::{ChartKind, ChartSpec};
use super::ChartError;
use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum MarkExtent {
    Circle { radius: f64 },
    Rect { rect: Rect },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkGeometry {
    pub record_id: RecordId,
    pub center: Point,
    pub extent: MarkExtent,
    /// Set when the scaled position fell outside the plot area and was clamped.
    #[serde(default)]
    pub clipped: bool,
}

impl MarkGeometry {
    /// Whether `p` lies inside the mark extent grown by `slop` pixels.
    pub fn contains(&self, p: Point, slop: f64) -> bool {
        match self.extent {
            MarkExtent::Circle { radius } => self.center.distance(p) <= radius + slop,
            MarkExtent::Rect { rect } => rect.inflate(slop).contains(p),
        }
    }

    pub fn bounds(&self) -> Rect {
        match self.extent {
            MarkExtent::Circle { radius } => Rect::new(
                self.center.x - radius,
                self.center.y - radius,
                2.0 * radius,
                2.0 * radius,
            ),
            MarkExtent::Rect { rect } => rect,
        }
    }
}

fn clamp_into(v: f64, lo: f64, hi: f64, clipped: &mut bool) -> f64 {
    let c = v.clamp(lo, hi);
    if c != v {
        *clipped = true;
    }
    c
}

/// One mark per record, in record order.
pub fn layout_marks(spec: &ChartSpec, dataset: &Dataset) -> Result<Vec<MarkGeometry>, ChartError> {
    let xi = dataset
        .attribute_index(&spec.x_encoding.attribute)
        .ok_or_else(|| ChartError::UnknownAttribute(spec.x_encoding.attribute.clone()))?;
    let yi = dataset
        .attribute_index(&spec.y_encoding.attribute)
        .ok_or_else(|| ChartError::UnknownAttribute(spec.y_encoding.attribute.clone()))?;
    let area = spec.plot_area;
    dataset
        .records()
        .iter()
        .map(|rec| {
            let wrap = |e: ChartError| ChartError::Record {
                record_id: rec.id,
                source: Box::new(e),
            };
            let sx = spec.x_encoding.scale.apply(&rec.values[xi]).map_err(wrap)?;
            let sy = spec.y_encoding.scale.apply(&rec.values[yi]).map_err(wrap)?;
            let mut clipped = false;
            match spec.kind {
                ChartKind::Scatterplot => {
                    let x = clamp_into(sx, area.x, area.right(), &mut clipped);
                    let y = clamp_into(sy, area.y, area.bottom(), &mut clipped);
                    Ok(MarkGeometry {
                        record_id: rec.id,
                        center: Point::new(x, y),
                        extent: MarkExtent::Circle {
                            radius: spec.mark_style.radius_px,
                        },
                        clipped,
                    })
                }
                ChartKind::Bar => {
                    let band = spec.x_encoding.scale.band_width().unwrap_or(0.0);
                    let width = band * spec.mark_style.bar_width_fraction;
                    let origin = spec.y_encoding.scale.range()[0];
                    let x = clamp_into(sx, area.x, area.right(), &mut clipped);
                    let y0 = clamp_into(origin, area.y, area.bottom(), &mut clipped);
                    let y1 = clamp_into(sy, area.y, area.bottom(), &mut clipped);
                    let rect = Rect::from_corners(
                        Point::new(x - width / 2.0, y0),
                        Point::new(x + width / 2.0, y1),
                    );
                    Ok(MarkGeometry {
                        record_id: rec.id,
                        center: rect.center(),
                        extent: MarkExtent::Rect { rect },
                        clipped,
                    })
                }
            }
        })
        .collect()
}

/// Nearest visible mark whose slop-inflated extent contains `pointer`.
/// Ties go to the smaller record id.
pub fn hit_test(
    marks: &[MarkGeometry],
    pointer: Point,
    slop_px: f64,
    visible: &BTreeSet<RecordId>,
) -> Option<RecordId> {
    let mut best: Option<(f64, RecordId)> = None;
    for mark in marks {
        if !visible.contains(&mark.record_id) || !mark.contains(pointer, slop_px) {
            continue;
        }
        let d = mark.center.distance_sq(pointer);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && mark.record_id < bid),
        };
        if better {
            best = Some((d, mark.record_id));
        }
    }
    best.map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::dataset::{AttributeKind, AttributeSchema, Value};
    use crate::chart::scale::Scale;
    use crate::chart::spec::{Encoding, MarkStyle, OverlayStyle, CHART_FORMAT};
    use crate::color::Rgb;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scatter_spec() -> ChartSpec {
        ChartSpec {
            format: CHART_FORMAT.into(),
            id: "t".into(),
            title: String::new(),
            kind: ChartKind::Scatterplot,
            image_size: [300, 200],
            plot_area: Rect::new(50.0, 20.0, 200.0, 160.0),
            schema: vec![
                AttributeSchema::new("x", AttributeKind::Quantitative),
                AttributeSchema::new("y", AttributeKind::Quantitative),
            ],
            dataset: None,
            x_encoding: Encoding {
                attribute: "x".into(),
                scale: Scale::linear([0.0, 10.0], [50.0, 250.0]),
            },
            y_encoding: Encoding {
                attribute: "y".into(),
                scale: Scale::linear([0.0, 10.0], [180.0, 20.0]),
            },
            mark_style: MarkStyle {
                radius_px: 5.0,
                bar_width_fraction: 0.8,
                fill_color: Rgb::new(0, 0, 200),
            },
            background_color: Rgb::WHITE,
            axis_color: Rgb::BLACK,
            detail_attributes: vec![],
            linked_view: None,
            synonyms: Default::default(),
            overlay: OverlayStyle::default(),
        }
    }

    fn points(rows: &[(f64, f64)]) -> Dataset {
        let spec = scatter_spec();
        Dataset::from_rows(
            spec.schema.clone(),
            rows.iter()
                .map(|&(x, y)| vec![Value::Number(x), Value::Number(y)]),
        )
        .unwrap()
    }

    #[test]
    fn empty_dataset_gives_no_marks() {
        assert!(layout_marks(&scatter_spec(), &points(&[]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn domain_midpoints_land_on_plot_center() {
        let marks = layout_marks(&scatter_spec(), &points(&[(5.0, 5.0)])).unwrap();
        assert_eq!(marks.len(), 1);
        assert_eq!(marks[0].center, Point::new(150.0, 100.0));
        assert!(!marks[0].clipped);
    }

    #[test]
    fn out_of_domain_values_are_clamped_and_flagged() {
        let marks = layout_marks(&scatter_spec(), &points(&[(20.0, -1.0)])).unwrap();
        assert_eq!(marks[0].center, Point::new(250.0, 180.0));
        assert!(marks[0].clipped);
    }

    #[test]
    fn bar_layout_spans_from_range_origin() {
        let mut spec = scatter_spec();
        spec.kind = ChartKind::Bar;
        spec.schema[0] = AttributeSchema::new("x", AttributeKind::Categorical);
        spec.x_encoding.scale = Scale::band(vec!["a".into(), "b".into()], [50.0, 250.0], 0.0);
        spec.validate().unwrap();
        let ds = Dataset::from_rows(
            spec.schema.clone(),
            vec![
                vec![Value::Category("a".into()), Value::Number(5.0)],
                vec![Value::Category("b".into()), Value::Number(10.0)],
            ],
        )
        .unwrap();
        let marks = layout_marks(&spec, &ds).unwrap();
        let MarkExtent::Rect { rect } = marks[0].extent else {
            panic!("bar mark must be a rect")
        };
        assert_eq!(rect, Rect::new(60.0, 100.0, 80.0, 80.0));
        let MarkExtent::Rect { rect } = marks[1].extent else {
            panic!()
        };
        assert_eq!(rect, Rect::new(160.0, 20.0, 80.0, 160.0));
    }

    #[test]
    fn record_errors_carry_the_record_id() {
        let mut spec = scatter_spec();
        spec.schema[0] = AttributeSchema::new("x", AttributeKind::Categorical);
        spec.x_encoding.scale = Scale::band(vec!["a".into()], [50.0, 250.0], 0.0);
        let ds = Dataset::from_rows(
            spec.schema.clone(),
            vec![
                vec![Value::Category("a".into()), Value::Number(1.0)],
                vec![Value::Category("zz".into()), Value::Number(1.0)],
            ],
        )
        .unwrap();
        let err = layout_marks(&spec, &ds).unwrap_err();
        assert!(
            matches!(err, ChartError::Record { record_id: 1, .. }),
            "{err}"
        );
    }

    fn circle(id: RecordId, x: f64, y: f64, r: f64) -> MarkGeometry {
        MarkGeometry {
            record_id: id,
            center: Point::new(x, y),
            extent: MarkExtent::Circle { radius: r },
            clipped: false,
        }
    }

    #[test]
    fn hit_on_lone_center_and_tie_break() {
        let all: BTreeSet<RecordId> = [0, 1, 2].into();
        let marks = vec![circle(2, 10.0, 10.0, 5.0)];
        assert_eq!(hit_test(&marks, Point::new(10.0, 10.0), 0.0, &all), Some(2));
        let marks = vec![circle(7, 20.0, 10.0, 6.0), circle(3, 10.0, 10.0, 6.0)];
        let all: BTreeSet<RecordId> = [3, 7].into();
        assert_eq!(hit_test(&marks, Point::new(15.0, 10.0), 0.0, &all), Some(3));
        assert_eq!(
            hit_test(&marks, Point::new(15.0, 10.0), 0.0, &BTreeSet::new()),
            None
        );
    }

    #[test]
    fn slop_extends_reach() {
        let all: BTreeSet<RecordId> = [0].into();
        let marks = vec![circle(0, 0.0, 0.0, 5.0)];
        assert_eq!(hit_test(&marks, Point::new(8.0, 0.0), 0.0, &all), None);
        assert_eq!(hit_test(&marks, Point::new(8.0, 0.0), 4.0, &all), Some(0));
    }

    /// Exhaustive oracle: collect every candidate, sort by (distance, id).
    fn hit_oracle(
        marks: &[MarkGeometry],
        p: Point,
        slop: f64,
        visible: &BTreeSet<RecordId>,
    ) -> Option<RecordId> {
        let mut cands: Vec<(f64, RecordId)> = marks
            .iter()
            .filter(|m| visible.contains(&m.record_id))
            .filter(|m| {
                let MarkExtent::Circle { radius } = m.extent else {
                    unreachable!()
                };
                let dx = m.center.x - p.x;
                let dy = m.center.y - p.y;
                (dx * dx + dy * dy).sqrt() <= radius + slop
            })
            .map(|m| {
                (
                    (m.center.x - p.x).powi(2) + (m.center.y - p.y).powi(2),
                    m.record_id,
                )
            })
            .collect();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.first().map(|c| c.1)
    }

    #[test]
    fn hit_test_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let marks: Vec<_> = (0..100)
            .map(|i| {
                circle(
                    i,
                    rng.gen_range(0.0..200.0f64).round(),
                    rng.gen_range(0.0..200.0f64).round(),
                    rng.gen_range(2.0..12.0),
                )
            })
            .collect();
        let visible: BTreeSet<RecordId> = (0..100).filter(|i| i % 5 != 0).collect();
        for _ in 0..1000 {
            let p = Point::new(
                rng.gen_range(0.0..200.0f64).round(),
                rng.gen_range(0.0..200.0f64).round(),
            );
            let slop = rng.gen_range(0.0..6.0f64).round();
            assert_eq!(
                hit_test(&marks, p, slop, &visible),
                hit_oracle(&marks, p, slop, &visible)
            );
        }
    }

    proptest! {
        #[test]
        fn layout_is_permutation_equivariant(
            rows in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 0..30),
            seed in any::<u64>(),
        ) {
            let spec = scatter_spec();
            let marks = layout_marks(&spec, &points(&rows)).unwrap();
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let shuffled: Vec<_> = perm.iter().map(|&i| rows[i]).collect();
            let marks2 = layout_marks(&spec, &points(&shuffled)).unwrap();
            for (new_pos, &old) in perm.iter().enumerate() {
                prop_assert_eq!(marks2[new_pos].center, marks[old].center);
                prop_assert_eq!(marks2[new_pos].extent, marks[old].extent);
            }
        }
    }
}
