//! Per-session interaction state: filters, highlights, details-on-demand,
//! the linked view and credential gating. Transitions are pure functions
//! from one state to the next plus the feedback effects they produce.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chart::{hit_test, Dataset, MarkGeometry, RecordId};
use crate::command::{CommandAst, Predicate};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointerEvent {
    Move { position: Point },
    Select,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    StateChanged { revision: u64 },
    Chime,
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    /// Hide-predicates; a record is hidden when any of them matches.
    pub filters: Vec<Predicate>,
    pub highlights: BTreeSet<RecordId>,
    pub details_enabled: bool,
    pub pointer: Option<Point>,
    pub focused: Option<RecordId>,
    pub linked_view_open: bool,
    pub credential: u32,
    pub revision: u64,
}

impl Default for SessionState {
    fn default() -> Self {
        Self::new(0)
    }
}

impl SessionState {
    pub fn new(credential: u32) -> Self {
        Self {
            filters: Vec::new(),
            highlights: BTreeSet::new(),
            details_enabled: true,
            pointer: None,
            focused: None,
            linked_view_open: false,
            credential,
            revision: 0,
        }
    }

    /// Whether the session may read `attribute`.
    pub fn can_see(&self, dataset: &Dataset, attribute: &str) -> bool {
        dataset
            .attribute(attribute)
            .is_some_and(|a| a.clearance <= self.credential)
    }
}

fn hidden_by(filters: &[Predicate], dataset: &Dataset) -> BTreeSet<RecordId> {
    dataset
        .records()
        .iter()
        .filter(|r| filters.iter().any(|p| p.matches(dataset, r)))
        .map(|r| r.id)
        .collect()
}

/// Records not matched by any active filter.
pub fn visible_records(state: &SessionState, dataset: &Dataset) -> BTreeSet<RecordId> {
    dataset
        .records()
        .iter()
        .filter(|r| !state.filters.iter().any(|p| p.matches(dataset, r)))
        .map(|r| r.id)
        .collect()
}

pub fn hidden_records(state: &SessionState, dataset: &Dataset) -> BTreeSet<RecordId> {
    hidden_by(&state.filters, dataset)
}

/// Records the linked view summarizes: highlights if any, else the visible
/// set while a filter is active, else nothing.
pub fn linked_selection(state: &SessionState, dataset: &Dataset) -> BTreeSet<RecordId> {
    if !state.highlights.is_empty() {
        state.highlights.clone()
    } else if !state.filters.is_empty() {
        visible_records(state, dataset)
    } else {
        BTreeSet::new()
    }
}

fn clearance_violation(state: &SessionState, dataset: &Dataset, p: &Predicate) -> Option<String> {
    if let Err(e) = p.validate(dataset.schema()) {
        return Some(e.to_string());
    }
    p.attributes()
        .into_iter()
        .find(|a| !state.can_see(dataset, a))
        .map(|a| format!("insufficient clearance for attribute '{a}'"))
}

/// Drops highlights and focus that are no longer visible.
fn restore_visibility_invariants(state: &mut SessionState, dataset: &Dataset) {
    let visible = visible_records(state, dataset);
    state.highlights.retain(|id| visible.contains(id));
    if state.focused.is_some_and(|f| !visible.contains(&f)) {
        state.focused = None;
    }
}

fn commit(mut next: SessionState, prev: &SessionState, chime: bool) -> (SessionState, Vec<Effect>) {
    next.revision = prev.revision + 1;
    let mut effects = Vec::with_capacity(2);
    if chime {
        effects.push(Effect::Chime);
    }
    effects.push(Effect::StateChanged {
        revision: next.revision,
    });
    (next, effects)
}

/// Applies a parsed command. Predicates over attributes above the session's
/// credential are rejected and leave the state untouched.
pub fn apply_command(
    state: &SessionState,
    ast: &CommandAst,
    dataset: &Dataset,
) -> (SessionState, Vec<Effect>) {
    if let Some(p) = ast.predicate() {
        if let Some(message) = clearance_violation(state, dataset, p) {
            return (state.clone(), vec![Effect::Error { message }]);
        }
    }
    let mut next = state.clone();
    match ast {
        CommandAst::FilterOut { predicate } => next.filters.push(predicate.clone()),
        CommandAst::ShowOnly { predicate } => next.filters.push(predicate.clone().negate()),
        CommandAst::Highlight { predicate } => {
            let visible = visible_records(state, dataset);
            next.highlights = dataset
                .records()
                .iter()
                .filter(|r| visible.contains(&r.id) && predicate.matches(dataset, r))
                .map(|r| r.id)
                .collect();
        }
        CommandAst::ClearFilters => next.filters.clear(),
        CommandAst::ClearHighlights => next.highlights.clear(),
        CommandAst::Reset => next = SessionState::new(state.credential),
        CommandAst::DetailsOn => next.details_enabled = true,
        CommandAst::DetailsOff => next.details_enabled = false,
    }
    restore_visibility_invariants(&mut next, dataset);
    commit(next, state, true)
}

/// Applies a gaze/gesture event. `Move` re-runs the hit test over visible
/// marks; `Select` toggles the focused record's highlight and opens the linked
/// view; `Exit` closes the linked view and drops focus.
pub fn pointer_event(
    state: &SessionState,
    event: &PointerEvent,
    marks: &[MarkGeometry],
    dataset: &Dataset,
    slop_px: f64,
) -> (SessionState, Vec<Effect>) {
    let mut next = state.clone();
    match event {
        PointerEvent::Move { position } => {
            if !position.is_finite() {
                return (state.clone(), Vec::new());
            }
            next.pointer = Some(*position);
            let visible = visible_records(state, dataset);
            next.focused = hit_test(marks, *position, slop_px, &visible);
            if next.pointer == state.pointer && next.focused == state.focused {
                return (state.clone(), Vec::new());
            }
            commit(next, state, false)
        }
        PointerEvent::Select => {
            let Some(focused) = state.focused else {
                return (state.clone(), Vec::new());
            };
            if !next.highlights.remove(&focused) {
                next.highlights.insert(focused);
            }
            next.linked_view_open = true;
            commit(next, state, true)
        }
        PointerEvent::Exit => {
            next.linked_view_open = false;
            next.focused = None;
            commit(next, state, true)
        }
    }
}

/// Whether the tooltip for the focused record should be drawn.
pub fn tooltip_visible(state: &SessionState) -> bool {
    state.details_enabled && state.focused.is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{AttributeKind, AttributeSchema, MarkExtent, Value};
    use crate::command::CompareOp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo() -> Dataset {
        let schema = vec![
            AttributeSchema::new("continent", AttributeKind::Categorical),
            AttributeSchema::new("gdp", AttributeKind::Quantitative).with_unit("USD"),
            AttributeSchema::new("secret", AttributeKind::Quantitative).with_clearance(2),
        ];
        let rows = [
            ("Asia", 4000.0),
            ("Asia", 40000.0),
            ("Europe", 30000.0),
            ("Africa", 2000.0),
            ("Asia", 9000.0),
            ("Europe", 8000.0),
        ];
        Dataset::from_rows(
            schema,
            rows.iter().map(|(c, g)| {
                vec![
                    Value::Category(c.to_string()),
                    Value::Number(*g),
                    Value::Number(1.0),
                ]
            }),
        )
        .unwrap()
    }

    fn marks(ds: &Dataset) -> Vec<MarkGeometry> {
        ds.ids()
            .map(|id| MarkGeometry {
                record_id: id,
                center: Point::new(20.0 + 30.0 * id as f64, 50.0),
                extent: MarkExtent::Circle { radius: 5.0 },
                clipped: false,
            })
            .collect()
    }

    fn filter_gdp() -> CommandAst {
        CommandAst::FilterOut {
            predicate: Predicate::compare("gdp", CompareOp::Gt, 10000.0),
        }
    }

    fn highlight_asia() -> CommandAst {
        CommandAst::Highlight {
            predicate: Predicate::category_is("continent", "Asia"),
        }
    }

    #[test]
    fn reset_returns_to_default() {
        let ds = demo();
        let (s, _) = apply_command(&SessionState::new(1), &filter_gdp(), &ds);
        let (s, _) = apply_command(&s, &highlight_asia(), &ds);
        let (s, _) = apply_command(&s, &CommandAst::DetailsOff, &ds);
        let (r, fx) = apply_command(&s, &CommandAst::Reset, &ds);
        let expected = SessionState {
            revision: s.revision + 1,
            ..SessionState::new(1)
        };
        assert_eq!(r, expected);
        assert_eq!(
            fx,
            vec![
                Effect::Chime,
                Effect::StateChanged {
                    revision: r.revision
                }
            ]
        );
    }

    #[test]
    fn filter_then_highlight_set_algebra() {
        let ds = demo();
        let (s, _) = apply_command(&SessionState::default(), &filter_gdp(), &ds);
        let (s, _) = apply_command(&s, &highlight_asia(), &ds);
        // gdp > 10000 hides records 1 and 2; visible Asian records are 0 and 4.
        assert_eq!(hidden_records(&s, &ds), BTreeSet::from([1, 2]));
        assert_eq!(s.highlights, BTreeSet::from([0, 4]));
        assert_eq!(linked_selection(&s, &ds), BTreeSet::from([0, 4]));
    }

    #[test]
    fn clearance_violation_is_rejected_without_state_change() {
        let ds = demo();
        let state = SessionState::new(1);
        let cmd = CommandAst::FilterOut {
            predicate: Predicate::compare("secret", CompareOp::Gt, 0.0),
        };
        let (next, fx) = apply_command(&state, &cmd, &ds);
        assert_eq!(next, state);
        assert_eq!(
            fx,
            vec![Effect::Error {
                message: "insufficient clearance for attribute 'secret'".into()
            }]
        );
        let (next, fx) = apply_command(&SessionState::new(2), &cmd, &ds);
        assert_eq!(next.filters.len(), 1);
        assert_eq!(fx[0], Effect::Chime);
    }

    #[test]
    fn hover_select_exit() {
        let ds = demo();
        let m = marks(&ds);
        let s0 = SessionState::default();
        let (s1, fx) = pointer_event(
            &s0,
            &PointerEvent::Move {
                position: Point::new(81.0, 51.0),
            },
            &m,
            &ds,
            4.0,
        );
        assert_eq!(s1.focused, Some(2));
        assert!(tooltip_visible(&s1));
        assert_eq!(fx, vec![Effect::StateChanged { revision: 1 }]);
        let (s2, fx) = pointer_event(&s1, &PointerEvent::Select, &m, &ds, 4.0);
        assert_eq!(fx[0], Effect::Chime);
        assert!(s2.linked_view_open);
        assert_eq!(linked_selection(&s2, &ds), BTreeSet::from([2]));
        let (s3, _) = pointer_event(&s2, &PointerEvent::Exit, &m, &ds, 4.0);
        assert_eq!(s3.highlights, BTreeSet::from([2]));
        assert!(!s3.linked_view_open);
        assert_eq!(s3.focused, None);
        assert!(s3.revision > s2.revision);
    }

    #[test]
    fn select_toggles_and_noop_without_focus() {
        let ds = demo();
        let m = marks(&ds);
        let (s, fx) = pointer_event(
            &SessionState::default(),
            &PointerEvent::Select,
            &m,
            &ds,
            4.0,
        );
        assert!(fx.is_empty());
        assert_eq!(s.revision, 0);
        let mv = PointerEvent::Move {
            position: Point::new(20.0, 50.0),
        };
        let (s, _) = pointer_event(&s, &mv, &m, &ds, 4.0);
        let (s, _) = pointer_event(&s, &PointerEvent::Select, &m, &ds, 4.0);
        assert!(s.highlights.contains(&0));
        let (s, _) = pointer_event(&s, &PointerEvent::Select, &m, &ds, 4.0);
        assert!(!s.highlights.contains(&0));
    }

    #[test]
    fn hidden_marks_are_not_hoverable() {
        let ds = demo();
        let m = marks(&ds);
        let (s, _) = apply_command(&SessionState::default(), &filter_gdp(), &ds);
        let (s, _) = pointer_event(
            &s,
            &PointerEvent::Move {
                position: Point::new(50.0, 50.0),
            },
            &m,
            &ds,
            4.0,
        );
        assert_eq!(s.pointer, Some(Point::new(50.0, 50.0)));
        assert_eq!(s.focused, None);
    }

    #[test]
    fn filtering_a_highlighted_record_drops_its_highlight_and_focus() {
        let ds = demo();
        let m = marks(&ds);
        let (s, _) = pointer_event(
            &SessionState::default(),
            &PointerEvent::Move {
                position: Point::new(50.0, 50.0),
            },
            &m,
            &ds,
            4.0,
        );
        let (s, _) = pointer_event(&s, &PointerEvent::Select, &m, &ds, 4.0);
        assert_eq!(s.highlights, BTreeSet::from([1]));
        let (s, _) = apply_command(&s, &filter_gdp(), &ds);
        assert!(s.highlights.is_empty());
        assert_eq!(s.focused, None);
    }

    #[test]
    fn show_only_keeps_matches() {
        let ds = demo();
        let cmd = CommandAst::ShowOnly {
            predicate: Predicate::category_is("continent", "Europe"),
        };
        let (s, _) = apply_command(&SessionState::default(), &cmd, &ds);
        assert_eq!(visible_records(&s, &ds), BTreeSet::from([2, 5]));
    }

    #[test]
    fn linked_selection_branches() {
        let ds = demo();
        assert!(linked_selection(&SessionState::default(), &ds).is_empty());
        let s = SessionState {
            highlights: BTreeSet::from([3]),
            ..SessionState::default()
        };
        assert_eq!(linked_selection(&s, &ds), BTreeSet::from([3]));
        let (s, _) = apply_command(&SessionState::default(), &filter_gdp(), &ds);
        assert_eq!(linked_selection(&s, &ds), BTreeSet::from([0, 3, 4, 5]));
        let everything = CommandAst::FilterOut {
            predicate: Predicate::compare("gdp", CompareOp::Ge, 0.0),
        };
        let (s, _) = apply_command(&s, &everything, &ds);
        assert!(visible_records(&s, &ds).is_empty());
    }

    #[test]
    fn random_sequences_keep_invariants_and_count_chimes() {
        let ds = demo();
        let m = marks(&ds);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut s = SessionState::new(rng.gen_range(0..3));
            for _ in 0..10 {
                let before = s.clone();
                let (next, fx) = if rng.gen_bool(0.5) {
                    let cmd = match rng.gen_range(0..6) {
                        0 => filter_gdp(),
                        1 => highlight_asia(),
                        2 => CommandAst::ClearFilters,
                        3 => CommandAst::FilterOut {
                            predicate: Predicate::compare("secret", CompareOp::Lt, 5.0),
                        },
                        4 => CommandAst::ShowOnly {
                            predicate: Predicate::category_is("continent", "Asia"),
                        },
                        _ => CommandAst::Reset,
                    };
                    apply_command(&s, &cmd, &ds)
                } else {
                    let ev = match rng.gen_range(0..3) {
                        0 => PointerEvent::Move {
                            position: Point::new(rng.gen_range(0.0..200.0), 50.0),
                        },
                        1 => PointerEvent::Select,
                        _ => PointerEvent::Exit,
                    };
                    pointer_event(&s, &ev, &m, &ds, 4.0)
                };
                let chimes = fx.iter().filter(|e| **e == Effect::Chime).count();
                let failed = fx.iter().any(|e| matches!(e, Effect::Error { .. }));
                assert!(chimes <= 1);
                if failed {
                    assert_eq!(chimes, 0);
                    assert_eq!(next.revision, before.revision);
                }
                if next != before {
                    assert!(next.revision > before.revision);
                }
                let visible = visible_records(&next, &ds);
                assert!(next.highlights.is_subset(&visible));
                if let Some(f) = next.focused {
                    assert!(visible.contains(&f));
                }
                s = next;
            }
        }
    }
}
