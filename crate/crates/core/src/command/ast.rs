use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chart::{AttributeKind, AttributeSchema, Dataset, Record, Value};

use super::CommandError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

impl CompareOp {
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Eq => lhs == rhs,
        }
    }

    /// Phrase used when printing a command in canonical form.
    pub fn canonical_phrase(self) -> &'static str {
        match self {
            CompareOp::Gt => "greater than",
            CompareOp::Ge => "at least",
            CompareOp::Lt => "less than",
            CompareOp::Le => "at most",
            CompareOp::Eq => "equal to",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    Compare {
        attribute: String,
        op: CompareOp,
        value: f64,
    },
    CategoryIs {
        attribute: String,
        category: String,
    },
    And {
        all: Vec<Predicate>,
    },
    /// Produced by "show only": keep matches by hiding the complement.
    Not {
        inner: Box<Predicate>,
    },
}

impl Predicate {
    pub fn compare(attribute: impl Into<String>, op: CompareOp, value: f64) -> Self {
        Predicate::Compare {
            attribute: attribute.into(),
            op,
            value,
        }
    }

    pub fn category_is(attribute: impl Into<String>, category: impl Into<String>) -> Self {
        Predicate::CategoryIs {
            attribute: attribute.into(),
            category: category.into(),
        }
    }

    pub fn negate(self) -> Self {
        Predicate::Not {
            inner: Box::new(self),
        }
    }

    /// Evaluates the predicate on one record. Unknown attributes never match.
    pub fn matches(&self, dataset: &Dataset, record: &Record) -> bool {
        match self {
            Predicate::Compare {
                attribute,
                op,
                value,
            } => dataset
                .attribute_index(attribute)
                .and_then(|i| record.values[i].as_number())
                .is_some_and(|v| op.eval(v, *value)),
            Predicate::CategoryIs {
                attribute,
                category,
            } => dataset
                .attribute_index(attribute)
                .is_some_and(|i| matches!(&record.values[i], Value::Category(c) if c == category)),
            Predicate::And { all } => all.iter().all(|p| p.matches(dataset, record)),
            Predicate::Not { inner } => !inner.matches(dataset, record),
        }
    }

    /// Every attribute the predicate reads, in first-mention order.
    pub fn attributes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_attributes(&mut out);
        out
    }

    fn collect_attributes<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Predicate::Compare { attribute, .. } | Predicate::CategoryIs { attribute, .. } => {
                if !out.contains(&attribute.as_str()) {
                    out.push(attribute);
                }
            }
            Predicate::And { all } => all.iter().for_each(|p| p.collect_attributes(out)),
            Predicate::Not { inner } => inner.collect_attributes(out),
        }
    }

    pub fn validate(&self, schema: &[AttributeSchema]) -> Result<(), CommandError> {
        let check = |name: &str, kind: AttributeKind| -> Result<(), CommandError> {
            let attr = schema
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| CommandError::UnknownAttribute(name.to_string()))?;
            if attr.kind != kind {
                return Err(CommandError::KindMismatch {
                    attribute: name.to_string(),
                    expected: kind,
                });
            }
            Ok(())
        };
        match self {
            Predicate::Compare {
                attribute, value, ..
            } => {
                if !value.is_finite() {
                    return Err(CommandError::NotANumber(value.to_string()));
                }
                check(attribute, AttributeKind::Quantitative)
            }
            Predicate::CategoryIs { attribute, .. } => check(attribute, AttributeKind::Categorical),
            Predicate::And { all } => {
                if all.is_empty() {
                    return Err(CommandError::EmptyConjunction);
                }
                all.iter().try_for_each(|p| p.validate(schema))
            }
            Predicate::Not { inner } => inner.validate(schema),
        }
    }
}

impl fmt::Display for Predicate {
    /// Canonical phrasing; `Compare` and `CategoryIs` re-parse to themselves.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Compare {
                attribute,
                op,
                value,
            } => write!(f, "where {attribute} {} {value}", op.canonical_phrase()),
            Predicate::CategoryIs {
                attribute,
                category,
            } => write!(f, "where {attribute} equal to {category}"),
            Predicate::And { all } => {
                for (i, p) in all.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Predicate::Not { inner } => write!(f, "not ({inner})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandAst {
    /// Hide records matching the predicate.
    FilterOut {
        predicate: Predicate,
    },
    /// Keep only records matching the predicate.
    ShowOnly {
        predicate: Predicate,
    },
    Highlight {
        predicate: Predicate,
    },
    ClearFilters,
    ClearHighlights,
    Reset,
    DetailsOn,
    DetailsOff,
}

impl CommandAst {
    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            CommandAst::FilterOut { predicate }
            | CommandAst::ShowOnly { predicate }
            | CommandAst::Highlight { predicate } => Some(predicate),
            _ => None,
        }
    }
}

impl fmt::Display for CommandAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandAst::FilterOut { predicate } => write!(f, "filter out {predicate}"),
            CommandAst::ShowOnly { predicate } => write!(f, "show only {predicate}"),
            CommandAst::Highlight { predicate } => write!(f, "highlight {predicate}"),
            CommandAst::ClearFilters => f.write_str("clear filters"),
            CommandAst::ClearHighlights => f.write_str("clear highlights"),
            CommandAst::Reset => f.write_str("reset"),
            CommandAst::DetailsOn => f.write_str("show details"),
            CommandAst::DetailsOff => f.write_str("hide details"),
        }
    }
}
