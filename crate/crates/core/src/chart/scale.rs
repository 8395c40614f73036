use serde::{Deserialize, Serialize};

use super::dataset::{AttributeKind, Value};
use super::ChartError;

/// Maps attribute values to pixel coordinates along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Scale {
    Linear {
        domain: [f64; 2],
        range: [f64; 2],
    },
    Band {
        categories: Vec<String>,
        range: [f64; 2],
        #[serde(default)]
        padding: f64,
    },
}

impl Scale {
    pub fn linear(domain: [f64; 2], range: [f64; 2]) -> Self {
        Scale::Linear { domain, range }
    }

    pub fn band(categories: Vec<String>, range: [f64; 2], padding: f64) -> Self {
        Scale::Band {
            categories,
            range,
            padding,
        }
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            Scale::Linear { .. } => AttributeKind::Quantitative,
            Scale::Band { .. } => AttributeKind::Categorical,
        }
    }

    pub fn range(&self) -> [f64; 2] {
        match self {
            Scale::Linear { range, .. } | Scale::Band { range, .. } => *range,
        }
    }

    pub fn validate(&self, path: &str) -> Result<(), ChartError> {
        let range = self.range();
        if !range.iter().all(|v| v.is_finite()) {
            return Err(ChartError::invalid(
                format!("{path}.range"),
                "range bounds must be finite",
            ));
        }
        match self {
            Scale::Linear { domain, .. } => {
                if !domain.iter().all(|v| v.is_finite()) {
                    return Err(ChartError::invalid(
                        format!("{path}.domain"),
                        "domain bounds must be finite",
                    ));
                }
                if domain[0] == domain[1] {
                    return Err(ChartError::invalid(
                        format!("{path}.domain"),
                        "domain must not be empty",
                    ));
                }
            }
            Scale::Band {
                categories,
                padding,
                ..
            } => {
                if categories.is_empty() {
                    return Err(ChartError::invalid(
                        format!("{path}.categories"),
                        "band scale needs at least one category",
                    ));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = categories.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(ChartError::invalid(
                        format!("{path}.categories"),
                        format!("duplicate category '{dup}'"),
                    ));
                }
                if !(0.0..1.0).contains(padding) {
                    return Err(ChartError::invalid(
                        format!("{path}.padding"),
                        "padding must lie in [0, 1)",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, value: &Value) -> Result<f64, ChartError> {
        match (self, value) {
            (Scale::Linear { .. }, Value::Number(v)) => self.apply_number(*v),
            (Scale::Band { .. }, Value::Category(c)) => self.apply_category(c),
            (_, v) => Err(ChartError::ValueKindMismatch {
                expected: self.kind(),
                found: v.kind(),
            }),
        }
    }

    pub fn apply_number(&self, v: f64) -> Result<f64, ChartError> {
        let Scale::Linear { domain, range } = self else {
            return Err(ChartError::ValueKindMismatch {
                expected: AttributeKind::Categorical,
                found: AttributeKind::Quantitative,
            });
        };
        if !v.is_finite() {
            return Err(ChartError::NonFinite);
        }
        let t = (v - domain[0]) / (domain[1] - domain[0]);
        Ok(range[0] + t * (range[1] - range[0]))
    }

    pub fn apply_category(&self, category: &str) -> Result<f64, ChartError> {
        let Scale::Band {
            categories, range, ..
        } = self
        else {
            return Err(ChartError::ValueKindMismatch {
                expected: AttributeKind::Quantitative,
                found: AttributeKind::Categorical,
            });
        };
        let slot = categories
            .iter()
            .position(|c| c == category)
            .ok_or_else(|| ChartError::CategoryNotFound(category.to_string()))?;
        let step = (range[1] - range[0]) / categories.len() as f64;
        Ok(range[0] + step * (slot as f64 + 0.5))
    }

    /// Usable width of one band after padding; `None` for linear scales.
    pub fn band_width(&self) -> Option<f64> {
        match self {
            Scale::Band {
                categories,
                range,
                padding,
            } => Some(((range[1] - range[0]) / categories.len() as f64).abs() * (1.0 - padding)),
            Scale::Linear { .. } => None,
        }
    }

    /// Evenly spaced ticks across a linear domain; band scales tick every category.
    pub fn ticks(&self, count: usize) -> Vec<(f64, String)> {
        match self {
            Scale::Linear { domain, range } => {
                let n = count.max(2);
                (0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        let v = domain[0] + t * (domain[1] - domain[0]);
                        let px = range[0] + t * (range[1] - range[0]);
                        (px, compact_number(v))
                    })
                    .collect()
            }
            Scale::Band { categories, .. } => categories
                .iter()
                .map(|c| (self.apply_category(c).unwrap_or(0.0), c.clone()))
                .collect(),
        }
    }
}

fn compact_number(v: f64) -> String {
    let a = v.abs();
    if a >= 1e6 {
        format!("{}M", super::dataset::format_number(v / 1e6))
    } else if a >= 1e3 {
        format!("{}k", super::dataset::format_number(v / 1e3))
    } else {
        super::dataset::format_number(v)
    }
}
