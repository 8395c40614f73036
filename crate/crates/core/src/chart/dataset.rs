use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ChartError;

pub type RecordId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Quantitative,
    Categorical,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Quantitative => "quantitative",
            AttributeKind::Categorical => "categorical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Minimum credential level needed to see or query this attribute.
    #[serde(default)]
    pub clearance: u32,
}

impl AttributeSchema {
    pub fn new(name: impl Into<String>, kind: AttributeKind) -> Self {
        Self {
            name: name.into(),
            kind,
            unit: None,
            clearance: 0,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn with_clearance(mut self, clearance: u32) -> Self {
        self.clearance = clearance;
        self
    }

    /// Currency units recognized for implicit monetary attributes.
    pub fn is_monetary(&self) -> bool {
        matches!(
            self.unit.as_deref().map(str::to_ascii_uppercase).as_deref(),
            Some("USD" | "EUR" | "GBP" | "$" | "€" | "£")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Category(String),
}

impl Value {
    pub fn kind(&self) -> AttributeKind {
        match self {
            Value::Number(_) => AttributeKind::Quantitative,
            Value::Category(_) => AttributeKind::Categorical,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            Value::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            Value::Category(c) => Some(c),
            Value::Number(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => f.write_str(&format_number(*v)),
            Value::Category(c) => f.write_str(c),
        }
    }
}

/// Integers print without a fraction, everything else with up to two decimals.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: RecordId,
    /// One value per schema attribute, in schema order.
    pub values: Vec<Value>,
}

/// Schema-validated table. Record ids are dense from zero and equal to the
/// record's position.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Vec<AttributeSchema>, records: Vec<Record>) -> Result<Self, ChartError> {
        validate_schema(&schema)?;
        for (pos, rec) in records.iter().enumerate() {
            if rec.id as usize != pos {
                return Err(ChartError::Dataset {
                    row: pos,
                    message: format!("record id {} is not dense (expected {pos})", rec.id),
                });
            }
            if rec.values.len() != schema.len() {
                return Err(ChartError::Dataset {
                    row: pos,
                    message: format!(
                        "expected {} values, found {}",
                        schema.len(),
                        rec.values.len()
                    ),
                });
            }
            for (attr, value) in schema.iter().zip(&rec.values) {
                if value.kind() != attr.kind {
                    return Err(ChartError::Dataset {
                        row: pos,
                        message: format!("attribute '{}' must be {}", attr.name, attr.kind),
                    });
                }
                if let Value::Number(v) = value {
                    if !v.is_finite() {
                        return Err(ChartError::Dataset {
                            row: pos,
                            message: format!("attribute '{}' is not finite", attr.name),
                        });
                    }
                }
            }
        }
        Ok(Self { schema, records })
    }

    /// Builds a dataset from rows of values, assigning ids in row order.
    pub fn from_rows(
        schema: Vec<AttributeSchema>,
        rows: impl IntoIterator<Item = Vec<Value>>,
    ) -> Result<Self, ChartError> {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, values)| Record {
                id: i as RecordId,
                values,
            })
            .collect();
        Self::new(schema, records)
    }

    /// CSV with a header row; columns are matched to the schema by name.
    pub fn from_csv(schema: Vec<AttributeSchema>, bytes: &[u8]) -> Result<Self, ChartError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let headers = reader
            .headers()
            .map_err(|e| ChartError::Dataset {
                row: 0,
                message: e.to_string(),
            })?
            .clone();
        let mut columns = Vec::with_capacity(schema.len());
        for attr in &schema {
            let col =
                headers
                    .iter()
                    .position(|h| h == attr.name)
                    .ok_or_else(|| ChartError::Dataset {
                        row: 0,
                        message: format!("missing column '{}'", attr.name),
                    })?;
            columns.push(col);
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| ChartError::Dataset {
                row,
                message: e.to_string(),
            })?;
            let mut values = Vec::with_capacity(schema.len());
            for (attr, &col) in schema.iter().zip(&columns) {
                let cell = rec.get(col).unwrap_or("");
                values.push(
                    parse_cell(attr, cell)
                        .map_err(|message| ChartError::Dataset { row, message })?,
                );
            }
            rows.push(values);
        }
        Self::from_rows(schema, rows)
    }

    /// JSON array of flat objects keyed by attribute name.
    pub fn from_json(schema: Vec<AttributeSchema>, bytes: &[u8]) -> Result<Self, ChartError> {
        let items: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_slice(bytes)
            .map_err(|e| ChartError::Dataset {
                row: 0,
                message: e.to_string(),
            })?;
        let mut rows = Vec::with_capacity(items.len());
        for (i, obj) in items.iter().enumerate() {
            let mut values = Vec::with_capacity(schema.len());
            for attr in &schema {
                let v = obj.get(&attr.name).ok_or_else(|| ChartError::Dataset {
                    row: i,
                    message: format!("missing attribute '{}'", attr.name),
                })?;
                let value = match (attr.kind, v) {
                    (AttributeKind::Quantitative, serde_json::Value::Number(n)) => {
                        Value::Number(n.as_f64().unwrap_or(f64::NAN))
                    }
                    (AttributeKind::Categorical, serde_json::Value::String(s)) => {
                        Value::Category(s.clone())
                    }
                    _ => {
                        return Err(ChartError::Dataset {
                            row: i,
                            message: format!("attribute '{}' must be {}", attr.name, attr.kind),
                        })
                    }
                };
                values.push(value);
            }
            rows.push(values);
        }
        Self::from_rows(schema, rows)
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.records.iter().map(|r| r.id)
    }

    pub fn all_ids(&self) -> BTreeSet<RecordId> {
        self.ids().collect()
    }

    pub fn contains_id(&self, id: RecordId) -> bool {
        (id as usize) < self.records.len()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.schema.iter().find(|a| a.name == name)
    }

    pub fn record(&self, id: RecordId) -> Option<&Record> {
        self.records.get(id as usize)
    }

    pub fn value(&self, id: RecordId, attribute: &str) -> Option<&Value> {
        let idx = self.attribute_index(attribute)?;
        self.record(id).map(|r| &r.values[idx])
    }

    /// Distinct values of a categorical attribute in order of first appearance.
    pub fn categories(&self, attribute: &str) -> Vec<String> {
        let Some(idx) = self.attribute_index(attribute) else {
            return Vec::new();
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for rec in &self.records {
            if let Value::Category(c) = &rec.values[idx] {
                if seen.insert(c.as_str()) {
                    out.push(c.clone());
                }
            }
        }
        out
    }
}

pub(crate) fn validate_schema(schema: &[AttributeSchema]) -> Result<(), ChartError> {
    let mut names = HashSet::new();
    for (i, attr) in schema.iter().enumerate() {
        if attr.name.is_empty() {
            return Err(ChartError::invalid(
                format!("schema[{i}].name"),
                "empty attribute name",
            ));
        }
        if !names.insert(attr.name.as_str()) {
            return Err(ChartError::invalid(
                format!("schema[{i}].name"),
                format!("duplicate attribute '{}'", attr.name),
            ));
        }
    }
    Ok(())
}

fn parse_cell(attr: &AttributeSchema, cell: &str) -> Result<Value, String> {
    match attr.kind {
        AttributeKind::Categorical => Ok(Value::Category(cell.to_string())),
        AttributeKind::Quantitative => cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Number)
            .ok_or_else(|| format!("attribute '{}': '{cell}' is not a finite number", attr.name)),
    }
}
