//! The static chart: dataset, scales, declarative spec, mark layout,
//! hit-testing and linked-chart derivation. Everything here is immutable and
//! expressed in chart-image pixel coordinates.

mod dataset;
mod layout;
mod linked;
mod scale;
mod spec;

pub use dataset::{
    format_number, AttributeKind, AttributeSchema, Dataset, Record, RecordId, Value,
};
pub use layout::{hit_test, layout_marks, MarkExtent, MarkGeometry};
pub use linked::{
    aggregate_selection, derive_linked_chart, linked_plot_area, LinkedBar, LinkedChart,
};
pub use scale::Scale;
pub use spec::{
    parse_chart_spec, Aggregate, ChartKind, ChartSpec, DatasetFormat, DatasetSource, Encoding,
    LinkedViewConfig, MarkStyle, OverlayStyle, CHART_FORMAT,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("malformed chart spec at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("unknown chart kind: {0}")]
    UnknownKind(String),
    #[error("scale kind mismatch at {path}")]
    ScaleKindMismatch { path: String },
    #[error("invalid chart spec at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("dataset row {row}: {message}")]
    Dataset { row: usize, message: String },
    #[error("category '{0}' not found in scale")]
    CategoryNotFound(String),
    #[error("value is not finite")]
    NonFinite,
    #[error("scale expects a {expected} value, found {found}")]
    ValueKindMismatch {
        expected: AttributeKind,
        found: AttributeKind,
    },
    #[error("attribute '{attribute}' must be {expected}")]
    AttributeKindMismatch {
        attribute: String,
        expected: AttributeKind,
    },
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("record {record_id}: {source}")]
    Record {
        record_id: RecordId,
        #[source]
        source: Box<ChartError>,
    },
}

impl ChartError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ChartError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}
