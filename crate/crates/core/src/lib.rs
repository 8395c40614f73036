//! Overlay engine that makes a static chart interactive: it tracks the chart
//! in camera frames, keeps per-session interaction state, parses filter and
//! highlight commands, and composites overlay content onto the chart.

pub mod bundle;
pub mod chart;
pub mod color;
pub mod command;
pub mod geometry;
pub mod interaction;
pub mod overlay;
pub mod raster;
pub mod render;
pub mod scenario;
pub mod service;
pub mod session;
pub mod synth;
pub mod tracker;

pub use chart::{ChartSpec, Dataset, MarkGeometry, RecordId};
pub use color::Rgb;
pub use geometry::{Point, Rect};
