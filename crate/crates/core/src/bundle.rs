//! Chart bundles: the deployable unit of spec, dataset, baseline image and
//! reference features, loaded from one directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;

use crate::chart::{
    layout_marks, parse_chart_spec, ChartError, ChartSpec, Dataset, DatasetFormat, MarkGeometry,
};
use crate::render::render_chart_rgb;
use crate::tracker::{GrayImage, TrackError, TrackTarget, TrackerConfig};

pub const SPEC_SUFFIX: &str = ".chart.json";
pub const BASELINE_SUFFIX: &str = ".baseline.png";

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Chart { path: PathBuf, source: ChartError },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{0}: no *.chart.json file")]
    NoSpec(PathBuf),
    #[error("{0}: more than one *.chart.json file")]
    ManySpecs(PathBuf),
    #[error("{path}: chart has no dataset source")]
    NoDataset { path: PathBuf },
    #[error("{path}: baseline is {found:?}, chart declares {expected:?}")]
    BaselineSize {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("reference features: {0}")]
    Features(#[from] TrackError),
    #[error("duplicate chart id '{0}'")]
    DuplicateId(String),
}

#[derive(Debug, Clone)]
pub struct ChartBundle {
    pub dir: PathBuf,
    pub spec: ChartSpec,
    pub dataset: Dataset,
    pub marks: Vec<MarkGeometry>,
    pub baseline: RgbImage,
    pub target: TrackTarget,
}

impl ChartBundle {
    pub fn id(&self) -> &str {
        &self.spec.id
    }

    /// Builds a bundle from parts, rendering the baseline and extracting
    /// reference features.
    pub fn from_parts(
        spec: ChartSpec,
        dataset: Dataset,
        dir: PathBuf,
    ) -> Result<Self, BundleError> {
        let chart_err = |source| BundleError::Chart {
            path: dir.clone(),
            source,
        };
        let baseline = render_chart_rgb(&spec, &dataset).map_err(chart_err)?;
        Self::assemble(spec, dataset, baseline, dir)
    }

    fn assemble(
        spec: ChartSpec,
        dataset: Dataset,
        baseline: RgbImage,
        dir: PathBuf,
    ) -> Result<Self, BundleError> {
        let marks = layout_marks(&spec, &dataset).map_err(|source| BundleError::Chart {
            path: dir.clone(),
            source,
        })?;
        let gray = GrayImage::from_rgb(&baseline)?;
        let target = TrackTarget::new(gray, TrackerConfig::default().max_features)?;
        Ok(Self {
            dir,
            spec,
            dataset,
            marks,
            baseline,
            target,
        })
    }
}

fn read(path: &Path) -> Result<Vec<u8>, BundleError> {
    std::fs::read(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn spec_file(dir: &Path) -> Result<PathBuf, BundleError> {
    let entries = std::fs::read_dir(dir).map_err(|source| BundleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut specs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(SPEC_SUFFIX))
        })
        .collect();
    specs.sort();
    match specs.len() {
        0 => Err(BundleError::NoSpec(dir.to_path_buf())),
        1 => Ok(specs.remove(0)),
        _ => Err(BundleError::ManySpecs(dir.to_path_buf())),
    }
}

/// Loads a bundle from a directory holding one `*.chart.json`, the dataset
/// it names, and optionally `<id>.baseline.png`. Without a PNG the baseline
/// is rendered.
pub fn load_bundle(dir: &Path) -> Result<ChartBundle, BundleError> {
    let spec_path = spec_file(dir)?;
    let spec = parse_chart_spec(&read(&spec_path)?).map_err(|source| BundleError::Chart {
        path: spec_path.clone(),
        source,
    })?;
    let source = spec.dataset.clone().ok_or_else(|| BundleError::NoDataset {
        path: spec_path.clone(),
    })?;
    let data_path = dir.join(&source.path);
    let bytes = read(&data_path)?;
    let dataset = match source.format {
        DatasetFormat::Csv => Dataset::from_csv(spec.schema.clone(), &bytes),
        DatasetFormat::Json => Dataset::from_json(spec.schema.clone(), &bytes),
    }
    .map_err(|source| BundleError::Chart {
        path: data_path.clone(),
        source,
    })?;
    let png = dir.join(format!("{}{BASELINE_SUFFIX}", spec.id));
    if !png.exists() {
        return ChartBundle::from_parts(spec, dataset, dir.to_path_buf());
    }
    let baseline = image::open(&png)
        .map_err(|source| BundleError::Image {
            path: png.clone(),
            source,
        })?
        .to_rgb8();
    let expected = (spec.width(), spec.height());
    if baseline.dimensions() != expected {
        return Err(BundleError::BaselineSize {
            path: png,
            expected,
            found: baseline.dimensions(),
        });
    }
    ChartBundle::assemble(spec, dataset, baseline, dir.to_path_buf())
}

/// Every bundle in the immediate subdirectories of `root`, keyed by chart id.
pub fn load_bundles(root: &Path) -> Result<BTreeMap<String, Arc<ChartBundle>>, BundleError> {
    let entries = std::fs::read_dir(root).map_err(|source| BundleError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut out = BTreeMap::new();
    for d in dirs {
        if spec_file(&d).is_err() {
            continue;
        }
        let b = load_bundle(&d)?;
        if out.contains_key(b.id()) {
            return Err(BundleError::DuplicateId(b.id().to_string()));
        }
        out.insert(b.id().to_string(), Arc::new(b));
    }
    Ok(out)
}

/// The repository's bundled charts, for tests and benchmarks.
pub fn repo_bundles_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../bundles")
}
