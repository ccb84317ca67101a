//! Distance concentration, intrinsic dimension and k-nearest-neighbour
//! quality under lp dissimilarities.

pub mod concentration;
pub mod dataset;
pub mod dimension;
pub mod error;
pub mod knn;
pub mod metrics;
pub mod spectral;
pub mod stats;

pub use concentration::{ConcentrationRecord, DistanceSummary, RcComparisonRow};
pub use dataset::{DataMatrix, DatasetManifest, Label, LabeledDataset, PreprocessMode};
pub use dimension::{DimensionConfig, DimensionReport};
pub use error::{Error, Result};
pub use knn::{KnnConfig, QualityRecord, DEFAULT_K};
pub use metrics::LpExponent;
pub use stats::{AlphaPolicy, Measure, TestOutcome};
