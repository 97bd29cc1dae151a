//! Geometric mean normalized citation score (gMNCS).
//!
//! Citation counts are normalized against the offset geometric mean of their
//! `(category, year)` cell, and sets of articles are summarized by the offset
//! geometric mean of those normalized scores, with log-scale normal-theory
//! confidence intervals. The pipeline is:
//!
//! 1. [`ingest`]: JSONL/CSV records to [`ArticleRecord`]s.
//! 2. [`baselines`]: per-cell arithmetic and geometric means, per-article scores.
//! 3. [`analysis`]: collaboration profiles and grouped gMNCS rows.
//! 4. [`plot`]: jittered plot data for the grouped rows.
//!
//! [`synth`] generates discretised lognormal samples and checks the
//! estimator's precision and interval coverage by simulation.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool uses.
//!
//! ```
//! use gmncs::stats::geometric_mean_ci;
//!
//! let ci = geometric_mean_ci(&[0.0, 1.0, 3.0, 7.0], 0.95).unwrap();
//! assert!((ci.center - (2.0 * 2f64.sqrt() - 1.0)).abs() < 1e-12);
//! assert!(ci.high.unwrap() - ci.center > ci.center - ci.low.unwrap());
//! ```

pub mod analysis;
pub mod baselines;
pub mod cli;
pub mod ingest;
pub mod plot;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use analysis::{
    analyze_dataset, classify, group_gmncs, AnalysisError, AuthorBucket, CollaborationProfile,
    CountryStatus, MultiCategory,
};
pub use baselines::{compute_baselines, normalize, BaselineError, FieldYearKey};
pub use ingest::{
    parse_dataset, validate_dataset, ArticleRecord, DatasetReport, Format, RecordError,
};
pub use scalar::Real;
pub use stats::{geometric_mean, geometric_mean_ci, inverse_normal_cdf, log_summary, StatsError};
pub use synth::{coverage_experiment, precision_experiment, sample, SynthError};

pub type LogSummary = stats::LogSummary<f64>;
pub type IntervalEstimate = stats::IntervalEstimate<f64>;
pub type Baseline = baselines::Baseline<f64>;
pub type BaselineTable = baselines::BaselineTable<f64>;
pub type NormalizedObservation = baselines::NormalizedObservation<f64>;
pub type GroupingSpec = analysis::GroupingSpec<f64>;
pub type GroupSummary = analysis::GroupSummary<f64>;
pub type AnalysisTable = analysis::AnalysisTable<f64>;
pub type PlotPoint = plot::PlotPoint<f64>;
pub type LognormalSpec = synth::LognormalSpec<f64>;
pub type PrecisionReport = synth::PrecisionReport<f64>;
pub type CoverageReport = synth::CoverageReport<f64>;
