//! Teamwork analytics over forum posts, office-hours tickets and commit
//! histories.
//!
//! The pipeline is: [`ingest`] source exports into [`model::ActivityEvent`]s,
//! [`metrics::aggregate`] them per team over a time window, select teams with
//! [`filters`], and draft emails with [`emailer`]. [`persist`] stores courses
//! on disk and [`synthgen`] produces seeded demo classes.
//!
//! Derived statistics are generic over [`Scalar`]; the aliases below fix the
//! exact rational instantiation used for selection decisions, and the `F64`
//! variants are what gets rendered for display.

pub mod emailer;
pub mod filters;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod persist;
pub mod scalar;
pub mod synthgen;

pub use scalar::Scalar;

/// Exact rational scalar.
pub type Exact = num_rational::Ratio<i64>;

pub type TeamMetrics = metrics::TeamMetrics<Exact>;
pub type CourseStats = metrics::CourseStats<Exact>;
pub type Histogram = metrics::Histogram<Exact>;

pub type TeamMetricsF64 = metrics::TeamMetrics<f64>;
pub type CourseStatsF64 = metrics::CourseStats<f64>;
pub type HistogramF64 = metrics::Histogram<f64>;
