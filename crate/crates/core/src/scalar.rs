//! Numeric abstraction for derived statistics.
//!
//! Counts are always `u64`. Everything derived from them (normalized
//! differences, means, medians, histogram edges, filter thresholds) is computed
//! in a [`Scalar`], so the same code runs exactly over [`Ratio<i64>`] or
//! approximately over `f64`/`f32`.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, Signed};

/// Real-valued number type usable for metric statistics.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// `numer / denom`. `denom` must be non-zero.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_count(n: u64) -> Self;

    fn as_f64(&self) -> f64;

    /// Value multiplied by 100 and rounded half away from zero.
    fn to_hundredths(&self) -> i64;
}

impl Scalar for f64 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn to_hundredths(&self) -> i64 {
        (self * 100.0).round() as i64
    }
}

impl Scalar for f32 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn to_hundredths(&self) -> i64 {
        (f64::from(*self) * 100.0).round() as i64
    }
}

impl Scalar for Ratio<i64> {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(numer, denom)
    }

    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64 range"))
    }

    fn as_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn to_hundredths(&self) -> i64 {
        (self * Ratio::from_integer(100)).round().to_integer()
    }
}

/// Renders a scalar the way drafts and tables show numbers: integers exactly,
/// everything else with at most two decimals and no trailing zeros.
pub fn format_scalar<S: Scalar>(value: &S) -> String {
    let hundredths = value.to_hundredths();
    let sign = if hundredths < 0 { "-" } else { "" };
    let abs = hundredths.unsigned_abs();
    let (whole, frac) = (abs / 100, abs % 100);
    match frac {
        0 => format!("{sign}{whole}"),
        f if f % 10 == 0 => format!("{sign}{whole}.{}", f / 10),
        f => format!("{sign}{whole}.{f:02}"),
    }
}
