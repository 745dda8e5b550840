use super::ast::{Baseline, BaselineOf, Center, Comparator, Decimal, FilterExpr, Operand};
use super::FilterError;
use crate::metrics::{CourseStats, TeamStatistic};
use crate::model::MetricKind;
use crate::scalar::Scalar;

/// 0.25
pub const DEFAULT_BAND: Decimal = Decimal::raw(25, 2);

/// Below/within/above the median band of a metric's team totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredefinedFilters {
    pub below: FilterExpr,
    pub within: FilterExpr,
    pub above: FilterExpr,
}

impl PredefinedFilters {
    pub fn named(&self) -> [(&'static str, &FilterExpr); 3] {
        [
            ("below_median_range", &self.below),
            ("within_median_range", &self.within),
            ("above_median_range", &self.above),
        ]
    }
}

fn check_band(band: Decimal) -> Result<(Decimal, Decimal), FilterError> {
    let (n, d) = band.as_ratio();
    if n <= 0 || n >= d {
        return Err(FilterError::BadBand(band.to_string()));
    }
    let lower = Decimal::new(d - n, band_scale(d)).expect("same scale as band");
    let upper = Decimal::new(d + n, band_scale(d)).expect("same scale as band");
    Ok((lower, upper))
}

fn band_scale(denom: i64) -> u32 {
    denom.ilog10()
}

/// Filters for teams whose `metric` total falls below, within or above
/// `median * (1 ± band)`. Baselines are referenced symbolically, so the
/// filters follow whatever window the course stats were computed over.
/// The three filters partition every team set.
pub fn predefined_filters(band: Decimal, metric: MetricKind) -> Result<PredefinedFilters, FilterError> {
    let (lower, upper) = check_band(band)?;
    let bound = |scale: Decimal| {
        Operand::Baseline(Baseline {
            center: Center::Median,
            of: BaselineOf::Totals,
            metric,
            scale,
        })
    };
    let atom = |cmp, scale| FilterExpr::atom(metric, TeamStatistic::Total, cmp, bound(scale));
    Ok(PredefinedFilters {
        below: atom(Comparator::Lt, lower),
        within: FilterExpr::And(vec![atom(Comparator::Ge, lower), atom(Comparator::Le, upper)]),
        above: atom(Comparator::Gt, upper),
    })
}

/// Concrete `(lower, upper)` bounds of the median band for given stats.
pub fn median_band_bounds<S: Scalar>(
    stats: &CourseStats<S>,
    metric: MetricKind,
    band: Decimal,
) -> Result<(S, S), FilterError> {
    let (lower, upper) = check_band(band)?;
    let median = stats.kind(metric).total_median.clone();
    Ok((median.clone() * lower.to_scalar(), median * upper.to_scalar()))
}
