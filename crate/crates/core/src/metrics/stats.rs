use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricsError, TeamMetrics};
use crate::model::MetricKind;
use crate::scalar::Scalar;

/// Mean and median of team totals and team diffs for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats<S> {
    pub total_mean: S,
    pub total_median: S,
    pub diff_mean: S,
    pub diff_median: S,
}

/// Course-wide baselines over all teams, per metric kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseStats<S> {
    pub team_count: usize,
    pub per_kind: BTreeMap<MetricKind, KindStats<S>>,
}

impl<S: Scalar> CourseStats<S> {
    pub fn kind(&self, kind: MetricKind) -> &KindStats<S> {
        &self.per_kind[&kind]
    }

    pub fn to_f64(&self) -> CourseStats<f64> {
        CourseStats {
            team_count: self.team_count,
            per_kind: self
                .per_kind
                .iter()
                .map(|(k, s)| {
                    (
                        *k,
                        KindStats {
                            total_mean: s.total_mean.as_f64(),
                            total_median: s.total_median.as_f64(),
                            diff_mean: s.diff_mean.as_f64(),
                            diff_median: s.diff_median.as_f64(),
                        },
                    )
                })
                .collect(),
        }
    }
}

fn mean_of<S: Scalar>(values: &[u64]) -> S {
    let sum: u64 = values.iter().sum();
    S::from_count(sum) / S::from_count(values.len() as u64)
}

/// Median; an even count averages the two middle values.
pub fn median_of<S: Scalar>(values: &[u64]) -> S {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n % 2 == 1 {
        S::from_count(sorted[n / 2])
    } else {
        let two = S::one() + S::one();
        (S::from_count(sorted[n / 2 - 1]) + S::from_count(sorted[n / 2])) / two
    }
}

pub fn course_stats<S: Scalar>(teams: &[TeamMetrics<S>]) -> Result<CourseStats<S>, MetricsError> {
    if teams.is_empty() {
        return Err(MetricsError::NoTeams);
    }
    let per_kind = MetricKind::ALL
        .into_iter()
        .map(|kind| {
            let totals: Vec<u64> = teams.iter().map(|t| t.total(kind)).collect();
            let diffs: Vec<u64> = teams.iter().map(|t| t.diff(kind)).collect();
            let stats = KindStats {
                total_mean: mean_of(&totals),
                total_median: median_of(&totals),
                diff_mean: mean_of(&diffs),
                diff_median: median_of(&diffs),
            };
            (kind, stats)
        })
        .collect();
    Ok(CourseStats {
        team_count: teams.len(),
        per_kind,
    })
}
