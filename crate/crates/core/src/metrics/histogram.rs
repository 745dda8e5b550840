use serde::{Deserialize, Serialize};

use super::{MetricsError, TeamMetrics, TeamStatistic};
use crate::model::MetricKind;
use crate::scalar::Scalar;

pub const DEFAULT_BIN_COUNT: usize = 10;

/// Distribution of one team statistic across the course.
///
/// Bins are `[edges[i], edges[i + 1])` except the last, which is closed. When
/// every team has the same value there is a single bin with equal edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram<S> {
    pub metric: MetricKind,
    pub statistic: TeamStatistic,
    pub bin_edges: Vec<S>,
    pub counts: Vec<usize>,
}

impl<S: Scalar> Histogram<S> {
    pub fn to_f64(&self) -> Histogram<f64> {
        Histogram {
            metric: self.metric,
            statistic: self.statistic,
            bin_edges: self.bin_edges.iter().map(Scalar::as_f64).collect(),
            counts: self.counts.clone(),
        }
    }
}

/// Equal-width bins over the observed `[min, max]` of the statistic.
pub fn histogram<S: Scalar>(
    teams: &[TeamMetrics<S>],
    metric: MetricKind,
    statistic: TeamStatistic,
    bin_count: usize,
) -> Result<Histogram<S>, MetricsError> {
    if bin_count == 0 {
        return Err(MetricsError::BadBinCount(bin_count));
    }
    if teams.is_empty() {
        return Err(MetricsError::NoTeams);
    }
    let values: Vec<S> = teams.iter().map(|t| t.statistic(metric, statistic)).collect();
    let mut min = values[0].clone();
    let mut max = values[0].clone();
    for v in &values[1..] {
        if *v < min {
            min = v.clone();
        }
        if *v > max {
            max = v.clone();
        }
    }

    if min == max {
        return Ok(Histogram {
            metric,
            statistic,
            bin_edges: vec![min, max],
            counts: vec![values.len()],
        });
    }

    let width = (max.clone() - min.clone()) / S::from_count(bin_count as u64);
    let mut bin_edges: Vec<S> = (0..bin_count)
        .map(|i| min.clone() + width.clone() * S::from_count(i as u64))
        .collect();
    bin_edges.push(max);

    let mut counts = vec![0usize; bin_count];
    for v in &values {
        // last edge index whose lower bound is <= v, clamped into the closed last bin
        let idx = bin_edges[..bin_count]
            .iter()
            .rposition(|edge| edge <= v)
            .unwrap_or(0);
        counts[idx] += 1;
    }
    Ok(Histogram {
        metric,
        statistic,
        bin_edges,
        counts,
    })
}
