//! Per-team activity metrics, course baselines, distributions and timelines.

mod histogram;
mod stats;
mod timeline;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{event_metric, window_contains, ActivityEvent, Course, MetricKind, TimeWindow};
use crate::scalar::Scalar;

pub use histogram::{histogram, Histogram, DEFAULT_BIN_COUNT};
pub use stats::{course_stats, median_of, CourseStats, KindStats};
pub use timeline::{timeline, Bucket, BucketCount, MemberSeries, MilestoneOverlay, OutcomeCounts, Timeline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no teams to summarize")]
    NoTeams,
    #[error("bin count must be at least 1, got {0}")]
    BadBinCount(usize),
    #[error("source selection must enable at least one metric")]
    EmptySelection,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Non-empty set of enabled metric kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeSet<MetricKind>", into = "BTreeSet<MetricKind>")]
pub struct SourceSelection {
    enabled: BTreeSet<MetricKind>,
}

impl SourceSelection {
    pub fn new(kinds: impl IntoIterator<Item = MetricKind>) -> Result<Self, MetricsError> {
        let enabled: BTreeSet<_> = kinds.into_iter().collect();
        if enabled.is_empty() {
            return Err(MetricsError::EmptySelection);
        }
        Ok(Self { enabled })
    }

    pub fn all() -> Self {
        Self {
            enabled: MetricKind::ALL.into_iter().collect(),
        }
    }

    pub fn contains(&self, kind: MetricKind) -> bool {
        self.enabled.contains(&kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = MetricKind> + '_ {
        self.enabled.iter().copied()
    }
}

impl TryFrom<BTreeSet<MetricKind>> for SourceSelection {
    type Error = MetricsError;

    fn try_from(set: BTreeSet<MetricKind>) -> Result<Self, Self::Error> {
        SourceSelection::new(set)
    }
}

impl From<SourceSelection> for BTreeSet<MetricKind> {
    fn from(sel: SourceSelection) -> Self {
        sel.enabled
    }
}

/// Comma-separated metric names, e.g. `posts,commits`.
impl FromStr for SourceSelection {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kinds = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<MetricKind>().map_err(|_| MetricsError::UnknownMetric(p.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        SourceSelection::new(kinds)
    }
}

/// Team-level statistic of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TeamStatistic {
    Total,
    Diff,
    NormDiff,
    MemberMax,
    MemberMin,
}

impl TeamStatistic {
    pub const ALL: [TeamStatistic; 5] = [
        TeamStatistic::Total,
        TeamStatistic::Diff,
        TeamStatistic::NormDiff,
        TeamStatistic::MemberMax,
        TeamStatistic::MemberMin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TeamStatistic::Total => "total",
            TeamStatistic::Diff => "diff",
            TeamStatistic::NormDiff => "normdiff",
            TeamStatistic::MemberMax => "max",
            TeamStatistic::MemberMin => "min",
        }
    }
}

impl fmt::Display for TeamStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TeamStatistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TeamStatistic::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown statistic {s:?}"))
    }
}

fn zero_counts() -> BTreeMap<MetricKind, u64> {
    MetricKind::ALL.into_iter().map(|k| (k, 0)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentMetrics {
    pub canonical_id: String,
    /// All five kinds are present; disabled or inactive kinds are 0.
    pub counts: BTreeMap<MetricKind, u64>,
}

impl StudentMetrics {
    pub fn zero(canonical_id: impl Into<String>) -> Self {
        Self {
            canonical_id: canonical_id.into(),
            counts: zero_counts(),
        }
    }

    pub fn count(&self, kind: MetricKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamMetrics<S> {
    pub team_id: String,
    pub per_member: Vec<StudentMetrics>,
    pub total: BTreeMap<MetricKind, u64>,
    /// Max minus min over members.
    pub diff: BTreeMap<MetricKind, u64>,
    /// `diff / total`, or 0 when the total is 0.
    pub normdiff: BTreeMap<MetricKind, S>,
}

/// `(max - min) / sum` of member counts, 0 for an all-zero or empty team.
pub fn normdiff<S: Scalar>(counts: &[u64]) -> S {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return S::zero();
    }
    let max = counts.iter().max().copied().unwrap_or(0);
    let min = counts.iter().min().copied().unwrap_or(0);
    S::from_ratio(to_i64(max - min), to_i64(total))
}

fn to_i64(n: u64) -> i64 {
    i64::try_from(n).expect("count exceeds i64 range")
}

impl<S: Scalar> TeamMetrics<S> {
    /// Derives totals and balance statistics from member counts.
    pub fn from_members(team_id: impl Into<String>, per_member: Vec<StudentMetrics>) -> Self {
        let mut total = BTreeMap::new();
        let mut diff = BTreeMap::new();
        let mut norm = BTreeMap::new();
        for kind in MetricKind::ALL {
            let counts: Vec<u64> = per_member.iter().map(|m| m.count(kind)).collect();
            let max = counts.iter().max().copied().unwrap_or(0);
            let min = counts.iter().min().copied().unwrap_or(0);
            total.insert(kind, counts.iter().sum());
            diff.insert(kind, max - min);
            norm.insert(kind, normdiff::<S>(&counts));
        }
        Self {
            team_id: team_id.into(),
            per_member,
            total,
            diff,
            normdiff: norm,
        }
    }

    pub fn total(&self, kind: MetricKind) -> u64 {
        self.total.get(&kind).copied().unwrap_or(0)
    }

    pub fn diff(&self, kind: MetricKind) -> u64 {
        self.diff.get(&kind).copied().unwrap_or(0)
    }

    pub fn normdiff(&self, kind: MetricKind) -> S {
        self.normdiff.get(&kind).cloned().unwrap_or_else(S::zero)
    }

    pub fn member_max(&self, kind: MetricKind) -> u64 {
        self.per_member.iter().map(|m| m.count(kind)).max().unwrap_or(0)
    }

    pub fn member_min(&self, kind: MetricKind) -> u64 {
        self.per_member.iter().map(|m| m.count(kind)).min().unwrap_or(0)
    }

    pub fn statistic(&self, kind: MetricKind, stat: TeamStatistic) -> S {
        match stat {
            TeamStatistic::Total => S::from_count(self.total(kind)),
            TeamStatistic::Diff => S::from_count(self.diff(kind)),
            TeamStatistic::NormDiff => self.normdiff(kind),
            TeamStatistic::MemberMax => S::from_count(self.member_max(kind)),
            TeamStatistic::MemberMin => S::from_count(self.member_min(kind)),
        }
    }

    pub fn to_f64(&self) -> TeamMetrics<f64> {
        TeamMetrics {
            team_id: self.team_id.clone(),
            per_member: self.per_member.clone(),
            total: self.total.clone(),
            diff: self.diff.clone(),
            normdiff: self.normdiff.iter().map(|(k, v)| (*k, v.as_f64())).collect(),
        }
    }
}

/// Counts in-window events of the enabled kinds per member and derives team
/// statistics. Every team of the course appears, ordered by `team_id`.
/// Events of students outside any team are ignored.
pub fn aggregate<S: Scalar>(
    events: &[ActivityEvent],
    course: &Course,
    window: &TimeWindow,
    sources: &SourceSelection,
) -> Vec<TeamMetrics<S>> {
    let mut teams: Vec<_> = course.teams.iter().collect();
    teams.sort_by(|a, b| a.team_id.cmp(&b.team_id));

    let mut members: Vec<Vec<StudentMetrics>> = teams
        .iter()
        .map(|t| t.member_ids.iter().map(StudentMetrics::zero).collect())
        .collect();
    let slot: HashMap<&str, (usize, usize)> = teams
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| {
            t.member_ids
                .iter()
                .enumerate()
                .map(move |(mi, id)| (id.as_str(), (ti, mi)))
        })
        .collect();

    for e in events {
        if !window_contains(window, e.at) {
            continue;
        }
        let Some(&(ti, mi)) = slot.get(e.canonical_id.as_str()) else {
            continue;
        };
        let counts = &mut members[ti][mi].counts;
        for (kind, n) in event_metric(e) {
            if sources.contains(kind) {
                *counts.entry(kind).or_default() += n;
            }
        }
    }

    teams
        .iter()
        .zip(members)
        .map(|(t, per_member)| TeamMetrics::from_members(t.team_id.clone(), per_member))
        .collect()
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::model::{EventDetail, TicketOutcome};
    use crate::Exact;
    use proptest::prelude::*;

    fn whole(course: &Course) -> TimeWindow {
        course.term_window()
    }

    #[test]
    fn no_events_all_zero() {
        let c = course(&[2, 3]);
        let teams = aggregate::<Exact>(&[], &c, &whole(&c), &SourceSelection::all());
        assert_eq!(teams.len(), 2);
        for t in &teams {
            for k in MetricKind::ALL {
                assert_eq!(t.total(k), 0);
                assert_eq!(t.diff(k), 0);
                assert_eq!(t.normdiff(k), Exact::from_integer(0));
            }
        }
    }

    #[test]
    fn dominant_member_normdiff_one() {
        let c = course(&[2]);
        let events: Vec<_> = (0..5).map(|d| commit("s0_0", d, 10)).collect();
        let t = &aggregate::<Exact>(&events, &c, &whole(&c), &SourceSelection::all())[0];
        assert_eq!(t.total(MetricKind::Commits), 5);
        assert_eq!(t.diff(MetricKind::Commits), 5);
        assert_eq!(t.normdiff(MetricKind::Commits), Exact::from_integer(1));
        assert_eq!(t.total(MetricKind::Additions), 50);
    }

    #[test]
    fn eighteen_office_hour_visits() {
        let c = course(&[3]);
        let events: Vec<_> = (0..18)
            .map(|i| {
                ev(
                    &format!("s0_{}", i % 3),
                    i,
                    EventDetail::Ticket { outcome: TicketOutcome::Resolved },
                )
            })
            .collect();
        let t = &aggregate::<Exact>(&events, &c, &whole(&c), &SourceSelection::all())[0];
        assert_eq!(t.total(MetricKind::Tickets), 18);
        assert_eq!(t.diff(MetricKind::Tickets), 0);
    }

    #[test]
    fn window_and_sources_respected() {
        let c = course(&[2]);
        let events = vec![
            commit("s0_0", 0, 5),
            commit("s0_0", 10, 5),
            ev("s0_1", 1, EventDetail::ForumInitial),
            ev("nobody", 1, EventDetail::ForumInitial),
        ];
        let w = TimeWindow::new(at(0), at(7)).unwrap();
        let sel = SourceSelection::new([MetricKind::Commits]).unwrap();
        let t = &aggregate::<f64>(&events, &c, &w, &sel)[0];
        assert_eq!(t.total(MetricKind::Commits), 1);
        assert_eq!(t.total(MetricKind::Additions), 0);
        assert_eq!(t.total(MetricKind::Posts), 0);
    }

    #[test]
    fn output_sorted_by_team_id() {
        let mut c = course(&[1, 1, 1]);
        c.teams.reverse();
        let ids: Vec<_> = aggregate::<f64>(&[], &c, &whole(&c), &SourceSelection::all())
            .into_iter()
            .map(|t| t.team_id)
            .collect();
        assert_eq!(ids, ["t00", "t01", "t02"]);
    }

    #[test]
    fn selection_parsing() {
        let sel: SourceSelection = "posts, Commits".parse().unwrap();
        assert!(sel.contains(MetricKind::Posts) && sel.contains(MetricKind::Commits));
        assert!(!sel.contains(MetricKind::Tickets));
        assert_eq!("".parse::<SourceSelection>(), Err(MetricsError::EmptySelection));
        assert!(matches!("grades".parse::<SourceSelection>(), Err(MetricsError::UnknownMetric(_))));
    }

    proptest! {
        #[test]
        fn normdiff_bounded_and_scale_invariant(counts in prop::collection::vec(0u64..10_000, 1..8), k in 1u64..50) {
            let n: Exact = normdiff(&counts);
            prop_assert!(n >= Exact::from_integer(0) && n <= Exact::from_integer(1));
            let all_equal = counts.iter().all(|c| *c == counts[0]);
            let total: u64 = counts.iter().sum();
            prop_assert_eq!(n == Exact::from_integer(0), all_equal || total == 0);
            let scaled: Vec<u64> = counts.iter().map(|c| c * k).collect();
            prop_assert_eq!(normdiff::<Exact>(&scaled), n);
        }

        #[test]
        fn disabling_a_kind_zeroes_only_that_kind(
            raw in prop::collection::vec((0usize..4, 0i64..60, 0u8..4, 0u64..300), 0..200),
            drop_idx in 0usize..5,
        ) {
            let c = course(&[2, 2]);
            let events: Vec<_> = raw.iter().map(|&(s, day, kind, adds)| {
                let student = format!("s{}_{}", s / 2, s % 2);
                let detail = match kind {
                    0 => EventDetail::ForumInitial,
                    1 => EventDetail::ForumReply,
                    2 => EventDetail::Ticket { outcome: TicketOutcome::Unserved },
                    _ => EventDetail::Commit { additions: adds },
                };
                ev(&student, day, detail)
            }).collect();
            let dropped = MetricKind::ALL[drop_idx];
            let full = aggregate::<Exact>(&events, &c, &whole(&c), &SourceSelection::all());
            let partial_sel = SourceSelection::new(MetricKind::ALL.into_iter().filter(|k| *k != dropped)).unwrap();
            let partial = aggregate::<Exact>(&events, &c, &whole(&c), &partial_sel);
            for (f, p) in full.iter().zip(&partial) {
                for k in MetricKind::ALL {
                    if k == dropped {
                        prop_assert_eq!(p.total(k), 0);
                    } else {
                        prop_assert_eq!(p.total(k), f.total(k));
                        prop_assert_eq!(p.normdiff(k), f.normdiff(k));
                    }
                }
            }
        }

        #[test]
        fn adjacent_windows_add_up(
            raw in prop::collection::vec((0usize..6, 0i64..90, 0u64..300), 0..200),
            split in 1i64..89,
        ) {
            let c = course(&[3, 3]);
            let events: Vec<_> = raw.iter().map(|&(s, day, adds)| commit(&format!("s{}_{}", s / 3, s % 3), day, adds)).collect();
            let w = TimeWindow::new(at(0), at(90)).unwrap();
            let (a, b) = w.split_at(at(split)).unwrap();
            let sel = SourceSelection::all();
            let full = aggregate::<f64>(&events, &c, &w, &sel);
            let left = aggregate::<f64>(&events, &c, &a, &sel);
            let right = aggregate::<f64>(&events, &c, &b, &sel);
            for ((f, l), r) in full.iter().zip(&left).zip(&right) {
                for k in MetricKind::ALL {
                    prop_assert_eq!(f.total(k), l.total(k) + r.total(k));
                }
            }
        }
    }
}
