use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::SourceSelection;
use crate::model::{
    day_start, event_metric, window_contains, ActivityEvent, Course, MetricKind, Team, TicketOutcome,
    TimeWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Day,
    /// Monday-based UTC weeks.
    Week,
}

impl Bucket {
    fn days(self) -> i64 {
        match self {
            Bucket::Day => 1,
            Bucket::Week => 7,
        }
    }

    fn floor(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => date - Duration::days(i64::from(date.weekday().num_days_from_monday())),
        }
    }
}

impl std::str::FromStr for Bucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "day" => Ok(Bucket::Day),
            "week" => Ok(Bucket::Week),
            other => Err(format!("unknown bucket {other:?} (expected day or week)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCount {
    pub start: NaiveDate,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSeries {
    pub canonical_id: String,
    pub series: BTreeMap<MetricKind, Vec<BucketCount>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilestoneOverlay {
    pub name: String,
    pub date: NaiveDate,
}

/// Tickets per outcome for one member within the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub canonical_id: String,
    pub counts: BTreeMap<TicketOutcome, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub team_id: String,
    pub bucket: Bucket,
    pub members: Vec<MemberSeries>,
    pub overlays: Vec<MilestoneOverlay>,
    pub ticket_outcomes: Vec<OutcomeCounts>,
}

impl Timeline {
    pub fn bucket_starts(&self) -> Vec<NaiveDate> {
        self.members
            .first()
            .and_then(|m| m.series.values().next())
            .map(|s| s.iter().map(|b| b.start).collect())
            .unwrap_or_default()
    }
}

fn bucket_starts(window: &TimeWindow, bucket: Bucket) -> Vec<NaiveDate> {
    let first = bucket.floor(window.start().date_naive());
    // window end is exclusive; the last covered instant decides the last bucket
    let last_day = (window.end() - Duration::nanoseconds(1)).date_naive();
    let last = bucket.floor(last_day);
    let n = (last - first).num_days() / bucket.days() + 1;
    (0..n).map(|i| first + Duration::days(i * bucket.days())).collect()
}

/// Per-member activity series for one team, plus milestone overlays and
/// ticket outcomes inside the window.
pub fn timeline(
    events: &[ActivityEvent],
    course: &Course,
    team: &Team,
    window: &TimeWindow,
    sources: &SourceSelection,
    bucket: Bucket,
) -> Timeline {
    let starts = bucket_starts(window, bucket);
    let first = starts[0];
    let member_index: BTreeMap<&str, usize> = team
        .member_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut grid: Vec<BTreeMap<MetricKind, Vec<u64>>> = team
        .member_ids
        .iter()
        .map(|_| sources.kinds().map(|k| (k, vec![0u64; starts.len()])).collect())
        .collect();
    let mut outcomes: Vec<BTreeMap<TicketOutcome, u64>> = team
        .member_ids
        .iter()
        .map(|_| TicketOutcome::ALL.into_iter().map(|o| (o, 0)).collect())
        .collect();

    for e in events {
        if !window_contains(window, e.at) {
            continue;
        }
        let Some(&mi) = member_index.get(e.canonical_id.as_str()) else {
            continue;
        };
        let slot = ((e.at.date_naive() - first).num_days() / bucket.days()) as usize;
        for (kind, n) in event_metric(e) {
            if let Some(series) = grid[mi].get_mut(&kind) {
                series[slot] += n;
            }
        }
        if let Some(outcome) = e.ticket_outcome() {
            if sources.contains(MetricKind::Tickets) {
                *outcomes[mi].entry(outcome).or_default() += 1;
            }
        }
    }

    let members = team
        .member_ids
        .iter()
        .zip(grid)
        .map(|(id, kinds)| MemberSeries {
            canonical_id: id.clone(),
            series: kinds
                .into_iter()
                .map(|(k, counts)| {
                    let buckets = starts
                        .iter()
                        .zip(counts)
                        .map(|(start, count)| BucketCount { start: *start, count })
                        .collect();
                    (k, buckets)
                })
                .collect(),
        })
        .collect();

    let overlays = course
        .milestones
        .iter()
        .filter(|m| {
            let day = day_start(m.date);
            day < window.end() && day + Duration::days(1) > window.start()
        })
        .map(|m| MilestoneOverlay {
            name: m.name.clone(),
            date: m.date,
        })
        .collect();

    let ticket_outcomes = team
        .member_ids
        .iter()
        .zip(outcomes)
        .map(|(id, counts)| OutcomeCounts {
            canonical_id: id.clone(),
            counts,
        })
        .collect();

    Timeline {
        team_id: team.team_id.clone(),
        bucket,
        members,
        overlays,
        ticket_outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_support::*;
    use crate::metrics::aggregate;
    use crate::model::{EventDetail, Milestone};
    use chrono::{TimeZone, Utc, Weekday};
    use proptest::prelude::*;

    fn window(from: i64, to: i64) -> TimeWindow {
        let base = Utc.with_ymd_and_hms(2020, 9, 1, 0, 0, 0).unwrap();
        TimeWindow::new(base + Duration::days(from), base + Duration::days(to)).unwrap()
    }

    #[test]
    fn seven_day_buckets() {
        let c = course(&[2]);
        let t = timeline(&[], &c, &c.teams[0], &window(0, 7), &SourceSelection::all(), Bucket::Day);
        for m in &t.members {
            assert_eq!(m.series.len(), 5);
            for s in m.series.values() {
                assert_eq!(s.len(), 7);
            }
        }
    }

    #[test]
    fn weeks_start_monday() {
        let c = course(&[1]);
        // 2020-09-01 is a Tuesday
        let t = timeline(&[], &c, &c.teams[0], &window(0, 14), &SourceSelection::all(), Bucket::Week);
        let starts = t.bucket_starts();
        assert_eq!(starts.len(), 3);
        assert!(starts.iter().all(|d| d.weekday() == Weekday::Mon));
        assert_eq!(starts[0], NaiveDate::from_ymd_opt(2020, 8, 31).unwrap());
    }

    #[test]
    fn milestone_clipping() {
        let mut c = course(&[1]);
        c.milestones = vec![
            Milestone { name: "in".into(), date: NaiveDate::from_ymd_opt(2020, 9, 3).unwrap() },
            Milestone { name: "out".into(), date: NaiveDate::from_ymd_opt(2020, 10, 3).unwrap() },
        ];
        let t = timeline(&[], &c, &c.teams[0], &window(0, 7), &SourceSelection::all(), Bucket::Day);
        assert_eq!(t.overlays.len(), 1);
        assert_eq!(t.overlays[0].name, "in");
    }

    #[test]
    fn outcome_breakdown() {
        let c = course(&[2]);
        let events = vec![
            ev("s0_0", 1, EventDetail::Ticket { outcome: crate::model::TicketOutcome::Unserved }),
            ev("s0_0", 2, EventDetail::Ticket { outcome: crate::model::TicketOutcome::Resolved }),
            ev("s0_1", 2, EventDetail::Ticket { outcome: crate::model::TicketOutcome::Unserved }),
        ];
        let t = timeline(&events, &c, &c.teams[0], &window(0, 7), &SourceSelection::all(), Bucket::Week);
        assert_eq!(t.ticket_outcomes[0].counts[&crate::model::TicketOutcome::Unserved], 1);
        assert_eq!(t.ticket_outcomes[0].counts[&crate::model::TicketOutcome::Resolved], 1);
        assert_eq!(t.ticket_outcomes[1].counts[&crate::model::TicketOutcome::Unserved], 1);
        assert_eq!(t.ticket_outcomes[0].counts.len(), 3);
    }

    proptest! {
        #[test]
        fn buckets_conserve_window_counts(
            raw in prop::collection::vec((0usize..3, 0i64..40, 0u8..4, 0u64..200, 0u32..24), 0..150),
            from in 0i64..10,
            len in 1i64..30,
            weekly in any::<bool>(),
        ) {
            let c = course(&[3]);
            let events: Vec<_> = raw.iter().map(|&(s, day, kind, adds, hour)| {
                let detail = match kind {
                    0 => EventDetail::ForumInitial,
                    1 => EventDetail::ForumReply,
                    2 => EventDetail::Ticket { outcome: crate::model::TicketOutcome::Resolved },
                    _ => EventDetail::Commit { additions: adds },
                };
                let mut e = ev(&format!("s0_{s}"), day, detail);
                e.at = e.at - Duration::hours(12) + Duration::hours(i64::from(hour));
                e
            }).collect();
            let w = window(from, from + len);
            let bucket = if weekly { Bucket::Week } else { Bucket::Day };
            let sel = SourceSelection::all();
            let t = timeline(&events, &c, &c.teams[0], &w, &sel, bucket);
            let agg = &aggregate::<f64>(&events, &c, &w, &sel)[0];
            let starts = t.bucket_starts();
            prop_assert!(starts.windows(2).all(|p| (p[1] - p[0]).num_days() == bucket.days()));
            for (series, metrics) in t.members.iter().zip(&agg.per_member) {
                for (kind, buckets) in &series.series {
                    let sum: u64 = buckets.iter().map(|b| b.count).sum();
                    prop_assert_eq!(sum, metrics.count(*kind));
                }
            }
        }
    }
}
