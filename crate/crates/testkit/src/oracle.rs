//! Brute-force counting and exact statistics over plain integers.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use concert_core::model::{ActivityEvent, Course, EventDetail, MetricKind, TimeWindow};

/// Exact fraction with a positive denominator, compared by cross
/// multiplication.
#[derive(Debug, Clone, Copy)]
pub struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        if den < 0 {
            Self { num: -num, den: -den }
        } else {
            Self { num, den }
        }
    }

    pub fn int(n: i128) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn times(self, other: Frac) -> Frac {
        Frac::new(self.num * other.num, self.den * other.den)
    }

    pub fn compare(self, other: Frac) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    /// Equality with a numerator/denominator pair from elsewhere.
    pub fn equals(self, num: i64, den: i64) -> bool {
        self.compare(Frac::new(num as i128, den as i128)) == Ordering::Equal
    }
}

/// Counts of one student, in [`MetricKind::ALL`] order.
pub type Counts = [u64; 5];

fn slot(kind: MetricKind) -> usize {
    MetricKind::ALL.iter().position(|k| *k == kind).unwrap()
}

pub fn get(c: &Counts, kind: MetricKind) -> u64 {
    c[slot(kind)]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTeam {
    pub team_id: String,
    /// Member ids with their counts, in team order.
    pub members: Vec<(String, Counts)>,
}

/// Tallies every event by hand: one linear scan per student per event, no
/// indexes, no shared helpers with the production path.
pub fn count(
    events: &[ActivityEvent],
    course: &Course,
    window: &TimeWindow,
    enabled: &[MetricKind],
) -> Vec<OracleTeam> {
    let mut teams = Vec::new();
    for team in &course.teams {
        let mut members = Vec::new();
        for id in &team.member_ids {
            let mut c: Counts = [0; 5];
            for e in events {
                if &e.canonical_id != id || e.at < window.start() || e.at >= window.end() {
                    continue;
                }
                let (kind, amount) = match &e.detail {
                    EventDetail::ForumInitial => (MetricKind::Posts, 1),
                    EventDetail::ForumReply => (MetricKind::Replies, 1),
                    EventDetail::Ticket { .. } => (MetricKind::Tickets, 1),
                    EventDetail::Commit { additions } => {
                        if enabled.contains(&MetricKind::Additions) {
                            c[slot(MetricKind::Additions)] += additions;
                        }
                        (MetricKind::Commits, 1)
                    }
                };
                if enabled.contains(&kind) {
                    c[slot(kind)] += amount;
                }
            }
            members.push((id.clone(), c));
        }
        teams.push(OracleTeam {
            team_id: team.team_id.clone(),
            members,
        });
    }
    teams.sort_by(|a, b| a.team_id.cmp(&b.team_id));
    teams
}

impl OracleTeam {
    pub fn values(&self, kind: MetricKind) -> Vec<u64> {
        self.members.iter().map(|(_, c)| get(c, kind)).collect()
    }

    pub fn total(&self, kind: MetricKind) -> u64 {
        self.values(kind).iter().sum()
    }

    pub fn max(&self, kind: MetricKind) -> u64 {
        self.values(kind).into_iter().max().unwrap_or(0)
    }

    pub fn min(&self, kind: MetricKind) -> u64 {
        self.values(kind).into_iter().min().unwrap_or(0)
    }

    pub fn diff(&self, kind: MetricKind) -> u64 {
        self.max(kind) - self.min(kind)
    }

    pub fn normdiff(&self, kind: MetricKind) -> Frac {
        normdiff(&self.values(kind))
    }
}

/// (max - min) / sum, with an all-zero vector giving 0.
pub fn normdiff(values: &[u64]) -> Frac {
    let sum: u64 = values.iter().sum();
    if sum == 0 {
        return Frac::int(0);
    }
    let max = *values.iter().max().unwrap();
    let min = *values.iter().min().unwrap();
    Frac::new((max - min) as i128, sum as i128)
}

pub fn mean(values: &[u64]) -> Frac {
    Frac::new(values.iter().map(|v| *v as i128).sum(), values.len() as i128)
}

pub fn median(values: &[u64]) -> Frac {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        Frac::int(v[n / 2] as i128)
    } else {
        Frac::new(v[n / 2 - 1] as i128 + v[n / 2] as i128, 2)
    }
}

/// Course-level baselines recomputed from oracle teams.
#[derive(Debug, Clone)]
pub struct Baselines {
    pub total_mean: BTreeMap<MetricKind, Frac>,
    pub total_median: BTreeMap<MetricKind, Frac>,
    pub diff_mean: BTreeMap<MetricKind, Frac>,
    pub diff_median: BTreeMap<MetricKind, Frac>,
}

pub fn baselines(teams: &[OracleTeam]) -> Baselines {
    let mut b = Baselines {
        total_mean: BTreeMap::new(),
        total_median: BTreeMap::new(),
        diff_mean: BTreeMap::new(),
        diff_median: BTreeMap::new(),
    };
    for kind in MetricKind::ALL {
        let totals: Vec<u64> = teams.iter().map(|t| t.total(kind)).collect();
        let diffs: Vec<u64> = teams.iter().map(|t| t.diff(kind)).collect();
        b.total_mean.insert(kind, mean(&totals));
        b.total_median.insert(kind, median(&totals));
        b.diff_mean.insert(kind, mean(&diffs));
        b.diff_median.insert(kind, median(&diffs));
    }
    b
}

/// Sum of one metric over all events in the window, independent of teams.
pub fn raw_total(events: &[ActivityEvent], window: &TimeWindow, kind: MetricKind) -> u64 {
    events
        .iter()
        .filter(|e| e.at >= window.start() && e.at < window.end())
        .map(|e| match (&e.detail, kind) {
            (EventDetail::ForumInitial, MetricKind::Posts) => 1,
            (EventDetail::ForumReply, MetricKind::Replies) => 1,
            (EventDetail::Ticket { .. }, MetricKind::Tickets) => 1,
            (EventDetail::Commit { .. }, MetricKind::Commits) => 1,
            (EventDetail::Commit { additions }, MetricKind::Additions) => *additions,
            _ => 0,
        })
        .sum()
}
