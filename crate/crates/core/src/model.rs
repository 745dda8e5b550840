//! Domain types shared by every stage: roster, teams, courses, windows and
//! activity events.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid time window: start {start} is not before end {end}")]
    InvalidWindow { start: Timestamp, end: Timestamp },
    #[error("invalid email address {0:?}")]
    InvalidEmail(String),
    #[error("student id must not be empty")]
    EmptyStudentId,
    #[error("duplicate student id {0:?}")]
    DuplicateStudent(String),
    #[error("team {0:?} has no members")]
    EmptyTeam(String),
    #[error("team {team:?} lists member {member:?} more than once")]
    DuplicateMember { team: String, member: String },
    #[error("team {team:?} references unknown student {member:?}")]
    UnknownMember { team: String, member: String },
    #[error("student {member:?} belongs to both {first:?} and {second:?}")]
    MultipleTeams { member: String, first: String, second: String },
    #[error("duplicate team id {0:?}")]
    DuplicateTeam(String),
    #[error("team {team:?} repository url {url:?} is not an absolute URL")]
    BadRepoUrl { team: String, url: String },
    #[error("term start {start} is not before term end {end}")]
    BadTerm { start: NaiveDate, end: NaiveDate },
    #[error("milestone {name:?} on {date} lies outside the term")]
    MilestoneOutsideTerm { name: String, date: NaiveDate },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Exactly one `@` with non-empty local and domain parts.
pub fn is_valid_email(email: &str) -> bool {
    let mut parts = email.split('@');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(local), Some(domain), None) => !local.is_empty() && !domain.is_empty(),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentIdentity {
    pub canonical_id: String,
    pub display_name: String,
    pub email: String,
    pub forum_handle: Option<String>,
    /// Lowercased.
    pub git_emails: BTreeSet<String>,
    pub ticket_handle: Option<String>,
}

impl StudentIdentity {
    pub fn new(
        canonical_id: impl Into<String>,
        display_name: impl Into<String>,
        email: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let canonical_id = canonical_id.into();
        let email = email.into();
        if canonical_id.is_empty() {
            return Err(ModelError::EmptyStudentId);
        }
        if !is_valid_email(&email) {
            return Err(ModelError::InvalidEmail(email));
        }
        Ok(Self {
            canonical_id,
            display_name: display_name.into(),
            email,
            forum_handle: None,
            git_emails: BTreeSet::new(),
            ticket_handle: None,
        })
    }

    pub fn with_forum_handle(mut self, handle: impl Into<String>) -> Self {
        self.forum_handle = Some(handle.into());
        self
    }

    pub fn with_ticket_handle(mut self, handle: impl Into<String>) -> Self {
        self.ticket_handle = Some(handle.into());
        self
    }

    pub fn with_git_email(mut self, email: &str) -> Self {
        self.git_emails.insert(email.to_lowercase());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub team_id: String,
    pub name: String,
    pub member_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo_url: Option<String>,
}

impl Team {
    /// Checks everything about a team that does not need the roster.
    pub fn validate_shape(&self) -> Result<(), ModelError> {
        if self.member_ids.is_empty() {
            return Err(ModelError::EmptyTeam(self.team_id.clone()));
        }
        let mut seen = BTreeSet::new();
        for member in &self.member_ids {
            if !seen.insert(member) {
                return Err(ModelError::DuplicateMember {
                    team: self.team_id.clone(),
                    member: member.clone(),
                });
            }
        }
        if let Some(repo) = &self.repo_url {
            if url::Url::parse(repo).is_err() {
                return Err(ModelError::BadRepoUrl {
                    team: self.team_id.clone(),
                    url: repo.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub name: String,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Course {
    pub course_id: String,
    pub title: String,
    pub term_start: NaiveDate,
    pub term_end: NaiveDate,
    pub milestones: Vec<Milestone>,
    pub roster: Vec<StudentIdentity>,
    pub teams: Vec<Team>,
}

impl Course {
    /// Validates term, milestones, roster uniqueness and team membership.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.term_start >= self.term_end {
            return Err(ModelError::BadTerm {
                start: self.term_start,
                end: self.term_end,
            });
        }
        for m in &self.milestones {
            if m.date < self.term_start || m.date > self.term_end {
                return Err(ModelError::MilestoneOutsideTerm {
                    name: m.name.clone(),
                    date: m.date,
                });
            }
        }
        let mut ids = BTreeSet::new();
        for s in &self.roster {
            if s.canonical_id.is_empty() {
                return Err(ModelError::EmptyStudentId);
            }
            if !is_valid_email(&s.email) {
                return Err(ModelError::InvalidEmail(s.email.clone()));
            }
            if !ids.insert(s.canonical_id.as_str()) {
                return Err(ModelError::DuplicateStudent(s.canonical_id.clone()));
            }
        }
        let mut team_ids = BTreeSet::new();
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for team in &self.teams {
            if !team_ids.insert(team.team_id.as_str()) {
                return Err(ModelError::DuplicateTeam(team.team_id.clone()));
            }
            team.validate_shape()?;
            for member in &team.member_ids {
                if !ids.contains(member.as_str()) {
                    return Err(ModelError::UnknownMember {
                        team: team.team_id.clone(),
                        member: member.clone(),
                    });
                }
                if let Some(first) = owner.insert(member, &team.team_id) {
                    return Err(ModelError::MultipleTeams {
                        member: member.clone(),
                        first: first.to_string(),
                        second: team.team_id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn student(&self, canonical_id: &str) -> Option<&StudentIdentity> {
        self.roster.iter().find(|s| s.canonical_id == canonical_id)
    }

    pub fn team(&self, team_id: &str) -> Option<&Team> {
        self.teams.iter().find(|t| t.team_id == team_id)
    }

    /// The whole term as a window: first day 00:00Z up to the day after the
    /// last day.
    pub fn term_window(&self) -> TimeWindow {
        TimeWindow {
            start: day_start(self.term_start),
            end: day_start(self.term_end) + Duration::days(1),
        }
    }
}

pub fn day_start(date: NaiveDate) -> Timestamp {
    date.and_time(NaiveTime::MIN).and_utc()
}

/// Half-open `[start, end)` interval in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct TimeWindow {
    start: Timestamp,
    end: Timestamp,
}

#[derive(Deserialize)]
struct RawWindow {
    start: Timestamp,
    end: Timestamp,
}

impl TryFrom<RawWindow> for TimeWindow {
    type Error = ModelError;

    fn try_from(raw: RawWindow) -> Result<Self, Self::Error> {
        TimeWindow::new(raw.start, raw.end)
    }
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, ModelError> {
        if start < end {
            Ok(Self { start, end })
        } else {
            Err(ModelError::InvalidWindow { start, end })
        }
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        window_contains(self, t)
    }

    /// Splits at `mid`, which must lie strictly inside the window.
    pub fn split_at(&self, mid: Timestamp) -> Option<(TimeWindow, TimeWindow)> {
        if self.start < mid && mid < self.end {
            Some((
                TimeWindow { start: self.start, end: mid },
                TimeWindow { start: mid, end: self.end },
            ))
        } else {
            None
        }
    }
}

pub fn window_contains(w: &TimeWindow, t: Timestamp) -> bool {
    w.start <= t && t < w.end
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ForumInitial,
    ForumReply,
    Ticket,
    Commit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TicketOutcome {
    Resolved,
    UnresolvedHelped,
    Unserved,
}

impl TicketOutcome {
    pub const ALL: [TicketOutcome; 3] = [
        TicketOutcome::Resolved,
        TicketOutcome::UnresolvedHelped,
        TicketOutcome::Unserved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TicketOutcome::Resolved => "resolved",
            TicketOutcome::UnresolvedHelped => "unresolved_helped",
            TicketOutcome::Unserved => "unserved",
        }
    }
}

/// What happened, with exactly the fields that kind of event carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventDetail {
    ForumInitial,
    ForumReply,
    Ticket { outcome: TicketOutcome },
    Commit { additions: u64 },
}

impl EventDetail {
    pub fn kind(&self) -> EventKind {
        match self {
            EventDetail::ForumInitial => EventKind::ForumInitial,
            EventDetail::ForumReply => EventKind::ForumReply,
            EventDetail::Ticket { .. } => EventKind::Ticket,
            EventDetail::Commit { .. } => EventKind::Commit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub event_id: String,
    pub canonical_id: String,
    pub at: Timestamp,
    #[serde(flatten)]
    pub detail: EventDetail,
    pub raw_source_id: String,
}

impl ActivityEvent {
    pub fn kind(&self) -> EventKind {
        self.detail.kind()
    }

    pub fn ticket_outcome(&self) -> Option<TicketOutcome> {
        match self.detail {
            EventDetail::Ticket { outcome } => Some(outcome),
            _ => None,
        }
    }

    pub fn additions(&self) -> Option<u64> {
        match self.detail {
            EventDetail::Commit { additions } => Some(additions),
            _ => None,
        }
    }
}

/// The five chart categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    Posts,
    Replies,
    Commits,
    Additions,
    Tickets,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Posts,
        MetricKind::Replies,
        MetricKind::Commits,
        MetricKind::Additions,
        MetricKind::Tickets,
    ];

    /// Lowercase name used in filter text, templates and query strings.
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Posts => "posts",
            MetricKind::Replies => "replies",
            MetricKind::Commits => "commits",
            MetricKind::Additions => "additions",
            MetricKind::Tickets => "tickets",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownMetric(s.to_string()))
    }
}

/// Metric contributions of one event. Commits feed both `Commits` and
/// `Additions`; every other kind feeds exactly one metric.
pub fn event_metric(e: &ActivityEvent) -> Vec<(MetricKind, u64)> {
    match e.detail {
        EventDetail::ForumInitial => vec![(MetricKind::Posts, 1)],
        EventDetail::ForumReply => vec![(MetricKind::Replies, 1)],
        EventDetail::Ticket { .. } => vec![(MetricKind::Tickets, 1)],
        EventDetail::Commit { additions } => {
            vec![(MetricKind::Commits, 1), (MetricKind::Additions, additions)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn ts(y: i32, mo: u32, d: u32, h: u32) -> Timestamp {
        Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
    }

    fn week() -> TimeWindow {
        TimeWindow::new(ts(2020, 9, 1, 0), ts(2020, 9, 8, 0)).unwrap()
    }

    fn event(detail: EventDetail) -> ActivityEvent {
        ActivityEvent {
            event_id: "e1".into(),
            canonical_id: "s1".into(),
            at: ts(2020, 9, 2, 0),
            detail,
            raw_source_id: "raw".into(),
        }
    }

    #[test]
    fn window_bounds() {
        assert!(window_contains(&week(), ts(2020, 9, 1, 0)));
        assert!(!window_contains(&week(), ts(2020, 9, 8, 0)));
        assert!(window_contains(&week(), ts(2020, 9, 4, 12)));
    }

    #[test]
    fn empty_window_rejected() {
        let t = ts(2020, 9, 1, 0);
        assert!(matches!(
            TimeWindow::new(t, t),
            Err(ModelError::InvalidWindow { .. })
        ));
        let json = r#"{"start":"2020-09-08T00:00:00Z","end":"2020-09-01T00:00:00Z"}"#;
        assert!(serde_json::from_str::<TimeWindow>(json).is_err());
    }

    #[test]
    fn commit_maps_to_two_metrics() {
        assert_eq!(
            event_metric(&event(EventDetail::Commit { additions: 120 })),
            vec![(MetricKind::Commits, 1), (MetricKind::Additions, 120)]
        );
        assert_eq!(
            event_metric(&event(EventDetail::Commit { additions: 0 })),
            vec![(MetricKind::Commits, 1), (MetricKind::Additions, 0)]
        );
        assert_eq!(
            event_metric(&event(EventDetail::ForumReply)),
            vec![(MetricKind::Replies, 1)]
        );
    }

    #[test]
    fn email_syntax() {
        assert!(is_valid_email("a@x.edu"));
        assert!(!is_valid_email("a@@x.edu"));
        assert!(!is_valid_email("@x.edu"));
        assert!(!is_valid_email("a@"));
        assert!(!is_valid_email("ax.edu"));
    }

    #[test]
    fn git_emails_lowercased() {
        let s = StudentIdentity::new("s1", "A", "a@x.edu")
            .unwrap()
            .with_git_email("A@X.EDU");
        assert!(s.git_emails.contains("a@x.edu"));
    }

    fn course() -> Course {
        let a = StudentIdentity::new("a", "Alice", "alice@x.edu").unwrap();
        let b = StudentIdentity::new("b", "Bob", "bob@x.edu").unwrap();
        Course {
            course_id: "c".into(),
            title: "CSC 216".into(),
            term_start: NaiveDate::from_ymd_opt(2020, 8, 17).unwrap(),
            term_end: NaiveDate::from_ymd_opt(2020, 11, 30).unwrap(),
            milestones: vec![Milestone {
                name: "P1".into(),
                date: NaiveDate::from_ymd_opt(2020, 9, 21).unwrap(),
            }],
            roster: vec![a, b],
            teams: vec![Team {
                team_id: "t1".into(),
                name: "One".into(),
                member_ids: vec!["a".into(), "b".into()],
                repo_url: Some("https://github.com/org/t1".into()),
            }],
        }
    }

    #[test]
    fn course_validation() {
        let mut c = course();
        c.validate().unwrap();
        c.teams.push(Team {
            team_id: "t2".into(),
            name: "Two".into(),
            member_ids: vec!["a".into()],
            repo_url: None,
        });
        assert!(matches!(c.validate(), Err(ModelError::MultipleTeams { .. })));

        let mut c = course();
        c.milestones[0].date = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        assert!(matches!(
            c.validate(),
            Err(ModelError::MilestoneOutsideTerm { .. })
        ));

        let mut c = course();
        c.teams[0].repo_url = Some("github.com/org/t1".into());
        assert!(matches!(c.validate(), Err(ModelError::BadRepoUrl { .. })));
    }

    #[test]
    fn term_window_covers_last_day() {
        let w = course().term_window();
        assert!(w.contains(ts(2020, 11, 30, 23)));
        assert!(!w.contains(ts(2020, 12, 1, 0)));
    }

    #[test]
    fn course_round_trips() {
        let c = course();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Course>(&json).unwrap(), c);
    }

    fn arb_detail() -> impl Strategy<Value = EventDetail> {
        prop_oneof![
            Just(EventDetail::ForumInitial),
            Just(EventDetail::ForumReply),
            prop::sample::select(TicketOutcome::ALL.to_vec())
                .prop_map(|outcome| EventDetail::Ticket { outcome }),
            (0u64..1_000_000).prop_map(|additions| EventDetail::Commit { additions }),
        ]
    }

    proptest! {
        #[test]
        fn event_round_trips(detail in arb_detail(), secs in 0i64..4_000_000_000, id in "[a-z0-9]{1,12}") {
            let e = ActivityEvent {
                event_id: format!("x:{id}"),
                canonical_id: id.clone(),
                at: Utc.timestamp_opt(secs, 0).unwrap(),
                detail,
                raw_source_id: id,
            };
            let json = serde_json::to_string(&e).unwrap();
            prop_assert_eq!(serde_json::from_str::<ActivityEvent>(&json).unwrap(), e.clone());
            let pairs = event_metric(&e);
            prop_assert!(!pairs.is_empty() && pairs.len() <= 2);
            prop_assert_eq!(pairs.len() == 2, e.kind() == EventKind::Commit);
        }

        #[test]
        fn window_round_trips(a in 0i64..2_000_000_000, len in 1i64..100_000_000) {
            let w = TimeWindow::new(Utc.timestamp_opt(a, 0).unwrap(), Utc.timestamp_opt(a + len, 0).unwrap()).unwrap();
            let json = serde_json::to_string(&w).unwrap();
            prop_assert_eq!(serde_json::from_str::<TimeWindow>(&json).unwrap(), w);
        }
    }
}
