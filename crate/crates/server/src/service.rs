//! Operations behind both the HTTP API and the CLI. Every function reads
//! the course from disk, so a mutation is visible to the next call.

use std::path::Path;

use chrono::{DateTime, Days, NaiveDate, Utc};
use concert_core::emailer::{render_email, render_member_email, EmailDraft, EmailTemplate, DEFAULT_TEMPLATE};
use concert_core::filters::{apply_filter, check_refs, parse_filter, FilterExpr, SavedFilter};
use concert_core::ingest::{IgnoreRules, IngestReport, Source};
use concert_core::metrics::{aggregate, course_stats, histogram, timeline, Bucket, SourceSelection, TeamStatistic, Timeline};
use concert_core::model::{day_start, Course, Milestone, MetricKind, Team, TimeWindow};
use concert_core::persist::{CourseData, DataStore};
use concert_core::{CourseStats, CourseStatsF64, Exact, HistogramF64, TeamMetrics, TeamMetricsF64};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub type Result<T> = std::result::Result<T, ServiceError>;

pub const DEFAULT_BINS: usize = 10;

/// Parses one window bound: RFC 3339, or a plain date. A plain end date is
/// inclusive, so it maps to the start of the following day.
pub fn parse_bound(text: &str, is_end: bool) -> Result<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| {
        ServiceError::bad_request(
            "InvalidWindow",
            format!("cannot read {text:?} as a date (YYYY-MM-DD) or RFC 3339 timestamp"),
        )
    })?;
    let date = if is_end { date.checked_add_days(Days::new(1)).unwrap_or(date) } else { date };
    Ok(day_start(date))
}

/// The time window is required on every analytics query.
pub fn parse_window(start: Option<&str>, end: Option<&str>) -> Result<TimeWindow> {
    match (start, end) {
        (Some(s), Some(e)) => Ok(TimeWindow::new(parse_bound(s, false)?, parse_bound(e, true)?)?),
        _ => Err(ServiceError::bad_request("MissingWindow", "both start and end are required")),
    }
}

/// Comma-separated metric names; absent means all five.
pub fn parse_sources(text: Option<&str>) -> Result<SourceSelection> {
    match text {
        None => Ok(SourceSelection::all()),
        Some(t) => Ok(t.parse()?),
    }
}

/// Metric selection given either as `"posts,commits"` or `["posts", "commits"]`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Sources {
    Text(String),
    List(Vec<String>),
}

impl Sources {
    fn joined(&self) -> String {
        match self {
            Sources::Text(t) => t.clone(),
            Sources::List(l) => l.join(","),
        }
    }
}

fn sources_of(s: &Option<Sources>) -> Result<SourceSelection> {
    parse_sources(s.as_ref().map(Sources::joined).as_deref())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct WindowQuery {
    pub start: Option<String>,
    pub end: Option<String>,
    pub sources: Option<String>,
    pub bins: Option<String>,
    pub bucket: Option<String>,
}

impl WindowQuery {
    fn window(&self) -> Result<TimeWindow> {
        parse_window(self.start.as_deref(), self.end.as_deref())
    }

    fn sources(&self) -> Result<SourceSelection> {
        parse_sources(self.sources.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CourseSummary {
    pub course_id: String,
    pub title: String,
    pub term_start: NaiveDate,
    pub term_end: NaiveDate,
    pub team_count: usize,
    pub milestones: Vec<Milestone>,
}

pub fn list_courses(ds: &DataStore) -> Result<Vec<CourseSummary>> {
    let mut out = Vec::new();
    for id in ds.course_ids()? {
        let c = ds.load(&id)?.course;
        out.push(CourseSummary {
            course_id: c.course_id,
            title: c.title,
            term_start: c.term_start,
            term_end: c.term_end,
            team_count: c.teams.len(),
            milestones: c.milestones,
        });
    }
    Ok(out)
}

fn measure(data: &CourseData, window: &TimeWindow, sources: &SourceSelection) -> Result<(Vec<TeamMetrics>, CourseStats)> {
    let teams = aggregate::<Exact>(&data.all_events(), &data.course, window, sources);
    let stats = course_stats(&teams)?;
    Ok((teams, stats))
}

fn find_team<'a>(course: &'a Course, team_id: &str) -> Result<&'a Team> {
    course
        .team(team_id)
        .ok_or_else(|| ServiceError::not_found(format!("team `{team_id}` not found in course `{}`", course.course_id)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overview {
    pub course_id: String,
    pub window: TimeWindow,
    pub sources: Vec<MetricKind>,
    pub teams: Vec<TeamMetricsF64>,
    pub stats: CourseStatsF64,
    pub histograms: Vec<HistogramF64>,
}

pub fn overview(ds: &DataStore, course_id: &str, q: &WindowQuery) -> Result<Overview> {
    let window = q.window()?;
    let sources = q.sources()?;
    let bins = match &q.bins {
        None => DEFAULT_BINS,
        Some(b) => b
            .trim()
            .parse()
            .map_err(|_| ServiceError::bad_request("BadBinCount", format!("bins must be a positive integer, got {b:?}")))?,
    };
    let data = ds.load(course_id)?;
    let (teams, stats) = measure(&data, &window, &sources)?;
    let mut histograms = Vec::new();
    for kind in sources.kinds() {
        for stat in [TeamStatistic::Total, TeamStatistic::Diff, TeamStatistic::NormDiff] {
            histograms.push(histogram(&teams, kind, stat, bins)?.to_f64());
        }
    }
    Ok(Overview {
        course_id: data.course.course_id.clone(),
        window,
        sources: sources.kinds().collect(),
        teams: teams.iter().map(|t| t.to_f64()).collect(),
        stats: stats.to_f64(),
        histograms,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberSummary {
    pub canonical_id: String,
    pub display_name: String,
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamSummary {
    pub team_id: String,
    pub name: String,
    pub repo_url: Option<String>,
    pub members: Vec<MemberSummary>,
    pub metrics: TeamMetricsF64,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyRequest {
    #[serde(default)]
    pub expr_text: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    pub start: Option<String>,
    pub end: Option<String>,
    #[serde(default)]
    pub sources: Option<Sources>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub course_id: String,
    /// Canonical text of the applied expression.
    pub expr: String,
    pub window: TimeWindow,
    pub sources: Vec<MetricKind>,
    pub stats: CourseStatsF64,
    pub selected: Vec<TeamSummary>,
}

pub fn apply(ds: &DataStore, course_id: &str, req: &ApplyRequest) -> Result<Selection> {
    let expr = match (&req.expr_text, &req.name) {
        (Some(text), None) => parse_filter(text)?,
        (None, Some(name)) => FilterExpr::Ref(name.clone()),
        _ => {
            return Err(ServiceError::bad_request(
                "BadRequest",
                "give exactly one of expr_text or name",
            ))
        }
    };
    let window = parse_window(req.start.as_deref(), req.end.as_deref())?;
    let sources = sources_of(&req.sources)?;
    let data = ds.load(course_id)?;
    if let FilterExpr::Ref(name) = &expr {
        data.store.filters.get(name)?;
    }
    check_refs(&expr, &data.store.filters)?;
    let (teams, stats) = measure(&data, &window, &sources)?;
    let ids = apply_filter(&expr, &teams, &stats, &data.store.filters)?;
    let selected = ids
        .iter()
        .map(|id| {
            let team = find_team(&data.course, id)?;
            let metrics = teams.iter().find(|t| &t.team_id == id).expect("selected team was measured");
            Ok(summarize(&data.course, team, metrics))
        })
        .collect::<Result<_>>()?;
    Ok(Selection {
        course_id: data.course.course_id.clone(),
        expr: expr.to_string(),
        window,
        sources: sources.kinds().collect(),
        stats: stats.to_f64(),
        selected,
    })
}

fn summarize(course: &Course, team: &Team, metrics: &TeamMetrics) -> TeamSummary {
    let members = team
        .member_ids
        .iter()
        .filter_map(|id| course.student(id))
        .map(|s| MemberSummary {
            canonical_id: s.canonical_id.clone(),
            display_name: s.display_name.clone(),
            email: s.email.clone(),
        })
        .collect();
    TeamSummary {
        team_id: team.team_id.clone(),
        name: team.name.clone(),
        repo_url: team.repo_url.clone(),
        members,
        metrics: metrics.to_f64(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamDetail {
    pub course_id: String,
    pub team_id: String,
    pub name: String,
    pub window: TimeWindow,
    pub metrics: TeamMetricsF64,
    pub timeline: Timeline,
}

pub fn detail(ds: &DataStore, course_id: &str, team_id: &str, q: &WindowQuery) -> Result<TeamDetail> {
    let window = q.window()?;
    let sources = q.sources()?;
    let bucket: Bucket = match &q.bucket {
        None => Bucket::Day,
        Some(b) => b
            .parse()
            .map_err(|_| ServiceError::bad_request("BadBucket", format!("bucket must be day or week, got {b:?}")))?,
    };
    let data = ds.load(course_id)?;
    let team = find_team(&data.course, team_id)?;
    let (teams, _) = measure(&data, &window, &sources)?;
    let metrics = teams.iter().find(|t| t.team_id == team_id).expect("every team is measured");
    Ok(TeamDetail {
        course_id: data.course.course_id.clone(),
        team_id: team.team_id.clone(),
        name: team.name.clone(),
        window,
        metrics: metrics.to_f64(),
        timeline: timeline(&data.all_events(), &data.course, team, &window, &sources, bucket),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmailRequest {
    #[serde(default)]
    pub template_name: Option<String>,
    #[serde(default)]
    pub member_id: Option<String>,
    /// Metric window for placeholders; the whole term when absent.
    #[serde(default)]
    pub start: Option<String>,
    #[serde(default)]
    pub end: Option<String>,
}

pub fn email(ds: &DataStore, course_id: &str, team_id: &str, req: &EmailRequest) -> Result<EmailDraft> {
    let data = ds.load(course_id)?;
    let window = match (&req.start, &req.end) {
        (None, None) => data.course.term_window(),
        (s, e) => parse_window(s.as_deref(), e.as_deref())?,
    };
    let team = find_team(&data.course, team_id)?;
    let template = data.store.templates.get(req.template_name.as_deref().unwrap_or(DEFAULT_TEMPLATE))?;
    let (teams, stats) = measure(&data, &window, &SourceSelection::all())?;
    let metrics = teams.iter().find(|t| t.team_id == team_id).expect("every team is measured");
    let draft = match &req.member_id {
        None => render_email(&template, team, metrics, &data.course, &stats)?,
        Some(m) => render_member_email(&template, team, m, metrics, &data.course, &stats)?,
    };
    Ok(draft)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutFilter {
    pub expr_text: String,
    #[serde(default)]
    pub overwrite: bool,
}

pub fn list_filters(ds: &DataStore, course_id: &str) -> Result<Vec<SavedFilter>> {
    Ok(ds.load_store(course_id)?.filters.list().cloned().collect())
}

pub fn get_filter(ds: &DataStore, course_id: &str, name: &str) -> Result<SavedFilter> {
    Ok(ds.load_store(course_id)?.filters.get(name)?.clone())
}

/// Saves a filter; the flag reports whether the name was new.
pub fn save_filter(
    ds: &DataStore,
    course_id: &str,
    name: &str,
    req: &PutFilter,
    now: DateTime<Utc>,
) -> Result<(SavedFilter, bool)> {
    let expr = parse_filter(&req.expr_text)?;
    let mut doc = ds.load_store(course_id)?;
    let created = doc.filters.get(name).is_err();
    let saved = doc.filters.save(name, expr, now, req.overwrite)?.clone();
    ds.save_store(course_id, &doc)?;
    Ok((saved, created))
}

pub fn delete_filter(ds: &DataStore, course_id: &str, name: &str) -> Result<SavedFilter> {
    let mut doc = ds.load_store(course_id)?;
    let gone = doc.filters.delete(name)?;
    ds.save_store(course_id, &doc)?;
    Ok(gone)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutTemplate {
    pub subject: String,
    pub body: String,
    #[serde(default)]
    pub overwrite: bool,
}

pub fn list_templates(ds: &DataStore, course_id: &str) -> Result<Vec<EmailTemplate>> {
    Ok(ds.load_store(course_id)?.templates.list())
}

pub fn get_template(ds: &DataStore, course_id: &str, name: &str) -> Result<EmailTemplate> {
    Ok(ds.load_store(course_id)?.templates.get(name)?)
}

pub fn save_template(ds: &DataStore, course_id: &str, name: &str, req: &PutTemplate) -> Result<(EmailTemplate, bool)> {
    let template = EmailTemplate::new(name, &req.subject, &req.body)?;
    let mut doc = ds.load_store(course_id)?;
    let created = !doc.templates.names().iter().any(|n| n == name);
    let saved = doc.templates.save(name, template, req.overwrite)?.clone();
    ds.save_store(course_id, &doc)?;
    Ok((saved, created))
}

pub fn delete_template(ds: &DataStore, course_id: &str, name: &str) -> Result<EmailTemplate> {
    let mut doc = ds.load_store(course_id)?;
    let gone = doc.templates.delete(name)?;
    ds.save_store(course_id, &doc)?;
    Ok(gone)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRequest {
    pub source: String,
    pub path: String,
    /// Regexes over file paths whose git line counts are dropped.
    #[serde(default)]
    pub ignore: Vec<String>,
}

pub fn ingest(ds: &DataStore, course_id: &str, req: &IngestRequest) -> Result<IngestReport> {
    let source: Source = req
        .source
        .parse()
        .map_err(|m: String| ServiceError::bad_request("UnknownSource", m))?;
    let rules = IgnoreRules::new(&req.ignore).map_err(concert_core::persist::PersistError::from)?;
    // fail on the course before touching the file system
    ds.load_store(course_id)?;
    let path = Path::new(&req.path);
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::from((e, path)))?;
    Ok(ds.ingest(course_id, source, &text, &rules)?)
}
