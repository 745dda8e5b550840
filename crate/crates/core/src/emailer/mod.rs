//! Intervention email drafts rendered from placeholder templates.

mod store;
mod template;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::{BaselineOf, Center};
use crate::metrics::{CourseStats, TeamMetrics, TeamStatistic};
use crate::model::{Course, StudentIdentity, Team};
use crate::scalar::{format_scalar, Scalar};

pub use store::{builtin_default, TemplateStore, DEFAULT_TEMPLATE};
pub use template::{EmailTemplate, Field, Placeholder};

use template::{scan, Segment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmailError {
    #[error("unknown placeholder `{{{{{token}}}}}` in {field} at offset {position}")]
    UnknownPlaceholder { field: Field, token: String, position: usize },
    #[error("team `{0}` has no members to email")]
    EmptyTeam(String),
    #[error("`{member}` is not a member of team `{team}`")]
    UnknownMember { team: String, member: String },
    #[error("template `{0}` is built in and cannot be deleted")]
    Forbidden(String),
    #[error("a template named `{0}` already exists")]
    NameExists(String),
    #[error("template `{0}` not found")]
    NotFound(String),
    #[error("invalid template name {0:?}: use letters, digits, `_` or `-`")]
    InvalidName(String),
}

impl EmailError {
    pub fn kind(&self) -> &'static str {
        match self {
            EmailError::UnknownPlaceholder { .. } => "UnknownPlaceholder",
            EmailError::EmptyTeam(_) => "EmptyTeam",
            EmailError::UnknownMember { .. } => "UnknownMember",
            EmailError::Forbidden(_) => "Forbidden",
            EmailError::NameExists(_) => "NameExists",
            EmailError::NotFound(_) => "NotFound",
            EmailError::InvalidName(_) => "InvalidName",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmailDraft {
    pub recipients: Vec<String>,
    pub subject: String,
    pub body: String,
    pub mailto_url: String,
}

/// Everything but RFC 3986 unreserved characters.
const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// Addresses additionally keep `@` literal.
const ADDRESS: &AsciiSet = &COMPONENT.remove(b'@');

/// `mailto:` URL with comma-separated recipients and percent-encoded
/// subject and body. Newlines are encoded as-is (`%0A`).
pub fn mailto_url(recipients: &[String], subject: &str, body: &str) -> String {
    let to: Vec<String> = recipients
        .iter()
        .map(|r| utf8_percent_encode(r, ADDRESS).to_string())
        .collect();
    format!(
        "mailto:{}?subject={}&body={}",
        to.join(","),
        utf8_percent_encode(subject, COMPONENT),
        utf8_percent_encode(body, COMPONENT)
    )
}

/// "A", "A and B", "A, B, and C".
pub fn natural_list(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

/// Members of `team` in roster order.
fn members_in_roster_order<'c>(team: &Team, course: &'c Course) -> Vec<&'c StudentIdentity> {
    course
        .roster
        .iter()
        .filter(|s| team.member_ids.contains(&s.canonical_id))
        .collect()
}

fn fill<S: Scalar>(
    text: &str,
    field: Field,
    names: &str,
    team: &Team,
    metrics: &TeamMetrics<S>,
    course: &Course,
    stats: &CourseStats<S>,
) -> Result<String, EmailError> {
    let mut out = String::with_capacity(text.len());
    for seg in scan(text, field)? {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(p) => match p {
                Placeholder::StudentNames => out.push_str(names),
                Placeholder::TeamName => out.push_str(&team.name),
                Placeholder::CourseTitle => out.push_str(&course.title),
                Placeholder::Metric(kind, stat) => match stat {
                    TeamStatistic::Total => out.push_str(&metrics.total(kind).to_string()),
                    TeamStatistic::Diff => out.push_str(&metrics.diff(kind).to_string()),
                    _ => out.push_str(&format_scalar(&metrics.statistic(kind, stat))),
                },
                Placeholder::Course(center, of, kind) => {
                    let k = stats.kind(kind);
                    let v = match (center, of) {
                        (Center::Mean, BaselineOf::Totals) => &k.total_mean,
                        (Center::Median, BaselineOf::Totals) => &k.total_median,
                        (Center::Mean, BaselineOf::Diffs) => &k.diff_mean,
                        (Center::Median, BaselineOf::Diffs) => &k.diff_median,
                    };
                    out.push_str(&format_scalar(v));
                }
            },
        }
    }
    Ok(out)
}

/// Renders `template` for a whole team.
pub fn render_email<S: Scalar>(
    template: &EmailTemplate,
    team: &Team,
    metrics: &TeamMetrics<S>,
    course: &Course,
    stats: &CourseStats<S>,
) -> Result<EmailDraft, EmailError> {
    let members = members_in_roster_order(team, course);
    if members.is_empty() {
        return Err(EmailError::EmptyTeam(team.team_id.clone()));
    }
    let names: Vec<&str> = members.iter().map(|s| s.display_name.as_str()).collect();
    let names = natural_list(&names);
    let subject = fill(template.subject(), Field::Subject, &names, team, metrics, course, stats)?;
    let body = fill(template.body(), Field::Body, &names, team, metrics, course, stats)?;
    let recipients: Vec<String> = members.iter().map(|s| s.email.clone()).collect();
    let mailto_url = mailto_url(&recipients, &subject, &body);
    Ok(EmailDraft {
        recipients,
        subject,
        body,
        mailto_url,
    })
}

/// Renders `template` addressed to one member only. Team metric
/// placeholders then describe that member alone, as a one-person team.
pub fn render_member_email<S: Scalar>(
    template: &EmailTemplate,
    team: &Team,
    member_id: &str,
    metrics: &TeamMetrics<S>,
    course: &Course,
    stats: &CourseStats<S>,
) -> Result<EmailDraft, EmailError> {
    let unknown = || EmailError::UnknownMember {
        team: team.team_id.clone(),
        member: member_id.to_string(),
    };
    if !team.member_ids.iter().any(|m| m == member_id) {
        return Err(unknown());
    }
    let solo_metrics = metrics
        .per_member
        .iter()
        .find(|m| m.canonical_id == member_id)
        .cloned()
        .ok_or_else(unknown)?;
    let solo = Team {
        member_ids: vec![member_id.to_string()],
        ..team.clone()
    };
    let solo_metrics = TeamMetrics::from_members(team.team_id.clone(), vec![solo_metrics]);
    render_email(template, &solo, &solo_metrics, course, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate, course_stats, test_support, SourceSelection};
    use crate::Exact;

    fn fixture() -> (Course, Vec<TeamMetrics<Exact>>, CourseStats<Exact>) {
        let mut course = test_support::course(&[2, 3, 1]);
        course.roster[0].display_name = "Alice".into();
        course.roster[1].display_name = "Bob".into();
        let events: Vec<_> = (0..5).map(|d| test_support::commit("s0_0", d, 10)).collect();
        let teams = aggregate(&events, &course, &course.term_window(), &SourceSelection::all());
        let stats = course_stats(&teams).unwrap();
        (course, teams, stats)
    }

    fn render(subject: &str, body: &str, team: usize) -> EmailDraft {
        let (course, teams, stats) = fixture();
        let t = EmailTemplate::new("t", subject, body).unwrap();
        render_email(&t, &course.teams[team], &teams[team], &course, &stats).unwrap()
    }

    #[test]
    fn names_and_normdiff() {
        let d = render("Check in", "Hi {{student_names}}, {{metric.commits.normdiff}} {{metric.commits.total}}", 0);
        assert_eq!(d.body, "Hi Alice and Bob, 1 5");
        assert_eq!(d.recipients.len(), 2);
        assert!(d.mailto_url.contains("subject=Check%20in"), "{}", d.mailto_url);
    }

    #[test]
    fn course_baselines_use_two_decimals() {
        // totals: 5, 0, 0 -> mean 5/3
        let d = render("{{course.mean.total.commits}}|{{course.median.total.commits}}", "", 1);
        assert_eq!(d.subject, "1.67|0");
        let d = render("{{metric.commits.normdiff}}", "", 1);
        assert_eq!(d.subject, "0");
    }

    #[test]
    fn natural_lists() {
        assert_eq!(natural_list(&["A"]), "A");
        assert_eq!(natural_list(&["A", "B"]), "A and B");
        assert_eq!(natural_list(&["A", "B", "C"]), "A, B, and C");
        assert_eq!(natural_list(&["A", "B", "C", "D"]), "A, B, C, and D");
    }

    #[test]
    fn mailto_encoding() {
        let url = mailto_url(&["a@x.edu".into(), "b+c@x.edu".into()], "Hi there", "line1\nline2 é&=?");
        assert_eq!(
            url,
            "mailto:a@x.edu,b%2Bc@x.edu?subject=Hi%20there&body=line1%0Aline2%20%C3%A9%26%3D%3F"
        );
    }

    #[test]
    fn member_draft() {
        let (course, teams, stats) = fixture();
        let t = EmailTemplate::new("t", "{{student_names}}", "{{metric.commits.total}} {{metric.commits.diff}}").unwrap();
        let d = render_member_email(&t, &course.teams[0], "s0_1", &teams[0], &course, &stats).unwrap();
        assert_eq!(d.subject, "Bob");
        assert_eq!(d.body, "0 0");
        assert_eq!(d.recipients, [course.roster[1].email.clone()]);
        assert!(matches!(
            render_member_email(&t, &course.teams[0], "s1_0", &teams[0], &course, &stats),
            Err(EmailError::UnknownMember { .. })
        ));
    }

    #[test]
    fn empty_team() {
        let (mut course, teams, stats) = fixture();
        course.teams[2].member_ids.clear();
        let t = builtin_default();
        assert_eq!(
            render_email(&t, &course.teams[2], &teams[2], &course, &stats),
            Err(EmailError::EmptyTeam(course.teams[2].team_id.clone()))
        );
    }

    #[test]
    fn default_template_renders() {
        let (course, teams, stats) = fixture();
        let d = render_email(&builtin_default(), &course.teams[1], &teams[1], &course, &stats).unwrap();
        assert!(!d.subject.contains("{{") && !d.body.contains("{{"));
        assert_eq!(d.recipients.len(), 3);
    }
}
