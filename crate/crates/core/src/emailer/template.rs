use std::fmt;

use serde::{Deserialize, Serialize};

use super::EmailError;
use crate::filters::{BaselineOf, Center};
use crate::metrics::TeamStatistic;
use crate::model::MetricKind;

/// Which template text a placeholder error points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Subject,
    Body,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Subject => "subject",
            Field::Body => "body",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placeholder {
    StudentNames,
    TeamName,
    CourseTitle,
    /// `metric.<kind>.<total|diff|normdiff>`
    Metric(MetricKind, TeamStatistic),
    /// `course.<mean|median>.<total|diff>.<kind>`
    Course(Center, BaselineOf, MetricKind),
}

impl Placeholder {
    pub fn parse(token: &str) -> Option<Self> {
        let parts: Vec<&str> = token.split('.').collect();
        match parts.as_slice() {
            ["student_names"] => Some(Placeholder::StudentNames),
            ["team_name"] => Some(Placeholder::TeamName),
            ["course_title"] => Some(Placeholder::CourseTitle),
            ["metric", kind, stat] => {
                let kind = kind.parse().ok()?;
                let stat = match *stat {
                    "total" => TeamStatistic::Total,
                    "diff" => TeamStatistic::Diff,
                    "normdiff" => TeamStatistic::NormDiff,
                    _ => return None,
                };
                Some(Placeholder::Metric(kind, stat))
            }
            ["course", center, of, kind] => {
                let center = match *center {
                    "mean" => Center::Mean,
                    "median" => Center::Median,
                    _ => return None,
                };
                let of = match *of {
                    "total" => BaselineOf::Totals,
                    "diff" => BaselineOf::Diffs,
                    _ => return None,
                };
                Some(Placeholder::Course(center, of, kind.parse().ok()?))
            }
            _ => None,
        }
    }

    /// Every supported placeholder, in a fixed order.
    pub fn all() -> Vec<Placeholder> {
        let mut out = vec![Placeholder::StudentNames, Placeholder::TeamName, Placeholder::CourseTitle];
        for kind in MetricKind::ALL {
            for stat in [TeamStatistic::Total, TeamStatistic::Diff, TeamStatistic::NormDiff] {
                out.push(Placeholder::Metric(kind, stat));
            }
        }
        for center in [Center::Mean, Center::Median] {
            for of in [BaselineOf::Totals, BaselineOf::Diffs] {
                for kind in MetricKind::ALL {
                    out.push(Placeholder::Course(center, of, kind));
                }
            }
        }
        out
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placeholder::StudentNames => f.write_str("student_names"),
            Placeholder::TeamName => f.write_str("team_name"),
            Placeholder::CourseTitle => f.write_str("course_title"),
            Placeholder::Metric(kind, stat) => write!(f, "metric.{kind}.{stat}"),
            Placeholder::Course(center, of, kind) => {
                write!(f, "course.{}.{}.{kind}", center.as_str(), of.as_str())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment<'a> {
    Text(&'a str),
    Slot(Placeholder),
}

/// Splits template text into literal runs and placeholders. Whitespace just
/// inside the braces is ignored. An opening `{{` with no closing `}}` is
/// reported as an unknown placeholder at its offset.
pub(crate) fn scan(text: &str, field: Field) -> Result<Vec<Segment<'_>>, EmailError> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(found) = text[rest..].find("{{") {
        let open = rest + found;
        if open > rest {
            out.push(Segment::Text(&text[rest..open]));
        }
        let inner_start = open + 2;
        let Some(len) = text[inner_start..].find("}}") else {
            return Err(EmailError::UnknownPlaceholder {
                field,
                token: text[open..].to_string(),
                position: open,
            });
        };
        let token = &text[inner_start..inner_start + len];
        let slot = Placeholder::parse(token.trim()).ok_or_else(|| EmailError::UnknownPlaceholder {
            field,
            token: token.to_string(),
            position: open,
        })?;
        out.push(Segment::Slot(slot));
        rest = inner_start + len + 2;
    }
    if rest < text.len() {
        out.push(Segment::Text(&text[rest..]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawTemplate {
    name: String,
    subject: String,
    body: String,
}

/// Named subject/body pair with `{{placeholder}}` slots. Construction checks
/// every placeholder, so a template that exists always renders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate", into = "RawTemplate")]
pub struct EmailTemplate {
    name: String,
    subject: String,
    body: String,
}

impl TryFrom<RawTemplate> for EmailTemplate {
    type Error = EmailError;

    fn try_from(raw: RawTemplate) -> Result<Self, Self::Error> {
        EmailTemplate::new(raw.name, raw.subject, raw.body)
    }
}

impl From<EmailTemplate> for RawTemplate {
    fn from(t: EmailTemplate) -> Self {
        RawTemplate {
            name: t.name,
            subject: t.subject,
            body: t.body,
        }
    }
}

impl EmailTemplate {
    pub fn new(
        name: impl Into<String>,
        subject: impl Into<String>,
        body: impl Into<String>,
    ) -> Result<Self, EmailError> {
        let t = Self {
            name: name.into(),
            subject: subject.into(),
            body: body.into(),
        };
        scan(&t.subject, Field::Subject)?;
        scan(&t.body, Field::Body)?;
        Ok(t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub(crate) fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}
