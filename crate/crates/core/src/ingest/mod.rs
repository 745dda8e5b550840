//! Parsing of source exports and identity resolution against the roster.
//!
//! Every parser is a pure function over text. Records come out in input order
//! with platform handles untouched; [`resolve_events`] joins them to canonical
//! student ids.

mod forum;
mod git;
mod resolve;
mod roster;
mod tickets;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, Timestamp};

pub use forum::{parse_forum_export, ForumKind, RawForumRecord};
pub use git::{parse_git_numstat, render_git_numstat, CommitLog, FileChange, IgnoreRules, RawCommitRecord};
pub use resolve::{resolve_events, IngestReport, RawBatch, UnresolvedRecord};
pub use roster::{load_roster, render_roster_csv, Platform, Roster};
pub use tickets::{parse_ticket_export, render_ticket_csv, RawTicketRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{platform} handle {handle:?} is shared by {first:?} and {second:?} (row {row})")]
    DuplicateHandle {
        platform: Platform,
        handle: String,
        first: String,
        second: String,
        row: u64,
    },
    #[error("team record {record}: {source}")]
    UnknownMember { record: usize, source: ModelError },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("malformed record at index {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("unknown ticket outcome {outcome:?} at line {line}")]
    UnknownOutcome { line: u64, outcome: String },
    #[error("malformed commit header at line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("malformed numstat line {line}: {reason}")]
    MalformedNumstat { line: usize, reason: String },
    #[error("invalid ignore pattern {pattern:?}: {reason}")]
    BadPattern { pattern: String, reason: String },
    #[error("invalid roster or team record {record}: {source}")]
    InvalidRecord { record: usize, source: ModelError },
}

impl IngestError {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::DuplicateHandle { .. } => "DuplicateHandle",
            IngestError::UnknownMember { .. } => "UnknownMember",
            IngestError::MalformedRow { .. } => "MalformedRow",
            IngestError::MalformedRecord { .. } => "MalformedRecord",
            IngestError::UnknownOutcome { .. } => "UnknownOutcome",
            IngestError::MalformedHeader { .. } => "MalformedHeader",
            IngestError::MalformedNumstat { .. } => "MalformedNumstat",
            IngestError::BadPattern { .. } => "BadPattern",
            IngestError::InvalidRecord { .. } => "InvalidRecord",
        }
    }

    /// Row, line or record index the error points at, if any.
    pub fn location(&self) -> Option<u64> {
        match self {
            IngestError::DuplicateHandle { row, .. } => Some(*row),
            IngestError::UnknownMember { record, .. } | IngestError::InvalidRecord { record, .. } => {
                Some(*record as u64)
            }
            IngestError::MalformedRow { line, .. } | IngestError::UnknownOutcome { line, .. } => {
                Some(*line)
            }
            IngestError::MalformedRecord { index, .. } => Some(*index as u64),
            IngestError::MalformedHeader { line, .. } | IngestError::MalformedNumstat { line, .. } => {
                Some(*line as u64)
            }
            IngestError::BadPattern { .. } => None,
        }
    }
}

/// Which export an event or record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Forum,
    Tickets,
    Git,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Forum, Source::Tickets, Source::Git];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Forum => "forum",
            Source::Tickets => "tickets",
            Source::Git => "git",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown source {s:?} (expected forum, tickets or git)"))
    }
}

/// Parses one source export into a batch holding only that source.
/// `rules` applies to git logs only.
pub fn parse_source(source: Source, text: &str, rules: &IgnoreRules) -> Result<RawBatch, IngestError> {
    let mut batch = RawBatch::default();
    match source {
        Source::Forum => batch.forum = parse_forum_export(text)?,
        Source::Tickets => batch.tickets = parse_ticket_export(text)?,
        Source::Git => (batch.commits, batch.ignored_additions) = parse_git_numstat(text, rules)?,
    }
    Ok(batch)
}

/// ISO-8601 timestamp normalized to UTC. Values without an offset are taken
/// as UTC.
pub(crate) fn parse_timestamp(text: &str) -> Result<Timestamp, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f")
        .map(|naive| naive.and_utc())
        .map_err(|_| format!("bad timestamp {text:?}"))
}
