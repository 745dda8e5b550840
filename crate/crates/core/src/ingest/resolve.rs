use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Platform, RawCommitRecord, RawForumRecord, RawTicketRecord, Roster, Source};
use crate::model::{ActivityEvent, EventDetail};

/// Parsed but unresolved records from any subset of the sources.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBatch {
    pub forum: Vec<RawForumRecord>,
    pub tickets: Vec<RawTicketRecord>,
    pub commits: Vec<RawCommitRecord>,
    /// Additions dropped by ignore rules while parsing `commits`.
    pub ignored_additions: u64,
}

impl RawBatch {
    pub fn record_count(&self, source: Source) -> usize {
        match source {
            Source::Forum => self.forum.len(),
            Source::Tickets => self.tickets.len(),
            Source::Git => self.commits.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedRecord {
    pub source: Source,
    pub raw_source_id: String,
    pub unmatched_handle: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub events_loaded: BTreeMap<Source, usize>,
    pub unresolved: Vec<UnresolvedRecord>,
    pub ignored_file_lines: u64,
}

impl IngestReport {
    pub fn unresolved_count(&self, source: Source) -> usize {
        self.unresolved.iter().filter(|u| u.source == source).count()
    }

    pub fn loaded(&self, source: Source) -> usize {
        self.events_loaded.get(&source).copied().unwrap_or(0)
    }
}

/// Joins raw records to canonical students. Records whose handle is not in
/// the roster are left out of the events and listed in the report.
pub fn resolve_events(batch: &RawBatch, roster: &Roster) -> (Vec<ActivityEvent>, IngestReport) {
    let mut events = Vec::with_capacity(
        batch.forum.len() + batch.tickets.len() + batch.commits.len(),
    );
    let mut report = IngestReport {
        ignored_file_lines: batch.ignored_additions,
        ..IngestReport::default()
    };
    let mut push = |source: Source,
                    platform: Platform,
                    handle: &str,
                    raw_id: &str,
                    make: &dyn Fn(String) -> ActivityEvent| {
        match roster.lookup(platform, handle) {
            Some(student) => {
                events.push(make(student.canonical_id.clone()));
                *report.events_loaded.entry(source).or_default() += 1;
            }
            None => report.unresolved.push(UnresolvedRecord {
                source,
                raw_source_id: raw_id.to_string(),
                unmatched_handle: handle.to_string(),
            }),
        }
    };

    for r in &batch.forum {
        let detail = match r.kind {
            super::ForumKind::Initial => EventDetail::ForumInitial,
            super::ForumKind::Reply => EventDetail::ForumReply,
        };
        push(Source::Forum, Platform::Forum, &r.author_handle, &r.post_id, &|id| ActivityEvent {
            event_id: format!("forum:{}", r.post_id),
            canonical_id: id,
            at: r.created_at,
            detail,
            raw_source_id: r.post_id.clone(),
        });
    }
    for r in &batch.tickets {
        push(Source::Tickets, Platform::Tickets, &r.student_handle, &r.ticket_id, &|id| {
            ActivityEvent {
                event_id: format!("ticket:{}", r.ticket_id),
                canonical_id: id,
                at: r.created_at,
                detail: EventDetail::Ticket { outcome: r.outcome },
                raw_source_id: r.ticket_id.clone(),
            }
        });
    }
    for r in &batch.commits {
        push(Source::Git, Platform::GitEmail, &r.author_email, &r.sha, &|id| ActivityEvent {
            event_id: format!("commit:{}", r.sha),
            canonical_id: id,
            at: r.at,
            detail: EventDetail::Commit { additions: r.additions },
            raw_source_id: r.sha.clone(),
        });
    }
    (events, report)
}
