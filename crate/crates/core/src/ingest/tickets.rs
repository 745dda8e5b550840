use serde::{Deserialize, Serialize};

use super::roster::csv_error;
use super::{parse_timestamp, IngestError};
use crate::model::{TicketOutcome, Timestamp};

const TICKET_HEADER: [&str; 4] = ["ticket_id", "student_handle", "created_at", "outcome"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTicketRecord {
    pub ticket_id: String,
    pub student_handle: String,
    pub created_at: Timestamp,
    pub outcome: TicketOutcome,
}

/// Parses the office-hours CSV `ticket_id,student_handle,created_at,outcome`.
pub fn parse_ticket_export(text: &str) -> Result<Vec<RawTicketRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.iter().map(str::trim).ne(TICKET_HEADER) {
        return Err(IngestError::MalformedRow {
            line: 1,
            reason: format!("expected header {}", TICKET_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let fallback_line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(e, fallback_line))?;
        let line = record.position().map_or(fallback_line, |p| p.line());
        let field = |n: usize| record.get(n).unwrap_or("").trim();
        let outcome = match field(3) {
            "resolved" => TicketOutcome::Resolved,
            "unresolved_helped" => TicketOutcome::UnresolvedHelped,
            "unserved" => TicketOutcome::Unserved,
            other => {
                return Err(IngestError::UnknownOutcome {
                    line,
                    outcome: other.to_string(),
                })
            }
        };
        let created_at =
            parse_timestamp(field(2)).map_err(|reason| IngestError::MalformedRow { line, reason })?;
        out.push(RawTicketRecord {
            ticket_id: field(0).to_string(),
            student_handle: field(1).to_string(),
            created_at,
            outcome,
        });
    }
    Ok(out)
}

/// Writes tickets in the format [`parse_ticket_export`] reads.
pub fn render_ticket_csv(records: &[RawTicketRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(TICKET_HEADER).expect("in-memory write");
    for r in records {
        writer
            .write_record([
                r.ticket_id.as_str(),
                r.student_handle.as_str(),
                &r.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                r.outcome.as_str(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
