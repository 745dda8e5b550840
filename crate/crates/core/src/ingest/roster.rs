use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{ModelError, StudentIdentity, Team};

const ROSTER_HEADER: [&str; 6] = [
    "canonical_id",
    "display_name",
    "email",
    "forum_handle",
    "ticket_handle",
    "git_emails",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Forum,
    Tickets,
    GitEmail,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Forum => "forum",
            Platform::Tickets => "ticket",
            Platform::GitEmail => "git email",
        })
    }
}

/// Students plus case-insensitive lookup tables for each platform handle.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    students: Vec<StudentIdentity>,
    by_forum: HashMap<String, usize>,
    by_ticket: HashMap<String, usize>,
    by_git_email: HashMap<String, usize>,
    by_id: HashMap<String, usize>,
}

impl Roster {
    pub fn new(students: Vec<StudentIdentity>) -> Result<Self, IngestError> {
        let mut roster = Roster::default();
        for (i, student) in students.into_iter().enumerate() {
            roster.insert(student, i as u64 + 2)?;
        }
        Ok(roster)
    }

    fn insert(&mut self, student: StudentIdentity, row: u64) -> Result<(), IngestError> {
        let idx = self.students.len();
        if student.canonical_id.is_empty() {
            return Err(IngestError::InvalidRecord {
                record: row as usize,
                source: ModelError::EmptyStudentId,
            });
        }
        if !crate::model::is_valid_email(&student.email) {
            return Err(IngestError::InvalidRecord {
                record: row as usize,
                source: ModelError::InvalidEmail(student.email.clone()),
            });
        }
        if self.by_id.contains_key(&student.canonical_id) {
            return Err(IngestError::InvalidRecord {
                record: row as usize,
                source: ModelError::DuplicateStudent(student.canonical_id.clone()),
            });
        }
        let mut claims = Vec::new();
        if let Some(h) = &student.forum_handle {
            claims.push((Platform::Forum, h.to_lowercase()));
        }
        if let Some(h) = &student.ticket_handle {
            claims.push((Platform::Tickets, h.to_lowercase()));
        }
        for e in &student.git_emails {
            claims.push((Platform::GitEmail, e.to_lowercase()));
        }
        for (platform, key) in &claims {
            if let Some(&other) = self.index(*platform).get(key) {
                return Err(IngestError::DuplicateHandle {
                    platform: *platform,
                    handle: key.clone(),
                    first: self.students[other].canonical_id.clone(),
                    second: student.canonical_id.clone(),
                    row,
                });
            }
        }
        for (platform, key) in claims {
            self.index_mut(platform).insert(key, idx);
        }
        self.by_id.insert(student.canonical_id.clone(), idx);
        self.students.push(student);
        Ok(())
    }

    fn index(&self, platform: Platform) -> &HashMap<String, usize> {
        match platform {
            Platform::Forum => &self.by_forum,
            Platform::Tickets => &self.by_ticket,
            Platform::GitEmail => &self.by_git_email,
        }
    }

    fn index_mut(&mut self, platform: Platform) -> &mut HashMap<String, usize> {
        match platform {
            Platform::Forum => &mut self.by_forum,
            Platform::Tickets => &mut self.by_ticket,
            Platform::GitEmail => &mut self.by_git_email,
        }
    }

    pub fn students(&self) -> &[StudentIdentity] {
        &self.students
    }

    pub fn into_students(self) -> Vec<StudentIdentity> {
        self.students
    }

    pub fn get(&self, canonical_id: &str) -> Option<&StudentIdentity> {
        self.by_id.get(canonical_id).map(|&i| &self.students[i])
    }

    /// Case-insensitive handle lookup.
    pub fn lookup(&self, platform: Platform, handle: &str) -> Option<&StudentIdentity> {
        self.index(platform)
            .get(&handle.to_lowercase())
            .map(|&i| &self.students[i])
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }
}

/// Parses the roster CSV and the teams document, validating every team
/// against the roster.
pub fn load_roster(roster_csv: &str, teams_json: &str) -> Result<(Roster, Vec<Team>), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(roster_csv.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.iter().map(str::trim).ne(ROSTER_HEADER) {
        return Err(IngestError::MalformedRow {
            line: 1,
            reason: format!("expected header {}", ROSTER_HEADER.join(",")),
        });
    }

    let mut roster = Roster::default();
    for (i, record) in reader.records().enumerate() {
        let fallback_line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(e, fallback_line))?;
        let line = record.position().map_or(fallback_line, |p| p.line());
        let field = |n: usize| record.get(n).unwrap_or("").trim();
        let optional = |n: usize| Some(field(n).to_string()).filter(|s| !s.is_empty());
        let mut student = StudentIdentity::new(field(0), field(1), field(2)).map_err(|source| {
            IngestError::InvalidRecord {
                record: line as usize,
                source,
            }
        })?;
        student.forum_handle = optional(3);
        student.ticket_handle = optional(4);
        student.git_emails = field(5)
            .split(';')
            .map(|e| e.trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect::<BTreeSet<_>>();
        roster.insert(student, line)?;
    }

    let teams: Vec<Team> = serde_json::from_str(teams_json).map_err(|e| IngestError::MalformedRecord {
        index: 0,
        reason: format!("teams document: {e}"),
    })?;
    let mut owner: HashMap<&str, &str> = HashMap::new();
    let mut team_ids = BTreeSet::new();
    for (record, team) in teams.iter().enumerate() {
        if !team_ids.insert(team.team_id.as_str()) {
            return Err(IngestError::InvalidRecord {
                record,
                source: ModelError::DuplicateTeam(team.team_id.clone()),
            });
        }
        team.validate_shape()
            .map_err(|source| IngestError::InvalidRecord { record, source })?;
        for member in &team.member_ids {
            if roster.get(member).is_none() {
                return Err(IngestError::UnknownMember {
                    record,
                    source: ModelError::UnknownMember {
                        team: team.team_id.clone(),
                        member: member.clone(),
                    },
                });
            }
            if let Some(first) = owner.insert(member, &team.team_id) {
                return Err(IngestError::InvalidRecord {
                    record,
                    source: ModelError::MultipleTeams {
                        member: member.clone(),
                        first: first.to_string(),
                        second: team.team_id.clone(),
                    },
                });
            }
        }
    }
    Ok((roster, teams))
}

/// Writes a roster in the format [`load_roster`] reads.
pub fn render_roster_csv(students: &[StudentIdentity]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(ROSTER_HEADER).expect("in-memory write");
    for s in students {
        let git = s.git_emails.iter().cloned().collect::<Vec<_>>().join(";");
        writer
            .write_record([
                s.canonical_id.as_str(),
                s.display_name.as_str(),
                s.email.as_str(),
                s.forum_handle.as_deref().unwrap_or(""),
                s.ticket_handle.as_deref().unwrap_or(""),
                git.as_str(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub(super) fn csv_error(e: csv::Error, fallback_line: u64) -> IngestError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    let reason = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} columns, found {len}")
        }
        _ => e.to_string(),
    };
    IngestError::MalformedRow { line, reason }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "canonical_id,display_name,email,forum_handle,ticket_handle,git_emails\n";

    fn two_students(second_git: &str) -> String {
        format!(
            "{HEADER}s1,Alice Park,alice@x.edu,alice_p,apark,A@X.EDU\ns2,Bob Diaz,bob@x.edu,bobd,,{second_git}\n"
        )
    }

    const ONE_TEAM: &str = r#"[{"team_id":"t1","name":"Team 1","member_ids":["s1","s2"],"repo_url":"https://github.com/org/t1"}]"#;

    #[test]
    fn minimal_roster() {
        let (roster, teams) = load_roster(&two_students("bob@users.example.com;b2@x.edu"), ONE_TEAM).unwrap();
        assert_eq!(roster.len(), 2);
        assert_eq!(teams.len(), 1);
        assert_eq!(
            roster.lookup(Platform::GitEmail, "a@x.edu").unwrap().canonical_id,
            "s1"
        );
        assert_eq!(roster.lookup(Platform::Forum, "BOBD").unwrap().canonical_id, "s2");
        assert!(roster.get("s2").unwrap().ticket_handle.is_none());
        assert_eq!(roster.get("s2").unwrap().git_emails.len(), 2);
    }

    #[test]
    fn shared_git_email_is_duplicate_handle() {
        let err = load_roster(&two_students("a@x.edu"), ONE_TEAM).unwrap_err();
        match err {
            IngestError::DuplicateHandle { platform, row, .. } => {
                assert_eq!(platform, Platform::GitEmail);
                assert_eq!(row, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ghost_member() {
        let teams = r#"[{"team_id":"t1","name":"T","member_ids":["s1","ghost"]}]"#;
        let err = load_roster(&two_students(""), teams).unwrap_err();
        assert!(matches!(err, IngestError::UnknownMember { record: 0, .. }), "{err:?}");
    }

    #[test]
    fn wrong_column_count() {
        let csv = format!("{HEADER}s1,Alice,alice@x.edu,a,b\n");
        let err = load_roster(&csv, "[]").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn wrong_header() {
        let err = load_roster("id,name\n", "[]").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn quoted_fields() {
        let csv = format!("{HEADER}s1,\"Park, Alice\",alice@x.edu,,,\n");
        let (roster, _) = load_roster(&csv, "[]").unwrap();
        assert_eq!(roster.get("s1").unwrap().display_name, "Park, Alice");
    }

    #[test]
    fn bad_email_rejected() {
        let csv = format!("{HEADER}s1,Alice,alice.x.edu,,,\n");
        assert!(matches!(
            load_roster(&csv, "[]"),
            Err(IngestError::InvalidRecord { .. })
        ));
    }

    #[test]
    fn render_then_load() {
        let (roster, _) = load_roster(&two_students("b@x.edu"), "[]").unwrap();
        let text = render_roster_csv(roster.students());
        let (again, _) = load_roster(&text, "[]").unwrap();
        assert_eq!(again.students(), roster.students());
    }
}
