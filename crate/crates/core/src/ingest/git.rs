//! `git log --numstat` style commit listings.
//!
//! Each commit block is a header line
//! `commit <40-hex-sha> <author_email> <unix_epoch_seconds>` followed by zero
//! or more `<additions>\t<deletions>\t<path>` lines, where `-` marks a binary
//! file. Blocks end at a blank line or end of input.

use std::fmt::Write as _;

use chrono::{TimeZone, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::Timestamp;

/// Regular expressions over repository-relative paths. A path matching any
/// pattern (unanchored search) is excluded from additions.
#[derive(Debug, Clone, Default)]
pub struct IgnoreRules {
    patterns: Vec<Regex>,
}

impl IgnoreRules {
    pub fn new<I, S>(patterns: I) -> Result<Self, IngestError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let patterns = patterns
            .into_iter()
            .map(|p| {
                let p = p.as_ref();
                Regex::new(p).map_err(|e| IngestError::BadPattern {
                    pattern: p.to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { patterns })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_ignored(&self, path: &str) -> bool {
        self.patterns.iter().any(|re| re.is_match(path))
    }

    pub fn patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(Regex::as_str)
    }
}

/// One commit after ignore filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCommitRecord {
    pub sha: String,
    /// Lowercased.
    pub author_email: String,
    pub at: Timestamp,
    pub additions: u64,
    pub deletions: u64,
}

/// A single numstat line. `None` counts are binary files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub additions: Option<u64>,
    pub deletions: Option<u64>,
    pub path: String,
}

/// Unfiltered commit block, the writer-side counterpart of [`RawCommitRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitLog {
    pub sha: String,
    pub author_email: String,
    pub at: Timestamp,
    pub files: Vec<FileChange>,
}

/// Parses a commit listing. Returns the commits in input order and the number
/// of added lines excluded by `rules`.
pub fn parse_git_numstat(
    text: &str,
    rules: &IgnoreRules,
) -> Result<(Vec<RawCommitRecord>, u64), IngestError> {
    let mut commits: Vec<RawCommitRecord> = Vec::new();
    let mut ignored = 0u64;
    let mut in_block = false;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            in_block = false;
            continue;
        }
        if line.starts_with("commit ") {
            commits.push(parse_header(line, line_no)?);
            in_block = true;
            continue;
        }
        if !in_block {
            return Err(IngestError::MalformedHeader {
                line: line_no,
                reason: "expected `commit <sha> <email> <epoch>`".into(),
            });
        }
        let change = parse_numstat(line, line_no)?;
        let commit = commits.last_mut().expect("in_block implies a commit");
        let added = change.additions.unwrap_or(0);
        if rules.is_ignored(&change.path) {
            ignored += added;
        } else {
            commit.additions += added;
            commit.deletions += change.deletions.unwrap_or(0);
        }
    }
    Ok((commits, ignored))
}

fn parse_header(line: &str, line_no: usize) -> Result<RawCommitRecord, IngestError> {
    let bad = |reason: String| IngestError::MalformedHeader {
        line: line_no,
        reason,
    };
    let parts: Vec<&str> = line.split(' ').collect();
    let [_, sha, email, epoch] = parts.as_slice() else {
        return Err(bad(format!("expected 4 space-separated fields, found {}", parts.len())));
    };
    if sha.len() != 40 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad(format!("bad sha {sha:?}")));
    }
    if email.is_empty() {
        return Err(bad("empty author email".into()));
    }
    let secs: i64 = epoch
        .parse()
        .map_err(|_| bad(format!("bad epoch {epoch:?}")))?;
    let at = Utc
        .timestamp_opt(secs, 0)
        .single()
        .ok_or_else(|| bad(format!("epoch {secs} out of range")))?;
    Ok(RawCommitRecord {
        sha: sha.to_ascii_lowercase(),
        author_email: email.to_lowercase(),
        at,
        additions: 0,
        deletions: 0,
    })
}

fn parse_numstat(line: &str, line_no: usize) -> Result<FileChange, IngestError> {
    let bad = |reason: String| IngestError::MalformedNumstat {
        line: line_no,
        reason,
    };
    let mut parts = line.splitn(3, '\t');
    let (Some(add), Some(del), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad("expected `<additions>\\t<deletions>\\t<path>`".into()));
    };
    let count = |s: &str| -> Result<Option<u64>, IngestError> {
        if s == "-" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(format!("bad count {s:?}")))
        }
    };
    Ok(FileChange {
        additions: count(add)?,
        deletions: count(del)?,
        path: path.to_string(),
    })
}

/// Writes commit blocks in the format [`parse_git_numstat`] reads, each block
/// followed by a blank line.
pub fn render_git_numstat(commits: &[CommitLog]) -> String {
    let mut out = String::new();
    for c in commits {
        writeln!(out, "commit {} {} {}", c.sha, c.author_email, c.at.timestamp()).unwrap();
        for f in &c.files {
            let n = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
            writeln!(out, "{}\t{}\t{}", n(f.additions), n(f.deletions), f.path).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SHA_A: &str = "0123456789abcdef0123456789abcdef01234567";
    const SHA_B: &str = "fedcba9876543210fedcba9876543210fedcba98";

    #[test]
    fn ignore_rules_exclude_starter_code() {
        let text = format!("commit {SHA_A} a@x.edu 1600000000\n10\t2\tsrc/a.java\n500\t0\tlib/gui.java\n");
        let rules = IgnoreRules::new(["^lib/"]).unwrap();
        let (commits, ignored) = parse_git_numstat(&text, &rules).unwrap();
        assert_eq!(commits.len(), 1);
        assert_eq!(commits[0].additions, 10);
        assert_eq!(commits[0].deletions, 2);
        assert_eq!(ignored, 500);
    }

    #[test]
    fn binary_file_counts_zero() {
        let text = format!("commit {SHA_A} a@x.edu 1600000000\n-\t-\tlogo.png\n");
        let (commits, ignored) = parse_git_numstat(&text, &IgnoreRules::none()).unwrap();
        assert_eq!(commits[0].additions, 0);
        assert_eq!(ignored, 0);
    }

    #[test]
    fn empty_commit_and_multiple_blocks() {
        let text = format!("commit {SHA_A} A@X.EDU 1600000000\n\ncommit {SHA_B} b@x.edu 1600000100\n3\t1\tREADME.md");
        let (commits, _) = parse_git_numstat(&text, &IgnoreRules::none()).unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[0].additions, 0);
        assert_eq!(commits[0].author_email, "a@x.edu");
        assert_eq!(commits[1].additions, 3);
        assert_eq!(commits[1].at.timestamp(), 1_600_000_100);
    }

    #[test]
    fn empty_input() {
        let (commits, ignored) = parse_git_numstat("", &IgnoreRules::none()).unwrap();
        assert!(commits.is_empty());
        assert_eq!(ignored, 0);
    }

    #[test]
    fn bad_header_reports_line() {
        let text = format!("commit {SHA_A} a@x.edu 1600000000\n\ncommit xyz a@x.edu 1600000000\n");
        assert!(matches!(
            parse_git_numstat(&text, &IgnoreRules::none()),
            Err(IngestError::MalformedHeader { line: 3, .. })
        ));
        let text = format!("commit {SHA_A} a@x.edu yesterday\n");
        assert!(matches!(
            parse_git_numstat(&text, &IgnoreRules::none()),
            Err(IngestError::MalformedHeader { line: 1, .. })
        ));
    }

    #[test]
    fn numstat_outside_block() {
        assert!(matches!(
            parse_git_numstat("1\t2\tsrc/a.java\n", &IgnoreRules::none()),
            Err(IngestError::MalformedHeader { line: 1, .. })
        ));
    }

    #[test]
    fn bad_count_reports_line() {
        let text = format!("commit {SHA_A} a@x.edu 1600000000\n1\t2\tok.rs\nten\t2\tsrc/a.java\n");
        assert!(matches!(
            parse_git_numstat(&text, &IgnoreRules::none()),
            Err(IngestError::MalformedNumstat { line: 3, .. })
        ));
    }

    #[test]
    fn paths_with_tabs_and_renames() {
        let text = format!("commit {SHA_A} a@x.edu 1600000000\n4\t0\tsrc/{{old => new}}/a\tb.java\n");
        let (commits, _) = parse_git_numstat(&text, &IgnoreRules::none()).unwrap();
        assert_eq!(commits[0].additions, 4);
    }

    #[test]
    fn bad_pattern() {
        assert!(matches!(
            IgnoreRules::new(["(unclosed"]),
            Err(IngestError::BadPattern { .. })
        ));
    }

    fn arb_commit() -> impl Strategy<Value = CommitLog> {
        let file = (
            prop::option::weighted(0.9, 0u64..2000),
            prop::option::weighted(0.9, 0u64..2000),
            prop::sample::select(vec!["src/a.java", "lib/gui.java", "test/T.java", "docs/x y.md", "lib/z.png"]),
        )
            .prop_map(|(a, d, p)| {
                // binary files have both counts dashed
                let (a, d) = if a.is_none() || d.is_none() { (None, None) } else { (a, d) };
                FileChange { additions: a, deletions: d, path: p.to_string() }
            });
        (
            "[0-9a-f]{40}",
            "[a-z]{1,8}@[a-z]{1,6}\\.edu",
            0i64..2_000_000_000,
            prop::collection::vec(file, 0..6),
        )
            .prop_map(|(sha, email, secs, files)| CommitLog {
                sha,
                author_email: email,
                at: Utc.timestamp_opt(secs, 0).unwrap(),
                files,
            })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(commits in prop::collection::vec(arb_commit(), 0..20)) {
            let rules = IgnoreRules::new(["^lib/"]).unwrap();
            let text = render_git_numstat(&commits);
            let (parsed, ignored) = parse_git_numstat(&text, &rules).unwrap();
            prop_assert_eq!(parsed.len(), commits.len());
            let mut raw_total = 0;
            for (log, rec) in commits.iter().zip(&parsed) {
                prop_assert_eq!(&rec.sha, &log.sha);
                prop_assert_eq!(&rec.author_email, &log.author_email);
                prop_assert_eq!(rec.at, log.at);
                let kept: u64 = log.files.iter()
                    .filter(|f| !f.path.starts_with("lib/"))
                    .map(|f| f.additions.unwrap_or(0))
                    .sum();
                prop_assert_eq!(rec.additions, kept);
                raw_total += log.files.iter().map(|f| f.additions.unwrap_or(0)).sum::<u64>();
            }
            let kept_total: u64 = parsed.iter().map(|r| r.additions).sum();
            prop_assert_eq!(kept_total + ignored, raw_total);
        }
    }
}
