use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{parse_timestamp, IngestError};
use crate::model::{EventKind, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForumKind {
    Initial,
    Reply,
}

impl ForumKind {
    pub fn event_kind(self) -> EventKind {
        match self {
            ForumKind::Initial => EventKind::ForumInitial,
            ForumKind::Reply => EventKind::ForumReply,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawForumRecord {
    pub post_id: String,
    pub thread_id: String,
    pub author_handle: String,
    pub created_at: Timestamp,
    pub kind: ForumKind,
}

/// Parses a forum export: a JSON array of
/// `{post_id, thread_id, author_handle, created_at, kind}`.
pub fn parse_forum_export(text: &str) -> Result<Vec<RawForumRecord>, IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IngestError::MalformedRecord {
        index: 0,
        reason: format!("not a JSON document: {e}"),
    })?;
    let Value::Array(items) = doc else {
        return Err(IngestError::MalformedRecord {
            index: 0,
            reason: "expected an array of posts".into(),
        });
    };
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            parse_record(item).map_err(|reason| IngestError::MalformedRecord { index, reason })
        })
        .collect()
}

fn parse_record(item: &Value) -> Result<RawForumRecord, String> {
    let text = |name: &str| -> Result<String, String> {
        match item.get(name) {
            Some(Value::String(s)) => Ok(s.clone()),
            // Some exports carry numeric ids.
            Some(Value::Number(n)) => Ok(n.to_string()),
            Some(_) => Err(format!("field {name:?} has the wrong type")),
            None => Err(format!("missing field {name:?}")),
        }
    };
    let kind = match text("kind")?.as_str() {
        "initial" => ForumKind::Initial,
        "reply" => ForumKind::Reply,
        other => return Err(format!("unknown kind {other:?}")),
    };
    Ok(RawForumRecord {
        post_id: text("post_id")?,
        thread_id: text("thread_id")?,
        author_handle: text("author_handle")?,
        created_at: parse_timestamp(&text("created_at")?)?,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_export() {
        assert!(parse_forum_export("[]").unwrap().is_empty());
    }

    #[test]
    fn initial_post() {
        let records = parse_forum_export(
            r#"[{"post_id":"p1","thread_id":"t1","author_handle":"alice_p","created_at":"2020-09-01T12:00:00Z","kind":"initial"}]"#,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].kind.event_kind(), EventKind::ForumInitial);
    }

    #[test]
    fn order_preserved() {
        let records = parse_forum_export(
            r#"[{"post_id":"p2","thread_id":"t1","author_handle":"b","created_at":"2020-09-02T00:00:00Z","kind":"reply"},
               {"post_id":"p1","thread_id":"t1","author_handle":"a","created_at":"2020-09-01T00:00:00Z","kind":"initial"}]"#,
        )
        .unwrap();
        assert_eq!(records[0].post_id, "p2");
        assert_eq!(records[1].post_id, "p1");
    }

    #[test]
    fn unknown_kind() {
        let err = parse_forum_export(
            r#"[{"post_id":"p1","thread_id":"t1","author_handle":"a","created_at":"2020-09-01T00:00:00Z","kind":"note"}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { index: 0, .. }), "{err:?}");
    }

    #[test]
    fn missing_field_and_bad_time() {
        let err = parse_forum_export(
            r#"[{"post_id":"p1","thread_id":"t1","author_handle":"a","created_at":"2020-09-01T00:00:00Z","kind":"reply"},
               {"post_id":"p2","thread_id":"t1","created_at":"2020-09-01T00:00:00Z","kind":"reply"}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { index: 1, .. }));
        let err = parse_forum_export(
            r#"[{"post_id":"p1","thread_id":"t1","author_handle":"a","created_at":"last week","kind":"reply"}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { index: 0, .. }));
    }
}
