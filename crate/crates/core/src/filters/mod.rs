//! Boolean team filters: text grammar, evaluation, saved filters and the
//! predefined median-range filters.

mod ast;
mod eval;
mod parser;
mod predefined;
mod store;

use thiserror::Error;

pub use ast::{Atom, Baseline, BaselineOf, Center, Comparator, Decimal, FilterExpr, Operand};
pub use eval::{apply_filter, check_refs, evaluate};
pub use parser::parse_filter;
pub use predefined::{median_band_bounds, predefined_filters, PredefinedFilters, DEFAULT_BAND};
pub use store::{is_valid_filter_name, FilterStore, SavedFilter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown metric `{name}` at offset {offset}")]
    UnknownMetric { name: String, offset: usize },
    #[error("unknown statistic `{name}` at offset {offset}")]
    UnknownStat { name: String, offset: usize },
    #[error("no saved filter named `{0}`")]
    UnresolvedRef(String),
    #[error("filter references form a cycle: {}", .0.join(" -> "))]
    RefCycle(Vec<String>),
    #[error("a filter named `{0}` already exists")]
    NameExists(String),
    #[error("filter `{name}` is used by `{by}`")]
    NameInUse { name: String, by: String },
    #[error("filter `{0}` not found")]
    NotFound(String),
    #[error("invalid filter name {0:?}: use letters, digits, `_` or `-`")]
    InvalidName(String),
    #[error("band must lie strictly between 0 and 1, got {0}")]
    BadBand(String),
}

impl FilterError {
    pub fn kind(&self) -> &'static str {
        match self {
            FilterError::Syntax { .. } => "SyntaxError",
            FilterError::UnknownMetric { .. } => "UnknownMetric",
            FilterError::UnknownStat { .. } => "UnknownStat",
            FilterError::UnresolvedRef(_) => "UnresolvedRef",
            FilterError::RefCycle(_) => "RefCycle",
            FilterError::NameExists(_) => "NameExists",
            FilterError::NameInUse { .. } => "NameInUse",
            FilterError::NotFound(_) => "NotFound",
            FilterError::InvalidName(_) => "InvalidName",
            FilterError::BadBand(_) => "BadBand",
        }
    }

    /// Byte offset into the filter text, for parse errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            FilterError::Syntax { offset, .. }
            | FilterError::UnknownMetric { offset, .. }
            | FilterError::UnknownStat { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{course_stats, StudentMetrics, TeamMetrics};
    use crate::model::MetricKind;
    use crate::Exact;
    use chrono::{TimeZone, Utc};

    fn team(id: &str, members: &[&[(MetricKind, u64)]]) -> TeamMetrics<Exact> {
        let per_member = members
            .iter()
            .enumerate()
            .map(|(i, counts)| {
                let mut m = StudentMetrics::zero(format!("{id}-{i}"));
                for (k, v) in counts.iter() {
                    m.counts.insert(*k, *v);
                }
                m
            })
            .collect();
        TeamMetrics::from_members(id, per_member)
    }

    fn now() -> chrono::DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 10, 1, 0, 0, 0).unwrap()
    }

    fn check(text: &str, t: &TeamMetrics<Exact>, teams: &[TeamMetrics<Exact>]) -> bool {
        let stats = course_stats(teams).unwrap();
        evaluate(&parse_filter(text).unwrap(), t, &stats, &FilterStore::new()).unwrap()
    }

    #[test]
    fn hand_evaluated() {
        use MetricKind::*;
        let t = team("t1", &[&[(Commits, 2), (Tickets, 0)], &[]]);
        assert!(check("commits.total < 5 and tickets.total == 0", &t, std::slice::from_ref(&t)));
        assert!(!check("commits.total < 2", &t, std::slice::from_ref(&t)));
        assert!(check("commits.max == 2 and commits.min == 0 and commits.diff == 2", &t, std::slice::from_ref(&t)));
        assert!(check("commits.normdiff == 1", &t, std::slice::from_ref(&t)));
    }

    #[test]
    fn single_team_equals_its_mean() {
        use MetricKind::*;
        let t = team("t1", &[&[(Commits, 7)], &[(Commits, 2)]]);
        assert!(check("commits.total >= course.mean.total.commits", &t, std::slice::from_ref(&t)));
        assert!(check("commits.diff == course.median.diff.commits", &t, std::slice::from_ref(&t)));
    }

    #[test]
    fn paper_queries_on_fixtures() {
        use MetricKind::*;
        let silent = team("silent", &[&[(Commits, 1)], &[(Commits, 2)]]);
        let dominated = team("dominated", &[&[(Commits, 19), (Posts, 1), (Tickets, 2)], &[(Commits, 1)]]);
        let forum_only = team("forum", &[&[(Commits, 8), (Posts, 3)], &[(Commits, 9), (Replies, 2)]]);
        let all = vec![silent.clone(), dominated.clone(), forum_only.clone()];
        let stats = course_stats(&all).unwrap();
        let store = FilterStore::new();
        let run = |text: &str| apply_filter(&parse_filter(text).unwrap(), &all, &stats, &store).unwrap();
        assert_eq!(run("commits.total < 5 and posts.total == 0 and tickets.total == 0"), ["silent"]);
        // 18/20
        assert_eq!(run("commits.normdiff >= 0.9"), ["dominated"]);
        assert_eq!(run("posts.total > 0 and tickets.total == 0"), ["forum"]);
        assert!(run("commits.total > 1000").is_empty());
        assert_eq!(run("commits.total >= 0"), ["dominated", "forum", "silent"]);
    }

    #[test]
    fn exact_normdiff_comparison() {
        use MetricKind::*;
        // 2/3 is not representable as a decimal; compare against both sides
        let t = team("t", &[&[(Posts, 5)], &[(Posts, 1)]]);
        assert!(check("posts.normdiff > 0.6666666", &t, std::slice::from_ref(&t)));
        assert!(check("posts.normdiff < 0.6666667", &t, std::slice::from_ref(&t)));
        assert!(!check("posts.normdiff == 0.6666666666666667", &t, std::slice::from_ref(&t)));
    }

    #[test]
    fn self_reference_cycle() {
        let mut store = FilterStore::new();
        let err = store
            .save("a", parse_filter("@a").unwrap(), now(), false)
            .unwrap_err();
        assert_eq!(err, FilterError::RefCycle(vec!["a".into(), "a".into()]));
        assert!(store.is_empty());

        // a cycle planted behind the store's back is still caught at evaluation
        let planted: FilterStore = vec![SavedFilter {
            name: "a".into(),
            expr: FilterExpr::Ref("a".into()),
            created_at: now(),
        }]
        .into();
        let t = team("t", &[&[]]);
        let stats = course_stats(std::slice::from_ref(&t)).unwrap();
        assert_eq!(
            evaluate(&FilterExpr::Ref("a".into()), &t, &stats, &planted),
            Err(FilterError::RefCycle(vec!["a".into(), "a".into()]))
        );
    }

    #[test]
    fn longer_cycle_via_overwrite() {
        let mut store = FilterStore::new();
        store.save("a", parse_filter("posts.total > 1").unwrap(), now(), false).unwrap();
        store.save("b", parse_filter("@a and replies.total > 1").unwrap(), now(), false).unwrap();
        let err = store.save("a", parse_filter("@b").unwrap(), now(), true).unwrap_err();
        assert_eq!(err, FilterError::RefCycle(vec!["a".into(), "b".into(), "a".into()]));
        // rolled back to the original definition
        assert_eq!(store.get("a").unwrap().expr, parse_filter("posts.total > 1").unwrap());
    }

    #[test]
    fn unresolved_reference() {
        let t = team("t", &[&[]]);
        let stats = course_stats(std::slice::from_ref(&t)).unwrap();
        assert_eq!(
            evaluate(&parse_filter("@missing or posts.total >= 0").unwrap(), &t, &stats, &FilterStore::new()),
            Err(FilterError::UnresolvedRef("missing".into()))
        );
    }

    #[test]
    fn crud() {
        let mut store = FilterStore::new();
        let silent = parse_filter("tickets.total == 0 and posts.total == 0 and replies.total == 0").unwrap();
        store.save("silent", silent.clone(), now(), false).unwrap();
        assert_eq!(
            store.save("silent", silent.clone(), now(), false).unwrap_err(),
            FilterError::NameExists("silent".into())
        );
        let combo = parse_filter("@silent or commits.normdiff >= 0.9").unwrap();
        store.save("combo", combo, now(), false).unwrap();
        assert_eq!(store.names(), ["combo", "silent"]);
        assert_eq!(
            store.delete("silent").unwrap_err(),
            FilterError::NameInUse { name: "silent".into(), by: "combo".into() }
        );
        assert_eq!(store.get("missing").unwrap_err(), FilterError::NotFound("missing".into()));
        assert_eq!(store.delete("missing").unwrap_err(), FilterError::NotFound("missing".into()));
        store.delete("combo").unwrap();
        store.delete("silent").unwrap();
        assert!(store.is_empty());
        assert_eq!(
            store.save("has space", silent, now(), false).unwrap_err(),
            FilterError::InvalidName("has space".into())
        );
    }

    #[test]
    fn store_serializes_as_text() {
        let mut store = FilterStore::new();
        store.save("x", parse_filter("commits.normdiff >= 0.9").unwrap(), now(), false).unwrap();
        let json = serde_json::to_string(&store).unwrap();
        assert!(json.contains("\"commits.normdiff >= 0.9\""), "{json}");
        assert_eq!(serde_json::from_str::<FilterStore>(&json).unwrap(), store);
    }

    #[test]
    fn median_band() {
        use MetricKind::*;
        let teams: Vec<_> = [6u64, 10, 14]
            .iter()
            .enumerate()
            .map(|(i, c)| team(&format!("t{i}"), &[&[(Commits, *c)]]))
            .collect();
        let stats = course_stats(&teams).unwrap();
        let (lo, hi) = median_band_bounds(&stats, Commits, DEFAULT_BAND).unwrap();
        assert_eq!(lo, Exact::new(15, 2));
        assert_eq!(hi, Exact::new(25, 2));

        let pre = predefined_filters(DEFAULT_BAND, Commits).unwrap();
        let store = FilterStore::new();
        let classify = |t: &TeamMetrics<Exact>| {
            pre.named()
                .iter()
                .filter(|(_, e)| evaluate(e, t, &stats, &store).unwrap())
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
        };
        assert_eq!(classify(&team("ten", &[&[(Commits, 10)]])), ["within_median_range"]);
        assert_eq!(classify(&team("thirteen", &[&[(Commits, 13)]])), ["above_median_range"]);
        assert_eq!(classify(&team("seven", &[&[(Commits, 7)]])), ["below_median_range"]);
        assert_eq!(
            pre.within.to_string(),
            "commits.total >= course.median.total.commits * 0.75 and commits.total <= course.median.total.commits * 1.25"
        );
    }

    #[test]
    fn bad_band() {
        for band in ["0", "1", "1.5", "-0.2"] {
            let d = Decimal::parse(band).unwrap();
            assert!(matches!(predefined_filters(d, MetricKind::Commits), Err(FilterError::BadBand(_))));
        }
    }
}
