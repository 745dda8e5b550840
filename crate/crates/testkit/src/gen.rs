//! Seeded random inputs.

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;

use concert_core::filters::{Baseline, BaselineOf, Center, Comparator, Decimal, FilterExpr, Operand};
use concert_core::metrics::{SourceSelection, TeamStatistic};
use concert_core::model::{
    day_start, ActivityEvent, Course, EventDetail, MetricKind, StudentIdentity, Team, TicketOutcome, TimeWindow,
};

const NAME_PARTS: [&str; 12] = [
    "Ana", "Björn", "Chiara", "Dũng", "Émile", "O'Neil", "Zoë", "Łukasz", "Mary-Jo", "Søren", "李", "Ngozi",
];

pub fn name<R: Rng>(rng: &mut R) -> String {
    let first = NAME_PARTS.choose(rng).unwrap();
    let last = NAME_PARTS.choose(rng).unwrap();
    format!("{first} {last}")
}

/// A valid course with `teams` teams of 1..=`max_members` students.
pub fn course<R: Rng>(rng: &mut R, teams: usize, max_members: usize) -> Course {
    let mut roster = Vec::new();
    let mut team_list = Vec::new();
    for ti in 0..teams {
        let size = rng.random_range(1..=max_members);
        let mut member_ids = Vec::new();
        for mi in 0..size {
            let id = format!("u{ti}x{mi}");
            let email = format!("{id}+{}@school.example.edu", rng.random_range(0..100));
            roster.push(StudentIdentity::new(&id, name(rng), email).unwrap());
            member_ids.push(id);
        }
        team_list.push(Team {
            team_id: format!("team-{ti:03}"),
            name: format!("Team & Co #{ti}"),
            member_ids,
            repo_url: Some(format!("https://git.example.edu/t{ti}")),
        });
    }
    // roster order differs from team order
    for i in (1..roster.len()).rev() {
        let j = rng.random_range(0..=i);
        roster.swap(i, j);
    }
    Course {
        course_id: "rand".into(),
        title: "Projects / Fall ½".into(),
        term_start: NaiveDate::from_ymd_opt(2021, 1, 11).unwrap(),
        term_end: NaiveDate::from_ymd_opt(2021, 5, 7).unwrap(),
        milestones: vec![],
        roster,
        teams: team_list,
    }
}

/// Events for random roster students, spread a little beyond the term.
pub fn events<R: Rng>(rng: &mut R, course: &Course, n: usize) -> Vec<ActivityEvent> {
    let start = day_start(course.term_start) - Duration::days(10);
    let span = (course.term_end - course.term_start).num_seconds() + 20 * 86_400;
    (0..n)
        .map(|i| {
            let student = course.roster.choose(rng).unwrap();
            let detail = match rng.random_range(0..4) {
                0 => EventDetail::ForumInitial,
                1 => EventDetail::ForumReply,
                2 => EventDetail::Ticket {
                    outcome: *TicketOutcome::ALL.choose(rng).unwrap(),
                },
                _ => EventDetail::Commit {
                    additions: rng.random_range(0..500),
                },
            };
            ActivityEvent {
                event_id: format!("e{i}"),
                canonical_id: student.canonical_id.clone(),
                at: start + Duration::seconds(rng.random_range(0..span)),
                detail,
                raw_source_id: format!("r{i}"),
            }
        })
        .collect()
}

/// A window inside or overlapping the term, at least one second long.
pub fn window<R: Rng>(rng: &mut R, course: &Course) -> TimeWindow {
    let term = course.term_window();
    if rng.random_bool(0.2) {
        return term;
    }
    let span = (term.end() - term.start()).num_seconds();
    let a = rng.random_range(-86_400..span);
    let len = rng.random_range(1..span);
    let start = term.start() + Duration::seconds(a);
    TimeWindow::new(start, start + Duration::seconds(len)).unwrap()
}

pub fn sources<R: Rng>(rng: &mut R) -> SourceSelection {
    loop {
        let kinds: Vec<MetricKind> = MetricKind::ALL.into_iter().filter(|_| rng.random_bool(0.6)).collect();
        if let Ok(s) = SourceSelection::new(kinds) {
            return s;
        }
    }
}

pub fn decimal<R: Rng>(rng: &mut R) -> Decimal {
    let scale = rng.random_range(0..=3);
    Decimal::new(rng.random_range(-200..20_000), scale).unwrap()
}

fn positive_decimal<R: Rng>(rng: &mut R) -> Decimal {
    let scale = rng.random_range(0..=2);
    Decimal::new(rng.random_range(1..400), scale).unwrap()
}

pub fn atom<R: Rng>(rng: &mut R) -> FilterExpr {
    let metric = *MetricKind::ALL.choose(rng).unwrap();
    let statistic = *[
        TeamStatistic::Total,
        TeamStatistic::Diff,
        TeamStatistic::NormDiff,
        TeamStatistic::MemberMax,
        TeamStatistic::MemberMin,
    ]
    .choose(rng)
    .unwrap();
    let comparator = *Comparator::ALL.choose(rng).unwrap();
    let operand = if rng.random_bool(0.7) {
        Operand::Literal(if statistic == TeamStatistic::NormDiff {
            Decimal::new(rng.random_range(0..=100), 2).unwrap()
        } else {
            decimal(rng)
        })
    } else {
        Operand::Baseline(Baseline {
            center: *[Center::Mean, Center::Median].choose(rng).unwrap(),
            of: *[BaselineOf::Totals, BaselineOf::Diffs].choose(rng).unwrap(),
            metric: *MetricKind::ALL.choose(rng).unwrap(),
            scale: if rng.random_bool(0.5) { Decimal::ONE } else { positive_decimal(rng) },
        })
    };
    FilterExpr::atom(metric, statistic, comparator, operand)
}

/// A random tree of depth at most `depth`. `refs` lists names that may
/// appear as `@name` leaves.
pub fn filter<R: Rng>(rng: &mut R, depth: usize, refs: &[String]) -> FilterExpr {
    if depth <= 1 || rng.random_bool(0.25) {
        if !refs.is_empty() && rng.random_bool(0.2) {
            return FilterExpr::Ref(refs.choose(rng).unwrap().clone());
        }
        return atom(rng);
    }
    match rng.random_range(0..3) {
        0 => FilterExpr::Not(Box::new(filter(rng, depth - 1, refs))),
        k => {
            let n = rng.random_range(2..=4);
            let children = (0..n).map(|_| filter(rng, depth - 1, refs)).collect();
            if k == 1 {
                FilterExpr::And(children)
            } else {
                FilterExpr::Or(children)
            }
        }
    }
}

/// Random template text: literal runs with awkward characters mixed with
/// supported placeholders.
pub fn template_text<R: Rng>(rng: &mut R) -> String {
    const LITERALS: [&str; 14] = [
        "Hi ", ", ", "\n", "\r\n", "&", "=", "?", "#", "%20", "100% ", "ünïcødé ", "😀", "a+b ", "{single} ",
    ];
    const PLACEHOLDERS: [&str; 9] = [
        "{{student_names}}",
        "{{team_name}}",
        "{{course_title}}",
        "{{metric.commits.total}}",
        "{{metric.additions.diff}}",
        "{{metric.posts.normdiff}}",
        "{{course.mean.total.tickets}}",
        "{{course.median.diff.commits}}",
        "{{ metric.replies.total }}",
    ];
    let n = rng.random_range(0..12);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.4) {
                PLACEHOLDERS.choose(rng).unwrap().to_string()
            } else {
                LITERALS.choose(rng).unwrap().to_string()
            }
        })
        .collect()
}

/// Member vector of length 1..=`max_len` with entries below `max_value`.
pub fn counts<R: Rng>(rng: &mut R, max_len: usize, max_value: u64) -> Vec<u64> {
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| rng.random_range(0..max_value)).collect()
}
