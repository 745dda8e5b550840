//! Reference filter interpreter: references are substituted textually from a
//! plain map, and every comparison is an integer cross multiplication.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use concert_core::filters::{BaselineOf, Center, Comparator, FilterExpr, Operand};
use concert_core::metrics::TeamStatistic;

use crate::oracle::{Baselines, Frac, OracleTeam};

/// Replaces every `@name` with its definition, recursively. Panics on a
/// cycle or a missing name; callers only pass acyclic, complete maps.
pub fn inline(expr: &FilterExpr, saved: &BTreeMap<String, FilterExpr>) -> FilterExpr {
    fn go(e: &FilterExpr, saved: &BTreeMap<String, FilterExpr>, depth: usize) -> FilterExpr {
        assert!(depth < 64, "reference cycle");
        match e {
            FilterExpr::Atom(_) => e.clone(),
            FilterExpr::And(cs) => FilterExpr::And(cs.iter().map(|c| go(c, saved, depth)).collect()),
            FilterExpr::Or(cs) => FilterExpr::Or(cs.iter().map(|c| go(c, saved, depth)).collect()),
            FilterExpr::Not(c) => FilterExpr::Not(Box::new(go(c, saved, depth))),
            FilterExpr::Ref(name) => go(&saved[name], saved, depth + 1),
        }
    }
    go(expr, saved, 0)
}

fn holds(c: Comparator, ord: Ordering) -> bool {
    match c {
        Comparator::Lt => ord == Ordering::Less,
        Comparator::Le => ord != Ordering::Greater,
        Comparator::Gt => ord == Ordering::Greater,
        Comparator::Ge => ord != Ordering::Less,
        Comparator::Eq => ord == Ordering::Equal,
        Comparator::Ne => ord != Ordering::Equal,
    }
}

/// Evaluates a reference-free expression.
pub fn eval(expr: &FilterExpr, team: &OracleTeam, base: &Baselines) -> bool {
    match expr {
        FilterExpr::Atom(a) => {
            let k = a.metric;
            let lhs = match a.statistic {
                TeamStatistic::Total => Frac::int(team.total(k) as i128),
                TeamStatistic::Diff => Frac::int(team.diff(k) as i128),
                TeamStatistic::NormDiff => team.normdiff(k),
                TeamStatistic::MemberMax => Frac::int(team.max(k) as i128),
                TeamStatistic::MemberMin => Frac::int(team.min(k) as i128),
            };
            let rhs = match &a.operand {
                Operand::Literal(d) => {
                    let (n, q) = d.as_ratio();
                    Frac::new(n as i128, q as i128)
                }
                Operand::Baseline(b) => {
                    let table = match (b.center, b.of) {
                        (Center::Mean, BaselineOf::Totals) => &base.total_mean,
                        (Center::Median, BaselineOf::Totals) => &base.total_median,
                        (Center::Mean, BaselineOf::Diffs) => &base.diff_mean,
                        (Center::Median, BaselineOf::Diffs) => &base.diff_median,
                    };
                    let (n, q) = b.scale.as_ratio();
                    table[&b.metric].times(Frac::new(n as i128, q as i128))
                }
            };
            holds(a.comparator, lhs.compare(rhs))
        }
        FilterExpr::And(cs) => cs.iter().all(|c| eval(c, team, base)),
        FilterExpr::Or(cs) => cs.iter().any(|c| eval(c, team, base)),
        FilterExpr::Not(c) => !eval(c, team, base),
        FilterExpr::Ref(name) => panic!("reference @{name} must be inlined first"),
    }
}

/// Ids of matching teams, ascending.
pub fn select(expr: &FilterExpr, teams: &[OracleTeam], saved: &BTreeMap<String, FilterExpr>) -> Vec<String> {
    let base = crate::oracle::baselines(teams);
    let flat = inline(expr, saved);
    let mut ids: Vec<String> = teams
        .iter()
        .filter(|t| eval(&flat, t, &base))
        .map(|t| t.team_id.clone())
        .collect();
    ids.sort();
    ids
}
