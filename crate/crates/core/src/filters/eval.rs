use std::collections::BTreeSet;

use super::ast::{Atom, BaselineOf, Center, FilterExpr, Operand};
use super::{FilterError, FilterStore};
use crate::metrics::{CourseStats, TeamMetrics};
use crate::scalar::Scalar;

/// Verifies that every reference reachable from `expr` resolves in `store`
/// and that no reference chain loops back on itself.
pub fn check_refs(expr: &FilterExpr, store: &FilterStore) -> Result<(), FilterError> {
    let mut path = Vec::new();
    let mut verified = BTreeSet::new();
    walk(expr, store, &mut path, &mut verified)
}

fn walk<'a>(
    expr: &'a FilterExpr,
    store: &'a FilterStore,
    path: &mut Vec<&'a str>,
    verified: &mut BTreeSet<&'a str>,
) -> Result<(), FilterError> {
    match expr {
        FilterExpr::Atom(_) => Ok(()),
        FilterExpr::And(cs) | FilterExpr::Or(cs) => {
            cs.iter().try_for_each(|c| walk(c, store, path, verified))
        }
        FilterExpr::Not(c) => walk(c, store, path, verified),
        FilterExpr::Ref(name) => {
            if path.contains(&name.as_str()) {
                let mut cycle: Vec<String> = path.iter().map(|s| s.to_string()).collect();
                cycle.push(name.clone());
                return Err(FilterError::RefCycle(cycle));
            }
            if verified.contains(name.as_str()) {
                return Ok(());
            }
            let saved = store
                .lookup(name)
                .ok_or_else(|| FilterError::UnresolvedRef(name.clone()))?;
            path.push(name);
            walk(&saved.expr, store, path, verified)?;
            path.pop();
            verified.insert(name);
            Ok(())
        }
    }
}

fn operand_value<S: Scalar>(operand: &Operand, stats: &CourseStats<S>) -> S {
    match operand {
        Operand::Literal(d) => d.to_scalar(),
        Operand::Baseline(b) => {
            let k = stats.kind(b.metric);
            let base = match (b.center, b.of) {
                (Center::Mean, BaselineOf::Totals) => &k.total_mean,
                (Center::Median, BaselineOf::Totals) => &k.total_median,
                (Center::Mean, BaselineOf::Diffs) => &k.diff_mean,
                (Center::Median, BaselineOf::Diffs) => &k.diff_median,
            };
            base.clone() * b.scale.to_scalar::<S>()
        }
    }
}

pub(crate) fn atom_holds<S: Scalar>(atom: &Atom, team: &TeamMetrics<S>, stats: &CourseStats<S>) -> bool {
    let lhs = team.statistic(atom.metric, atom.statistic);
    let rhs = operand_value(&atom.operand, stats);
    atom.comparator.holds(&lhs, &rhs)
}

fn eval_checked<S: Scalar>(
    expr: &FilterExpr,
    team: &TeamMetrics<S>,
    stats: &CourseStats<S>,
    store: &FilterStore,
) -> bool {
    match expr {
        FilterExpr::Atom(a) => atom_holds(a, team, stats),
        FilterExpr::And(cs) => cs.iter().all(|c| eval_checked(c, team, stats, store)),
        FilterExpr::Or(cs) => cs.iter().any(|c| eval_checked(c, team, stats, store)),
        FilterExpr::Not(c) => !eval_checked(c, team, stats, store),
        FilterExpr::Ref(name) => {
            let saved = store.lookup(name).expect("references checked before evaluation");
            eval_checked(&saved.expr, team, stats, store)
        }
    }
}

/// Evaluates `expr` for one team against a snapshot of the saved filters.
pub fn evaluate<S: Scalar>(
    expr: &FilterExpr,
    team: &TeamMetrics<S>,
    stats: &CourseStats<S>,
    store: &FilterStore,
) -> Result<bool, FilterError> {
    check_refs(expr, store)?;
    Ok(eval_checked(expr, team, stats, store))
}

/// Ids of the teams matching `expr`, ascending.
pub fn apply_filter<S: Scalar>(
    expr: &FilterExpr,
    teams: &[TeamMetrics<S>],
    stats: &CourseStats<S>,
    store: &FilterStore,
) -> Result<Vec<String>, FilterError> {
    check_refs(expr, store)?;
    let mut ids: Vec<String> = teams
        .iter()
        .filter(|t| eval_checked(expr, t, stats, store))
        .map(|t| t.team_id.clone())
        .collect();
    ids.sort();
    Ok(ids)
}
