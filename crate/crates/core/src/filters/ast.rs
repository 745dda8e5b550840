use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::metrics::TeamStatistic;
use crate::model::MetricKind;
use crate::scalar::Scalar;

/// Exact decimal literal, `units / 10^scale`, kept normalized (no trailing
/// fractional zeros) so that equal values compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    units: i64,
    scale: u32,
}

pub(crate) const MAX_SCALE: u32 = 18;

impl Decimal {
    pub const ONE: Decimal = Decimal { units: 1, scale: 0 };
    pub const ZERO: Decimal = Decimal { units: 0, scale: 0 };

    /// `units / 10^scale`. Returns `None` if `scale` exceeds 18.
    pub fn new(units: i64, scale: u32) -> Option<Self> {
        (scale <= MAX_SCALE).then(|| Self { units, scale }.normalized())
    }

    /// Caller guarantees the pair is already normalized.
    pub(crate) const fn raw(units: i64, scale: u32) -> Self {
        Self { units, scale }
    }

    pub fn from_int(n: i64) -> Self {
        Self { units: n, scale: 0 }
    }

    fn normalized(mut self) -> Self {
        if self.units == 0 {
            self.scale = 0;
        }
        while self.scale > 0 && self.units % 10 == 0 {
            self.units /= 10;
            self.scale -= 1;
        }
        self
    }

    pub fn is_positive(&self) -> bool {
        self.units > 0
    }

    /// Exact value as `(numerator, denominator)`.
    pub fn as_ratio(&self) -> (i64, i64) {
        (self.units, 10i64.pow(self.scale))
    }

    pub fn to_scalar<S: Scalar>(&self) -> S {
        let (n, d) = self.as_ratio();
        S::from_ratio(n, d)
    }

    /// Parses `-?digits(.digits)?`.
    pub fn parse(text: &str) -> Option<Self> {
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty()
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (body.contains('.') && frac.is_empty())
        {
            return None;
        }
        let frac = frac.trim_end_matches('0');
        let scale = u32::try_from(frac.len()).ok().filter(|s| *s <= MAX_SCALE)?;
        let digits = format!("{whole}{frac}");
        let units: i64 = digits.parse().ok()?;
        Some(Self { units: if negative { -units } else { units }, scale }.normalized())
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.units);
        }
        let sign = if self.units < 0 { "-" } else { "" };
        let abs = self.units.unsigned_abs();
        let div = 10u64.pow(self.scale);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / div,
            abs % div,
            width = self.scale as usize
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
        Comparator::Eq,
        Comparator::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Center {
    Mean,
    Median,
}

impl Center {
    pub fn as_str(self) -> &'static str {
        match self {
            Center::Mean => "mean",
            Center::Median => "median",
        }
    }
}

/// Which team statistic a baseline summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineOf {
    Totals,
    Diffs,
}

impl BaselineOf {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineOf::Totals => "total",
            BaselineOf::Diffs => "diff",
        }
    }
}

/// `course.<center>.<of>.<metric> [* scale]`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Baseline {
    pub center: Center,
    pub of: BaselineOf,
    pub metric: MetricKind,
    pub scale: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Literal(Decimal),
    Baseline(Baseline),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub metric: MetricKind,
    pub statistic: TeamStatistic,
    pub comparator: Comparator,
    pub operand: Operand,
}

/// Boolean predicate over one team's metrics and the course baselines.
///
/// `And`/`Or` are n-ary; the parser never produces them with fewer than two
/// children.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FilterExpr {
    Atom(Atom),
    And(Vec<FilterExpr>),
    Or(Vec<FilterExpr>),
    Not(Box<FilterExpr>),
    Ref(String),
}

impl FilterExpr {
    pub fn atom(metric: MetricKind, statistic: TeamStatistic, comparator: Comparator, operand: Operand) -> Self {
        FilterExpr::Atom(Atom {
            metric,
            statistic,
            comparator,
            operand,
        })
    }

    /// Conjunction; a single child is returned as is.
    pub fn and(mut children: Vec<FilterExpr>) -> Self {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            FilterExpr::And(children)
        }
    }

    /// Disjunction; a single child is returned as is.
    pub fn or(mut children: Vec<FilterExpr>) -> Self {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            FilterExpr::Or(children)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: FilterExpr) -> Self {
        FilterExpr::Not(Box::new(child))
    }

    /// Names referenced anywhere in this tree (not following references).
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            FilterExpr::Atom(_) => {}
            FilterExpr::And(cs) | FilterExpr::Or(cs) => cs.iter().for_each(|c| c.collect_refs(out)),
            FilterExpr::Not(c) => c.collect_refs(out),
            FilterExpr::Ref(name) => out.push(name),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            FilterExpr::Atom(_) | FilterExpr::Ref(_) => 1,
            FilterExpr::And(cs) | FilterExpr::Or(cs) => 1 + cs.iter().map(Self::depth).max().unwrap_or(0),
            FilterExpr::Not(c) => 1 + c.depth(),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(d) => write!(f, "{d}"),
            Operand::Baseline(b) => {
                write!(f, "course.{}.{}.{}", b.center.as_str(), b.of.as_str(), b.metric)?;
                if b.scale != Decimal::ONE {
                    write!(f, " * {}", b.scale)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{} {} {}",
            self.metric,
            self.statistic,
            self.comparator.symbol(),
            self.operand
        )
    }
}

/// Canonical text form; parsing it yields an equal tree.
impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, children: &[FilterExpr], sep: &str, is_and: bool) -> fmt::Result {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                // nested groups of either kind must keep their own parentheses
                // to survive re-parsing; only an And inside an Or binds tighter
                let wrap = match c {
                    FilterExpr::Or(_) => true,
                    FilterExpr::And(_) => is_and,
                    _ => false,
                };
                if wrap {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
        match self {
            FilterExpr::Atom(a) => write!(f, "{a}"),
            FilterExpr::Ref(name) => write!(f, "@{name}"),
            FilterExpr::Not(c) => match **c {
                FilterExpr::And(_) | FilterExpr::Or(_) => write!(f, "not ({c})"),
                _ => write!(f, "not {c}"),
            },
            FilterExpr::And(cs) => join(f, cs, "and", true),
            FilterExpr::Or(cs) => join(f, cs, "or", false),
        }
    }
}

impl Serialize for FilterExpr {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FilterExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_filter(&text).map_err(serde::de::Error::custom)
    }
}
