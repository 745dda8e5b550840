//! Recursive-descent parser for filter text.
//!
//! ```text
//! expr    := or
//! or      := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | "(" expr ")" | atom | "@" name
//! atom    := metric "." stat cmp operand
//! operand := number | "course" "." ("mean"|"median") "." ("total"|"diff") "." metric ["*" number]
//! ```
//!
//! Keywords are case-insensitive and whitespace is insignificant.

use super::ast::{Atom, Baseline, BaselineOf, Center, Comparator, Decimal, FilterExpr, Operand};
use super::FilterError;
use crate::metrics::TeamStatistic;
use crate::model::MetricKind;

const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(Decimal),
    Ref(String),
    Dot,
    Star,
    LParen,
    RParen,
    Cmp(Comparator),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(d) => format!("number {d}"),
            Tok::Ref(n) => format!("`@{n}`"),
            Tok::Dot => "`.`".into(),
            Tok::Star => "`*`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::End => "end of input".into(),
        }
    }
}

pub(crate) fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FilterError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match b {
            b'.' => {
                i += 1;
                Tok::Dot
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'<' | b'>' | b'=' | b'!' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let cmp = match (b, two) {
                    (b'<', false) => Comparator::Lt,
                    (b'<', true) => Comparator::Le,
                    (b'>', false) => Comparator::Gt,
                    (b'>', true) => Comparator::Ge,
                    (b'=', true) => Comparator::Eq,
                    (b'!', true) => Comparator::Ne,
                    _ => {
                        return Err(FilterError::Syntax {
                            offset: start,
                            message: format!("unexpected `{}`; comparators are <, <=, >, >=, ==, !=", b as char),
                        })
                    }
                };
                i += if two { 2 } else { 1 };
                Tok::Cmp(cmp)
            }
            b'@' => {
                i += 1;
                while i < bytes.len() && is_name_byte(bytes[i]) {
                    i += 1;
                }
                if i == start + 1 {
                    return Err(FilterError::Syntax {
                        offset: start,
                        message: "expected a filter name after `@`".into(),
                    });
                }
                Tok::Ref(text[start + 1..i].to_string())
            }
            b'0'..=b'9' | b'-' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lexeme = &text[start..i];
                let value = Decimal::parse(lexeme).ok_or_else(|| FilterError::Syntax {
                    offset: start,
                    message: format!("invalid number `{lexeme}`"),
                })?;
                Tok::Number(value)
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(FilterError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        toks.push((tok, start));
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> FilterError {
        FilterError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), FilterError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, usize), FilterError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let off = self.offset();
                self.bump();
                Ok((s, off))
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn keyword(&mut self, options: &[&str], wanted: &str) -> Result<usize, FilterError> {
        let (word, off) = self.ident(wanted)?;
        options
            .iter()
            .position(|o| o.eq_ignore_ascii_case(&word))
            .ok_or(FilterError::Syntax {
                offset: off,
                message: format!("expected {wanted}, found `{word}`"),
            })
    }

    fn metric(&mut self) -> Result<MetricKind, FilterError> {
        let (name, offset) = self.ident("a metric")?;
        name.parse()
            .map_err(|_| FilterError::UnknownMetric { name, offset })
    }

    fn expr(&mut self) -> Result<FilterExpr, FilterError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(FilterError::Syntax {
                offset: self.offset(),
                message: "expression nested too deeply".into(),
            });
        }
        let result = self.or();
        self.nesting -= 1;
        result
    }

    fn or(&mut self) -> Result<FilterExpr, FilterError> {
        let mut children = vec![self.and()?];
        while self.at_keyword("or") {
            self.bump();
            children.push(self.and()?);
        }
        Ok(FilterExpr::or(children))
    }

    fn and(&mut self) -> Result<FilterExpr, FilterError> {
        let mut children = vec![self.unary()?];
        while self.at_keyword("and") {
            self.bump();
            children.push(self.unary()?);
        }
        Ok(FilterExpr::and(children))
    }

    fn unary(&mut self) -> Result<FilterExpr, FilterError> {
        match self.peek().clone() {
            Tok::Ident(s) if s.eq_ignore_ascii_case("not") => {
                self.bump();
                self.nesting += 1;
                if self.nesting > MAX_NESTING {
                    return Err(FilterError::Syntax {
                        offset: self.offset(),
                        message: "expression nested too deeply".into(),
                    });
                }
                let inner = self.unary();
                self.nesting -= 1;
                Ok(FilterExpr::not(inner?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ref(name) => {
                self.bump();
                Ok(FilterExpr::Ref(name))
            }
            Tok::Ident(_) => self.atom().map(FilterExpr::Atom),
            _ => Err(self.unexpected("a condition, `not`, `(` or `@name`")),
        }
    }

    fn atom(&mut self) -> Result<Atom, FilterError> {
        let metric = self.metric()?;
        self.expect(Tok::Dot, "`.` after the metric")?;
        let (stat_name, offset) = self.ident("a statistic")?;
        let statistic: TeamStatistic = stat_name
            .parse()
            .map_err(|_| FilterError::UnknownStat { name: stat_name, offset })?;
        let comparator = match self.peek() {
            Tok::Cmp(c) => {
                let c = *c;
                self.bump();
                c
            }
            _ => return Err(self.unexpected("a comparator")),
        };
        let operand = self.operand()?;
        Ok(Atom {
            metric,
            statistic,
            comparator,
            operand,
        })
    }

    fn operand(&mut self) -> Result<Operand, FilterError> {
        match self.peek().clone() {
            Tok::Number(d) => {
                self.bump();
                Ok(Operand::Literal(d))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("course") => {
                self.bump();
                self.expect(Tok::Dot, "`.`")?;
                let center = [Center::Mean, Center::Median][self.keyword(&["mean", "median"], "`mean` or `median`")?];
                self.expect(Tok::Dot, "`.`")?;
                let of = [BaselineOf::Totals, BaselineOf::Diffs][self.keyword(&["total", "diff"], "`total` or `diff`")?];
                self.expect(Tok::Dot, "`.`")?;
                let metric = self.metric()?;
                let mut scale = Decimal::ONE;
                if *self.peek() == Tok::Star {
                    self.bump();
                    let off = self.offset();
                    match self.bump().0 {
                        Tok::Number(d) if d.is_positive() => scale = d,
                        Tok::Number(_) => {
                            return Err(FilterError::Syntax {
                                offset: off,
                                message: "baseline scale must be positive".into(),
                            })
                        }
                        other => {
                            return Err(FilterError::Syntax {
                                offset: off,
                                message: format!("expected a number, found {}", other.describe()),
                            })
                        }
                    }
                }
                Ok(Operand::Baseline(Baseline {
                    center,
                    of,
                    metric,
                    scale,
                }))
            }
            _ => Err(self.unexpected("a number or `course.` baseline")),
        }
    }
}

/// Parses filter text into an expression tree.
pub fn parse_filter(text: &str) -> Result<FilterExpr, FilterError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        nesting: 0,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.unexpected("`and`, `or` or end of input"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(e: &FilterExpr) -> usize {
        match e {
            FilterExpr::Atom(_) => 1,
            FilterExpr::And(cs) | FilterExpr::Or(cs) => cs.iter().map(atoms).sum(),
            FilterExpr::Not(c) => atoms(c),
            FilterExpr::Ref(_) => 0,
        }
    }

    #[test]
    fn struggling_team_query() {
        let e = parse_filter("commits.total < 5 and posts.total == 0 and tickets.total == 0").unwrap();
        match &e {
            FilterExpr::And(cs) => {
                assert_eq!(cs.len(), 3);
                assert!(cs.iter().all(|c| matches!(c, FilterExpr::Atom(_))));
            }
            other => panic!("expected And, got {other:?}"),
        }
    }

    #[test]
    fn normdiff_query() {
        let e = parse_filter("commits.normdiff >= 0.9").unwrap();
        assert_eq!(
            e,
            FilterExpr::atom(
                MetricKind::Commits,
                TeamStatistic::NormDiff,
                Comparator::Ge,
                Operand::Literal(Decimal::new(9, 1).unwrap())
            )
        );
    }

    #[test]
    fn forum_without_office_hours() {
        let e = parse_filter("posts.total > 0 and tickets.total == 0").unwrap();
        assert!(matches!(&e, FilterExpr::And(cs) if cs.len() == 2));
    }

    #[test]
    fn incomplete_atom_points_at_end() {
        let text = "commits.total <";
        match parse_filter(text) {
            Err(FilterError::Syntax { offset, .. }) => assert_eq!(offset, text.len()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_names() {
        assert_eq!(
            parse_filter("grades.total > 1"),
            Err(FilterError::UnknownMetric { name: "grades".into(), offset: 0 })
        );
        assert_eq!(
            parse_filter("posts.avg > 1"),
            Err(FilterError::UnknownStat { name: "avg".into(), offset: 6 })
        );
        assert!(matches!(
            parse_filter("posts.total > course.mean.total.grades"),
            Err(FilterError::UnknownMetric { offset: 32, .. })
        ));
    }

    #[test]
    fn precedence() {
        let e = parse_filter("not posts.total > 0 and replies.total > 0 or @x").unwrap();
        let FilterExpr::Or(top) = &e else { panic!("{e:?}") };
        assert_eq!(top.len(), 2);
        let FilterExpr::And(left) = &top[0] else { panic!("{e:?}") };
        assert!(matches!(left[0], FilterExpr::Not(_)));
        assert_eq!(top[1], FilterExpr::Ref("x".into()));
    }

    #[test]
    fn keywords_case_insensitive_and_whitespace_free() {
        let a = parse_filter("COMMITS.Total>=course.MEDIAN.total.commits*1.25 AND NOT(@silent)").unwrap();
        let b = parse_filter("commits.total >= course.median.total.commits * 1.25 and not @silent").unwrap();
        assert_eq!(a, b);
        assert_eq!(atoms(&a), 1);
    }

    #[test]
    fn baseline_operand() {
        let e = parse_filter("additions.diff > course.mean.diff.additions * 2").unwrap();
        let FilterExpr::Atom(a) = e else { panic!() };
        assert_eq!(
            a.operand,
            Operand::Baseline(Baseline {
                center: Center::Mean,
                of: BaselineOf::Diffs,
                metric: MetricKind::Additions,
                scale: Decimal::from_int(2),
            })
        );
    }

    #[test]
    fn syntax_errors() {
        for (text, offset) in [
            ("", 0),
            ("(posts.total > 1", 16),
            ("posts.total > 1 posts.total > 2", 16),
            ("posts.total = 1", 12),
            ("posts total > 1", 6),
            ("posts.total > course.mean.total.posts * 0", 40),
            ("posts.total > course.mode.total.posts", 21),
            ("@", 0),
            ("posts.total > 1 and", 19),
            ("posts.total > 1.", 14),
        ] {
            match parse_filter(text) {
                Err(FilterError::Syntax { offset: got, .. }) => assert_eq!(got, offset, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let text = format!("{}posts.total > 1{}", "(".repeat(5000), ")".repeat(5000));
        assert!(matches!(parse_filter(&text), Err(FilterError::Syntax { .. })));
        let text = format!("{}posts.total > 1", "not ".repeat(5000));
        assert!(matches!(parse_filter(&text), Err(FilterError::Syntax { .. })));
    }
}
