use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Cmp, Expr, RuleError, SelectionRule};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Number(&'a str),
    Cmp(Cmp),
    LParen,
    RParen,
    Comma,
    Pipe,
    Amp,
    Minus,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Number(s) => format!("number {s}"),
            Tok::Cmp(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Minus => "'-'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(position: usize, expected: impl Into<String>) -> RuleError {
    RuleError::Syntax {
        position,
        expected: expected.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok<'_>)>, RuleError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b',' => out.push((start, Tok::Comma)),
            b'|' => out.push((start, Tok::Pipe)),
            b'&' => out.push((start, Tok::Amp)),
            b'-' => out.push((start, Tok::Minus)),
            b'>' | b'<' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let cmp = match (c, eq) {
                    (b'>', true) => Cmp::Ge,
                    (b'>', false) => Cmp::Gt,
                    (_, true) => Cmp::Le,
                    _ => Cmp::Lt,
                };
                if eq {
                    i += 1;
                }
                out.push((start, Tok::Cmp(cmp)));
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if !src[start..i].bytes().any(|b| b.is_ascii_digit()) {
                    return Err(syntax(start, "number"));
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let digits = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == digits {
                        return Err(syntax(j, "exponent digits"));
                    }
                    i = j;
                }
                out.push((start, Tok::Number(&src[start..i])));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(&src[start..i])));
                continue;
            }
            _ => {
                return Err(syntax(start, "a function, '(', operator or number"));
            }
        }
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok<'a> {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> RuleError {
        syntax(
            self.offset(),
            format!("{expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok<'a>, expected: &str) -> Result<(), RuleError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, RuleError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, RuleError> {
        let mut lhs = self.atom()?;
        loop {
            let op = match self.peek() {
                Tok::Amp => Expr::Intersect as fn(Box<Expr>, Box<Expr>) -> Expr,
                Tok::Minus => Expr::Difference,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.atom()?;
            lhs = op(Box::new(lhs), Box::new(rhs));
        }
    }

    fn atom(&mut self) -> Result<Expr, RuleError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => self.func(name),
            _ => Err(self.unexpected("a selector or '('")),
        }
    }

    fn func(&mut self, name: &str) -> Result<Expr, RuleError> {
        let at = self.offset();
        self.bump();
        self.expect(Tok::LParen, "'('")?;
        let e = match name {
            "top" => {
                let metric = self.metric()?;
                self.expect(Tok::Comma, "','")?;
                let k = self.int()?;
                Expr::Top { metric, k }
            }
            "pareto" => {
                let metric = self.metric()?;
                self.expect(Tok::Comma, "','")?;
                Expr::Pareto {
                    metric,
                    share: self.float()?,
                }
            }
            "fracmax" => {
                let metric = self.metric()?;
                self.expect(Tok::Comma, "','")?;
                Expr::FracMax {
                    metric,
                    fraction: self.float()?,
                }
            }
            "threshold" => {
                let metric = self.metric()?;
                self.expect(Tok::Comma, "','")?;
                let cmp = match self.peek() {
                    Tok::Cmp(c) => *c,
                    _ => return Err(self.unexpected("one of >=, >, <=, <")),
                };
                self.bump();
                self.expect(Tok::Comma, "','")?;
                Expr::Threshold {
                    metric,
                    cmp,
                    value: self.float()?,
                }
            }
            "all" => Expr::All,
            "none" => Expr::None,
            _ => {
                return Err(syntax(
                    at,
                    format!("one of top, pareto, threshold, fracmax, all, none, found {name:?}"),
                ))
            }
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(e)
    }

    fn metric(&mut self) -> Result<String, RuleError> {
        match self.peek() {
            Tok::Ident(m) => {
                let m = m.to_string();
                self.bump();
                Ok(m)
            }
            _ => Err(self.unexpected("metric identifier")),
        }
    }

    fn int(&mut self) -> Result<u32, RuleError> {
        match self.peek().clone() {
            Tok::Number(s) if s.bytes().all(|b| b.is_ascii_digit()) => {
                self.bump();
                s.parse()
                    .map_err(|_| RuleError::Domain(format!("integer {s} is too large")))
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn float(&mut self) -> Result<f64, RuleError> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Number(s) => {
                let at = self.offset();
                self.bump();
                let v: f64 = s.parse().map_err(|_| syntax(at, "number"))?;
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected("number")),
        }
    }
}

/// Parses rule text. Binary operators are left-associative; `&` and `-` bind
/// tighter than `|`.
pub fn parse_rule(text: &str) -> Result<SelectionRule, RuleError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let ast = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("operator or end of input"));
    }
    ast.check_domain()?;
    Ok(SelectionRule {
        source: text.into(),
        ast,
    })
}

/// Canonical text form of a rule.
pub fn render_rule(rule: &SelectionRule) -> String {
    render_expr(&rule.ast)
}

pub(crate) fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn is_union(e: &Expr) -> bool {
    matches!(e, Expr::Union(..))
}

fn is_binary(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Union(..) | Expr::Intersect(..) | Expr::Difference(..)
    )
}

fn write_operand(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Top { metric, k } => out.push_str(&format!("top({metric}, {k})")),
        Expr::Pareto { metric, share } => out.push_str(&format!("pareto({metric}, {share})")),
        Expr::FracMax { metric, fraction } => {
            out.push_str(&format!("fracmax({metric}, {fraction})"))
        }
        Expr::Threshold { metric, cmp, value } => {
            out.push_str(&format!("threshold({metric}, {cmp}, {value})"))
        }
        Expr::All => out.push_str("all()"),
        Expr::None => out.push_str("none()"),
        Expr::Union(l, r) => {
            write_operand(l, false, out);
            out.push_str(" | ");
            write_operand(r, is_union(r), out);
        }
        Expr::Intersect(l, r) | Expr::Difference(l, r) => {
            let op = if matches!(e, Expr::Intersect(..)) {
                " & "
            } else {
                " - "
            };
            write_operand(l, is_union(l), out);
            out.push_str(op);
            write_operand(r, is_binary(r), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Expr {
        parse_rule(s).unwrap().ast
    }

    #[test]
    fn selectors() {
        assert_eq!(parse("top(dc, 2)"), Expr::top("dc", 2));
        assert_eq!(parse("pareto(dc,0.8)"), Expr::pareto("dc", 0.8));
        assert_eq!(
            parse("threshold( dd , >= , 20 )"),
            Expr::threshold("dd", Cmp::Ge, 20.0)
        );
        assert_eq!(
            parse("threshold(x, <, -1.5e1)"),
            Expr::threshold("x", Cmp::Lt, -15.0)
        );
        assert_eq!(parse("fracmax(cx, .5)"), Expr::fracmax("cx", 0.5));
        assert_eq!(parse("all()"), Expr::All);
        assert_eq!(parse(" none ( ) "), Expr::None);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("pareto(dc, 0.8) | threshold(dd, >=, 20)"),
            Expr::pareto("dc", 0.8).union(Expr::threshold("dd", Cmp::Ge, 20.0))
        );
        // & binds tighter than |
        assert_eq!(
            parse("all() | top(a,1) & top(b,1)"),
            Expr::All.union(Expr::top("a", 1).intersect(Expr::top("b", 1)))
        );
        // left-associative at the same level
        assert_eq!(
            parse("all() - top(a,1) & top(b,1)"),
            Expr::All
                .difference(Expr::top("a", 1))
                .intersect(Expr::top("b", 1))
        );
        assert_eq!(
            parse("(all() | none()) & top(a, 3)"),
            Expr::All.union(Expr::None).intersect(Expr::top("a", 3))
        );
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "top(dc,",
            "top(dc, 2.5)",
            "top dc",
            "",
            "top(dc, 1) |",
            "top(dc, 1) top(dd, 1)",
            "bottom(dc, 1)",
            "threshold(dd, =, 1)",
            "pareto(dc, x)",
            "all() $",
            "(all()",
            "pareto(dc, 1e)",
        ] {
            match parse_rule(bad) {
                Err(RuleError::Syntax { .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
        match parse_rule("top(dc,") {
            Err(RuleError::Syntax { position, .. }) => assert_eq!(position, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_errors() {
        for bad in [
            "top(dc, 0)",
            "pareto(dc, 1.5)",
            "fracmax(dc, -0.1)",
            "threshold(dc, >, 1e999)",
            "top(dc, 99999999999)",
        ] {
            assert!(
                matches!(parse_rule(bad), Err(RuleError::Domain(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn rendering() {
        assert_eq!(
            render_rule(&parse_rule("top( dc ,2 )").unwrap()),
            "top(dc, 2)"
        );
        assert_eq!(render_rule(&parse_rule("all()").unwrap()), "all()");
        assert_eq!(
            render_rule(&parse_rule("threshold(dd,>=,20.0)").unwrap()),
            "threshold(dd, >=, 20)"
        );
        let cases = [
            "pareto(dc, 0.8) | threshold(dd, >=, 20)",
            "(top(a, 1) | top(b, 1)) & all()",
            "all() - (top(a, 1) - top(b, 1))",
            "all() - top(a, 1) - top(b, 1)",
            "top(a, 1) | (top(b, 1) | none())",
            "top(a, 1) & (top(b, 1) & none())",
        ];
        for c in cases {
            let r = parse_rule(c).unwrap();
            assert_eq!(render_rule(&r), c);
            assert_eq!(parse_rule(&render_rule(&r)).unwrap(), r);
        }
    }

    #[test]
    fn source_is_retained_verbatim() {
        let r = parse_rule("top( dc ,2 )").unwrap();
        assert_eq!(r.source, "top( dc ,2 )");
    }
}
