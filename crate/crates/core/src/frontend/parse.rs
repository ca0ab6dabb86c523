use std::fmt;
use std::sync::Arc;

use crate::model::{BinOp, Expr, ProjIndex};

/// Maximum list nesting accepted by the parser.
pub const MAX_NESTING: usize = 1_000;

const KEYWORDS: [&str; 11] = [
    "+", "scalel", "scaler", "if0", "pair", "proj", "lam", "app", "ref", "read", "write",
];

/// Byte range `[start, end)` in the program text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn new(start: usize, end: usize) -> SourceSpan {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {span}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl ParseError {
    fn new(span: SourceSpan, message: impl Into<String>) -> ParseError {
        ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expecting(mut self, expected: &[&str]) -> ParseError {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

#[derive(Debug)]
enum Token<'a> {
    Open(usize),
    Close(usize),
    Atom(&'a str, SourceSpan),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                tokens.push(Token::Open(i));
                i += 1;
            }
            b')' => {
                tokens.push(Token::Close(i));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';')
                {
                    i += 1;
                }
                tokens.push(Token::Atom(&text[start..i], SourceSpan::new(start, i)));
            }
        }
    }
    tokens
}

/// Generic s-expression, built without recursion.
#[derive(Debug)]
enum Sexp<'a> {
    Atom(&'a str, SourceSpan),
    List(Vec<Sexp<'a>>, SourceSpan),
}

impl Sexp<'_> {
    fn span(&self) -> SourceSpan {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }
}

fn read_sexp<'a>(text: &'a str) -> Result<Sexp<'a>, ParseError> {
    let mut open: Vec<(usize, Vec<Sexp<'a>>)> = Vec::new();
    let mut done: Option<Sexp<'a>> = None;
    for token in tokenize(text) {
        if let Some(prev) = &done {
            let at = match token {
                Token::Open(p) | Token::Close(p) => SourceSpan::new(p, p + 1),
                Token::Atom(_, s) => s,
            };
            return Err(ParseError::new(
                at,
                format!("unexpected input after complete expression ending at {}", prev.span().end),
            )
            .expecting(&["end of input"]));
        }
        let finished = match token {
            Token::Open(p) => {
                if open.len() >= MAX_NESTING {
                    return Err(ParseError::new(
                        SourceSpan::new(p, p + 1),
                        format!("nesting deeper than {MAX_NESTING}"),
                    ));
                }
                open.push((p, Vec::new()));
                None
            }
            Token::Close(p) => match open.pop() {
                Some((start, items)) => Some(Sexp::List(items, SourceSpan::new(start, p + 1))),
                None => {
                    return Err(ParseError::new(SourceSpan::new(p, p + 1), "unbalanced `)`")
                        .expecting(&["(", "number", "identifier"]))
                }
            },
            Token::Atom(a, s) => Some(Sexp::Atom(a, s)),
        };
        if let Some(sexp) = finished {
            match open.last_mut() {
                Some((_, items)) => items.push(sexp),
                None => done = Some(sexp),
            }
        }
    }
    if let Some((start, _)) = open.last() {
        return Err(ParseError::new(SourceSpan::new(*start, text.len()), "unclosed `(`")
            .expecting(&[")"]));
    }
    done.ok_or_else(|| {
        ParseError::new(SourceSpan::new(text.len(), text.len()), "empty program")
            .expecting(&["(", "number", "identifier"])
    })
}

fn is_identifier(atom: &str) -> bool {
    let mut chars = atom.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '-' | '.'))
}

fn looks_numeric(atom: &str) -> bool {
    let rest = atom.strip_prefix(['+', '-']).unwrap_or(atom);
    rest.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

fn atom_expr(atom: &str, span: SourceSpan) -> Result<Expr, ParseError> {
    if looks_numeric(atom) {
        return match atom.parse::<f64>() {
            Ok(r) if r.is_finite() => Ok(Expr::Real(r)),
            Ok(_) => Err(ParseError::new(span, format!("numeric literal {atom:?} is not finite"))),
            Err(_) => Err(ParseError::new(span, format!("malformed number {atom:?}")).expecting(&["number"])),
        };
    }
    Ok(Expr::Var(identifier(atom, span)?))
}

fn identifier(atom: &str, span: SourceSpan) -> Result<Arc<str>, ParseError> {
    if KEYWORDS.contains(&atom) {
        return Err(ParseError::new(span, format!("keyword `{atom}` used as an identifier"))
            .expecting(&["identifier"]));
    }
    if !is_identifier(atom) {
        return Err(ParseError::new(span, format!("invalid identifier {atom:?}")).expecting(&["identifier"]));
    }
    Ok(Arc::from(atom))
}

/// Checks the head, arity and non-expression arguments of a form and returns
/// the keyword plus the sub-expressions to convert.
fn check_form<'s, 'a>(items: &'s [Sexp<'a>], span: SourceSpan) -> Result<(&'a str, &'s [Sexp<'a>]), ParseError> {
    let Some((head, args)) = items.split_first() else {
        return Err(ParseError::new(span, "empty form").expecting(&KEYWORDS));
    };
    let keyword = match head {
        Sexp::Atom(a, _) if KEYWORDS.contains(a) => *a,
        other => {
            return Err(ParseError::new(other.span(), "form must start with a keyword").expecting(&KEYWORDS))
        }
    };
    let arity = match keyword {
        "if0" => 3,
        "ref" | "read" => 1,
        _ => 2,
    };
    if args.len() != arity {
        return Err(ParseError::new(
            span,
            format!("`{keyword}` takes {arity} argument(s), found {}", args.len()),
        ));
    }
    match keyword {
        "proj" => {
            let index = match &args[0] {
                Sexp::Atom(a, _) => a.parse::<u64>().ok().and_then(ProjIndex::from_number),
                Sexp::List(..) => None,
            };
            if index.is_none() {
                return Err(
                    ParseError::new(args[0].span(), "projection index must be 1 or 2").expecting(&["1", "2"])
                );
            }
            Ok((keyword, &args[1..]))
        }
        "lam" => {
            match &args[0] {
                Sexp::Atom(a, s) => {
                    identifier(a, *s)?;
                }
                Sexp::List(_, s) => {
                    return Err(ParseError::new(*s, "lambda parameter must be an identifier")
                        .expecting(&["identifier"]))
                }
            }
            Ok((keyword, &args[1..]))
        }
        _ => Ok((keyword, args)),
    }
}

enum Task<'s, 'a> {
    Visit(&'s Sexp<'a>),
    Build(&'a str, &'s [Sexp<'a>]),
}

fn to_expr(root: &Sexp<'_>) -> Result<Expr, ParseError> {
    let mut tasks = vec![Task::Visit(root)];
    let mut done: Vec<Expr> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(Sexp::Atom(a, s)) => done.push(atom_expr(a, *s)?),
            Task::Visit(Sexp::List(items, span)) => {
                let (keyword, subs) = check_form(items, *span)?;
                tasks.push(Task::Build(keyword, &items[1..]));
                tasks.extend(subs.iter().rev().map(Task::Visit));
            }
            Task::Build(keyword, args) => {
                let n = match keyword {
                    "if0" => 3,
                    "ref" | "read" | "proj" | "lam" => 1,
                    _ => 2,
                };
                let mut subs = done.split_off(done.len() - n).into_iter().map(Arc::new);
                let mut next = || subs.next().expect("sub-expressions were built");
                let expr = match keyword {
                    "+" => Expr::BinOp(BinOp::Plus, next(), next()),
                    "scalel" => Expr::BinOp(BinOp::TimesL, next(), next()),
                    "scaler" => Expr::BinOp(BinOp::TimesR, next(), next()),
                    "if0" => Expr::If0(next(), next(), next()),
                    "pair" => Expr::Pair(next(), next()),
                    "proj" => {
                        let Sexp::Atom(a, _) = &args[0] else { unreachable!("checked in check_form") };
                        let index = a.parse::<u64>().ok().and_then(ProjIndex::from_number);
                        Expr::Proj(index.expect("checked in check_form"), next())
                    }
                    "lam" => {
                        let Sexp::Atom(a, _) = &args[0] else { unreachable!("checked in check_form") };
                        Expr::Lam(Arc::from(*a), next())
                    }
                    "app" => Expr::App(next(), next()),
                    "ref" => Expr::Ref(next()),
                    "read" => Expr::Read(next()),
                    "write" => Expr::Write(next(), next()),
                    _ => unreachable!("keyword list and match arms agree"),
                };
                done.push(expr);
            }
        }
    }
    Ok(done.pop().expect("root expression was built"))
}

/// Parses a program in s-expression syntax.
///
/// ```text
/// e ::= number | ident
///     | (+ e e) | (scalel e e) | (scaler e e) | (if0 e e e)
///     | (pair e e) | (proj 1 e) | (proj 2 e) | (lam ident e) | (app e e)
///     | (ref e) | (read e) | (write e e)
/// ```
///
/// `;` starts a comment that runs to the end of the line.
pub fn parse_program(text: &str) -> Result<Expr, ParseError> {
    to_expr(&read_sexp(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_forms() {
        assert_eq!(
            parse_program("(+ x x)").unwrap(),
            Expr::plus(Expr::var("x"), Expr::var("x"))
        );
        assert_eq!(
            parse_program("(app (lam y (+ y y)) x)").unwrap(),
            Expr::app(Expr::lam("y", Expr::plus(Expr::var("y"), Expr::var("y"))), Expr::var("x"))
        );
        assert_eq!(
            parse_program("  ; comment\n (scalel -2.5 (read r)) ; trailing\n").unwrap(),
            Expr::times_l(Expr::real(-2.5), Expr::read(Expr::var("r")))
        );
    }

    #[test]
    fn projection_index_must_be_one_or_two() {
        let err = parse_program("(proj 3 x)").unwrap_err();
        assert_eq!(err.span, SourceSpan { start: 6, end: 7 });
        assert_eq!(err.expected, vec!["1", "2"]);
        assert!(parse_program("(proj 2 x)").is_ok());
    }

    #[test]
    fn located_errors() {
        let cases = [
            ("", 0, 0),
            ("(+ x", 0, 4),
            ("(+ x x))", 7, 8),
            (")", 0, 1),
            ("()", 0, 2),
            ("(foo x)", 1, 4),
            ("(+ x)", 0, 5),
            ("(lam + x)", 5, 6),
            ("(lam (x) x)", 5, 8),
            ("1e999", 0, 5),
            ("1.2.3", 0, 5),
            ("x y", 2, 3),
            ("(+ x #)", 5, 6),
        ];
        for (text, start, end) in cases {
            let err = parse_program(text).unwrap_err();
            assert_eq!(err.span, SourceSpan { start, end }, "{text:?}: {err}");
        }
    }

    #[test]
    fn nesting_limit() {
        let deep = "(ref ".repeat(MAX_NESTING + 1) + "0" + &")".repeat(MAX_NESTING + 1);
        assert!(parse_program(&deep).unwrap_err().message.contains("nesting"));
        let ok = "(ref ".repeat(MAX_NESTING - 1) + "0" + &")".repeat(MAX_NESTING - 1);
        assert!(parse_program(&ok).is_ok());
    }
}
