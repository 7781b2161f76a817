//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' unsigned-integer)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals with optional fraction and exponent. `pi` is
//! the only named constant. Offsets in errors are byte offsets into the input.

use thiserror::Error;

use super::space::VarSpace;
use super::{Expr, Func};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    UnknownFunction(String),
    Arity { function: String, expected: usize, got: usize },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{} at offset {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UnknownIdentifier(n) => format!("unknown identifier `{n}`"),
        ParseErrorKind::UnknownFunction(n) => format!("unknown function `{n}`"),
        ParseErrorKind::Arity { function, expected, got } => {
            format!("`{function}` takes {expected} argument(s), got {got}")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token with its starting offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut i = 0;
            let mut integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    integer = false;
                    i = j;
                }
            }
            let text = &rest[..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                offset: start,
            })?;
            self.pos += i;
            return Ok((Tok::Num { value, integer }, start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .char_indices()
                .find(|(_, ch)| !(ch.is_ascii_alphanumeric() || *ch == '_'))
                .map_or(rest.len(), |(k, _)| k);
            self.pos += len;
            return Ok((Tok::Ident(rest[..len].to_string()), start));
        }
        if "+-*/^(),".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ParseError { kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")), offset: start })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    space: &'a VarSpace,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, at) = self.lexer.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn syntax<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError { kind: ParseErrorKind::Syntax(msg.to_string()), offset: self.at })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    terms.push(self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    acc = acc * self.factor()?;
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    acc = Expr::quotient(acc, self.factor()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(-self.factor()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok == Tok::Sym('^') {
            self.bump()?;
            match self.tok {
                Tok::Num { value, integer: true } if value <= i32::MAX as f64 => {
                    self.bump()?;
                    return Ok(base.pow(value as i32));
                }
                _ => return self.syntax("expected unsigned integer exponent"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num { value, .. } => {
                self.bump()?;
                Ok(Expr::constant(value))
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::Sym('(') {
                    self.bump()?;
                    let mut args = vec![self.expr()?];
                    while self.tok == Tok::Sym(',') {
                        self.bump()?;
                        args.push(self.expr()?);
                    }
                    if self.tok != Tok::Sym(')') {
                        return self.syntax("expected `)`");
                    }
                    self.bump()?;
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError { kind: ParseErrorKind::UnknownFunction(name), offset: at });
                    };
                    if args.len() != 1 {
                        return Err(ParseError {
                            kind: ParseErrorKind::Arity { function: name, expected: 1, got: args.len() },
                            offset: at,
                        });
                    }
                    return Ok(Expr::func(f, args.pop().unwrap()));
                }
                if let Some(i) = self.space.index_of(&name) {
                    return Ok(Expr::var(i));
                }
                if name == "pi" {
                    return Ok(Expr::constant(std::f64::consts::PI));
                }
                Err(ParseError { kind: ParseErrorKind::UnknownIdentifier(name), offset: at })
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                if self.tok != Tok::Sym(')') {
                    return self.syntax("expected `)`");
                }
                self.bump()?;
                Ok(e)
            }
            Tok::End => self.syntax("unexpected end of input"),
            Tok::Sym(c) => self.syntax(&format!("unexpected `{c}`")),
        }
    }
}

/// Parses `text` over the coordinates of `space`.
pub fn parse_expr(text: &str, space: &VarSpace) -> Result<Expr, ParseError> {
    let mut p = Parser { lexer: Lexer { src: text, pos: 0 }, tok: Tok::End, at: 0, space };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x3() -> VarSpace {
        VarSpace::indexed("x", 3)
    }

    #[test]
    fn evaluates_examples() {
        let s = x3();
        let e = parse_expr("x1*x2 + sin(x3)", &s).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0, 0.0]).unwrap(), 2.0);
        let e = parse_expr("x1^2 - -x1", &s).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), 12.0);
        let e = parse_expr("-x1^2", &s).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse_expr("2*pi - 1.5e1/x2", &s).unwrap();
        assert!((e.eval(&[0.0, 3.0, 0.0]).unwrap() - (2.0 * std::f64::consts::PI - 5.0)).abs() < 1e-15);
    }

    #[test]
    fn error_offsets() {
        let s = x3();
        let err = parse_expr("x1 +", &s).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        let err = parse_expr("x1 + y", &s).unwrap_err();
        assert_eq!(err, ParseError { kind: ParseErrorKind::UnknownIdentifier("y".into()), offset: 5 });
        let err = parse_expr("sin(x1, x2)", &s).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { expected: 1, got: 2, .. }));
        let err = parse_expr("tan(x1)", &s).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownFunction(_)));
        assert!(parse_expr("x1^2.5", &s).is_err());
        assert!(parse_expr("x1^-2", &s).is_err());
        assert!(parse_expr("(x1", &s).is_err());
        assert!(parse_expr("x1 x2", &s).is_err());
        assert!(parse_expr("x1 $", &s).is_err());
    }
}
