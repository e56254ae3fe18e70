//! Recursive-descent parser for the concrete syntax:
//!
//! ```text
//! term   := ('\' | 'λ') ident+ '.' term | choice
//! choice := app (('(+)' | '⊕') (app | lambda))*
//! app    := atom+ lambda?
//! atom   := ident | CONST | 'NAT' number | '(' term ')'
//! ```
//!
//! Application binds tighter than choice, choice associates to the left and
//! a lambda extends as far to the right as possible. `--` starts a comment.
//! Upper-case constant names (`OMEGA`, `TT`, `GEO`, ...) are expanded from
//! [`crate::encodings::constants`].

use super::term::grow;
use super::{abs, app, choice, Term};
use crate::encodings;
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    Plus,
    Ident(String),
    Number(u64),
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '#'
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let mut chars = src.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            match c {
                c if c.is_whitespace() => {
                    chars.next();
                }
                '-' if src[i..].starts_with("--") => {
                    while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                        chars.next();
                    }
                }
                '\\' | 'λ' => {
                    chars.next();
                    lx.toks.push((Tok::Lambda, i));
                }
                '.' => {
                    chars.next();
                    lx.toks.push((Tok::Dot, i));
                }
                '⊕' => {
                    chars.next();
                    lx.toks.push((Tok::Plus, i));
                }
                '(' if src[i..].starts_with("(+)") => {
                    for _ in 0..3 {
                        chars.next();
                    }
                    lx.toks.push((Tok::Plus, i));
                }
                '(' => {
                    chars.next();
                    lx.toks.push((Tok::LParen, i));
                }
                ')' => {
                    chars.next();
                    lx.toks.push((Tok::RParen, i));
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    let mut end = i;
                    while let Some(&(j, d)) = chars.peek() {
                        if !d.is_ascii_digit() {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    let n = src[start..end].parse().map_err(|_| lx.error(start, "number out of range"))?;
                    lx.toks.push((Tok::Number(n), start));
                }
                c if is_ident_start(c) => {
                    let start = i;
                    let mut end = i;
                    while let Some(&(j, d)) = chars.peek() {
                        if !is_ident_char(d) {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    lx.toks.push((Tok::Ident(src[start..end].to_string()), start));
                }
                other => return Err(lx.error(i, &format!("unexpected character `{other}`"))),
            }
        }
        Ok(lx.toks)
    }

    fn error(&self, offset: usize, message: &str) -> ParseError {
        make_error(self.src, offset, message)
    }
}

fn make_error(src: &str, offset: usize, message: &str) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError { offset, line, column, message: message.to_string() }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(_, o)| *o)
    }

    fn error(&self, message: &str) -> ParseError {
        make_error(self.src, self.offset(), message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        grow(|| if self.peek() == Some(&Tok::Lambda) { self.lambda() } else { self.choice() })
    }

    fn lambda(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Lambda, "`\\`")?;
        let mut binders = Vec::new();
        while let Some(Tok::Ident(x)) = self.peek() {
            if encodings::is_constant_name(x) {
                return Err(self.error(&format!("constant `{x}` cannot be bound")));
            }
            binders.push(x.clone());
            self.pos += 1;
        }
        if binders.is_empty() {
            return Err(self.error("expected a binder after `\\`"));
        }
        self.expect(Tok::Dot, "`.` after binders")?;
        let body = self.term()?;
        Ok(binders.iter().rev().fold(body, |acc, b| abs(b, acc)))
    }

    fn choice(&mut self) -> Result<Term, ParseError> {
        let mut left = self.app()?;
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            let right = if self.peek() == Some(&Tok::Lambda) { self.lambda()? } else { self.app()? };
            left = choice(left, right);
        }
        Ok(left)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut head = match self.atom()? {
            Some(t) => t,
            None => return Err(self.error("expected a term")),
        };
        loop {
            if self.peek() == Some(&Tok::Lambda) {
                let arg = self.lambda()?;
                return Ok(app(head, arg));
            }
            match self.atom()? {
                Some(arg) => head = app(head, arg),
                None => return Ok(head),
            }
        }
    }

    fn atom(&mut self) -> Result<Option<Term>, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Some(t))
            }
            Some(Tok::Ident(x)) if x == "NAT" => {
                self.pos += 1;
                match self.peek() {
                    Some(&Tok::Number(n)) => {
                        self.pos += 1;
                        Ok(Some(encodings::nat(n)))
                    }
                    _ => Err(self.error("expected a number after NAT")),
                }
            }
            Some(Tok::Ident(x)) => {
                self.pos += 1;
                match encodings::constant(&x) {
                    Some(t) => Ok(Some(t)),
                    None => Ok(Some(Term::Var(x.as_str().into()))),
                }
            }
            Some(Tok::Number(_)) => Err(self.error("numbers may only follow NAT")),
            _ => Ok(None),
        }
    }
}

/// Parses a term. Open terms are accepted; evaluation rejects them later.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

/// Parses a corpus: one term per line, blank lines and `--` comments
/// skipped. Returns `(line number, term)` pairs.
pub fn parse_corpus(src: &str) -> Result<Vec<(usize, Term)>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let code = line.split("--").next().unwrap_or("");
        if code.trim().is_empty() {
            continue;
        }
        let t = parse(code).map_err(|mut e| {
            e.line = i + 1;
            e
        })?;
        out.push((i + 1, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, app_many, var};

    #[test]
    fn identity() {
        assert_eq!(parse("\\x. x").unwrap(), abs("x", var("x")));
        assert_eq!(parse("λx.x").unwrap(), abs("x", var("x")));
    }

    #[test]
    fn booleans_choice() {
        let t = parse("(\\x.\\y.x) (+) (\\x.\\y.y)").unwrap();
        let tt = abs("x", abs("y", var("x")));
        let ff = abs("x", abs("y", var("y")));
        assert_eq!(t, choice(tt.clone(), ff.clone()));
        assert_eq!(parse("TT ⊕ FF").unwrap(), choice(tt, ff));
    }

    #[test]
    fn application_is_left_associative() {
        let t = parse("\\x. x x x").unwrap();
        assert_eq!(t, abs("x", app_many(var("x"), [var("x"), var("x")])));
    }

    #[test]
    fn application_binds_tighter_than_choice() {
        let t = parse("a b (+) c d (+) e").unwrap();
        let expect = choice(choice(app(var("a"), var("b")), app(var("c"), var("d"))), var("e"));
        assert_eq!(t, expect);
    }

    #[test]
    fn trailing_lambdas() {
        let t = parse("f \\x. x (+) y").unwrap();
        assert_eq!(t, app(var("f"), abs("x", choice(var("x"), var("y")))));
        let c = parse("a (+) \\x. x").unwrap();
        assert_eq!(c, choice(var("a"), abs("x", var("x"))));
    }

    #[test]
    fn comments_and_constants() {
        let t = parse("OMEGA -- diverges\n").unwrap();
        assert_eq!(t, encodings::omega());
        assert_eq!(parse("NAT 2").unwrap(), encodings::nat(2));
        assert!(alpha_eq(&parse("\\x y. x").unwrap(), &encodings::tt()));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("\\x. (x").unwrap_err();
        assert_eq!(e.offset, 6);
        let e = parse("x )").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        assert!(parse("").is_err());
        assert!(parse("\\. x").is_err());
        assert!(parse("x $").is_err());
    }

    #[test]
    fn corpus_lines() {
        let src = "-- header\n\\x. x\n\n  TT (+) FF  -- comment\n";
        let c = parse_corpus(src).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].0, 4);
        let e = parse_corpus("x\n(y\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
