use std::fmt::{self, Write};

use super::term::grow;
use super::Term;

// Syntactic position a subterm is printed in.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    Top,
    ChoiceLeft,
    ChoiceRight,
    AppFun,
    AppArg,
}

fn needs_parens(t: &Term, pos: Pos, rightmost: bool) -> bool {
    match (t, pos) {
        (Term::Var(_), _) => false,
        (Term::Abs(..), Pos::Top | Pos::ChoiceRight) => !rightmost,
        (Term::Abs(..), _) => true,
        (Term::App(..), Pos::AppArg) => true,
        (Term::App(..), _) => false,
        (Term::Choice(..), Pos::Top | Pos::ChoiceLeft) => false,
        (Term::Choice(..), _) => true,
    }
}

fn write_term(out: &mut impl Write, t: &Term, pos: Pos, rightmost: bool) -> fmt::Result {
    grow(|| write_node(out, t, pos, rightmost))
}

fn write_node(out: &mut impl Write, t: &Term, pos: Pos, rightmost: bool) -> fmt::Result {
    if needs_parens(t, pos, rightmost) {
        out.write_char('(')?;
        write_term(out, t, Pos::Top, true)?;
        return out.write_char(')');
    }
    match t {
        Term::Var(x) => out.write_str(x),
        Term::Abs(x, body) => {
            write!(out, "\\{x}. ")?;
            write_term(out, body, Pos::Top, rightmost)
        }
        Term::App(f, a) => {
            write_term(out, f, Pos::AppFun, false)?;
            out.write_char(' ')?;
            write_term(out, a, Pos::AppArg, rightmost)
        }
        Term::Choice(l, r) => {
            write_term(out, l, Pos::ChoiceLeft, false)?;
            out.write_str(" (+) ")?;
            write_term(out, r, Pos::ChoiceRight, rightmost)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, Pos::Top, true)
    }
}

/// Prints the canonical representative, so alpha-equivalent terms print
/// identically.
pub fn print_canonical(t: &Term) -> String {
    t.canonical().to_string()
}
