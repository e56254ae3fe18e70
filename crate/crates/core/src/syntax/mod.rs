//! Terms of the probabilistic lambda calculus: representation, parsing,
//! printing, alpha-equivalence and capture-avoiding substitution.

mod parse;
mod print;
pub(crate) mod term;

pub use parse::{parse, parse_corpus};
pub use print::print_canonical;
pub use term::{abs, abs_many, alpha_eq, app, app_many, choice, var, CanonCache, Name, Term, CONT_PREFIX};
