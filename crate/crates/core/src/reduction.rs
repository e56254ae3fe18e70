//! Leftmost one-step reduction, call-by-value and call-by-name.
//!
//! A step maps a closed non-value to one or two successors, each reached
//! with probability `1/n`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::syntax::term::grow;
use crate::syntax::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Cbv,
    Cbn,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Cbv => "cbv",
            Strategy::Cbn => "cbn",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbv" => Ok(Strategy::Cbv),
            "cbn" => Ok(Strategy::Cbn),
            other => Err(Error::Invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Successors of one reduction step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Deterministic step.
    One(Term),
    /// Fair choice: each successor with probability 1/2.
    Two(Term, Term),
}

impl Step {
    /// Number of successors; a step is never empty.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        match self {
            Step::One(_) => 1,
            Step::Two(..) => 2,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Step::One(_))
    }

    pub fn successors(&self) -> Vec<&Term> {
        match self {
            Step::One(a) => vec![a],
            Step::Two(a, b) => vec![a, b],
        }
    }

    pub fn into_successors(self) -> Vec<Term> {
        match self {
            Step::One(a) => vec![a],
            Step::Two(a, b) => vec![a, b],
        }
    }

    fn map(self, f: impl Fn(Term) -> Term) -> Step {
        match self {
            Step::One(a) => Step::One(f(a)),
            Step::Two(a, b) => Step::Two(f(a), f(b)),
        }
    }
}

fn ensure_closed(t: &Term) -> Result<()> {
    if t.is_closed() {
        Ok(())
    } else {
        let fv: Vec<String> = t.free_vars().iter().map(|x| x.to_string()).collect();
        Err(Error::OpenTerm(fv.join(", ")))
    }
}

pub(crate) fn require_closed(t: &Term) -> Result<()> {
    ensure_closed(t)
}

/// One call-by-value step; `None` on values.
pub fn step_cbv(t: &Term) -> Result<Option<Step>> {
    ensure_closed(t)?;
    step_unchecked(t, Strategy::Cbv)
}

/// One call-by-name step; `None` on values.
pub fn step_cbn(t: &Term) -> Result<Option<Step>> {
    ensure_closed(t)?;
    step_unchecked(t, Strategy::Cbn)
}

pub fn step(t: &Term, strategy: Strategy) -> Result<Option<Step>> {
    ensure_closed(t)?;
    step_unchecked(t, strategy)
}

/// Step without the closedness check; callers must only pass closed terms
/// (or terms reachable from closed terms).
pub(crate) fn step_unchecked(t: &Term, strategy: Strategy) -> Result<Option<Step>> {
    match strategy {
        Strategy::Cbv => cbv(t).map(Some).or_else(none_if_value(t)),
        Strategy::Cbn => cbn(t).map(Some).or_else(none_if_value(t)),
    }
}

fn none_if_value(t: &Term) -> impl FnOnce(Error) -> Result<Option<Step>> + '_ {
    move |e| if t.is_value() { Ok(None) } else { Err(e) }
}

// Both helpers return Err(Stuck) on values; step_unchecked turns that into
// None at the top.
fn cbv(t: &Term) -> Result<Step> {
    grow(|| match t {
        Term::Var(_) | Term::Abs(..) => Err(Error::Stuck(t.to_string())),
        Term::App(m, n) => {
            if !m.is_value() {
                let n = n.clone();
                return Ok(cbv(m)?.map(|l| Term::App(Arc::new(l), n.clone())));
            }
            if !n.is_value() {
                let m = m.clone();
                return Ok(cbv(n)?.map(|l| Term::App(m.clone(), Arc::new(l))));
            }
            match &**m {
                Term::Abs(x, body) => Ok(Step::One(body.substitute_closed(x, n))),
                _ => Err(Error::Stuck(t.to_string())),
            }
        }
        Term::Choice(m, n) => {
            if !m.is_value() {
                let n = n.clone();
                return Ok(cbv(m)?.map(|l| Term::Choice(Arc::new(l), n.clone())));
            }
            if !n.is_value() {
                let m = m.clone();
                return Ok(cbv(n)?.map(|l| Term::Choice(m.clone(), Arc::new(l))));
            }
            Ok(Step::Two((**m).clone(), (**n).clone()))
        }
    })
}

fn cbn(t: &Term) -> Result<Step> {
    grow(|| match t {
        Term::Var(_) | Term::Abs(..) => Err(Error::Stuck(t.to_string())),
        Term::App(m, n) => match &**m {
            Term::Abs(x, body) => Ok(Step::One(body.substitute_closed(x, n))),
            Term::Var(_) => Err(Error::Stuck(t.to_string())),
            _ => {
                let n = n.clone();
                Ok(cbn(m)?.map(|l| Term::App(Arc::new(l), n.clone())))
            }
        },
        Term::Choice(m, n) => Ok(Step::Two((**m).clone(), (**n).clone())),
    })
}
