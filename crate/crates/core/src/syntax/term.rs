use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

/// Identifier of a variable. Continuation variables introduced by the CPS
/// translations live in the `k#` namespace.
pub type Name = Arc<str>;

/// Prefix reserved for continuation variables.
pub const CONT_PREFIX: &str = "k#";

/// A term of the probabilistic lambda calculus.
///
/// Equality and hashing are structural. Use [`Term::canonical`] or
/// [`alpha_eq`] to compare up to renaming of bound variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Abs(Name, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    Choice(Arc<Term>, Arc<Term>),
}

pub fn var(name: &str) -> Term {
    Term::Var(name.into())
}

pub fn abs(binder: &str, body: Term) -> Term {
    Term::Abs(binder.into(), Arc::new(body))
}

/// Abstraction over several binders, outermost first.
pub fn abs_many(binders: &[&str], body: Term) -> Term {
    binders.iter().rev().fold(body, |acc, b| abs(b, acc))
}

pub fn app(fun: Term, arg: Term) -> Term {
    Term::App(Arc::new(fun), Arc::new(arg))
}

/// Left-nested application `f a1 a2 ...`.
pub fn app_many(fun: Term, args: impl IntoIterator<Item = Term>) -> Term {
    args.into_iter().fold(fun, app)
}

pub fn choice(left: Term, right: Term) -> Term {
    Term::Choice(Arc::new(left), Arc::new(right))
}

impl Term {
    /// Variables and abstractions are values; reduction never goes under a
    /// binder.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Var(_) | Term::Abs(..))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        fn go<'a>(t: &'a Term, bound: &mut Vec<&'a str>) -> bool {
            grow(|| match t {
                Term::Var(x) => bound.iter().any(|b| **b == **x),
                Term::Abs(x, body) => {
                    bound.push(x);
                    let ok = go(body, bound);
                    bound.pop();
                    ok
                }
                Term::App(a, b) | Term::Choice(a, b) => go(a, bound) && go(b, bound),
            })
        }
        go(self, &mut Vec::new())
    }

    pub fn has_free(&self, x: &str) -> bool {
        grow(|| match self {
            Term::Var(y) => **y == *x,
            Term::Abs(y, body) => **y != *x && body.has_free(x),
            Term::App(a, b) | Term::Choice(a, b) => a.has_free(x) || b.has_free(x),
        })
    }

    /// Number of constructors.
    pub fn size(&self) -> usize {
        grow(|| match self {
            Term::Var(_) => 1,
            Term::Abs(_, body) => 1 + body.size(),
            Term::App(a, b) | Term::Choice(a, b) => 1 + a.size() + b.size(),
        })
    }

    /// Every name occurring in the term, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        fn go(t: &Term, out: &mut BTreeSet<Name>) {
            grow(|| match t {
                Term::Var(x) => {
                    out.insert(x.clone());
                }
                Term::Abs(x, body) => {
                    out.insert(x.clone());
                    go(body, out);
                }
                Term::App(a, b) | Term::Choice(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            })
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    /// Canonical representative of the alpha-class: the binder at nesting
    /// depth `d` is renamed to `x{d}` (a different letter is picked when a
    /// free variable would clash). Two terms are alpha-equivalent iff their
    /// canonical forms are structurally equal.
    pub fn canonical(&self) -> Term {
        let free = self.free_vars();
        let prefix = canonical_prefix(&free);
        let mut names: Vec<Name> = Vec::new();
        let mut env: Vec<(Name, usize)> = Vec::new();
        canon(self, &prefix, &mut names, &mut env, &mut 0)
    }

    /// Canonical form and size of a closed term in a single walk.
    pub(crate) fn canonical_closed_sized(&self) -> (Term, usize) {
        let mut names: Vec<Name> = Vec::new();
        let mut env: Vec<(Name, usize)> = Vec::new();
        let mut size = 0;
        let c = canon(self, "x", &mut names, &mut env, &mut size);
        (c, size)
    }

    /// Capture-avoiding substitution `self{replacement/x}`.
    pub fn substitute(&self, x: &str, replacement: &Term) -> Term {
        let fv = replacement.free_vars();
        let mut fresh = FreshNames::default();
        subst(self, x, replacement, &fv, &mut fresh).unwrap_or_else(|| self.clone())
    }

    /// Substitution of a closed replacement; no renaming is ever needed.
    pub(crate) fn substitute_closed(&self, x: &str, replacement: &Term) -> Term {
        subst_closed(self, x, replacement).unwrap_or_else(|| self.clone())
    }
}

fn collect_free<'a>(t: &'a Term, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
    grow(|| match t {
        Term::Var(x) => {
            if !bound.contains(&x) {
                out.insert(x.clone());
            }
        }
        Term::Abs(x, body) => {
            bound.push(x);
            collect_free(body, bound, out);
            bound.pop();
        }
        Term::App(a, b) | Term::Choice(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
    })
}

fn canonical_prefix(free: &BTreeSet<Name>) -> String {
    let clashes = |p: &str| {
        free.iter()
            .any(|f| f.strip_prefix(p).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit())))
    };
    for p in ["x", "y", "z", "v", "w", "u"] {
        if !clashes(p) {
            return p.to_string();
        }
    }
    let mut p = String::from("x_");
    while clashes(&p) {
        p.push('_');
    }
    p
}

fn canon(t: &Term, prefix: &str, names: &mut Vec<Name>, env: &mut Vec<(Name, usize)>, size: &mut usize) -> Term {
    *size += 1;
    grow(|| match t {
        Term::Var(x) => match env.iter().rev().find(|(n, _)| n == x) {
            Some((_, depth)) => Term::Var(names[*depth].clone()),
            None => t.clone(),
        },
        Term::Abs(x, body) => {
            let depth = env.len();
            if names.len() <= depth {
                names.push(format!("{prefix}{depth}").into());
            }
            env.push((x.clone(), depth));
            let body = canon(body, prefix, names, env, size);
            env.pop();
            Term::Abs(names[depth].clone(), Arc::new(body))
        }
        Term::App(a, b) => {
            Term::App(Arc::new(canon(a, prefix, names, env, size)), Arc::new(canon(b, prefix, names, env, size)))
        }
        Term::Choice(a, b) => {
            Term::Choice(Arc::new(canon(a, prefix, names, env, size)), Arc::new(canon(b, prefix, names, env, size)))
        }
    })
}

/// Runs `f`, first moving to a fresh stack segment if the current one is
/// nearly exhausted. Used by every recursive walk over terms, which can be
/// thousands of constructors deep.
pub(crate) fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, f)
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    a.canonical() == b.canonical()
}

/// Deterministic supply of fresh names: a per-operation counter appended to
/// the base name, skipping anything in the avoid set.
#[derive(Default)]
struct FreshNames {
    counter: usize,
}

impl FreshNames {
    fn next(&mut self, base: &str, avoid: impl Fn(&str) -> bool) -> Name {
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "v" } else { stem };
        loop {
            self.counter += 1;
            let candidate = format!("{stem}{}", self.counter);
            if !avoid(&candidate) {
                return candidate.into();
            }
        }
    }
}

// Returns None when the term is unchanged so untouched subtrees stay shared.
fn subst(t: &Term, x: &str, r: &Term, fv_r: &BTreeSet<Name>, fresh: &mut FreshNames) -> Option<Term> {
    grow(|| match t {
        Term::Var(y) => (**y == *x).then(|| r.clone()),
        Term::Abs(y, body) => {
            if **y == *x || !body.has_free(x) {
                return None;
            }
            if fv_r.contains(y) {
                let body_fv = body.free_vars();
                let z =
                    fresh.next(y, |c| c == x || fv_r.iter().any(|n| &**n == c) || body_fv.iter().any(|n| &**n == c));
                let renamed = body.substitute_closed_var(y, &z);
                let body = subst(&renamed, x, r, fv_r, fresh).unwrap_or(renamed);
                Some(Term::Abs(z, Arc::new(body)))
            } else {
                let body = subst(body, x, r, fv_r, fresh)?;
                Some(Term::Abs(y.clone(), Arc::new(body)))
            }
        }
        Term::App(a, b) => {
            let (na, nb) = (subst(a, x, r, fv_r, fresh), subst(b, x, r, fv_r, fresh));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Term::App(
                na.map(Arc::new).unwrap_or_else(|| a.clone()),
                nb.map(Arc::new).unwrap_or_else(|| b.clone()),
            ))
        }
        Term::Choice(a, b) => {
            let (na, nb) = (subst(a, x, r, fv_r, fresh), subst(b, x, r, fv_r, fresh));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Term::Choice(
                na.map(Arc::new).unwrap_or_else(|| a.clone()),
                nb.map(Arc::new).unwrap_or_else(|| b.clone()),
            ))
        }
    })
}

impl Term {
    // Renames free occurrences of `y` to the fresh name `z`. `z` occurs
    // nowhere in the term, so this can never capture.
    fn substitute_closed_var(&self, y: &str, z: &Name) -> Term {
        subst_closed(self, y, &Term::Var(z.clone())).unwrap_or_else(|| self.clone())
    }
}

fn subst_closed(t: &Term, x: &str, r: &Term) -> Option<Term> {
    grow(|| match t {
        Term::Var(y) => (**y == *x).then(|| r.clone()),
        Term::Abs(y, body) => {
            if **y == *x {
                return None;
            }
            let body = subst_closed(body, x, r)?;
            Some(Term::Abs(y.clone(), Arc::new(body)))
        }
        Term::App(a, b) => {
            let (na, nb) = (subst_closed(a, x, r), subst_closed(b, x, r));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Term::App(
                na.map(Arc::new).unwrap_or_else(|| a.clone()),
                nb.map(Arc::new).unwrap_or_else(|| b.clone()),
            ))
        }
        Term::Choice(a, b) => {
            let (na, nb) = (subst_closed(a, x, r), subst_closed(b, x, r));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Term::Choice(
                na.map(Arc::new).unwrap_or_else(|| a.clone()),
                nb.map(Arc::new).unwrap_or_else(|| b.clone()),
            ))
        }
    })
}

/// Caches canonical forms of terms seen repeatedly, e.g. while exploring
/// state spaces.
#[derive(Default)]
pub struct CanonCache {
    map: HashMap<Term, Term>,
}

impl CanonCache {
    pub fn get(&mut self, t: &Term) -> Term {
        if let Some(c) = self.map.get(t) {
            return c.clone();
        }
        let c = t.canonical();
        self.map.insert(t.clone(), c.clone());
        c
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: &str) -> Term {
        abs(x, var(x))
    }

    #[test]
    fn free_variables() {
        let t = abs("x", app(var("x"), var("y")));
        let fv: Vec<_> = t.free_vars().into_iter().collect();
        assert_eq!(fv, vec![Name::from("y")]);
        assert!(!t.is_closed());
        assert!(id("x").is_closed());
    }

    #[test]
    fn values() {
        let omega = app(abs("x", app(var("x"), var("x"))), abs("x", app(var("x"), var("x"))));
        assert!(abs("x", omega).is_value());
        assert!(!app(id("x"), id("x")).is_value());
    }

    #[test]
    fn substitution_basics() {
        assert_eq!(var("x").substitute("x", &id("y")), id("y"));
        assert_eq!(id("x").substitute("x", &id("y")), id("x"));
        let t = choice(var("x"), var("z"));
        assert_eq!(t.substitute("x", &id("y")), choice(id("y"), var("z")));
    }

    #[test]
    fn substitution_avoids_capture() {
        // (\y. x y){y/x} must not capture the free y
        let t = abs("y", app(var("x"), var("y")));
        let out = t.substitute("x", &var("y"));
        let Term::Abs(b, body) = &out else { panic!("expected abstraction") };
        assert_ne!(&**b, "y");
        assert_eq!(**body, app(var("y"), Term::Var(b.clone())));
        assert!(out.free_vars().contains("y"));
    }

    #[test]
    fn alpha_equivalence() {
        assert!(alpha_eq(&id("x"), &id("y")));
        let k = abs_many(&["x", "y"], var("x"));
        let ks = abs_many(&["x", "y"], var("y"));
        assert!(!alpha_eq(&k, &ks));
        let a = abs("x", choice(var("x"), var("x")));
        let b = abs("z", choice(var("z"), var("z")));
        assert!(alpha_eq(&a, &b));
    }

    #[test]
    fn canonical_avoids_free_clash() {
        // free x0 must not be captured by the canonical binder name
        let t = abs("a", app(var("a"), var("x0")));
        let c = t.canonical();
        assert!(c.free_vars().contains("x0"));
        assert!(alpha_eq(&t, &c));
        assert_eq!(c, c.canonical());
    }
}
