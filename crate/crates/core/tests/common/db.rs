//! Locally nameless terms: bound variables as indices, free ones by name.
//! An independent reference for substitution, alpha-equivalence and one
//! reduction step.

use plc_core::Term;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Db {
    Bound(usize),
    Free(String),
    Lam(Box<Db>),
    App(Box<Db>, Box<Db>),
    Choice(Box<Db>, Box<Db>),
}

pub fn to_db(t: &Term) -> Db {
    fn go(t: &Term, env: &mut Vec<String>) -> Db {
        match t {
            Term::Var(x) => match env.iter().rev().position(|b| b.as_str() == &**x) {
                Some(i) => Db::Bound(i),
                None => Db::Free(x.to_string()),
            },
            Term::Abs(x, body) => {
                env.push(x.to_string());
                let b = go(body, env);
                env.pop();
                Db::Lam(Box::new(b))
            }
            Term::App(a, b) => Db::App(Box::new(go(a, env)), Box::new(go(b, env))),
            Term::Choice(a, b) => Db::Choice(Box::new(go(a, env)), Box::new(go(b, env))),
        }
    }
    go(t, &mut Vec::new())
}

/// Replaces the free name `x`; `n` must have no dangling indices.
pub fn subst_free(t: &Db, x: &str, n: &Db) -> Db {
    match t {
        Db::Free(y) if y == x => n.clone(),
        Db::Free(_) | Db::Bound(_) => t.clone(),
        Db::Lam(b) => Db::Lam(Box::new(subst_free(b, x, n))),
        Db::App(a, b) => Db::App(Box::new(subst_free(a, x, n)), Box::new(subst_free(b, x, n))),
        Db::Choice(a, b) => Db::Choice(Box::new(subst_free(a, x, n)), Box::new(subst_free(b, x, n))),
    }
}

/// `body` with its outermost binder instantiated by the locally closed `arg`.
pub fn open(body: &Db, arg: &Db) -> Db {
    fn go(t: &Db, depth: usize, arg: &Db) -> Db {
        match t {
            Db::Bound(i) if *i == depth => arg.clone(),
            Db::Bound(_) | Db::Free(_) => t.clone(),
            Db::Lam(b) => Db::Lam(Box::new(go(b, depth + 1, arg))),
            Db::App(a, b) => Db::App(Box::new(go(a, depth, arg)), Box::new(go(b, depth, arg))),
            Db::Choice(a, b) => Db::Choice(Box::new(go(a, depth, arg)), Box::new(go(b, depth, arg))),
        }
    }
    go(body, 0, arg)
}

fn is_value(t: &Db) -> bool {
    matches!(t, Db::Lam(_) | Db::Free(_))
}

fn wrap(ts: Vec<Db>, f: impl Fn(Db) -> Db) -> Vec<Db> {
    ts.into_iter().map(f).collect()
}

/// Successors of a closed term under call-by-value, empty for values.
pub fn step_cbv(t: &Db) -> Vec<Db> {
    match t {
        Db::App(m, n) if !is_value(m) => wrap(step_cbv(m), |l| Db::App(Box::new(l), n.clone())),
        Db::App(m, n) if !is_value(n) => wrap(step_cbv(n), |l| Db::App(m.clone(), Box::new(l))),
        Db::App(m, n) => match &**m {
            Db::Lam(body) => vec![open(body, n)],
            _ => panic!("stuck"),
        },
        Db::Choice(m, n) if !is_value(m) => wrap(step_cbv(m), |l| Db::Choice(Box::new(l), n.clone())),
        Db::Choice(m, n) if !is_value(n) => wrap(step_cbv(n), |l| Db::Choice(m.clone(), Box::new(l))),
        Db::Choice(m, n) => vec![(**m).clone(), (**n).clone()],
        _ => vec![],
    }
}

/// Successors of a closed term under call-by-name, empty for values.
pub fn step_cbn(t: &Db) -> Vec<Db> {
    match t {
        Db::App(m, n) => match &**m {
            Db::Lam(body) => vec![open(body, n)],
            _ => wrap(step_cbn(m), |l| Db::App(Box::new(l), n.clone())),
        },
        Db::Choice(m, n) => vec![(**m).clone(), (**n).clone()],
        _ => vec![],
    }
}
