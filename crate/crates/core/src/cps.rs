//! Continuation-passing translations between the two strategies.
//!
//! `cps_v_to_n` makes call-by-value evaluation order explicit so that
//! call-by-name evaluation of `⟦M⟧ (λx.x)` simulates call-by-value
//! evaluation of `M` (up to `Ψ` on values); `cps_n_to_v` is the dual.
//! Continuation variables live in the reserved `k#` namespace and are
//! numbered deterministically.

use serde_json::{json, Value as Json};

use crate::dist::SubDist;
use crate::error::{Error, Result};
use crate::reduction::{step_unchecked, Step, Strategy};
use crate::smallstep::{approximate_until_stable, Bracket, Limits};
use crate::syntax::term::grow;
use crate::syntax::{abs, app, app_many, choice, var, Name, Term, CONT_PREFIX};

/// Upper bound on `size(⟦M⟧) / size(M)` for both translations.
pub const SIZE_FACTOR: usize = 16;

/// Deterministic supply of continuation variables, numbered above every
/// `k#N` already present in the inputs.
struct Fresh {
    next: u64,
}

impl Fresh {
    fn above<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Self {
        let mut next = 0;
        for t in terms {
            for n in t.all_names() {
                if let Some(i) = n.strip_prefix(CONT_PREFIX).and_then(|r| r.parse::<u64>().ok()) {
                    next = next.max(i + 1);
                }
            }
        }
        Fresh { next }
    }

    fn name(&mut self) -> Name {
        let n = format!("{CONT_PREFIX}{}", self.next);
        self.next += 1;
        n.into()
    }
}

fn lam(x: &Name, body: Term) -> Term {
    abs(x, body)
}

fn v(x: &Name) -> Term {
    var(x)
}

// λγ.γ t
fn inject(fresh: &mut Fresh, t: Term) -> Term {
    let g = fresh.name();
    lam(&g, app(v(&g), t))
}

fn v2n(t: &Term, fresh: &mut Fresh) -> Term {
    grow(|| match t {
        Term::Var(_) => {
            let e = fresh.name();
            lam(&e, app(v(&e), t.clone()))
        }
        Term::Abs(x, body) => {
            let e = fresh.name();
            let inner = abs(x, v2n(body, fresh));
            lam(&e, app(v(&e), inner))
        }
        Term::App(m, n) => {
            let e = fresh.name();
            let a = fresh.name();
            let b = fresh.name();
            let tm = v2n(m, fresh);
            let tn = v2n(n, fresh);
            let kb = lam(&b, app_many(v(&a), [v(&b), v(&e)]));
            lam(&e, app(tm, lam(&a, app(tn, kb))))
        }
        Term::Choice(m, n) => {
            let e = fresh.name();
            let a = fresh.name();
            let b = fresh.name();
            let tm = v2n(m, fresh);
            let tn = v2n(n, fresh);
            let sum = choice(inject(fresh, v(&a)), inject(fresh, v(&b)));
            let kb = lam(&b, app(sum, v(&e)));
            lam(&e, app(tm, lam(&a, app(tn, kb))))
        }
    })
}

fn n2v(t: &Term, fresh: &mut Fresh) -> Term {
    grow(|| match t {
        Term::Var(_) => t.clone(),
        Term::Abs(x, body) => {
            let e = fresh.name();
            let inner = abs(x, n2v(body, fresh));
            lam(&e, app(v(&e), inner))
        }
        Term::App(m, n) => {
            let e = fresh.name();
            let a = fresh.name();
            let tm = n2v(m, fresh);
            let tn = n2v(n, fresh);
            lam(&e, app(tm, lam(&a, app_many(v(&a), [tn, v(&e)]))))
        }
        Term::Choice(m, n) => {
            let e = fresh.name();
            let tm = n2v(m, fresh);
            let tn = n2v(n, fresh);
            let a1 = fresh.name();
            let a2 = fresh.name();
            let sum = choice(lam(&a1, app(tm, v(&a1))), lam(&a2, app(tn, v(&a2))));
            lam(&e, app(sum, v(&e)))
        }
    })
}

/// Call-by-value to call-by-name translation.
pub fn cps_v_to_n(t: &Term) -> Term {
    v2n(t, &mut Fresh::above([t]))
}

/// Call-by-name to call-by-value translation.
pub fn cps_n_to_v(t: &Term) -> Term {
    n2v(t, &mut Fresh::above([t]))
}

fn psi_with(v: &Term, fresh: &mut Fresh) -> Result<Term> {
    match v {
        Term::Var(_) => Ok(v.clone()),
        Term::Abs(x, body) => Ok(abs(x, v2n(body, fresh))),
        _ => Err(Error::NotAValue(v.to_string())),
    }
}

fn phi_with(v: &Term, fresh: &mut Fresh) -> Result<Term> {
    match v {
        // not a value; only reachable on open terms
        Term::Var(_) => {
            let y = fresh.name();
            Ok(app(v.clone(), lam(&y, var(&y))))
        }
        Term::Abs(x, body) => Ok(abs(x, n2v(body, fresh))),
        _ => Err(Error::NotAValue(v.to_string())),
    }
}

/// `Ψ(x) = x`, `Ψ(λx.M) = λx.⟦M⟧`
pub fn psi(v: &Term) -> Result<Term> {
    psi_with(v, &mut Fresh::above([v]))
}

/// `Φ(x) = x (λy.y)`, `Φ(λx.M) = λx.⟦M⟧`. Only the abstraction case yields
/// a value.
pub fn phi(v: &Term) -> Result<Term> {
    phi_with(v, &mut Fresh::above([v]))
}

pub fn psi_dist(d: &SubDist) -> Result<SubDist> {
    d.map_values(psi)
}

pub fn phi_dist(d: &SubDist) -> Result<SubDist> {
    d.map_values(phi)
}

fn colon_v_with(t: &Term, k: Term, fresh: &mut Fresh) -> Result<Term> {
    grow(|| match t {
        Term::Var(_) | Term::Abs(..) => Ok(app(k, psi_with(t, fresh)?)),
        Term::App(l, p) if !l.is_value() => {
            let a = fresh.name();
            let b = fresh.name();
            let tp = v2n(p, fresh);
            let kb = lam(&b, app_many(v(&a), [v(&b), k]));
            colon_v_with(l, lam(&a, app(tp, kb)), fresh)
        }
        Term::App(val, l) if !l.is_value() => {
            let b = fresh.name();
            let pv = psi_with(val, fresh)?;
            colon_v_with(l, lam(&b, app_many(pv, [v(&b), k])), fresh)
        }
        Term::App(val, w) => Ok(app_many(psi_with(val, fresh)?, [psi_with(w, fresh)?, k])),
        Term::Choice(l, p) if !l.is_value() => {
            let a = fresh.name();
            let b = fresh.name();
            let tp = v2n(p, fresh);
            let sum = choice(inject(fresh, v(&a)), inject(fresh, v(&b)));
            let kb = lam(&b, app(sum, k));
            colon_v_with(l, lam(&a, app(tp, kb)), fresh)
        }
        Term::Choice(val, l) if !l.is_value() => {
            let b = fresh.name();
            let pv = psi_with(val, fresh)?;
            let sum = choice(inject(fresh, pv), inject(fresh, v(&b)));
            colon_v_with(l, lam(&b, app(sum, k)), fresh)
        }
        Term::Choice(val, w) => {
            let pv = psi_with(val, fresh)?;
            let pw = psi_with(w, fresh)?;
            Ok(app(choice(inject(fresh, pv), inject(fresh, pw)), k))
        }
    })
}

fn colon_n_with(t: &Term, k: Term, fresh: &mut Fresh) -> Result<Term> {
    grow(|| match t {
        Term::Var(_) | Term::Abs(..) => Ok(app(k, phi_with(t, fresh)?)),
        Term::App(l, p) if !l.is_value() => {
            let a = fresh.name();
            let tp = n2v(p, fresh);
            colon_n_with(l, lam(&a, app_many(v(&a), [tp, k])), fresh)
        }
        // covers both a value and a non-value argument
        Term::App(val, n) => Ok(app_many(phi_with(val, fresh)?, [n2v(n, fresh), k])),
        Term::Choice(l, p) => {
            let tl = n2v(l, fresh);
            let tp = n2v(p, fresh);
            let a1 = fresh.name();
            let a2 = fresh.name();
            let sum = choice(lam(&a1, app(tl, v(&a1))), lam(&a2, app(tp, v(&a2))));
            Ok(app(sum, k))
        }
    })
}

fn check_continuation(t: &Term, k: &Term) -> Result<()> {
    crate::reduction::require_closed(t)?;
    crate::reduction::require_closed(k)?;
    if !k.is_value() {
        return Err(Error::NotAValue(k.to_string()));
    }
    Ok(())
}

/// Administrative normal form `M : K` for the call-by-value translation.
pub fn colon_v(t: &Term, k: &Term) -> Result<Term> {
    check_continuation(t, k)?;
    colon_v_with(t, k.clone(), &mut Fresh::above([t, k]))
}

/// Administrative normal form `M : K` for the call-by-name translation.
pub fn colon_n(t: &Term, k: &Term) -> Result<Term> {
    check_continuation(t, k)?;
    colon_n_with(t, k.clone(), &mut Fresh::above([t, k]))
}

/// Reduces `⟦M⟧ K` in the target strategy using only deterministic steps
/// until it is alpha-equivalent to `M : K`. Returns the number of steps, or
/// `None` if a choice step, a normal form or the step bound comes first.
pub fn administrative_steps(m: &Term, k: &Term, direction: Direction, max_steps: usize) -> Result<Option<usize>> {
    let (start, goal, strategy) = match direction {
        Direction::VToN => (app(cps_v_to_n(m), k.clone()), colon_v(m, k)?, Strategy::Cbn),
        Direction::NToV => (app(cps_n_to_v(m), k.clone()), colon_n(m, k)?, Strategy::Cbv),
    };
    let goal = goal.canonical();
    let mut cur = start;
    for steps in 0..=max_steps {
        if cur.canonical() == goal {
            return Ok(Some(steps));
        }
        match step_unchecked(&cur, strategy)? {
            Some(Step::One(next)) => cur = next,
            _ => return Ok(None),
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Direction {
    #[value(name = "v2n")]
    VToN,
    #[value(name = "n2v")]
    NToV,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::VToN => "v2n",
            Direction::NToV => "n2v",
        }
    }

    /// Strategy of the source program.
    pub fn source(self) -> Strategy {
        match self {
            Direction::VToN => Strategy::Cbv,
            Direction::NToV => Strategy::Cbn,
        }
    }

    /// Strategy the translated program is run under.
    pub fn target(self) -> Strategy {
        match self {
            Direction::VToN => Strategy::Cbn,
            Direction::NToV => Strategy::Cbv,
        }
    }

    pub fn translate(self, t: &Term) -> Term {
        match self {
            Direction::VToN => cps_v_to_n(t),
            Direction::NToV => cps_n_to_v(t),
        }
    }

    /// The value map matching the translation (`Ψ` or `Φ`).
    pub fn value_map(self, d: &SubDist) -> Result<SubDist> {
        match self {
            Direction::VToN => psi_dist(d),
            Direction::NToV => phi_dist(d),
        }
    }
}

/// Translation applied to the identity continuation, as in the simulation
/// theorems.
pub fn translate_applied(t: &Term, direction: Direction) -> Term {
    let tr = direction.translate(t);
    let x: Name = format!("{CONT_PREFIX}id").into();
    app(tr, lam(&x, var(&x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    BracketConsistent,
    Fail,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::BracketConsistent => "BRACKET-CONSISTENT",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub direction: Direction,
    pub verdict: Verdict,
    /// Source program, run in the source strategy.
    pub source: Bracket,
    /// Translated program applied to the identity, run in the target
    /// strategy.
    pub target: Bracket,
    /// Value map applied to `source.lower`.
    pub mapped: SubDist,
}

impl SimulationReport {
    pub fn to_json(&self) -> Json {
        json!({
            "direction": self.direction.name(),
            "verdict": self.verdict.name(),
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "mapped": self.mapped.to_json(),
        })
    }
}

/// Runs both sides of a simulation theorem for at most `fuel` rounds each.
pub fn check_simulation(t: &Term, direction: Direction, fuel: u64, limits: &Limits) -> Result<SimulationReport> {
    let source = approximate_until_stable(t, direction.source(), fuel, limits)?;
    let target = approximate_until_stable(&translate_applied(t, direction), direction.target(), fuel, limits)?;
    let mapped = direction.value_map(&source.lower)?;
    let verdict = if source.is_stable() && target.is_stable() {
        if mapped == target.lower {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    } else if brackets_overlap(&mapped, &source.residual, &target) {
        Verdict::BracketConsistent
    } else {
        Verdict::Fail
    };
    Ok(SimulationReport { direction, verdict, source, target, mapped })
}

fn brackets_overlap(mapped: &SubDist, residual: &crate::dist::Dyadic, target: &Bracket) -> bool {
    let below = |lower: &SubDist, other: &SubDist, slack: &crate::dist::Dyadic| {
        lower.iter().all(|(v, m)| *m <= &other.get(v) + slack)
    };
    below(mapped, &target.lower, &target.residual) && below(&target.lower, mapped, residual)
}

pub fn check_simulation_v_by_n(t: &Term, fuel: u64) -> Result<SimulationReport> {
    check_simulation(t, Direction::VToN, fuel, &Limits::default())
}

pub fn check_simulation_n_by_v(t: &Term, fuel: u64) -> Result<SimulationReport> {
    check_simulation(t, Direction::NToV, fuel, &Limits::default())
}
