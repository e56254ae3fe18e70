//! Fuel-bounded small-step evaluation.
//!
//! Evaluation proceeds in synchronous rounds over a weighted frontier of
//! pending terms (keyed by canonical form, so alpha-equivalent states
//! merge). After `k` rounds the mass that reached a value is the lower
//! approximant; the mass still pending is the residual. Their sum is
//! exactly 1 at every fuel.

use std::collections::{HashMap, HashSet, VecDeque};

use serde_json::{json, Value as Json};

use crate::dist::{dyadic_json, Dyadic, SubDist};
use crate::error::{Error, Result};
use crate::reduction::{require_closed, step_unchecked, Strategy};
use crate::syntax::Term;

/// Resource guards for state-space exploration. Exceeding one aborts with
/// an error rather than truncating the result.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub frontier_cap: usize,
    pub term_size_cap: usize,
    /// States explored per frontier entry when certifying divergence; the
    /// walk also stops after `256 * cycle_budget` term nodes.
    pub cycle_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { frontier_cap: 100_000, term_size_cap: 250_000, cycle_budget: 256 }
    }
}

/// Lower approximant plus residual mass at a given fuel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub lower: SubDist,
    pub residual: Dyadic,
    pub fuel: u64,
    pub strategy: Strategy,
}

impl Bracket {
    /// Upper bound on the probability of `v`: `lower(v) + residual`.
    pub fn upper_bound(&self, v: &Term) -> Dyadic {
        &self.lower.get(v) + &self.residual
    }

    /// No mass is pending, so `lower` is the exact semantics.
    pub fn is_stable(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn to_json(&self) -> Json {
        let mut j = self.lower.to_json();
        j["residual"] = dyadic_json(&self.residual);
        j["fuel"] = json!(self.fuel);
        j["strategy"] = json!(self.strategy.name());
        j
    }
}

/// `lower(v) + residual` for a bracket.
pub fn upper_bound(b: &Bracket, v: &Term) -> Dyadic {
    b.upper_bound(v)
}

/// Pending terms and their masses.
#[derive(Debug, Clone, Default)]
pub struct Frontier {
    pending: HashMap<Term, Dyadic>,
}

impl Frontier {
    pub fn mass(&self) -> Dyadic {
        self.pending.values().sum()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Dyadic)> {
        self.pending.iter()
    }

    fn add(&mut self, t: Term, m: Dyadic) {
        self.pending.entry(t).and_modify(|x| *x += &m).or_insert(m);
    }
}

/// Incremental evaluator: each call to [`Explorer::round`] expands every
/// pending term by one reduction step.
pub struct Explorer {
    strategy: Strategy,
    limits: Limits,
    lower: SubDist,
    frontier: Frontier,
    rounds: u64,
}

impl Explorer {
    pub fn new(t: &Term, strategy: Strategy, limits: Limits) -> Result<Self> {
        require_closed(t)?;
        let mut ex = Explorer { strategy, limits, lower: SubDist::empty(), frontier: Frontier::default(), rounds: 0 };
        let c = t.canonical();
        if c.is_value() {
            ex.lower.add_canonical(c, &Dyadic::one());
        } else {
            ex.frontier.add(c, Dyadic::one());
        }
        Ok(ex)
    }

    pub fn round(&mut self) -> Result<()> {
        if self.frontier.is_empty() {
            self.rounds += 1;
            return Ok(());
        }
        let round = self.rounds + 1;
        let mut next = Frontier::default();
        // sorted so the iteration order (and hence any error) is reproducible
        let mut pending: Vec<(Term, Dyadic)> = std::mem::take(&mut self.frontier.pending).into_iter().collect();
        pending.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (t, m) in pending {
            let step =
                step_unchecked(&t, self.strategy)?.ok_or_else(|| Error::Stuck(format!("value in frontier: {t}")))?;
            let share = if step.is_deterministic() { m } else { m.halve() };
            for s in step.into_successors() {
                let (c, size) = s.canonical_closed_sized();
                if size > self.limits.term_size_cap {
                    return Err(Error::TermSizeCap { limit: self.limits.term_size_cap, round });
                }
                if c.is_value() {
                    self.lower.add_canonical(c, &share);
                } else {
                    next.add(c, share.clone());
                }
            }
            if next.len() > self.limits.frontier_cap {
                return Err(Error::FrontierCap { limit: self.limits.frontier_cap, round });
            }
        }
        self.frontier = next;
        self.rounds = round;
        Ok(())
    }

    pub fn run(&mut self, rounds: u64) -> Result<()> {
        for _ in 0..rounds {
            if self.frontier.is_empty() {
                self.rounds += 1;
                continue;
            }
            self.round()?;
        }
        Ok(())
    }

    pub fn is_stable(&self) -> bool {
        self.frontier.is_empty()
    }

    pub fn fuel(&self) -> u64 {
        self.rounds
    }

    pub fn lower(&self) -> &SubDist {
        &self.lower
    }

    pub fn frontier(&self) -> &Frontier {
        &self.frontier
    }

    pub fn bracket(&self) -> Bracket {
        Bracket {
            lower: self.lower.clone(),
            residual: self.frontier.mass(),
            fuel: self.rounds,
            strategy: self.strategy,
        }
    }

    /// Mass of pending states whose whole reachable state space is finite
    /// and contains no value; such states diverge with probability 1.
    pub fn certified_divergent_mass(&self) -> Result<Dyadic> {
        let mut certifier = DivergenceCertifier::new(self.strategy, self.limits.cycle_budget);
        let mut total = Dyadic::zero();
        let mut pending: Vec<(&Term, &Dyadic)> = self.frontier.iter().collect();
        pending.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (t, m) in pending {
            if certifier.diverges(t)? {
                total += m;
            }
        }
        Ok(total)
    }
}

/// Average term size allowed per budgeted state when certifying.
const NODES_PER_STATE: usize = 256;

struct DivergenceCertifier {
    strategy: Strategy,
    budget: usize,
    divergent: HashSet<Term>,
    unknown: HashSet<Term>,
}

impl DivergenceCertifier {
    fn new(strategy: Strategy, budget: usize) -> Self {
        DivergenceCertifier { strategy, budget, divergent: HashSet::new(), unknown: HashSet::new() }
    }

    fn diverges(&mut self, start: &Term) -> Result<bool> {
        if self.divergent.contains(start) {
            return Ok(true);
        }
        if self.unknown.contains(start) {
            return Ok(false);
        }
        let mut seen: HashSet<Term> = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        // growing terms are never certified, so their walk is cut short
        let mut nodes = 0usize;
        while let Some(t) = queue.pop_front() {
            if self.divergent.contains(&t) {
                continue;
            }
            let Some(step) = step_unchecked(&t, self.strategy)? else {
                self.unknown.insert(start.clone());
                return Ok(false);
            };
            for s in step.into_successors() {
                let (c, size) = s.canonical_closed_sized();
                nodes += size;
                if c.is_value() || self.unknown.contains(&c) || nodes > self.budget * NODES_PER_STATE {
                    self.unknown.insert(start.clone());
                    return Ok(false);
                }
                if seen.insert(c.clone()) {
                    if seen.len() > self.budget {
                        self.unknown.insert(start.clone());
                        return Ok(false);
                    }
                    queue.push_back(c);
                }
            }
        }
        self.divergent.extend(seen);
        Ok(true)
    }
}

/// Lower approximant and residual after exactly `fuel` rounds.
pub fn approximate(t: &Term, strategy: Strategy, fuel: u64) -> Result<Bracket> {
    approximate_with(t, strategy, fuel, &Limits::default())
}

pub fn approximate_with(t: &Term, strategy: Strategy, fuel: u64, limits: &Limits) -> Result<Bracket> {
    let mut ex = Explorer::new(t, strategy, *limits)?;
    ex.run(fuel)?;
    Ok(ex.bracket())
}

/// Runs at most `max_fuel` rounds, stopping as soon as no mass is pending.
/// The reported fuel is the number of rounds actually needed.
pub fn approximate_until_stable(t: &Term, strategy: Strategy, max_fuel: u64, limits: &Limits) -> Result<Bracket> {
    let mut ex = Explorer::new(t, strategy, *limits)?;
    while !ex.is_stable() && ex.fuel() < max_fuel {
        ex.round()?;
    }
    Ok(ex.bracket())
}

/// Bounds on the probability of divergence: `lower` is the mass certified
/// divergent by exhaustive exploration of pending states, `upper` is
/// `1 − mass(lower approximant)`.
pub fn divergence_bracket(t: &Term, strategy: Strategy, fuel: u64) -> Result<(Dyadic, Dyadic)> {
    divergence_bracket_with(t, strategy, fuel, &Limits::default())
}

pub fn divergence_bracket_with(t: &Term, strategy: Strategy, fuel: u64, limits: &Limits) -> Result<(Dyadic, Dyadic)> {
    let mut ex = Explorer::new(t, strategy, *limits)?;
    ex.run(fuel)?;
    let lower = ex.certified_divergent_mass()?;
    let upper = ex.frontier().mass();
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{self, nat};
    use crate::syntax::parse;

    fn t(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn identity_application_converges_in_one_round() {
        let b = approximate(&t("(\\x.x)(\\x.x)"), Strategy::Cbv, 1).unwrap();
        assert_eq!(b.lower, SubDist::point(&t("\\x.x")));
        assert!(b.residual.is_zero());
        let b0 = approximate(&t("(\\x.x)(\\x.x)"), Strategy::Cbv, 0).unwrap();
        assert!(b0.lower.is_empty());
        assert!(b0.residual.is_one());
    }

    #[test]
    fn values_need_no_fuel() {
        let b = approximate(&t("\\x. OMEGA"), Strategy::Cbv, 0).unwrap();
        assert_eq!(b.lower.mass(), Dyadic::one());
    }

    #[test]
    fn omega_never_converges() {
        for k in [0, 1, 5, 20] {
            let b = approximate(&encodings::omega(), Strategy::Cbv, k).unwrap();
            assert!(b.lower.is_empty());
            assert!(b.residual.is_one());
        }
    }

    #[test]
    fn geometric_prefix() {
        let geo = encodings::geo();
        let mut ex = Explorer::new(&geo, Strategy::Cbv, Limits::default()).unwrap();
        while ex.lower().len() < 3 {
            ex.round().unwrap();
        }
        let b = ex.bracket();
        for n in 0..3u64 {
            assert_eq!(b.lower.get(&nat(n)), Dyadic::pow2_neg(n + 1));
        }
        assert_eq!(b.residual, d("1/8"));
    }

    #[test]
    fn upper_bound_decreases_with_fuel() {
        let geo = encodings::geo();
        let a = approximate(&geo, Strategy::Cbv, 20).unwrap();
        let b = approximate(&geo, Strategy::Cbv, 60).unwrap();
        let zero = nat(0);
        assert_eq!(a.lower.get(&zero), d("1/2"));
        assert!(b.upper_bound(&zero) < a.upper_bound(&zero));
        assert!(a.lower.leq(&b.lower));
    }

    #[test]
    fn upper_bound_examples() {
        let b = approximate(&encodings::omega(), Strategy::Cbv, 3).unwrap();
        assert!(upper_bound(&b, &t("\\x.x")).is_one());
        let v = approximate(&t("\\x.x"), Strategy::Cbv, 0).unwrap();
        assert!(upper_bound(&v, &t("\\y.y")).is_one());
    }

    #[test]
    fn divergence_brackets() {
        for k in [0, 1, 7] {
            let (lo, hi) = divergence_bracket(&encodings::omega(), Strategy::Cbv, k).unwrap();
            assert!(lo.is_one() && hi.is_one());
        }
        let (lo, hi) = divergence_bracket(&t("\\x. OMEGA"), Strategy::Cbv, 0).unwrap();
        assert!(lo.is_zero() && hi.is_zero());
        let (lo, hi) = divergence_bracket(&t("OMEGA (+) \\x.x"), Strategy::Cbn, 2).unwrap();
        assert_eq!((lo, hi), (d("1/2"), d("1/2")));
    }

    #[test]
    fn recurrent_but_terminating_states_not_certified() {
        // GEO revisits no state, but a loop that can exit must not count
        let (lo, _) = divergence_bracket(&encodings::geo(), Strategy::Cbv, 10).unwrap();
        assert!(lo.is_zero());
        // (λx. x x ⊕ id)(λx. x x ⊕ id): returns to itself with prob. 1/2 but exits
        let loopy = t("(\\x. (x x) (+) (\\y. y)) (\\x. (x x) (+) (\\y. y))");
        let (lo, hi) = divergence_bracket(&loopy, Strategy::Cbn, 10).unwrap();
        assert!(lo.is_zero());
        assert!(hi < Dyadic::one());
    }

    #[test]
    fn xor_discrepancy() {
        let p = encodings::xor_program();
        let v = approximate_until_stable(&p, Strategy::Cbv, 100, &Limits::default()).unwrap();
        assert!(v.is_stable());
        assert_eq!(v.lower, SubDist::point(&encodings::ff()));
        let n = approximate_until_stable(&p, Strategy::Cbn, 100, &Limits::default()).unwrap();
        assert!(n.is_stable());
        assert_eq!(n.lower.get(&encodings::tt()), d("1/2"));
        assert_eq!(n.lower.get(&encodings::ff()), d("1/2"));
    }

    #[test]
    fn frontier_cap_aborts() {
        let limits = Limits { frontier_cap: 0, ..Limits::default() };
        let e = approximate_with(&t("OMEGA"), Strategy::Cbv, 2, &limits).unwrap_err();
        assert!(matches!(e, Error::FrontierCap { .. }));
    }

    #[test]
    fn open_terms_rejected() {
        assert!(matches!(approximate(&t("x"), Strategy::Cbv, 1), Err(Error::OpenTerm(_))));
    }
}
