//! Fuel-stratified inductive big-step evaluation.
//!
//! `eval(t, d)` is the distribution derivable with derivations of height at
//! most `d`, where a non-value at height 0 gets the empty distribution.
//! Values evaluate to their point mass at every depth.

use std::collections::HashMap;

use crate::dist::{Dyadic, SubDist};
use crate::error::{Error, Result};
use crate::reduction::{require_closed, Strategy};
use crate::syntax::Term;

/// Maximum derivation height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fuel(pub u64);

impl From<u64> for Fuel {
    fn from(depth: u64) -> Self {
        Fuel(depth)
    }
}

/// Default bound on the total size of memoized terms.
pub const DEFAULT_MEMO_NODES: usize = 4_000_000;

/// Memoizing evaluator for one strategy. The memo is keyed on canonical
/// terms, so it can be reused across calls with growing fuel.
pub struct BigStep {
    strategy: Strategy,
    memo: HashMap<(Term, u64), SubDist>,
    memo_nodes: usize,
    node_limit: usize,
}

impl BigStep {
    pub fn new(strategy: Strategy) -> Self {
        Self::with_node_limit(strategy, DEFAULT_MEMO_NODES)
    }

    /// Evaluation fails with [`Error::MemoCap`] once the memoized terms hold
    /// more than `node_limit` nodes in total.
    pub fn with_node_limit(strategy: Strategy, node_limit: usize) -> Self {
        BigStep { strategy, memo: HashMap::new(), memo_nodes: 0, node_limit }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn eval(&mut self, t: &Term, fuel: impl Into<Fuel>) -> Result<SubDist> {
        require_closed(t)?;
        self.go(&t.canonical(), fuel.into().0)
    }

    /// Raises the fuel until the result has mass 1 or `max_depth` is
    /// reached. Returns the result and the depth used.
    pub fn eval_until_total(&mut self, t: &Term, max_depth: u64) -> Result<(SubDist, u64)> {
        require_closed(t)?;
        let t = t.canonical();
        let mut depth = 0;
        loop {
            let d = self.go(&t, depth)?;
            if d.mass().is_one() || depth >= max_depth {
                return Ok((d, depth));
            }
            depth += 1;
        }
    }

    // `t` is canonical.
    fn go(&mut self, t: &Term, depth: u64) -> Result<SubDist> {
        if t.is_value() {
            return Ok(SubDist::point(t));
        }
        if depth == 0 {
            return Ok(SubDist::empty());
        }
        let key = (t.clone(), depth);
        if let Some(d) = self.memo.get(&key) {
            return Ok(d.clone());
        }
        let d = crate::syntax::term::grow(|| self.step(t, depth - 1))?;
        self.memo_nodes += t.size();
        if self.memo_nodes > self.node_limit {
            return Err(Error::MemoCap { limit: self.node_limit });
        }
        self.memo.insert(key, d.clone());
        Ok(d)
    }

    fn step(&mut self, t: &Term, sub: u64) -> Result<SubDist> {
        match (t, self.strategy) {
            (Term::App(m, n), Strategy::Cbv) => {
                let fun = self.go(m, sub)?;
                let arg = self.go(n, sub)?;
                let mut out = SubDist::empty();
                for (f, pf) in fun.iter() {
                    let Term::Abs(x, body) = f else { continue };
                    for (v, pv) in arg.iter() {
                        let r = body.substitute_closed(x, v).canonical();
                        let res = self.go(&r, sub)?;
                        out.accumulate(&res, &(pf * pv));
                    }
                }
                Ok(out)
            }
            (Term::App(m, n), Strategy::Cbn) => {
                let fun = self.go(m, sub)?;
                let mut out = SubDist::empty();
                for (f, pf) in fun.iter() {
                    let Term::Abs(x, body) = f else { continue };
                    let r = body.substitute_closed(x, n).canonical();
                    let res = self.go(&r, sub)?;
                    out.accumulate(&res, pf);
                }
                Ok(out)
            }
            (Term::Choice(m, n), Strategy::Cbv) => {
                let left = self.go(m, sub)?;
                let right = self.go(n, sub)?;
                let wl = left.mass().halve();
                let wr = right.mass().halve();
                SubDist::combine([(wr, &left), (wl, &right)])
            }
            (Term::Choice(m, n), Strategy::Cbn) => {
                let left = self.go(m, sub)?;
                let right = self.go(n, sub)?;
                SubDist::combine([(Dyadic::half(), &left), (Dyadic::half(), &right)])
            }
            _ => unreachable!("values are handled by the caller"),
        }
    }
}

pub fn eval_big_cbv(t: &Term, fuel: impl Into<Fuel>) -> Result<SubDist> {
    BigStep::new(Strategy::Cbv).eval(t, fuel)
}

pub fn eval_big_cbn(t: &Term, fuel: impl Into<Fuel>) -> Result<SubDist> {
    BigStep::new(Strategy::Cbn).eval(t, fuel)
}

pub fn eval_big(t: &Term, strategy: Strategy, fuel: impl Into<Fuel>) -> Result<SubDist> {
    BigStep::new(strategy).eval(t, fuel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{self, ff, nat, tt};
    use crate::error::Error;
    use crate::syntax::parse;

    fn t(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn omega_is_empty() {
        for k in [0, 1, 5, 30] {
            assert!(eval_big_cbv(&encodings::omega(), k).unwrap().is_empty());
            assert!(eval_big_cbn(&encodings::omega(), k).unwrap().is_empty());
        }
    }

    #[test]
    fn fair_boolean() {
        let r = eval_big_cbv(&t("TT (+) FF"), 1).unwrap();
        assert_eq!(r.get(&tt()), d("1/2"));
        assert_eq!(r.get(&ff()), d("1/2"));
        assert!(eval_big_cbv(&t("TT (+) FF"), 0).unwrap().is_empty());
    }

    #[test]
    fn choice_with_divergent_branch() {
        let m = t("OMEGA (+) \\x.x");
        for k in [1, 2, 10] {
            assert!(eval_big_cbv(&m, k).unwrap().is_empty());
        }
        for k in [2, 10] {
            let r = eval_big_cbn(&m, k).unwrap();
            assert_eq!(r, SubDist::from_entries([(t("\\x.x"), d("1/2"))]).unwrap());
        }
    }

    #[test]
    fn cbn_does_not_evaluate_argument() {
        let r = eval_big_cbn(&t("(\\x.\\y.x) OMEGA"), 2).unwrap();
        assert_eq!(r, SubDist::point(&t("\\y. OMEGA")));
        assert!(eval_big_cbv(&t("(\\x.\\y.x) OMEGA"), 20).unwrap().is_empty());
    }

    #[test]
    fn xor_program() {
        let p = encodings::xor_program();
        let n = eval_big_cbn(&p, 8).unwrap();
        assert_eq!(n.get(&tt()), d("1/2"));
        assert_eq!(n.get(&ff()), d("1/2"));
        let v = eval_big_cbv(&p, 8).unwrap();
        assert_eq!(v, SubDist::point(&ff()));
    }

    #[test]
    fn monotone_in_fuel() {
        let mut ev = BigStep::new(Strategy::Cbv);
        let geo = encodings::geo();
        let mut prev = SubDist::empty();
        for k in 0..25 {
            let cur = ev.eval(&geo, k).unwrap();
            assert!(prev.leq(&cur), "fuel {k}");
            prev = cur;
        }
        assert_eq!(prev.get(&nat(0)), d("1/2"));
    }

    #[test]
    fn until_total() {
        let mut ev = BigStep::new(Strategy::Cbn);
        let (r, depth) = ev.eval_until_total(&encodings::xor_program(), 100).unwrap();
        assert!(r.mass().is_one());
        assert!(depth <= 8);
    }

    #[test]
    fn open_terms_rejected() {
        assert!(matches!(eval_big_cbv(&t("x"), 3), Err(Error::OpenTerm(_))));
    }
}
