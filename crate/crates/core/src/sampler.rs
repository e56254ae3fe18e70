//! Monte Carlo evaluation: single runs that resolve each choice with a
//! fair coin, and seeded parallel estimates built from them.
//!
//! Heads (a 1 bit) selects the left successor. Sample `i` of an estimate
//! draws its coins from ChaCha8 seeded with the user seed on stream `i`, so
//! results do not depend on thread scheduling.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::reduction::{require_closed, step_unchecked, Step, Strategy};
use crate::syntax::Term;

pub const RNG_NAME: &str = "ChaCha8";

/// Source of fair coin flips; `true` is heads.
pub trait Coin {
    fn flip(&mut self) -> Result<bool>;
}

impl<R: RngCore> Coin for R {
    fn flip(&mut self) -> Result<bool> {
        Ok(self.next_u32() & 1 == 1)
    }
}

/// A fixed sequence of flips, for replaying a particular run.
#[derive(Debug, Clone)]
pub struct FlipSequence {
    flips: Vec<bool>,
    pos: usize,
}

impl FlipSequence {
    pub fn new(flips: impl Into<Vec<bool>>) -> Self {
        FlipSequence { flips: flips.into(), pos: 0 }
    }
}

impl Coin for FlipSequence {
    fn flip(&mut self) -> Result<bool> {
        let f = *self.flips.get(self.pos).ok_or(Error::FlipsExhausted(self.pos))?;
        self.pos += 1;
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    /// The value reached, or `None` on timeout.
    pub result: Option<Term>,
    pub steps_used: u64,
}

impl SampleOutcome {
    pub fn is_timeout(&self) -> bool {
        self.result.is_none()
    }
}

/// Runs `t` for at most `max_steps` steps.
pub fn sample_run(t: &Term, strategy: Strategy, max_steps: u64, coin: &mut impl Coin) -> Result<SampleOutcome> {
    require_closed(t)?;
    run_unchecked(t.clone(), strategy, max_steps, coin)
}

fn run_unchecked(mut cur: Term, strategy: Strategy, max_steps: u64, coin: &mut impl Coin) -> Result<SampleOutcome> {
    let mut steps = 0;
    loop {
        if cur.is_value() {
            return Ok(SampleOutcome { result: Some(cur), steps_used: steps });
        }
        if steps == max_steps {
            return Ok(SampleOutcome { result: None, steps_used: steps });
        }
        cur = match step_unchecked(&cur, strategy)? {
            Some(Step::One(next)) => next,
            Some(Step::Two(left, right)) => {
                if coin.flip()? {
                    left
                } else {
                    right
                }
            }
            None => unreachable!("values are returned above"),
        };
        steps += 1;
    }
}

/// Empirical distribution from repeated runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Estimate {
    /// Counts per canonical value.
    pub counts: BTreeMap<Term, u64>,
    pub timeouts: u64,
    pub samples: u64,
    pub seed: u64,
    pub max_steps: u64,
    pub strategy: Strategy,
}

impl Estimate {
    pub fn frequency(&self, v: &Term) -> f64 {
        let c = self.counts.get(&v.canonical()).copied().unwrap_or(0);
        c as f64 / self.samples as f64
    }

    pub fn timeout_rate(&self) -> f64 {
        self.timeouts as f64 / self.samples as f64
    }

    pub fn to_json(&self) -> Json {
        let entries: Vec<Json> = self
            .counts
            .iter()
            .map(|(v, c)| {
                json!({
                    "value": v.to_string(),
                    "count": c,
                    "frequency": *c as f64 / self.samples as f64,
                })
            })
            .collect();
        json!({
            "entries": entries,
            "timeouts": self.timeouts,
            "timeout_rate": self.timeout_rate(),
            "samples": self.samples,
            "max_steps": self.max_steps,
            "strategy": self.strategy.name(),
            "seed": self.seed,
            "rng": RNG_NAME,
        })
    }
}

/// Coin source for sample `index` of an estimate seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn estimate(t: &Term, strategy: Strategy, samples: u64, max_steps: u64, seed: u64) -> Result<Estimate> {
    require_closed(t)?;
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    type Tally = (BTreeMap<Term, u64>, u64);
    let (counts, timeouts) = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let out = run_unchecked(t.clone(), strategy, max_steps, &mut sample_rng(seed, i))?;
            Ok(match out.result {
                Some(v) => (BTreeMap::from([(v.canonical(), 1)]), 0),
                None => (BTreeMap::new(), 1),
            })
        })
        .try_reduce(
            || (BTreeMap::new(), 0),
            |(mut a, ta), (b, tb)| {
                for (v, c) in b {
                    *a.entry(v).or_insert(0) += c;
                }
                Ok((a, ta + tb))
            },
        )?;
    Ok(Estimate { counts, timeouts, samples, seed, max_steps, strategy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{self, ff, nat, tt};
    use crate::syntax::{alpha_eq, parse};

    fn t(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn deterministic_run() {
        let out = sample_run(&t("(\\x.x)(\\y.y)"), Strategy::Cbv, 10, &mut FlipSequence::new([])).unwrap();
        assert!(alpha_eq(out.result.as_ref().unwrap(), &t("\\y.y")));
        assert_eq!(out.steps_used, 1);
    }

    #[test]
    fn heads_is_left() {
        let out = sample_run(&t("TT (+) FF"), Strategy::Cbv, 10, &mut FlipSequence::new([true])).unwrap();
        assert!(alpha_eq(out.result.as_ref().unwrap(), &tt()));
        let out = sample_run(&t("TT (+) FF"), Strategy::Cbv, 10, &mut FlipSequence::new([false])).unwrap();
        assert!(alpha_eq(out.result.as_ref().unwrap(), &ff()));
    }

    #[test]
    fn omega_times_out() {
        let out = sample_run(&encodings::omega(), Strategy::Cbv, 100, &mut sample_rng(1, 0)).unwrap();
        assert!(out.is_timeout());
        assert_eq!(out.steps_used, 100);
    }

    #[test]
    fn exhausted_flips() {
        let e = sample_run(&t("TT (+) FF"), Strategy::Cbv, 10, &mut FlipSequence::new([])).unwrap_err();
        assert!(matches!(e, Error::FlipsExhausted(0)));
    }

    #[test]
    fn reproducible() {
        let a = estimate(&encodings::geo(), Strategy::Cbv, 2000, 1000, 7).unwrap();
        let b = estimate(&encodings::geo(), Strategy::Cbv, 2000, 1000, 7).unwrap();
        assert_eq!(a, b);
        let c = estimate(&encodings::geo(), Strategy::Cbv, 2000, 1000, 8).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn xor_cbv_is_always_false() {
        let e = estimate(&encodings::xor_program(), Strategy::Cbv, 500, 1000, 3).unwrap();
        assert_eq!(e.frequency(&ff()), 1.0);
    }

    #[test]
    fn geometric_head() {
        let e = estimate(&encodings::geo(), Strategy::Cbv, 20_000, 2000, 11).unwrap();
        assert!((e.frequency(&nat(0)) - 0.5).abs() < 0.015);
        assert_eq!(e.timeouts, 0);
    }
}
