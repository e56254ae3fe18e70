//! Computable distributions over the naturals and the two directions of
//! the expressiveness result: reading the digits of a term's semantics
//! (soundness) and building a term from an oracle for the digits
//! (completeness).
//!
//! Digit convention: `digits(a, n)` is the `n`-bit binary expansion of
//! `floor(2^n · D(a))`, except that probability 1 gives all ones. Strings
//! for successive `n` are therefore prefixes of each other.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{CheckedSub, One, Zero};

use crate::dist::Dyadic;
use crate::encodings::{self, fdt_from_dist, mfdt, nat, pair, FdtTerm, NatDist};
use crate::error::{Error, Result};
use crate::reduction::Strategy;
use crate::smallstep::{Explorer, Limits};
use crate::syntax::{abs, abs_many, app, choice, var, Term};

/// Approximating function of a distribution over the naturals.
pub trait DistOracle: Send + Sync {
    /// First `n` binary digits of `D(a)`.
    fn digits(&self, a: u64, n: u64) -> Result<String>;

    /// The distribution itself, when it is finite and known exactly.
    fn exact(&self) -> Option<NatDist> {
        None
    }
}

/// `floor(2^n · p)`, clamped to `2^n − 1`.
pub fn scaled_floor(p: &Dyadic, n: u64) -> BigUint {
    let max = (BigUint::one() << n) - 1u32;
    p.floor_scaled(n).min(max)
}

pub fn bits_of(x: &BigUint, n: u64) -> String {
    (0..n).rev().map(|i| if x.bit(i) { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<BigUint> {
    let mut x = BigUint::zero();
    for c in s.chars() {
        x <<= 1;
        match c {
            '0' => {}
            '1' => x += 1u32,
            _ => return Err(Error::Oracle(format!("not a bit string: {s:?}"))),
        }
    }
    Ok(x)
}

/// Digits of a known probability under the module's convention.
pub fn digits_of(p: &Dyadic, n: u64) -> String {
    bits_of(&scaled_floor(p, n), n)
}

fn query(o: &dyn DistOracle, a: u64, n: u64) -> Result<BigUint> {
    let s = o.digits(a, n)?;
    if s.len() as u64 != n {
        return Err(Error::Oracle(format!("asked for {n} digits of D({a}), got {s:?}")));
    }
    parse_bits(&s)
}

/// Lower bound on `D(a)` from its first `n` digits.
pub fn lower_bound(o: &dyn DistOracle, a: u64, n: u64) -> Result<Dyadic> {
    let x = query(o, a, n)?;
    Ok(Dyadic::new(x, n))
}

/// Oracle for a finite distribution with known masses.
#[derive(Debug, Clone)]
pub struct FiniteOracle {
    dist: NatDist,
}

impl FiniteOracle {
    pub fn new(dist: NatDist) -> Result<Self> {
        let total: Dyadic = dist.values().sum();
        if total > Dyadic::one() {
            return Err(Error::MassOverflow(total.to_string()));
        }
        Ok(FiniteOracle { dist })
    }

    pub fn dist(&self) -> &NatDist {
        &self.dist
    }
}

impl DistOracle for FiniteOracle {
    fn digits(&self, a: u64, n: u64) -> Result<String> {
        Ok(digits_of(&self.dist.get(&a).cloned().unwrap_or_default(), n))
    }

    fn exact(&self) -> Option<NatDist> {
        Some(self.dist.clone())
    }
}

/// `D(a) = 2^-(a+1)`
#[derive(Debug, Clone, Copy, Default)]
pub struct GeometricOracle;

impl DistOracle for GeometricOracle {
    fn digits(&self, a: u64, n: u64) -> Result<String> {
        Ok((0..n).map(|i| if i == a { '1' } else { '0' }).collect())
    }
}

/// `F = 2D − E` for an oracle `D` and a finite `E` with `E ≤ 2D`.
pub struct RemainderOracle {
    inner: Arc<dyn DistOracle>,
    taken: NatDist,
}

impl RemainderOracle {
    pub fn new(inner: Arc<dyn DistOracle>, taken: NatDist) -> Self {
        RemainderOracle { inner, taken }
    }
}

impl DistOracle for RemainderOracle {
    fn digits(&self, a: u64, n: u64) -> Result<String> {
        let e = self.taken.get(&a).cloned().unwrap_or_default();
        // With m ≥ exp(e), 2^m·F = 2^(m+1)·D − 2^m·e where the second term
        // is an integer, so floor(2^m·F) needs only m+1 digits of D.
        let m = n.max(e.exponent());
        let x = query(self.inner.as_ref(), a, m + 1)?;
        let val = x.checked_sub(&e.scaled_numerator(m)).unwrap_or_default();
        let max = (BigUint::one() << n) - 1u32;
        Ok(bits_of(&(val >> (m - n)).min(max), n))
    }

    fn exact(&self) -> Option<NatDist> {
        let d = self.inner.exact()?;
        let mut out = NatDist::new();
        for (a, p) in d {
            let e = self.taken.get(&a).cloned().unwrap_or_default();
            let f = p.double().checked_sub(&e)?;
            if !f.is_zero() {
                out.insert(a, f);
            }
        }
        Some(out)
    }
}

/// An external program speaking the line protocol: it reads `a n` and
/// answers with `n` binary digits.
pub struct ProcessOracle {
    command: String,
    io: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
}

impl ProcessOracle {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Oracle(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ProcessOracle { command: command.to_string(), io: Mutex::new((child, stdin, stdout)) })
    }
}

impl DistOracle for ProcessOracle {
    fn digits(&self, a: u64, n: u64) -> Result<String> {
        let fail = |what: String| Error::Oracle(format!("`{}`: {what}", self.command));
        let mut guard = self.io.lock().map_err(|_| fail("poisoned".into()))?;
        let (_, stdin, stdout) = &mut *guard;
        writeln!(stdin, "{a} {n}").and_then(|_| stdin.flush()).map_err(|e| fail(e.to_string()))?;
        let mut line = String::new();
        let read = stdout.read_line(&mut line).map_err(|e| fail(e.to_string()))?;
        if read == 0 {
            return Err(fail("closed its output".into()));
        }
        Ok(line.trim().to_string())
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.io.lock() {
            let _ = guard.0.kill();
            let _ = guard.0.wait();
        }
    }
}

/// Serves an oracle over the line protocol until end of input.
pub fn serve(o: &dyn DistOracle, input: impl BufRead, mut output: impl Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Oracle(e.to_string());
    for line in input.lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<u64> = line
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| Error::Oracle(format!("bad query {line:?}"))))
            .collect::<Result<_>>()?;
        let [a, n] = nums[..] else {
            return Err(Error::Oracle(format!("bad query {line:?}")));
        };
        writeln!(output, "{}", o.digits(a, n)?).map_err(io)?;
        output.flush().map_err(io)?;
    }
    Ok(())
}

/// One splitting step `D = ½·pd(fdt) + ½·remainder`.
pub struct Split {
    pub fdt: FdtTerm,
    pub taken: NatDist,
    pub remainder: Arc<dyn DistOracle>,
}

/// Splits a proper distribution. Stage `s` reads `s` digits of `D(0..s)`;
/// once the lower bounds reach ½, a distribution `E ≤ 2·(lower bounds)` of
/// mass exactly 1 is taken greedily.
pub fn split(o: Arc<dyn DistOracle>, budget: u32) -> Result<Split> {
    for s in 1..=u64::from(budget) {
        let mut lows = Vec::new();
        for a in 0..s {
            lows.push((a, lower_bound(o.as_ref(), a, s)?));
        }
        let total: Dyadic = lows.iter().map(|(_, l)| l).sum();
        if total < Dyadic::half() {
            continue;
        }
        let mut taken = NatDist::new();
        let mut remaining = Dyadic::one();
        for (a, l) in lows {
            if remaining.is_zero() {
                break;
            }
            let e = l.double().min(remaining.clone());
            if !e.is_zero() {
                remaining = remaining.saturating_sub(&e);
                taken.insert(a, e);
            }
        }
        let fdt = fdt_from_dist(&taken)?;
        let remainder: Arc<dyn DistOracle> = match RemainderOracle::new(o.clone(), taken.clone()).exact() {
            Some(exact) => Arc::new(FiniteOracle::new(exact)?),
            None => Arc::new(RemainderOracle::new(o, taken.clone())),
        };
        return Ok(Split { fdt, taken, remainder });
    }
    Err(Error::SplitBudget(budget))
}

pub struct Completeness {
    pub term: Term,
    /// Lower bound on the mass of the term's semantics.
    pub guarantee: Dyadic,
    /// Distribution terms produced by the successive splits.
    pub parts: Vec<FdtTerm>,
    /// Set when the last remainder was finite and inlined exactly, making
    /// the semantics equal to the oracle's distribution.
    pub exact_tail: bool,
}

/// `λx.λy.y (λz.λw.((λs.MFDT z) ⊕ (λs.x w)) (λs.s))`: applied through `H`
/// to a chain of pairs `⟨L₁, ⟨L₂, …⟩⟩`, runs `MFDT Lᵢ` with probability
/// `2^-i`.
fn chain_step() -> Term {
    let body = app(choice(abs("s", app(mfdt(), var("z"))), abs("s", app(var("x"), var("w")))), abs("s", var("s")));
    abs_many(&["x", "y"], app(var("y"), abs_many(&["z", "w"], body)))
}

/// Builds a term whose call-by-value semantics is below the oracle's
/// distribution and has mass at least `1 − 2^-rounds`.
pub fn completeness_approx(o: Arc<dyn DistOracle>, rounds: u32, budget: u32) -> Result<Completeness> {
    let mut parts = Vec::new();
    let mut cur = o;
    for _ in 0..rounds {
        let s = split(cur, budget)?;
        parts.push(s.fdt);
        cur = s.remainder;
    }
    let (tail, exact_tail) = match cur.exact() {
        Some(d) if rounds > 0 => {
            let f = fdt_from_dist(&d)?;
            (abs("r", app(mfdt(), f.into_term())), true)
        }
        _ => (abs("r", encodings::omega()), false),
    };
    let chain = parts.iter().rev().fold(tail, |acc, l| pair(l.term().clone(), acc));
    let term = if rounds == 0 { encodings::omega() } else { app(app(encodings::h(), chain_step()), chain) };
    let guarantee = Dyadic::one().saturating_sub(&Dyadic::pow2_neg(u64::from(rounds)));
    Ok(Completeness { term, guarantee, parts, exact_tail })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Soundness {
    Digits(String),
    /// The fuel schedule ran out before the pending mass fell below `2^-n`.
    Insufficient,
}

/// Reads the first `n` digits of `⟦t⟧(⌜a⌝)` by evaluating `t` under
/// call-by-value with doubling fuel up to `max_fuel`.
///
/// Once the pending mass is below `2^-n`, evaluation continues until the
/// digits of the lower and upper bounds agree (or the schedule ends), so
/// the answer is exact whenever the schedule allows.
pub fn soundness_approx(t: &Term, a: u64, n: u64, max_fuel: u64, limits: &Limits) -> Result<Soundness> {
    let mut ex = Explorer::new(t, Strategy::Cbv, *limits)?;
    let threshold = Dyadic::pow2_neg(n);
    let target = nat(a);
    let mut fuel = 1;
    let mut candidate = None;
    loop {
        let step = fuel.min(max_fuel).saturating_sub(ex.fuel());
        ex.run(step)?;
        let b = ex.bracket();
        for v in b.lower.support() {
            if encodings::decode_nat(v).is_none() {
                return Err(Error::NonNumeral(v.to_string()));
            }
        }
        if b.residual < threshold {
            let lo = digits_of(&b.lower.get(&target), n);
            let hi = digits_of(&b.upper_bound(&target), n);
            if lo == hi || b.is_stable() {
                return Ok(Soundness::Digits(lo));
            }
            candidate = Some(lo);
        }
        if ex.fuel() >= max_fuel || ex.is_stable() {
            return Ok(candidate.map_or(Soundness::Insufficient, Soundness::Digits));
        }
        fuel *= 2;
    }
}
