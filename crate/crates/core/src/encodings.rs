//! Named terms and data encodings: booleans, xor, Scott numerals, binary
//! strings, pairs, the fixed-point combinator `H`, finite distribution
//! terms and their interpreter `MFDT`, and a geometric generator.

use std::collections::BTreeMap;

use crate::dist::{Dyadic, SubDist};
use crate::error::{Error, Result};
use crate::reduction::Strategy;
use crate::smallstep::{self, Bracket, Limits};
use crate::syntax::{abs, abs_many, app, app_many, choice, var, Term};

/// Finite distribution over the naturals.
pub type NatDist = BTreeMap<u64, Dyadic>;

pub fn tt() -> Term {
    abs_many(&["x", "y"], var("x"))
}

pub fn ff() -> Term {
    abs_many(&["x", "y"], var("y"))
}

pub fn id() -> Term {
    abs("x", var("x"))
}

pub fn delta() -> Term {
    abs("x", app(var("x"), var("x")))
}

pub fn omega() -> Term {
    app(delta(), delta())
}

/// `λx.λy.(x (λz.z FF TT) (λz.z TT FF)) y`
pub fn xor() -> Term {
    let not_branch = abs("z", app_many(var("z"), [ff(), tt()]));
    let id_branch = abs("z", app_many(var("z"), [tt(), ff()]));
    abs_many(&["x", "y"], app(app_many(var("x"), [not_branch, id_branch]), var("y")))
}

/// `(λx. XOR x x) (TT ⊕ FF)`
pub fn xor_program() -> Term {
    app(abs("x", app_many(xor(), [var("x"), var("x")])), choice(tt(), ff()))
}

/// `W = λx.λy.y(λz.x x y z)`
pub fn w_combinator() -> Term {
    abs_many(&["x", "y"], app(var("y"), abs("z", app_many(var("x"), [var("x"), var("y"), var("z")]))))
}

/// `H = W W`: for every value `V`, `H V` reduces deterministically in two
/// steps to `V (λz. H V z)`.
pub fn h() -> Term {
    app(w_combinator(), w_combinator())
}

/// Scott numeral: `⌜0⌝ = λxy.x`, `⌜n+1⌝ = λxy.y⌜n⌝`.
pub fn nat(n: u64) -> Term {
    (0..n).fold(tt(), |acc, _| abs_many(&["x", "y"], app(var("y"), acc)))
}

/// Inverse of [`nat`] up to alpha-equivalence.
pub fn decode_nat(v: &Term) -> Option<u64> {
    let mut n = 0u64;
    let mut cur = v;
    loop {
        let Term::Abs(x, body) = cur else { return None };
        let Term::Abs(y, inner) = &**body else { return None };
        match &**inner {
            Term::Var(z) if z == x && x != y => return Some(n),
            Term::App(f, arg) if matches!(&**f, Term::Var(f) if f == y) => {
                n += 1;
                cur = arg;
            }
            _ => return None,
        }
    }
}

/// Successor on Scott numerals: `λn.λx.λy.y n`.
pub fn succ() -> Term {
    abs_many(&["n", "x", "y"], app(var("y"), var("n")))
}

/// `⟨V, W⟩ = λx.x V W`
pub fn pair(v: Term, w: Term) -> Term {
    let x = fresh_for("p", &[&v, &w]);
    abs(&x, app_many(var(&x), [v, w]))
}

/// `λa.λb.λx.x a b`
pub fn pair_builder() -> Term {
    abs_many(&["a", "b", "x"], app_many(var("x"), [var("a"), var("b")]))
}

/// Binary strings: `⌜ε⌝ = λxyz.x`, `⌜0s⌝ = λxyz.y⌜s⌝`, `⌜1s⌝ = λxyz.z⌜s⌝`.
pub fn encode_bits(bits: &[bool]) -> Term {
    bits.iter().rev().fold(abs_many(&["x", "y", "z"], var("x")), |acc, &b| {
        let sel = if b { "z" } else { "y" };
        abs_many(&["x", "y", "z"], app(var(sel), acc))
    })
}

pub fn decode_bits(v: &Term) -> Option<Vec<bool>> {
    let mut out = Vec::new();
    let mut cur = v;
    loop {
        let Term::Abs(x, b1) = cur else { return None };
        let Term::Abs(y, b2) = &**b1 else { return None };
        let Term::Abs(z, body) = &**b2 else { return None };
        if x == y || y == z || x == z {
            return None;
        }
        match &**body {
            Term::Var(h) if h == x => return Some(out),
            Term::App(f, arg) => {
                match &**f {
                    Term::Var(h) if h == y => out.push(false),
                    Term::Var(h) if h == z => out.push(true),
                    _ => return None,
                }
                cur = arg;
            }
            _ => return None,
        }
    }
}

/// Choice performed before evaluating either branch, even in call-by-value:
/// `(TT ⊕ FF)(λz.M)(λz.N)(λw.w)` with `z` not free in `M`, `N`.
pub fn standard_choice(m: Term, n: Term) -> Term {
    let z = fresh_for("z", &[&m, &n]);
    app_many(choice(tt(), ff()), [abs(&z, m), abs(&z, n), abs("w", var("w"))])
}

/// Geometric generator returning `⌜n⌝` with probability `2^-(n+1)`:
/// `H G ⌜0⌝` with `G = λf.λn.((λs.n) ⊕ (λs.f (SUCC n))) (λs.s)`.
///
/// The thunks keep call-by-value from evaluating the recursive branch before
/// the choice is made.
pub fn geo() -> Term {
    let g = abs_many(
        &["f", "n"],
        app(choice(abs("s", var("n")), abs("s", app(var("f"), app(succ(), var("n"))))), abs("s", var("s"))),
    );
    app_many(h(), [g, nat(0)])
}

/// `V = λx.λy.y (λz.z) (λz.λw.(x z) ⊕ (x w))`, so that `MFDT = H V`.
pub fn mfdt_body() -> Term {
    abs_many(
        &["x", "y"],
        app_many(
            var("y"),
            [abs("z", var("z")), abs_many(&["z", "w"], choice(app(var("x"), var("z")), app(var("x"), var("w"))))],
        ),
    )
}

pub fn mfdt() -> Term {
    app(h(), mfdt_body())
}

const CONSTANT_NAMES: &[&str] = &["OMEGA", "DELTA", "ID", "TT", "FF", "XOR", "H", "W", "MFDT", "GEO", "SUCC", "PAIR"];

pub fn is_constant_name(name: &str) -> bool {
    name == "NAT" || CONSTANT_NAMES.contains(&name)
}

/// Expansion of a named constant, as used by the parser.
pub fn constant(name: &str) -> Option<Term> {
    Some(match name {
        "OMEGA" => omega(),
        "DELTA" => delta(),
        "ID" => id(),
        "TT" => tt(),
        "FF" => ff(),
        "XOR" => xor(),
        "H" => h(),
        "W" => w_combinator(),
        "MFDT" => mfdt(),
        "GEO" => geo(),
        "SUCC" => succ(),
        "PAIR" => pair_builder(),
        _ => return None,
    })
}

/// Every named constant the parser knows, excluding the `NAT n` family.
pub fn constants() -> BTreeMap<&'static str, Term> {
    CONSTANT_NAMES.iter().map(|&n| (n, constant(n).expect("listed constant"))).collect()
}

fn fresh_for(base: &str, terms: &[&Term]) -> String {
    let taken = |c: &str| terms.iter().any(|t| t.has_free(c));
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|c| !taken(c)).expect("unbounded supply")
}

/// A finite distribution term: `λxy.x⌜n⌝` (leaf) or `λxy.y M N` (node).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdtTerm(Term);

impl FdtTerm {
    pub fn leaf(n: u64) -> Self {
        FdtTerm(abs_many(&["x", "y"], app(var("x"), nat(n))))
    }

    pub fn node(left: FdtTerm, right: FdtTerm) -> Self {
        FdtTerm(abs_many(&["x", "y"], app_many(var("y"), [left.0, right.0])))
    }

    /// Shape check.
    pub fn from_term(t: &Term) -> Result<Self> {
        if Self::recognize(t).is_some() {
            Ok(FdtTerm(t.clone()))
        } else {
            Err(Error::NotFdt(t.to_string()))
        }
    }

    // Returns the underlying distribution when `t` has the right shape.
    fn recognize(t: &Term) -> Option<NatDist> {
        let Term::Abs(x, b) = t else { return None };
        let Term::Abs(y, body) = &**b else { return None };
        if x == y {
            return None;
        }
        match &**body {
            Term::App(f, arg) if matches!(&**f, Term::Var(h) if h == x) => {
                let n = decode_nat(arg)?;
                Some(NatDist::from([(n, Dyadic::one())]))
            }
            Term::App(f, right) => {
                let Term::App(g, left) = &**f else { return None };
                if !matches!(&**g, Term::Var(h) if h == y) {
                    return None;
                }
                let l = Self::recognize(left)?;
                let r = Self::recognize(right)?;
                let mut out = NatDist::new();
                for (n, m) in l.iter().chain(r.iter()) {
                    *out.entry(*n).or_default() += &m.halve();
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub fn term(&self) -> &Term {
        &self.0
    }

    pub fn into_term(self) -> Term {
        self.0
    }

    /// The underlying distribution over the naturals.
    pub fn pd(&self) -> NatDist {
        Self::recognize(&self.0).expect("FdtTerm is shape-checked")
    }

    /// The underlying distribution over Scott numerals.
    pub fn pd_dist(&self) -> SubDist {
        nat_dist_to_subdist(&self.pd())
    }
}

pub fn nat_dist_to_subdist(d: &NatDist) -> SubDist {
    SubDist::from_entries(d.iter().map(|(n, m)| (nat(*n), m.clone()))).expect("a NatDist with mass at most one")
}

/// Reads a distribution over numerals back into a [`NatDist`]; fails on the
/// first non-numeral in the support.
pub fn numeral_dist(d: &SubDist) -> Result<NatDist> {
    let mut out = NatDist::new();
    for (v, m) in d.iter() {
        let n = decode_nat(v).ok_or_else(|| Error::NonNumeral(v.to_string()))?;
        *out.entry(n).or_default() += m;
    }
    Ok(out)
}

/// Builds a finite distribution term with `pd = d`.
///
/// Each mass is split into its binary digits, giving leaves at depth `k` for
/// every set bit `2^-k`; leaves are then paired bottom-up level by level,
/// which succeeds exactly when the masses sum to 1.
pub fn fdt_from_dist(d: &NatDist) -> Result<FdtTerm> {
    let total: Dyadic = d.values().sum();
    if !total.is_one() {
        let detail = d.iter().map(|(n, m)| format!("{n}↦{m}")).collect::<Vec<_>>().join(", ");
        return Err(Error::NotRepresentable(format!("masses sum to {total}, not 1 ({detail})")));
    }
    let depth = d.values().map(Dyadic::exponent).max().unwrap_or(0);
    // leaves[k] = numerals with a leaf at depth k
    let mut leaves: Vec<Vec<u64>> = vec![Vec::new(); depth as usize + 1];
    for (n, m) in d {
        let num = m.numerator();
        let e = m.exponent();
        for bit in 0..=e {
            if num.bit(bit) {
                leaves[(e - bit) as usize].push(*n);
            }
        }
    }
    let mut carried: Vec<FdtTerm> = Vec::new();
    for k in (0..=depth as usize).rev() {
        let mut level: Vec<FdtTerm> = leaves[k].iter().map(|&n| FdtTerm::leaf(n)).collect();
        level.append(&mut carried);
        if k == 0 {
            debug_assert_eq!(level.len(), 1);
            return Ok(level.pop().expect("mass one leaves a root"));
        }
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            let b = it.next().expect("sum is 1, so every level pairs up");
            carried.push(FdtTerm::node(a, b));
        }
    }
    unreachable!("level 0 returns")
}

/// Evaluates `MFDT t` under call-by-value for at most `fuel` rounds,
/// stopping early once no mass is pending.
pub fn run_mfdt(t: &FdtTerm, fuel: u64) -> Result<Bracket> {
    let prog = app(mfdt(), t.term().clone());
    smallstep::approximate_until_stable(&prog, Strategy::Cbv, fuel, &Limits::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{step_cbv, Step};
    use crate::syntax::{alpha_eq, parse};

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn numerals() {
        assert!(alpha_eq(&nat(0), &parse("\\x y. x").unwrap()));
        assert!(alpha_eq(&nat(2), &parse("\\x y. y (\\x y. y (\\x y. x))").unwrap()));
        assert_eq!(decode_nat(&nat(7)), Some(7));
        assert_eq!(decode_nat(&id()), None);
        assert_eq!(decode_nat(&ff()), None);
        assert_eq!(decode_nat(&parse("\\x x. x").unwrap()), None);
    }

    #[test]
    fn numeral_round_trip_up_to_1024() {
        for n in [0, 1, 2, 3, 17, 255, 1023, 1024] {
            assert_eq!(decode_nat(&nat(n)), Some(n));
            assert_eq!(decode_nat(&nat(n).canonical()), Some(n));
        }
    }

    #[test]
    fn bit_strings() {
        let bits = [true, false, true];
        assert_eq!(decode_bits(&encode_bits(&bits)), Some(bits.to_vec()));
        assert_eq!(decode_bits(&encode_bits(&[])), Some(vec![]));
        assert_eq!(decode_bits(&tt()), None);
    }

    #[test]
    fn omega_steps_to_itself() {
        assert_eq!(step_cbv(&omega()).unwrap(), Some(Step::One(omega())));
    }

    #[test]
    fn fixed_point_unfolds_in_two_steps() {
        let v = id();
        let mut cur = app(h(), v.clone());
        for _ in 0..2 {
            match step_cbv(&cur).unwrap() {
                Some(Step::One(next)) => cur = next,
                other => panic!("expected deterministic step, got {other:?}"),
            }
        }
        let expect = app(v.clone(), abs("z", app(app(h(), v), var("z"))));
        assert!(alpha_eq(&cur, &expect));
    }

    #[test]
    fn fdt_construction() {
        let leaf = fdt_from_dist(&NatDist::from([(3, Dyadic::one())])).unwrap();
        assert_eq!(leaf, FdtTerm::leaf(3));
        let two = fdt_from_dist(&NatDist::from([(0, d("1/2")), (1, d("1/2"))])).unwrap();
        assert_eq!(two, FdtTerm::node(FdtTerm::leaf(0), FdtTerm::leaf(1)));
        let three = fdt_from_dist(&NatDist::from([(0, d("1/2")), (1, d("1/4")), (2, d("1/4"))])).unwrap();
        let expect = FdtTerm::node(FdtTerm::leaf(0), FdtTerm::node(FdtTerm::leaf(1), FdtTerm::leaf(2)));
        assert_eq!(three, expect);
    }

    #[test]
    fn fdt_split_masses() {
        let dist = NatDist::from([(0, d("3/4")), (1, d("1/4"))]);
        let t = fdt_from_dist(&dist).unwrap();
        assert_eq!(t.pd(), dist);
    }

    #[test]
    fn fdt_rejects_improper() {
        let e = fdt_from_dist(&NatDist::from([(0, d("1/2")), (1, d("1/4"))])).unwrap_err();
        assert!(matches!(e, Error::NotRepresentable(ref s) if s.contains("3/4")));
        assert!(FdtTerm::from_term(&id()).is_err());
        assert!(FdtTerm::from_term(FdtTerm::leaf(2).term()).is_ok());
    }

    #[test]
    fn standard_choice_avoids_capture() {
        let t = standard_choice(var("z"), id());
        let Term::App(f, _) = &t else { panic!() };
        let Term::App(g, _) = &**f else { panic!() };
        let Term::App(_, thunk) = &**g else { panic!() };
        assert!(thunk.has_free("z"), "{t}");
    }

    #[test]
    fn constants_parse() {
        for (name, term) in constants() {
            assert!(term.is_closed(), "{name} is open");
            assert!(alpha_eq(&parse(name).unwrap(), &term));
        }
    }
}
