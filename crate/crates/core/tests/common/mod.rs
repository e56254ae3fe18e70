#![allow(dead_code)]

pub mod db;

use plc_core::syntax::{abs, app, choice, parse_corpus, var, Term};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TERMINATING: &str = include_str!("../../corpus/terminating.l");
pub const DIVERGING: &str = include_str!("../../corpus/diverging.l");
pub const GOLDEN: &str = include_str!("../../corpus/golden.l");

pub fn corpus(src: &str) -> Vec<Term> {
    parse_corpus(src).unwrap().into_iter().map(|(_, t)| t).collect()
}

pub fn t(s: &str) -> Term {
    plc_core::parse(s).unwrap()
}

const NAMES: [&str; 3] = ["x", "y", "z"];

// Builds a closed term of roughly `size` constructors. Binders cycle
// through three names, so generated terms exercise shadowing; a variable
// position with no binder in scope becomes the identity.
fn build(size: usize, depth: usize, rng: &mut ChaCha8Rng) -> Term {
    if size <= 1 {
        return if depth == 0 {
            // identity, or the self-applicator so that divergence shows up
            if rng.random_bool(0.3) {
                abs("x", app(var("x"), var("x")))
            } else {
                abs("x", var("x"))
            }
        } else {
            var(NAMES[rng.random_range(0..depth) % 3])
        };
    }
    let roll = rng.random_range(0..10);
    if roll < 3 || size == 2 {
        return abs(NAMES[depth % 3], build(size - 1, depth + 1, rng));
    }
    let left = rng.random_range(1..size - 1);
    let (a, b) = (build(left, depth, rng), build(size - 1 - left, depth, rng));
    if roll < 8 {
        app(a, b)
    } else {
        choice(a, b)
    }
}

/// Closed terms of size at most 40.
pub fn closed_term() -> impl Strategy<Value = Term> {
    (3usize..=38, any::<u64>())
        .prop_map(|(size, seed)| build(size, 0, &mut ChaCha8Rng::seed_from_u64(seed)))
        .prop_filter("size at most 40", |t| t.size() <= 40)
}

/// Terms whose only free variable is `x`, of size at most 40.
pub fn open_term() -> impl Strategy<Value = Term> {
    (3usize..=38, any::<u64>())
        .prop_map(|(size, seed)| build(size, 1, &mut ChaCha8Rng::seed_from_u64(seed)))
        .prop_filter("size at most 40", |t| t.size() <= 40)
}

pub fn closed_value() -> impl Strategy<Value = Term> {
    closed_term().prop_map(|t| if t.is_value() { t } else { abs("w", t) })
}

/// `n` reproducible random closed terms of size at most 40.
pub fn random_terms(n: usize) -> Vec<Term> {
    let mut runner = TestRunner::deterministic();
    let strat = closed_term();
    (0..n).map(|_| strat.new_tree(&mut runner).unwrap().current()).collect()
}

pub fn random_values(n: usize) -> Vec<Term> {
    let mut runner = TestRunner::deterministic();
    let strat = closed_value();
    (0..n).map(|_| strat.new_tree(&mut runner).unwrap().current()).collect()
}
