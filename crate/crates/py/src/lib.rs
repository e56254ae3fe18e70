use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use plc_core::bigstep::BigStep;
use plc_core::cps::{check_simulation as simulate, Direction};
use plc_core::encodings::{self, NatDist};
use plc_core::expressiveness::{self, DistOracle, FiniteOracle, GeometricOracle, Soundness};
use plc_core::reduction;
use plc_core::sampler;
use plc_core::smallstep::{self, Limits};
use plc_core::{Dyadic, Error, Strategy, SubDist};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Invalid(_) | Error::OpenTerm(_) | Error::Number(_) | Error::NotAValue(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn strategy(s: &str) -> PyResult<Strategy> {
    s.parse().map_err(to_py)
}

fn direction(s: &str) -> PyResult<Direction> {
    match s {
        "v2n" => Ok(Direction::VToN),
        "n2v" => Ok(Direction::NToV),
        other => Err(PyValueError::new_err(format!("unknown direction `{other}`"))),
    }
}

fn fraction<'py>(py: Python<'py>, d: &Dyadic) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((d.to_string(),))
}

// Accepts anything whose `str` is a dyadic literal: ints, Fractions,
// binary-exact floats and strings.
fn dyadic(obj: &Bound<'_, PyAny>) -> PyResult<Dyadic> {
    obj.str()?.to_str()?.parse().map_err(to_py)
}

fn dist_dict<'py>(py: Python<'py>, d: &SubDist) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (v, p) in d.iter() {
        out.set_item(Term(v.clone()), fraction(py, p)?)?;
    }
    Ok(out)
}

fn nat_dist(d: &Bound<'_, PyDict>) -> PyResult<NatDist> {
    let mut out = BTreeMap::new();
    for (k, v) in d.iter() {
        out.insert(k.extract::<u64>()?, dyadic(&v)?);
    }
    Ok(out)
}

/// A closed or open term of the probabilistic lambda calculus. Equality and
/// hashing are up to renaming of bound variables.
#[pyclass(frozen, eq, hash, from_py_object, module = "plc")]
#[derive(Clone)]
struct Term(plc_core::Term);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        plc_core::syntax::alpha_eq(&self.0, &other.0)
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.canonical().hash(state)
    }
}

#[pymethods]
impl Term {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        plc_core::parse(src).map(Term).map_err(|e| to_py(e.into()))
    }

    fn canonical(&self) -> Term {
        Term(self.0.canonical())
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn is_value(&self) -> bool {
        self.0.is_value()
    }

    fn is_closed(&self) -> bool {
        self.0.is_closed()
    }

    fn free_vars(&self) -> Vec<String> {
        self.0.free_vars().iter().map(|n| n.to_string()).collect()
    }

    fn substitute(&self, x: &str, replacement: &Term) -> Term {
        Term(self.0.substitute(x, &replacement.0))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Term({:?})", self.0.to_string())
    }
}

/// Lower distribution and residual mass after a number of rounds.
#[pyclass(frozen, get_all, module = "plc")]
struct Bracket {
    lower: Py<PyDict>,
    residual: Py<PyAny>,
    mass: Py<PyAny>,
    fuel: u64,
    strategy: String,
    stable: bool,
}

#[pymethods]
impl Bracket {
    fn __repr__(&self, py: Python<'_>) -> PyResult<String> {
        Ok(format!(
            "Bracket(lower={}, residual={}, fuel={}, strategy={:?})",
            self.lower.bind(py).repr()?,
            self.residual.bind(py).str()?,
            self.fuel,
            self.strategy
        ))
    }
}

#[pyfunction]
fn parse(src: &str) -> PyResult<Term> {
    Term::new(src)
}

/// Successors of one leftmost reduction step; empty for values.
#[pyfunction]
#[pyo3(signature = (term, strategy = "cbv"))]
fn step(term: &Term, strategy: &str) -> PyResult<Vec<Term>> {
    let s = reduction::step(&term.0, self::strategy(strategy)?).map_err(to_py)?;
    Ok(s.map(|s| s.into_successors().into_iter().map(Term).collect()).unwrap_or_default())
}

#[pyfunction]
#[pyo3(signature = (term, strategy = "cbv", fuel = 100, frontier_cap = 100_000, term_size_cap = 250_000))]
fn eval_small(
    py: Python<'_>,
    term: &Term,
    strategy: &str,
    fuel: u64,
    frontier_cap: usize,
    term_size_cap: usize,
) -> PyResult<Bracket> {
    let limits = Limits { frontier_cap, term_size_cap, ..Limits::default() };
    let s = self::strategy(strategy)?;
    let t = term.0.clone();
    let b = py.detach(|| smallstep::approximate_with(&t, s, fuel, &limits)).map_err(to_py)?;
    Ok(Bracket {
        lower: dist_dict(py, &b.lower)?.unbind(),
        residual: fraction(py, &b.residual)?.unbind(),
        mass: fraction(py, &b.lower.mass())?.unbind(),
        fuel: b.fuel,
        strategy: s.name().to_string(),
        stable: b.is_stable(),
    })
}

/// Big-step semantics with derivations of height at most `fuel`.
#[pyfunction]
#[pyo3(signature = (term, strategy = "cbv", fuel = 100))]
fn eval_big<'py>(py: Python<'py>, term: &Term, strategy: &str, fuel: u64) -> PyResult<Bound<'py, PyDict>> {
    let s = self::strategy(strategy)?;
    let t = term.0.clone();
    let d = py.detach(|| BigStep::new(s).eval(&t, fuel)).map_err(to_py)?;
    dist_dict(py, &d)
}

/// `(lower, upper)` bounds on the probability of divergence.
#[pyfunction]
#[pyo3(signature = (term, strategy = "cbv", fuel = 100))]
fn divergence<'py>(
    py: Python<'py>,
    term: &Term,
    strategy: &str,
    fuel: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let s = self::strategy(strategy)?;
    let t = term.0.clone();
    let (lo, hi) = py.detach(|| smallstep::divergence_bracket(&t, s, fuel)).map_err(to_py)?;
    Ok((fraction(py, &lo)?, fraction(py, &hi)?))
}

/// Continuation-passing translation, `"v2n"` or `"n2v"`.
#[pyfunction]
#[pyo3(signature = (term, direction = "v2n"))]
fn cps(term: &Term, direction: &str) -> PyResult<Term> {
    Ok(Term(self::direction(direction)?.translate(&term.0)))
}

/// Compares the source semantics with the translated one; returns the
/// verdict name.
#[pyfunction]
#[pyo3(signature = (term, direction = "v2n", fuel = 500))]
fn check_simulation(py: Python<'_>, term: &Term, direction: &str, fuel: u64) -> PyResult<String> {
    let d = self::direction(direction)?;
    let t = term.0.clone();
    let r = py.detach(|| simulate(&t, d, fuel, &Limits::default())).map_err(to_py)?;
    Ok(r.verdict.name().to_string())
}

/// Monte Carlo estimate: `(counts, timeouts)`.
#[pyfunction]
#[pyo3(signature = (term, strategy = "cbv", samples = 10_000, max_steps = 10_000, seed = 0))]
fn sample<'py>(
    py: Python<'py>,
    term: &Term,
    strategy: &str,
    samples: u64,
    max_steps: u64,
    seed: u64,
) -> PyResult<(Bound<'py, PyDict>, u64)> {
    let s = self::strategy(strategy)?;
    let t = term.0.clone();
    let e = py.detach(|| sampler::estimate(&t, s, samples, max_steps, seed)).map_err(to_py)?;
    let counts = PyDict::new(py);
    for (v, c) in &e.counts {
        counts.set_item(Term(v.clone()), c)?;
    }
    Ok((counts, e.timeouts))
}

#[pyfunction]
fn nat(n: u64) -> Term {
    Term(encodings::nat(n))
}

#[pyfunction]
fn decode_nat(v: &Term) -> Option<u64> {
    encodings::decode_nat(&v.0)
}

/// Finite distribution term for a dict from naturals to dyadic masses.
#[pyfunction]
fn fdt(dist: &Bound<'_, PyDict>) -> PyResult<Term> {
    let d = nat_dist(dist)?;
    encodings::fdt_from_dist(&d).map(|f| Term(f.into_term())).map_err(to_py)
}

/// First `digits` binary digits of the probability of numeral `point`, or
/// `None` when `max_fuel` is not enough.
#[pyfunction]
#[pyo3(signature = (term, point, digits, max_fuel = 4096))]
fn soundness(py: Python<'_>, term: &Term, point: u64, digits: u64, max_fuel: u64) -> PyResult<Option<String>> {
    let t = term.0.clone();
    let r = py
        .detach(|| expressiveness::soundness_approx(&t, point, digits, max_fuel, &Limits::default()))
        .map_err(to_py)?;
    Ok(match r {
        Soundness::Digits(d) => Some(d),
        Soundness::Insufficient => None,
    })
}

/// Term approximating a distribution on naturals, given as a dict or as
/// `None` for the geometric one. Returns `(term, guaranteed_mass, exact)`.
#[pyfunction]
#[pyo3(signature = (dist = None, rounds = 5, budget = 64))]
fn completeness<'py>(
    py: Python<'py>,
    dist: Option<&Bound<'py, PyDict>>,
    rounds: u32,
    budget: u32,
) -> PyResult<(Term, Bound<'py, PyAny>, bool)> {
    let oracle: Arc<dyn DistOracle> = match dist {
        Some(d) => Arc::new(FiniteOracle::new(nat_dist(d)?).map_err(to_py)?),
        None => Arc::new(GeometricOracle),
    };
    let c = py.detach(|| expressiveness::completeness_approx(oracle, rounds, budget)).map_err(to_py)?;
    Ok((Term(c.term), fraction(py, &c.guarantee)?, c.exact_tail))
}

#[pymodule]
fn plc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Term>()?;
    m.add_class::<Bracket>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(eval_small, m)?)?;
    m.add_function(wrap_pyfunction!(eval_big, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(cps, m)?)?;
    m.add_function(wrap_pyfunction!(check_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(nat, m)?)?;
    m.add_function(wrap_pyfunction!(decode_nat, m)?)?;
    m.add_function(wrap_pyfunction!(fdt, m)?)?;
    m.add_function(wrap_pyfunction!(soundness, m)?)?;
    m.add_function(wrap_pyfunction!(completeness, m)?)?;
    m.add("RNG", sampler::RNG_NAME)?;
    Ok(())
}
