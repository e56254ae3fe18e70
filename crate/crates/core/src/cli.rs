//! Command-line front end. Exit codes: 0 success, 1 invalid input,
//! 2 evaluation error, 3 a property check failed.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::bigstep::BigStep;
use crate::cps::{self, Direction, Verdict};
use crate::dist::{dyadic_json, Dyadic, SubDist};
use crate::encodings::{self, fdt_from_dist, NatDist};
use crate::error::Error;
use crate::expressiveness::{
    completeness_approx, serve, soundness_approx, DistOracle, FiniteOracle, GeometricOracle, ProcessOracle, Soundness,
};
use crate::reduction::Strategy;
use crate::sampler;
use crate::smallstep::{divergence_bracket_with, Explorer, Limits};
use crate::syntax::{parse, parse_corpus, print_canonical, Term};

pub const EXIT_INVALID: i32 = 1;
pub const EXIT_EVAL: i32 = 2;
pub const EXIT_FAIL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "plc", version, about = "Evaluate and transform probabilistic lambda terms")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Abort when more than this many distinct states are pending.
    #[arg(long, global = true, default_value_t = Limits::default().frontier_cap)]
    frontier_cap: usize,

    /// Abort when a reduct grows past this many nodes.
    #[arg(long, global = true, default_value_t = Limits::default().term_size_cap)]
    term_size_cap: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the canonical form of a term.
    Parse(TermArg),
    /// Evaluate to a lower distribution plus residual mass.
    Eval {
        #[command(flatten)]
        term: TermArg,
        #[arg(long, value_enum, default_value_t = Strategy::Cbv)]
        strategy: Strategy,
        #[arg(long, value_enum, default_value_t = Engine::Small)]
        engine: Engine,
        #[arg(long, default_value_t = 100)]
        fuel: u64,
        #[arg(long)]
        json: bool,
    },
    /// Bounds on the probability of divergence.
    Diverge {
        #[command(flatten)]
        term: TermArg,
        #[arg(long, value_enum, default_value_t = Strategy::Cbv)]
        strategy: Strategy,
        #[arg(long, default_value_t = 100)]
        fuel: u64,
        #[arg(long)]
        json: bool,
    },
    /// Continuation-passing translation.
    Cps {
        #[command(flatten)]
        term: TermArg,
        #[arg(long, value_enum, default_value_t = Direction::VToN)]
        direction: Direction,
        /// Apply the result to the identity continuation.
        #[arg(long)]
        apply_id: bool,
    },
    /// Monte Carlo estimate.
    Sample {
        #[command(flatten)]
        term: TermArg,
        #[arg(long, value_enum, default_value_t = Strategy::Cbv)]
        strategy: Strategy,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Print encodings of data.
    Encode {
        #[command(subcommand)]
        what: EncodeCmd,
    },
    /// Worked examples.
    Demo {
        #[arg(value_enum)]
        which: Demo,
    },
    /// Run a property suite over a corpus file.
    Check {
        #[arg(value_enum)]
        property: Property,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 500)]
        fuel: u64,
    },
    /// Serve a distribution oracle over stdin/stdout (`a n` per line).
    Oracle {
        #[command(flatten)]
        oracle: OracleArg,
    },
    /// First digits of the probability of a numeral in a term's semantics.
    Sound {
        #[command(flatten)]
        term: TermArg,
        #[arg(long)]
        point: u64,
        #[arg(long)]
        digits: u64,
        #[arg(long, default_value_t = 4096)]
        max_fuel: u64,
    },
    /// Build a term approximating an oracle's distribution.
    Complete {
        #[command(flatten)]
        oracle: OracleArg,
        #[arg(long, default_value_t = 5)]
        rounds: u32,
        /// Digit stages allowed per split.
        #[arg(long, default_value_t = 64)]
        budget: u32,
    },
}

#[derive(clap::Args, Debug)]
struct TermArg {
    /// Term source; `-` or omitted reads stdin.
    term: Option<String>,
    /// Read the term from a file.
    #[arg(long, conflicts_with = "term")]
    file: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
#[group(required = true, multiple = false)]
struct OracleArg {
    /// Geometric distribution `2^-(a+1)`.
    #[arg(long)]
    geometric: bool,
    /// Finite distribution as JSON, e.g. `{"0": "1/2", "3": "1/2"}`.
    #[arg(long)]
    finite: Option<String>,
    /// External program speaking the oracle protocol.
    #[arg(long)]
    oracle_cmd: Option<String>,
}

#[derive(Subcommand, Debug)]
enum EncodeCmd {
    /// Scott numeral.
    Nat { n: u64 },
    /// Binary string, e.g. `0110`.
    Bits { bits: String },
    /// Finite distribution term for a JSON map from naturals to masses.
    Fdt { dist: String },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Engine {
    Small,
    Big,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Demo {
    Xor,
    Geo,
    Omega,
    StandardChoice,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Property {
    Simulation,
    Bigsmall,
    Duality,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::OpenTerm(_)
        | Error::NotAValue(_)
        | Error::Number(_)
        | Error::Invalid(_)
        | Error::NotFdt(_)
        | Error::NotRepresentable(_)
        | Error::NonNumeral(_) => EXIT_INVALID,
        _ => EXIT_EVAL,
    }
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read_term(arg: &TermArg) -> Result<Term, Error> {
    let src = match (&arg.term, &arg.file) {
        (_, Some(path)) => {
            std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?
        }
        (Some(t), None) if t != "-" => t.clone(),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Error::Invalid(e.to_string()))?;
            s
        }
    };
    Ok(parse(&src)?)
}

fn parse_nat_dist(src: &str) -> Result<NatDist, Error> {
    let j: BTreeMap<String, String> =
        serde_json::from_str(src).map_err(|e| Error::Invalid(format!("distribution JSON: {e}")))?;
    j.into_iter()
        .map(|(k, v)| {
            let a = k.parse::<u64>().map_err(|_| Error::Number(k.clone()))?;
            Ok((a, v.parse::<Dyadic>()?))
        })
        .collect()
}

fn make_oracle(arg: &OracleArg) -> Result<Arc<dyn DistOracle>, Error> {
    if arg.geometric {
        Ok(Arc::new(GeometricOracle))
    } else if let Some(src) = &arg.finite {
        Ok(Arc::new(FiniteOracle::new(parse_nat_dist(src)?)?))
    } else if let Some(cmd) = &arg.oracle_cmd {
        Ok(Arc::new(ProcessOracle::spawn(cmd)?))
    } else {
        Err(Error::Invalid("no oracle given".into()))
    }
}

fn print_dist(out: &mut dyn Write, d: &SubDist) -> io::Result<()> {
    if d.is_empty() {
        writeln!(out, "  (empty)")?;
    }
    for (v, m) in d.iter() {
        writeln!(out, "  {m}\t{v}")?;
    }
    Ok(())
}

fn write_json(out: &mut dyn Write, j: &Json) -> Result<(), Error> {
    writeln!(out, "{}", serde_json::to_string_pretty(j).expect("serializable")).map_err(io_err)
}

fn io_err(e: io::Error) -> Error {
    Error::Invalid(format!("write failed: {e}"))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Error> {
    let limits = Limits { frontier_cap: cli.frontier_cap, term_size_cap: cli.term_size_cap, ..Limits::default() };
    match cli.command {
        Command::Parse(arg) => {
            let t = read_term(&arg)?;
            writeln!(out, "{}", print_canonical(&t)).map_err(io_err)?;
        }
        Command::Eval { term, strategy, engine, fuel, json } => {
            let t = read_term(&term)?;
            match engine {
                Engine::Small => {
                    let mut ex = Explorer::new(&t, strategy, limits)?;
                    ex.run(fuel)?;
                    let b = ex.bracket();
                    let div_lower = ex.certified_divergent_mass()?;
                    if json {
                        let mut j = b.to_json();
                        j["engine"] = json!("small");
                        j["divergence"] = json!({
                            "lower": dyadic_json(&div_lower),
                            "upper": dyadic_json(&b.residual),
                        });
                        write_json(out, &j)?;
                    } else {
                        writeln!(out, "{strategy} small-step, fuel {fuel}").map_err(io_err)?;
                        print_dist(out, &b.lower).map_err(io_err)?;
                        writeln!(out, "residual {}", b.residual).map_err(io_err)?;
                        writeln!(out, "divergence in [{div_lower}, {}]", b.residual).map_err(io_err)?;
                    }
                }
                Engine::Big => {
                    let d = BigStep::new(strategy).eval(&t, fuel)?;
                    if json {
                        let mut j = d.to_json();
                        j["engine"] = json!("big");
                        j["fuel"] = json!(fuel);
                        j["strategy"] = json!(strategy.name());
                        write_json(out, &j)?;
                    } else {
                        writeln!(out, "{strategy} big-step, depth {fuel}").map_err(io_err)?;
                        print_dist(out, &d).map_err(io_err)?;
                    }
                }
            }
        }
        Command::Diverge { term, strategy, fuel, json } => {
            let t = read_term(&term)?;
            let (lo, hi) = divergence_bracket_with(&t, strategy, fuel, &limits)?;
            if json {
                write_json(
                    out,
                    &json!({
                        "lower": dyadic_json(&lo),
                        "upper": dyadic_json(&hi),
                        "fuel": fuel,
                        "strategy": strategy.name(),
                    }),
                )?;
            } else {
                writeln!(out, "divergence in [{lo}, {hi}] ({strategy}, fuel {fuel})").map_err(io_err)?;
            }
        }
        Command::Cps { term, direction, apply_id } => {
            let t = read_term(&term)?;
            let r = if apply_id { cps::translate_applied(&t, direction) } else { direction.translate(&t) };
            writeln!(out, "{r}").map_err(io_err)?;
        }
        Command::Sample { term, strategy, samples, max_steps, seed, json } => {
            let t = read_term(&term)?;
            let e = sampler::estimate(&t, strategy, samples, max_steps, seed)?;
            if json {
                write_json(out, &e.to_json())?;
            } else {
                writeln!(out, "{samples} samples, {strategy}, seed {seed} ({})", sampler::RNG_NAME).map_err(io_err)?;
                for (v, c) in &e.counts {
                    writeln!(out, "  {:.6}\t{v}", *c as f64 / samples as f64).map_err(io_err)?;
                }
                writeln!(out, "timeout rate {:.6}", e.timeout_rate()).map_err(io_err)?;
            }
        }
        Command::Encode { what } => {
            let t = match what {
                EncodeCmd::Nat { n } => encodings::nat(n),
                EncodeCmd::Bits { bits } => {
                    let bs = bits
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(Error::Invalid(format!("not a bit string: {bits}"))),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    encodings::encode_bits(&bs)
                }
                EncodeCmd::Fdt { dist } => fdt_from_dist(&parse_nat_dist(&dist)?)?.into_term(),
            };
            writeln!(out, "{t}").map_err(io_err)?;
        }
        Command::Demo { which } => demo(which, out, &limits)?,
        Command::Check { property, corpus, fuel } => {
            let src =
                std::fs::read_to_string(&corpus).map_err(|e| Error::Invalid(format!("{}: {e}", corpus.display())))?;
            let terms = parse_corpus(&src)?;
            let failures = check(property, &terms, fuel, &limits, out)?;
            writeln!(out, "{} terms, {failures} failures", terms.len()).map_err(io_err)?;
            if failures > 0 {
                return Ok(EXIT_FAIL);
            }
        }
        Command::Oracle { oracle } => {
            let o = make_oracle(&oracle)?;
            serve(o.as_ref(), io::stdin().lock(), out)?;
        }
        Command::Sound { term, point, digits, max_fuel } => {
            let t = read_term(&term)?;
            match soundness_approx(&t, point, digits, max_fuel, &limits)? {
                Soundness::Digits(d) => writeln!(out, "{d}").map_err(io_err)?,
                Soundness::Insufficient => {
                    writeln!(out, "INSUFFICIENT").map_err(io_err)?;
                    return Ok(EXIT_EVAL);
                }
            }
        }
        Command::Complete { oracle, rounds, budget } => {
            let o = make_oracle(&oracle)?;
            let c = completeness_approx(o, rounds, budget)?;
            if c.exact_tail {
                writeln!(out, "-- exact: semantics equals the oracle's distribution").map_err(io_err)?;
            } else {
                writeln!(out, "-- mass at least {}", c.guarantee).map_err(io_err)?;
            }
            writeln!(out, "{}", c.term).map_err(io_err)?;
        }
    }
    Ok(0)
}

fn demo(which: Demo, out: &mut dyn Write, limits: &Limits) -> Result<(), Error> {
    let show = |out: &mut dyn Write, title: &str, t: &Term, fuel: u64| -> Result<(), Error> {
        writeln!(out, "{title}").map_err(io_err)?;
        for s in [Strategy::Cbv, Strategy::Cbn] {
            let mut ex = Explorer::new(t, s, *limits)?;
            while !ex.is_stable() && ex.fuel() < fuel {
                ex.round()?;
            }
            let b = ex.bracket();
            let div = ex.certified_divergent_mass()?;
            writeln!(out, "{s} (fuel {}):", b.fuel).map_err(io_err)?;
            print_dist(out, &b.lower).map_err(io_err)?;
            if !b.is_stable() {
                writeln!(out, "  residual {}, divergence in [{div}, {}]", b.residual, b.residual).map_err(io_err)?;
            }
        }
        Ok(())
    };
    match which {
        Demo::Xor => {
            show(out, "(\\x. XOR x x) (TT (+) FF)", &encodings::xor_program(), 200)?;
            writeln!(
                out,
                "Call-by-value flips once and compares the result with itself, so it always \
                 answers FF; call-by-name copies the unevaluated coin and flips twice."
            )
            .map_err(io_err)?;
        }
        Demo::Geo => {
            show(out, "GEO = H G 0", &encodings::geo(), 40)?;
            writeln!(out, "P(n) = 2^-(n+1); the residual halves every few rounds.").map_err(io_err)?;
        }
        Demo::Omega => {
            show(out, "OMEGA", &encodings::omega(), 10)?;
            show(out, "OMEGA (+) \\x. x", &parse("OMEGA (+) \\x. x")?, 10)?;
            writeln!(
                out,
                "Call-by-value must evaluate both branches before choosing, so the divergent \
                 branch absorbs all the mass."
            )
            .map_err(io_err)?;
        }
        Demo::StandardChoice => {
            let t = encodings::standard_choice(encodings::omega(), encodings::id());
            show(out, "standard choice of OMEGA and \\x. x", &t, 20)?;
            writeln!(out, "Choosing before evaluating restores the 1/2 under call-by-value.").map_err(io_err)?;
        }
    }
    Ok(())
}

fn check(
    property: Property,
    terms: &[(usize, Term)],
    fuel: u64,
    limits: &Limits,
    out: &mut dyn Write,
) -> Result<usize, Error> {
    let mut failures = 0;
    for (line, t) in terms {
        let verdicts: Vec<(String, bool)> = match property {
            Property::Simulation => [Direction::VToN, Direction::NToV]
                .into_iter()
                .map(|d| {
                    let r = cps::check_simulation(t, d, fuel, limits)?;
                    Ok((format!("{} {}", d.name(), r.verdict.name()), r.verdict != Verdict::Fail))
                })
                .collect::<Result<_, Error>>()?,
            Property::Bigsmall => [Strategy::Cbv, Strategy::Cbn]
                .into_iter()
                .map(|s| {
                    let (msg, ok) = check_bigsmall(t, s, fuel, limits)?;
                    Ok((format!("{s} {msg}"), ok))
                })
                .collect::<Result<_, Error>>()?,
            Property::Duality => [Strategy::Cbv, Strategy::Cbn]
                .into_iter()
                .map(|s| {
                    let mut ex = Explorer::new(t, s, *limits)?;
                    ex.run(fuel)?;
                    let b = ex.bracket();
                    let div = ex.certified_divergent_mass()?;
                    let mass = b.lower.mass();
                    let ok = (&mass + &b.residual).is_one() && &div + &mass <= Dyadic::one();
                    Ok((format!("{s} {}", if ok { "PASS" } else { "FAIL" }), ok))
                })
                .collect::<Result<_, Error>>()?,
        };
        let ok = verdicts.iter().all(|(_, ok)| *ok);
        if !ok {
            failures += 1;
        }
        let summary: Vec<&str> = verdicts.iter().map(|(m, _)| m.as_str()).collect();
        writeln!(out, "line {line}: {}", summary.join(", ")).map_err(io_err)?;
    }
    Ok(failures)
}

/// Exact equality when both engines reach mass 1 or stabilize, otherwise
/// the dominance of big-step at depth `2k` over small-step at fuel `k`.
fn check_bigsmall(t: &Term, s: Strategy, fuel: u64, limits: &Limits) -> Result<(String, bool), Error> {
    let mut ex = Explorer::new(t, s, *limits)?;
    while !ex.is_stable() && ex.fuel() < fuel {
        ex.round()?;
    }
    let small = ex.bracket();
    let mut big = BigStep::new(s);
    if small.is_stable() {
        let (d, _) = big.eval_until_total(t, 2 * small.fuel.max(1))?;
        let ok = d == small.lower;
        return Ok((if ok { "EQUAL" } else { "FAIL" }.to_string(), ok));
    }
    let d = big.eval(t, 2 * small.fuel)?;
    let ok = small.lower.leq(&d);
    Ok((if ok { "DOMINATED" } else { "FAIL" }.to_string(), ok))
}
