//! Exact and sampled evaluation of the probabilistic lambda calculus.

pub mod bigstep;
pub mod cli;
pub mod cps;
pub mod dist;
pub mod encodings;
pub mod error;
pub mod expressiveness;
pub mod reduction;
pub mod sampler;
pub mod smallstep;
pub mod syntax;

pub use dist::{Dyadic, SubDist};
pub use error::{Error, ParseError, Result};
pub use reduction::{Step, Strategy};
pub use syntax::{parse, Term};
