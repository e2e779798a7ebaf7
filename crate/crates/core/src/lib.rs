//! Tools for systems of equations drawn from
//! `E_n = { x_i = 1, x_i + x_j = x_k, x_i * x_j = x_k }`.
//!
//! The crate covers four areas:
//!
//! * [`polynomial`]: sparse integer polynomials, their parser, evaluation and
//!   the quadratic height bound for two-variable quadratics.
//! * [`ensystem`] and [`compiler`]: representation of `E_n` systems, named
//!   generators, and translation of an arbitrary polynomial equation into an
//!   equivalent system with the same number of integer solutions.
//! * [`solver`]: exhaustive box-bounded search with interval propagation,
//!   deterministic partition parallelism and a finiteness decider driven by
//!   the doubly exponential height bound `2^(2^(n-1))`.
//! * [`conjecture`]: relation signatures, growth witnesses, the annulus
//!   verification of the bounded growth statements and enumeration of the
//!   sets `T_n`.

pub mod checkpoint;
pub mod compiler;
pub mod conjecture;
pub mod ensystem;
pub mod polynomial;
pub mod solver;
mod tower;

pub use compiler::{compile, extend_unique, lift_to_integers, CompiledSystem, LiftResult, SlpNode};
pub use conjecture::{
    enumerate_tn, find_growth_witness, pad_counterexample, relation_signature,
    solution_count_bound, verify_psi, PsiOutcome, PsiReport, RelationSignature, TnResult,
};
pub use ensystem::{EnEquation, EnSystem};
pub use polynomial::{parse_polynomial, Polynomial, QuadraticCoeffs};
pub use solver::{
    count_in_box, decide_finiteness, solve_in_box, FinitenessVerdict, SearchBox, SearchConfig,
    SolutionSet, Verdict,
};
pub use tower::{tower, tower_big};

/// Exact integer type used for assignments and search domains.
pub type Int = i128;
