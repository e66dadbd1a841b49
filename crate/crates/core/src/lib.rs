//! Spectral analysis of the Fibonacci Hamiltonian.
//!
//! The Fibonacci Hamiltonian is the discrete Schrödinger operator on
//! `ℓ²(ℤ)` whose potential takes the values `{0, λ}` according to the
//! golden-mean rotation coding (the Fibonacci word). This crate computes:
//!
//! - the trace recursion `x_{k+1} = x_k x_{k-1} - x_{k-2}` and the orbit
//!   boundedness test for spectrum membership ([`trace`]),
//! - the hierarchical band structure of the periodic approximant spectra
//!   `σ_k = {E : |x_k(E,λ)| ≤ 2}` with certified edges ([`bands`]),
//! - exact band-count combinatorics `a_{k,m}`, `b_{k,m}` and the entropy
//!   function controlling their growth ([`combinatorics`]),
//! - box-counting dimension estimates and the analytic dimension bounds
//!   `f*/log S_u(λ)`, `f*/log S_l(λ)` ([`dimension`]),
//! - finite-lattice quantum dynamics: time-averaged transition
//!   probabilities, transport exponents, and transfer-matrix growth
//!   ([`dynamics`]).
//!
//! High-precision arithmetic is provided by MPFR through the `rug` crate;
//! sign decisions that certify band edges and membership verdicts are made
//! with directed-rounding interval evaluation ([`prec`]).

pub mod bands;
pub mod combinatorics;
pub mod dimension;
pub mod dynamics;
pub mod error;
pub mod prec;
pub mod trace;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
