//! Numerical holomorphic projection of sesquiharmonic Maass forms.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: Kronecker symbols, factorization, Dirichlet characters.
//! * [`quadforms`]: Hurwitz class numbers, narrow class numbers, regulators
//!   and the general Hurwitz function `h*`.
//! * [`special`]: incomplete gamma, `α`/`β`, `2F1` and adaptive quadrature.
//! * [`qseries`]: exact truncated q-expansions, eta quotients, theta series,
//!   `V` and Hecke operators, the basis of `S_2(Γ0(64))`.
//! * [`projection`]: the projected coefficients `r_χ(h)` and the general
//!   four-piece projection formula.
//! * [`decomp`]: solving projected series on the weight 2 basis and checking
//!   the resulting arithmetic relations.
//! * [`shiftedconv`]: shifted-convolution partial sums and Dirichlet series.
//! * [`selftest`]: oracle checks behind the `selftest` subcommand.

pub mod arith;
pub mod decomp;
pub mod error;
pub mod projection;
pub mod qseries;
pub mod quadforms;
pub mod selftest;
pub mod shiftedconv;
pub mod special;

pub use arith::{DirichletCharacter, Factorization, Rational};
pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
