//! Discrete-time quantum walks with a general U(2) coin, and the quantum
//! estimation quantities built on them: Fisher information and Uhlmann
//! matrices (asymptotic closed forms and exact finite-time oracle), scalar
//! precision bounds, physical parameter mappings and a Monte-Carlo
//! estimation loop.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod bounds;
pub mod cases;
pub mod coin;
pub mod error;
pub mod estimation;
pub mod kspace;
pub mod qfim;
pub mod quadrature;
pub mod sweep;
pub mod walk;

pub type C64 = num_complex::Complex64;

pub use coin::{build_coin, u_k, CoinAngles, CoinParams, Param};
pub use error::{ErrorKind, QwfError, Result};
pub use kspace::{from_k_space, to_k_space, KSpinorGrid};
pub use walk::{evolve, make_initial, step, CoinBlochState, CoinInit, InitialKind, WalkerState};
