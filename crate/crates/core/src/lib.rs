//! Exact computation of local ε-factors of rank-1 characters of
//! equicharacteristic local fields F_q((π)), their conductors, quadratic Gauss
//! sums and twisted finite-group transfers, together with global checks over
//! the projective line (product formula, induction formula).
//!
//! All values live in a prime field Λ = F_ℓ containing the needed roots of
//! unity; equalities are exact and are re-checked under a second prime.

pub mod arith;
pub mod chars;
pub mod coeff;
pub mod curve;
pub mod epsilon;
pub mod error;
pub mod gf;
pub mod io;
pub mod localfield;
pub mod twisted;

pub use error::{Error, Result};
