//! Generalized VC dimension over product universes, exact Zarankiewicz
//! numbers, φ-type counting over finite structures, finite structural Ramsey
//! checks and random ordered partite hypergraphs.
//!
//! Numeric helpers are generic over [`scalar::Real`] (floating bounds) and
//! [`scalar::Count`] (exact counts); the aliases below fix the usual choices.

pub mod cli;
pub mod error;
pub mod fmodel;
pub mod hyperrand;
pub mod io;
pub mod ramsey;
pub mod scalar;
pub mod setsys;
pub mod zar;

pub use error::{Error, Result};

/// Exact count type for binomial sums such as the generalized Sauer bound.
pub type BigCount = num_bigint::BigUint;

/// Erdős bound evaluated in double precision.
pub type ErdosBound64 = zar::ErdosBound<f64>;

/// Erdős bound evaluated in single precision.
pub type ErdosBound32 = zar::ErdosBound<f32>;

/// `Σ_{i<z} C(m^n, i)` as an arbitrary-precision integer.
pub fn sauer_bound(n: usize, m: usize, z: usize) -> BigCount {
    setsys::sauer_binomial_bound(n, m, z)
}
