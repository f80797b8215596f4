//! Exact, desk-scale computations around quantitative expansiveness of sets
//! under `Z^d` rotation actions: polynomial value sets, spectral measures of
//! sets in finite rotation systems, measure-increment runs, and windowed
//! combinatorial verifiers.

pub mod bitset;
pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod expsum;
pub mod intlinalg;
pub mod intpoly;
pub mod json;
pub mod modular;
pub mod spectral;
pub mod valueset;

pub use error::{Error, ErrorKind, Result};
