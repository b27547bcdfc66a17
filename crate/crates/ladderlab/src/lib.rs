//! Spectral-geometry laboratory for joint Klein-Gordon spectra on model
//! stationary spacetimes: ladder counting functions, Weyl-law verification,
//! Liouville volumes and the mass-shell Hamiltonian flow.

// `!(x > 0.0)` guards deliberately reject NaN along with the out-of-range
// values; `partial_cmp` rewrites would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod liouville;
pub mod quad;
pub mod spectra;
pub mod testfn;

pub use error::{LadderError, Result};
