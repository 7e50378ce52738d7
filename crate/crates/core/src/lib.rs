//! Unsourced random access over correlated massive-MIMO channels.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece of
//! the simulator:
//!
//! * [`channel`]: joint-correlated MIMO channel laws, their coupling statistics
//!   and sampling.
//! * [`codebook`]: the common Gaussian coding matrix shared by every user.
//! * [`tree_code`]: the outer tree code that splits a message into parity-linked
//!   chunks, one per slot.
//! * [`detector`]: covariance-based maximum-likelihood activity detection by
//!   coordinate descent, with a Bayesian learning automaton picking coordinates.
//! * [`sim`]: the Monte Carlo harness tying it all together.
//!
//! File formats, configuration parsing and the command-line front end live in
//! the `ura` crate.
#![no_std]
// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod codebook;
pub mod detector;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sim;
pub mod tree_code;

pub use error::{Error, Result};
pub use num_complex::Complex64;
