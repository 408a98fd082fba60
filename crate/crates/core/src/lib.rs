//! Per-instance solver configuration on binary configuration polytopes.
//!
//! The crate covers both halves of the workflow:
//!
//! * learning a performance map with logistic regression, either with the
//!   performance as the model output ([`logreg::train`], PaO) or as an input
//!   next to the instance features ([`logreg::train_multi`], PaI);
//! * searching the feasible configuration set `{c ∈ {0,1}^s | Ac ≤ d}` for the
//!   configuration the learnt map rates best ([`cssp`]).
//!
//! Feasible sets are enumerated exactly ([`config_space::enumerate_feasible`]),
//! so every search is exhaustive and the returned configuration always
//! satisfies the constraint system.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, external solver
//! runs and the command line live in the `confsearch` crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod config_space;
pub mod cssp;
pub mod error;
pub mod logreg;
pub mod matrix;
pub mod perf_map;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
