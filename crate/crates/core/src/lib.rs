//! Closed-form capacities, average delays, and delay-constrained optima for
//! iterative programming of noisy memory cells.
//!
//! Writing a memory cell is modeled as one use of a noisy channel; after each
//! attempt the cell can be read back and, on failure, written again. Retrying
//! trades programming time for reliability. This crate evaluates that
//! trade-off for the binary symmetric, binary erasure, and Z channels, for
//! attempt-dependent error probabilities, and for a combined model that may
//! replace the last attempt with an explicit failure marker:
//!
//! * [`channels`] — channel models and per-strategy capacity/delay closed
//!   forms,
//! * [`schemes`] — mixtures of retry strategies, their delay, capacity,
//!   normalized capacity, and truncation to an average-delay budget,
//! * [`optimizer`] — solvers for the delay-constrained capacity problems,
//!   scalar root finding, and a concave-envelope mixture optimizer,
//! * [`oracle`] — independent verification: a Blahut-Arimoto capacity solver,
//!   a seeded Monte Carlo simulator, and solver-versus-grid cross checks.
//!
//! All capacities are in bits per cell, all delays in expected programming
//! attempts per cell, and all logarithms base 2. The crate is `no_std`
//! (`alloc` required).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channels;
pub mod error;
pub mod optimizer;
pub mod oracle;
pub mod schemes;

pub use channels::{BinaryChannelKind, Channel, ChannelModel, ChannelSequence, RetryCount, ZInput};
pub use error::{Error, Result};
pub use optimizer::{Certificate, OptResult};
pub use oracle::{DmcMatrix, SimReport};
pub use schemes::{DelayBudget, Scheme, SchemePart};
