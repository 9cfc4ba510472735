//! Ensemble-averaged nonlinear observables of one-dimensional brickwork
//! random circuits, computed by contracting the replica tensor network.
//!
//! The k-replica average of a circuit built from i.i.d. two-site gates
//! reduces to a classical network over commutant labels ("replica spins").
//! Each averaged gate becomes a dressed tensor, the network is contracted
//! row by row as an MPS, and observables enter as top-boundary vectors.
//!
//! Modules:
//! - [`commutant`]: permutation, Brauer and qutrit Clifford bases, Gram and
//!   Weingarten matrices, irrep reduction.
//! - [`channels`]: single-site channels and noisy Gram matrices.
//! - [`rtn`]: dressed gates, the row MPS engine, the layer driver.
//! - [`observables`]: boundaries, averaged-observable drivers and closed forms.
//! - [`oracles`]: dense contraction, Monte Carlo sampling and the
//!   random-walk purity formula.
//! - `cli` (feature `cli`): sweep manifests and CSV/JSON output.

#[cfg(feature = "cli")]
pub mod cli;
pub mod channels;
pub mod commutant;
pub mod error;
pub mod observables;
pub mod oracles;
pub mod rtn;

pub use error::{RtnError, RtnResult};
