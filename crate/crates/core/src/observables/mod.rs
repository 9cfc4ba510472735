//! Boundaries, averaged-observable drivers and closed-form references.
//!
//! All drivers work with unit-scale tensors and carry magnitudes in log
//! prefactors; values are recombined only at the end.

mod boundary;
mod closed_form;
mod drivers;

pub use boundary::{bell_init_overlaps, ipr_boundary, purity_boundary, BoundarySpec, SiteObservable};
pub use closed_form::*;
pub use drivers::*;
