//! Independent checks: exact dense contraction, Monte Carlo sampling of
//! explicit circuits, and the random-walk purity formula.

mod dense;
mod montecarlo;
mod sampling;
mod walk;

pub use dense::{dense_contract, DenseReplicaState, DENSE_CAP};
pub use montecarlo::{mc_average, pairwise_sum, McEstimate, McObservable, MC_DIM_CAP};
pub use sampling::{sample_gate, RngStream};
pub use walk::{absorption_kernel, membrane_purity, rw_purity};
