//! Exact dense contraction of the replica network, no truncation.

use crate::channels::{noisy_gram_or_clean, ChannelStack};
use crate::commutant::{gram_matrix, CommutantBasis};
use crate::error::{check_cap, RtnError, RtnResult};
use crate::observables::BoundarySpec;
use crate::rtn::{dressed_gate, initial_pair_amplitudes, InitOverlaps, Parity};

/// Largest replica vector the dense oracle will allocate.
pub const DENSE_CAP: u128 = 2_000_000;

/// Dense replica vector over `N` sites of `n` labels, site 0 most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseReplicaState {
    pub n: usize,
    pub n_sites: usize,
    pub amplitudes: Vec<f64>,
}

impl DenseReplicaState {
    fn apply_gate(&mut self, gate: &nalgebra::DMatrix<f64>, i: usize) {
        let n = self.n;
        let inner = n.pow((self.n_sites - i - 2) as u32);
        let block = inner * n * n;
        let rows: Vec<(usize, Vec<(usize, f64)>)> = (0..n * n)
            .map(|r| (r, (0..n * n).filter(|&c| gate[(r, c)] != 0.0).map(|c| (c, gate[(r, c)])).collect::<Vec<_>>()))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        let mut local = vec![0.0; n * n];
        for outer in (0..self.amplitudes.len()).step_by(block) {
            for j in 0..inner {
                for (c, slot) in local.iter_mut().enumerate() {
                    *slot = self.amplitudes[outer + c * inner + j];
                }
                for r in 0..n * n {
                    self.amplitudes[outer + r * inner + j] = 0.0;
                }
                for (r, entries) in &rows {
                    self.amplitudes[outer + r * inner + j] = entries.iter().map(|&(c, w)| w * local[c]).sum();
                }
            }
        }
    }

    fn contract(&self, per_site: &[Vec<f64>]) -> f64 {
        // fold the last site repeatedly
        let mut cur = self.amplitudes.clone();
        for b in per_site.iter().rev() {
            cur = cur.chunks(self.n).map(|ch| ch.iter().zip(b).map(|(x, y)| x * y).sum()).collect();
        }
        cur[0]
    }
}

/// Exact `E[Λ]` at depth `t`. Same physics as the MPS path (layer 1 as
/// pair states, noisy links after it, dressed boundary) with a dense
/// vector in place of the MPS.
pub fn dense_contract(
    basis: &CommutantBasis,
    d: usize,
    n_sites: usize,
    t: usize,
    boundary: &BoundarySpec,
    stack: Option<&ChannelStack>,
    overlaps: Option<&InitOverlaps>,
) -> RtnResult<f64> {
    let n = basis.len();
    check_cap("dense replica vector", (n as u128).pow(n_sites as u32), DENSE_CAP)?;
    if n_sites % 2 != 0 || t < 1 {
        return Err(RtnError::Invalid("dense oracle needs even N and t >= 1".into()));
    }
    let noisy = stack.filter(|s| !s.is_identity());
    let g = gram_matrix(basis, d)?;
    let link = noisy_gram_or_clean(basis, d, noisy, &g)?;
    let gate = dressed_gate(basis, d, &link, &link)?;
    let bnd = match noisy {
        Some(s) => boundary.dressed(basis, d, s)?,
        None => boundary.clone(),
    };
    let zero = InitOverlaps::zero_state(basis, d, n_sites)?;
    let ov = overlaps.unwrap_or(&zero);

    let mut amps = vec![1.0];
    for j in 0..n_sites / 2 {
        let c = initial_pair_amplitudes(basis, d, &ov.per_site[2 * j], &ov.per_site[2 * j + 1])?;
        let mut pair = vec![0.0; n * n];
        for (s, &x) in c.iter().enumerate() {
            pair[s * n + s] = x;
        }
        amps = amps.iter().flat_map(|&a| pair.iter().map(move |&p| a * p)).collect();
    }
    let mut state = DenseReplicaState { n, n_sites, amplitudes: amps };
    for layer in 2..=t {
        for i in Parity::of_layer(layer).bonds(n_sites) {
            state.apply_gate(gate.matrix(), i);
        }
    }
    Ok(state.contract(&bnd.per_site) * bnd.log_prefactor.exp())
}
