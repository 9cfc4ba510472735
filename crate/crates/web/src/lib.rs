//! wasm-bindgen wrappers for the static demo page in `www/`.
//!
//! Every function returns one value per depth `t = 1..=t_max`. Small
//! values are returned as natural logs so the page can plot them on a log
//! axis without underflow.

use replica_tn::channels::depolarising_choi;
use replica_tn::commutant::{basis_for, Ensemble};
use replica_tn::observables::{ipr_boundary, ln_haar_ipr, ln_orthogonal_ipr_stat, purity_boundary, xeb_sweep, Problem};
use replica_tn::oracles::rw_purity;
use replica_tn::rtn::TruncationParams;
use wasm_bindgen::prelude::*;

// keep the browser responsive on long chains
const CHI_CAP: usize = 64;

fn trunc(k: usize, chi: usize) -> TruncationParams {
    let chi_max = if chi == 0 { TruncationParams::default_for(k).chi_max } else { chi.min(CHI_CAP) };
    TruncationParams { chi_max, ..TruncationParams::default_for(k) }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `ln E[I^(k)]` followed by the `ln` of the stationary value, so the
/// result has `t_max + 1` entries.
#[wasm_bindgen]
pub fn ipr_curve(ensemble: &str, k: usize, d: usize, n: usize, t_max: usize, chi: usize) -> Result<Vec<f64>, String> {
    let ens: Ensemble = ensemble.parse().map_err(err)?;
    let basis = basis_for(ens, k, d).map_err(err)?;
    let bnd = ipr_boundary(&basis, d, n).map_err(err)?;
    let runs = Problem::clean(&basis, d, n, &bnd).sweep(1, t_max, &trunc(k, chi)).map_err(err)?;
    let ln_dim = n as f64 * (d as f64).ln();
    let plateau = match ens {
        Ensemble::Orthogonal => ln_orthogonal_ipr_stat(ln_dim, k),
        _ => ln_haar_ipr(ln_dim, k),
    };
    let mut out: Vec<f64> = runs.iter().map(|r| r.value.ln_abs()).collect();
    out.push(plateau);
    Ok(out)
}

/// Half-chain purity of the first `ell` sites: `t_max` network values
/// then `t_max` random-walk values.
#[wasm_bindgen]
pub fn purity_curve(d: usize, n: usize, ell: usize, t_max: usize, chi: usize) -> Result<Vec<f64>, String> {
    let basis = basis_for(Ensemble::Unitary, 2, d).map_err(err)?;
    let bnd = purity_boundary(&basis, d, n, 1, ell).map_err(err)?;
    let runs = Problem::clean(&basis, d, n, &bnd).sweep(1, t_max, &trunc(2, chi)).map_err(err)?;
    let mut out: Vec<f64> = runs.iter().map(|r| r.value.value()).collect();
    for t in 1..=t_max {
        out.push(rw_purity(n, ell, d, t).map_err(err)?);
    }
    Ok(out)
}

/// Linear XEB against a device with depolarising rate `p` after every gate.
#[wasm_bindgen]
pub fn xeb_curve(d: usize, n: usize, t_max: usize, p: f64, chi: usize) -> Result<Vec<f64>, String> {
    let device = depolarising_choi(d, p).map_err(err)?;
    let runs = xeb_sweep(d, n, 1, t_max, &device, &trunc(2, chi)).map_err(err)?;
    Ok(runs.into_iter().map(|(_, chi)| chi).collect())
}
