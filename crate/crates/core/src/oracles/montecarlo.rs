//! Brute-force circuit sampling: explicit Haar gates on a statevector, or
//! on a density matrix when noise or a reference system is involved.

use super::sampling::{sample_gate, RngStream};
use crate::commutant::Ensemble;
use crate::error::{check_cap, RtnError, RtnResult};
use crate::rtn::Parity;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest Hilbert-space dimension simulated (statevector length, or side
/// of the density matrix).
pub const MC_DIM_CAP: u128 = 4096;

/// Per-sample quantity to average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum McObservable {
    /// `Σ_x p(x)^k`.
    Ipr { k: usize },
    /// `Tr ρ_A^k` for sites `first..=last` (1-based).
    Purity { first: usize, last: usize, k: usize },
    /// `Tr ρ²` of the whole chain.
    FullPurity,
    /// `Σ_x p_cl(x) p_noisy(x)` for the same gates.
    XebKernel,
    /// `Tr ρ_B²` with the first `k_logical` sites Bell-paired to a reference.
    CoherentB { k_logical: usize },
    /// `Tr ρ_RB²` for the same setup.
    CoherentRB { k_logical: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Digits of an index over sites of dimension d, most significant first.
fn stride(d: usize, n_sites: usize, site: usize) -> usize {
    d.pow((n_sites - site - 1) as u32)
}

/// Apply a `d² × d²` gate to adjacent tensor factors `(a, a+1)`.
fn apply_two_site(data: &mut [Complex64], d: usize, n_sites: usize, a: usize, u: &DMatrix<Complex64>) {
    let inner = stride(d, n_sites, a + 1);
    let block = inner * d * d;
    let mut local = vec![Complex64::ZERO; d * d];
    for outer in (0..data.len()).step_by(block) {
        for j in 0..inner {
            for (c, slot) in local.iter_mut().enumerate() {
                *slot = data[outer + c * inner + j];
            }
            for r in 0..d * d {
                data[outer + r * inner + j] = (0..d * d).map(|c| u[(r, c)] * local[c]).sum();
            }
        }
    }
}

/// Depolarise factor `j` of a density matrix on `m` qudits stored as a
/// tensor over `2m` factors (kets then bras).
fn depolarise(rho: &mut [Complex64], d: usize, m: usize, j: usize, p: f64) {
    let sk = stride(d, 2 * m, j);
    let sb = stride(d, 2 * m, m + j);
    for base in 0..rho.len() {
        if (base / sk) % d != 0 || (base / sb) % d != 0 {
            continue;
        }
        let tr: Complex64 = (0..d).map(|a| rho[base + a * (sk + sb)]).sum();
        for a in 0..d {
            for b in 0..d {
                let idx = base + a * sk + b * sb;
                rho[idx] *= 1.0 - p;
                if a == b {
                    rho[idx] += tr * (p / d as f64);
                }
            }
        }
    }
}

/// `Tr_{rest} |ψ><ψ|` onto the sites in `keep` (sorted).
fn reduced_from_state(psi: &[Complex64], d: usize, n_sites: usize, keep: &[usize]) -> DMatrix<Complex64> {
    let rest: Vec<usize> = (0..n_sites).filter(|i| !keep.contains(i)).collect();
    let (da, db) = (d.pow(keep.len() as u32), d.pow(rest.len() as u32));
    let mut m = DMatrix::zeros(da, db);
    for (x, &amp) in psi.iter().enumerate() {
        let (mut a, mut b) = (0, 0);
        for i in 0..n_sites {
            let digit = (x / stride(d, n_sites, i)) % d;
            if keep.contains(&i) {
                a = a * d + digit;
            } else {
                b = b * d + digit;
            }
        }
        m[(a, b)] = amp;
    }
    &m * m.adjoint()
}

/// Partial trace of a density matrix on `m` qudits onto `keep` (sorted).
fn reduced_from_rho(rho: &[Complex64], d: usize, m: usize, keep: &[usize]) -> DMatrix<Complex64> {
    let rest: Vec<usize> = (0..m).filter(|i| !keep.contains(i)).collect();
    let (da, dr) = (d.pow(keep.len() as u32), d.pow(rest.len() as u32));
    let dim = d.pow(m as u32);
    let compose = |a: usize, z: usize| -> usize {
        let mut x = 0;
        for i in 0..m {
            let digit = if let Some(pos) = keep.iter().position(|&s| s == i) {
                (a / d.pow((keep.len() - pos - 1) as u32)) % d
            } else {
                let pos = rest.iter().position(|&s| s == i).unwrap();
                (z / d.pow((rest.len() - pos - 1) as u32)) % d
            };
            x = x * d + digit;
        }
        x
    };
    let mut out = DMatrix::zeros(da, da);
    for z in 0..dr {
        let idx: Vec<usize> = (0..da).map(|a| compose(a, z)).collect();
        for a in 0..da {
            for b in 0..da {
                out[(a, b)] += rho[idx[a] * dim + idx[b]];
            }
        }
    }
    out
}

fn trace_power(r: &DMatrix<Complex64>, k: usize) -> f64 {
    let mut acc = r.clone();
    for _ in 1..k {
        acc = &acc * r;
    }
    acc.trace().re
}

struct Setup {
    n_sys: usize,
    n_ref: usize,
    density: bool,
}

/// Sample mean and standard error of `obs` over `n_samples` brickwork
/// circuits of depth `t`; with `p > 0`, depolarising noise of rate `p`
/// hits both sites after every gate.
#[allow(clippy::too_many_arguments)]
pub fn mc_average(
    ensemble: Ensemble,
    d: usize,
    n_sites: usize,
    t: usize,
    obs: &McObservable,
    p: f64,
    n_samples: usize,
    seed: u64,
) -> RtnResult<McEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RtnError::Invalid(format!("noise rate {p} outside [0, 1]")));
    }
    if n_samples < 2 {
        return Err(RtnError::Invalid("need at least two samples".into()));
    }
    let n_ref = match obs {
        McObservable::CoherentB { k_logical } | McObservable::CoherentRB { k_logical } => {
            if *k_logical < 1 || 2 * k_logical > n_sites {
                return Err(RtnError::Invalid(format!("K = {k_logical} outside 1..=N/2")));
            }
            *k_logical
        }
        McObservable::Purity { first, last, .. } => {
            if *first < 1 || last > &n_sites || first > last {
                return Err(RtnError::Invalid(format!("region {first}..{last} outside 1..{n_sites}")));
            }
            0
        }
        _ => 0,
    };
    let density = p > 0.0 || n_ref > 0 || matches!(obs, McObservable::XebKernel | McObservable::FullPurity);
    let setup = Setup { n_sys: n_sites, n_ref, density };
    check_cap("Monte Carlo state", (d as u128).pow((n_sites + n_ref) as u32), MC_DIM_CAP)?;
    let streams = RngStream::new(seed);
    let one = |i: usize| sample_value(ensemble, d, t, obs, p, &setup, &streams, i as u64);
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_samples).into_par_iter().map(one).collect::<RtnResult<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = (0..n_samples).map(one).collect::<RtnResult<Vec<_>>>()?;
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), n_samples })
}

/// Order-fixed pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_value(
    ensemble: Ensemble,
    d: usize,
    t: usize,
    obs: &McObservable,
    p: f64,
    setup: &Setup,
    streams: &RngStream,
    index: u64,
) -> RtnResult<f64> {
    let mut rng = streams.sample(index);
    let mut gates = Vec::new();
    for layer in 1..=t {
        for i in Parity::of_layer(layer).bonds(setup.n_sys) {
            gates.push((i, sample_gate(ensemble, d * d, &mut rng)?));
        }
    }
    let m = setup.n_sys + setup.n_ref;
    let dim = d.pow(m as u32);

    // clean statevector; sites 0..n_sys are the system, then the reference
    let mut psi = vec![Complex64::ZERO; dim];
    if setup.n_ref == 0 {
        psi[0] = Complex64::ONE;
    } else {
        // Bell pairs between system site j and reference site n_sys + j
        let amp = Complex64::from((d as f64).powf(-(setup.n_ref as f64) / 2.0));
        for a in 0..d.pow(setup.n_ref as u32) {
            let mut x = 0;
            for i in 0..m {
                let digit = if i < setup.n_ref {
                    (a / d.pow((setup.n_ref - i - 1) as u32)) % d
                } else if i >= setup.n_sys {
                    let j = i - setup.n_sys;
                    (a / d.pow((setup.n_ref - j - 1) as u32)) % d
                } else {
                    0
                };
                x = x * d + digit;
            }
            psi[x] = amp;
        }
    }
    let psi0 = psi.clone();
    for (i, u) in &gates {
        apply_two_site(&mut psi, d, m, *i, u);
    }
    if !setup.density {
        return Ok(match obs {
            McObservable::Ipr { k } => psi.iter().map(|z| z.norm_sqr().powi(*k as i32)).sum(),
            McObservable::Purity { first, last, k } => {
                let keep: Vec<usize> = (first - 1..*last).collect();
                trace_power(&reduced_from_state(&psi, d, m, &keep), *k)
            }
            _ => unreachable!("handled by the density-matrix path"),
        });
    }

    let mut rho: Vec<Complex64> = psi0.iter().flat_map(|&a| psi0.iter().map(move |&b| a * b.conj())).collect();
    for (i, u) in &gates {
        apply_two_site(&mut rho, d, 2 * m, *i, u);
        apply_two_site(&mut rho, d, 2 * m, m + *i, &u.map(|z| z.conj()));
        if p > 0.0 {
            depolarise(&mut rho, d, m, *i, p);
            depolarise(&mut rho, d, m, *i + 1, p);
        }
    }
    let diag = |x: usize| rho[x * dim + x].re;
    Ok(match obs {
        McObservable::Ipr { k } => (0..dim).map(|x| diag(x).powi(*k as i32)).sum(),
        McObservable::FullPurity => rho.iter().map(|z| z.norm_sqr()).sum(),
        McObservable::XebKernel => (0..dim).map(|x| psi[x].norm_sqr() * diag(x)).sum(),
        McObservable::Purity { first, last, k } => {
            let keep: Vec<usize> = (first - 1..*last).collect();
            trace_power(&reduced_from_rho(&rho, d, m, &keep), *k)
        }
        McObservable::CoherentB { .. } => {
            let keep: Vec<usize> = (0..setup.n_sys).collect();
            trace_power(&reduced_from_rho(&rho, d, m, &keep), 2)
        }
        McObservable::CoherentRB { .. } => rho.iter().map(|z| z.norm_sqr()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
    }

    #[test]
    fn full_depolarisation_is_maximally_mixed() {
        let est = mc_average(Ensemble::Unitary, 2, 4, 2, &McObservable::FullPurity, 1.0, 4, 1).unwrap();
        assert!((est.mean - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_reference_identity() {
        // unitary on B with a Bell-paired reference: ρ_RB pure, ρ_B has purity 1/d on the paired site
        let rb = mc_average(Ensemble::Unitary, 2, 4, 3, &McObservable::CoherentRB { k_logical: 1 }, 0.0, 3, 9).unwrap();
        let b = mc_average(Ensemble::Unitary, 2, 4, 3, &McObservable::CoherentB { k_logical: 1 }, 0.0, 3, 9).unwrap();
        assert!((rb.mean - 1.0).abs() < 1e-12);
        assert!((b.mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_gate_ipr() {
        // N=2, t=1: one Haar gate on U(4); E[Σ p²] = 2/5
        let est = mc_average(Ensemble::Unitary, 2, 2, 1, &McObservable::Ipr { k: 2 }, 0.0, 4000, 3).unwrap();
        assert!((est.mean - 0.4).abs() < 4.0 * est.std_error);
    }
}
