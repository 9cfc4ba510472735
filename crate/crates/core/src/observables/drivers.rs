use super::boundary::{bell_init_overlaps, ipr_boundary, purity_boundary, BoundarySpec};
use crate::channels::{depolarising_choi, identity_choi, noisy_gram_or_clean, ChannelStack, ChannelSuperop};
use crate::commutant::{
    gram_matrix, irrep_projector, symmetric_basis, CommutantBasis, Permutation, SiteMap,
};
use crate::error::{RtnError, RtnResult};
use crate::rtn::{dressed_gate, init_mps, DepthResult, InitOverlaps, LogValue, Network, TruncationParams};

/// One averaged-observable contraction problem.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub basis: &'a CommutantBasis,
    pub d: usize,
    pub n_sites: usize,
    /// Clean boundary; dressed internally when a stack is present.
    pub boundary: &'a BoundarySpec,
    pub stack: Option<&'a ChannelStack>,
    /// Defaults to every site in `|0>`.
    pub overlaps: Option<&'a InitOverlaps>,
    /// Run in the irrep-reduced basis.
    pub reduce: bool,
    /// Truncate in the doubled-space norm instead of the raw coefficient
    /// norm. Costs the locked block split but converges much faster in
    /// bond dimension when the Gram matrix is ill-conditioned (k ≥ 3).
    pub metric: bool,
}

impl<'a> Problem<'a> {
    pub fn clean(basis: &'a CommutantBasis, d: usize, n_sites: usize, boundary: &'a BoundarySpec) -> Self {
        Self { basis, d, n_sites, boundary, stack: None, overlaps: None, reduce: false, metric: false }
    }

    /// Build the network: layer-1 pair states, the gate for layers `2..`
    /// (noisy Grams on both input legs when a stack is present), and the
    /// rescaled, possibly dressed, top boundary.
    pub fn network(&self) -> RtnResult<Network> {
        let (basis, d) = (self.basis, self.d);
        if self.boundary.n_sites() != self.n_sites {
            return Err(RtnError::Shape(format!(
                "boundary has {} sites, chain has {}",
                self.boundary.n_sites(),
                self.n_sites
            )));
        }
        let noisy = self.stack.filter(|s| !s.is_identity());
        let g = gram_matrix(basis, d)?;
        let link = noisy_gram_or_clean(basis, d, noisy, &g)?;
        let gate = dressed_gate(basis, d, &link, &link)?;
        let boundary = match noisy {
            Some(s) => self.boundary.dressed(basis, d, s)?,
            None => self.boundary.clone(),
        }
        .rescaled();
        let zero;
        let overlaps = match self.overlaps {
            Some(o) => o,
            None => {
                zero = InitOverlaps::zero_state(basis, d, self.n_sites)?;
                &zero
            }
        };
        let map = match (self.reduce, self.metric) {
            (false, false) => None,
            (true, false) => Some(SiteMap::projector(&irrep_projector(&g))),
            (reduce, true) => Some(SiteMap::metric(&g, reduce)),
        };
        let Some(map) = map else {
            let init = init_mps(self.n_sites, basis, d, overlaps, true, None)?;
            return Ok(Network { init, gate, boundary: boundary.per_site, boundary_log: boundary.log_prefactor });
        };
        let init = init_mps(self.n_sites, basis, d, overlaps, true, Some(&map))?;
        let gate = map.map_gate(&gate)?;
        let per_site = boundary.per_site.iter().map(|b| map.map_boundary(b)).collect::<RtnResult<Vec<_>>>()?;
        Ok(Network { init, gate, boundary: per_site, boundary_log: boundary.log_prefactor })
    }

    pub fn at(&self, t: usize, trunc: &TruncationParams) -> RtnResult<DepthResult> {
        self.network()?.contract(t, trunc)
    }

    /// Values at every depth in `t_min..=t_max` from a single evolution.
    pub fn sweep(&self, t_min: usize, t_max: usize, trunc: &TruncationParams) -> RtnResult<Vec<DepthResult>> {
        let mut out = Vec::with_capacity(t_max + 1 - t_min.min(t_max));
        self.network()?.evolve(t_min, t_max, trunc, false, |r| out.push(r))?;
        Ok(out)
    }
}

/// `E[Λ]` for a clean brickwork of depth `t`.
pub fn brickwork_average(
    basis: &CommutantBasis,
    d: usize,
    n_sites: usize,
    t: usize,
    boundary: &BoundarySpec,
    trunc: &TruncationParams,
) -> RtnResult<LogValue> {
    Ok(Problem::clean(basis, d, n_sites, boundary).at(t, trunc)?.value)
}

/// `E[Λ]` with the channel stack acting on both sites after every gate.
pub fn noisy_brickwork_average(
    basis: &CommutantBasis,
    d: usize,
    n_sites: usize,
    t: usize,
    boundary: &BoundarySpec,
    stack: &ChannelStack,
    trunc: &TruncationParams,
) -> RtnResult<LogValue> {
    let p = Problem { stack: Some(stack), ..Problem::clean(basis, d, n_sites, boundary) };
    Ok(p.at(t, trunc)?.value)
}

fn positive_ln(v: &LogValue, what: &str) -> RtnResult<f64> {
    if v.mantissa > 0.0 && v.ln_abs().is_finite() {
        Ok(v.ln_abs())
    } else {
        Err(RtnError::Degenerate(format!("{what} contraction is {}", v.value())))
    }
}

fn combine<F>(a: &[DepthResult], b: &[DepthResult], f: F) -> RtnResult<Vec<(DepthResult, f64)>>
where
    F: Fn(&LogValue, &LogValue) -> RtnResult<f64>,
{
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut diag = x.clone();
            diag.diagnostics.max_bond = x.diagnostics.max_bond.max(y.diagnostics.max_bond);
            diag.diagnostics.discarded_weight = x.diagnostics.discarded_weight.max(y.diagnostics.discarded_weight);
            Ok((diag, f(&x.value, &y.value)?))
        })
        .collect()
}

fn s2() -> CommutantBasis {
    symmetric_basis(2).expect("k = 2 is supported")
}

/// Second relative coherence `ln(Tr ρ²) - ln(Σ_x ρ_xx²)` of the averaged
/// state, for every depth in the range.
pub fn relative_coherence_sweep(
    d: usize,
    n_sites: usize,
    t_min: usize,
    t_max: usize,
    stack: &ChannelStack,
    trunc: &TruncationParams,
) -> RtnResult<Vec<(DepthResult, f64)>> {
    let basis = s2();
    let full = purity_boundary(&basis, d, n_sites, 1, n_sites)?;
    let ipr = ipr_boundary(&basis, d, n_sites)?;
    let num = Problem { stack: Some(stack), ..Problem::clean(&basis, d, n_sites, &full) }.sweep(t_min, t_max, trunc)?;
    let den = Problem { stack: Some(stack), ..Problem::clean(&basis, d, n_sites, &ipr) }.sweep(t_min, t_max, trunc)?;
    combine(&num, &den, |a, b| Ok(positive_ln(a, "full-swap")? - positive_ln(b, "IPR")?))
}

pub fn relative_coherence(d: usize, n_sites: usize, t: usize, stack: &ChannelStack, trunc: &TruncationParams) -> RtnResult<f64> {
    Ok(relative_coherence_sweep(d, n_sites, t, t, stack, trunc)?[0].1)
}

/// `Tr ρ_B²` and `Tr ρ_RB²` for `n_b` system qudits, the first `k_logical`
/// of them Bell-paired with an untouched reference, under depolarising
/// noise of rate `p` after every gate.
#[allow(clippy::too_many_arguments)]
pub fn coherent_purities_sweep(
    d: usize,
    n_b: usize,
    k_logical: usize,
    t_min: usize,
    t_max: usize,
    p: f64,
    trunc: &TruncationParams,
) -> RtnResult<(Vec<DepthResult>, Vec<DepthResult>)> {
    if k_logical < 1 || 2 * k_logical > n_b {
        return Err(RtnError::Invalid(format!("need 1 <= K <= N_B/2, got K={k_logical}, N_B={n_b}")));
    }
    let basis = s2();
    let stack = ChannelStack::uniform(depolarising_choi(d, p)?, 2);
    let full = purity_boundary(&basis, d, n_b, 1, n_b)?;
    let overlaps = |beta: Permutation| -> RtnResult<InitOverlaps> {
        let bell = bell_init_overlaps(&beta, 2, d)?;
        let mut ov = InitOverlaps::zero_state(&basis, d, n_b)?;
        ov.per_site[..k_logical].iter_mut().for_each(|v| *v = bell.clone());
        Ok(ov)
    };
    let (ov_b, ov_rb) = (overlaps(Permutation::identity(2))?, overlaps(Permutation::transposition(2, 0, 1))?);
    let base = Problem { stack: Some(&stack), ..Problem::clean(&basis, d, n_b, &full) };
    let tr_b = Problem { overlaps: Some(&ov_b), ..base }.sweep(t_min, t_max, trunc)?;
    let tr_rb = Problem { overlaps: Some(&ov_rb), ..base }.sweep(t_min, t_max, trunc)?;
    Ok((tr_b, tr_rb))
}

/// Coherent information `ln Tr ρ_RB² - ln Tr ρ_B²` of the brickwork
/// channel (see [`coherent_purities_sweep`]), divided by `K ln d` if
/// `normalize`.
#[allow(clippy::too_many_arguments)]
pub fn coherent_information_sweep(
    d: usize,
    n_b: usize,
    k_logical: usize,
    t_min: usize,
    t_max: usize,
    p: f64,
    trunc: &TruncationParams,
    normalize: bool,
) -> RtnResult<Vec<(DepthResult, f64)>> {
    let (tr_b, tr_rb) = coherent_purities_sweep(d, n_b, k_logical, t_min, t_max, p, trunc)?;
    let norm = if normalize { k_logical as f64 * (d as f64).ln() } else { 1.0 };
    combine(&tr_rb, &tr_b, |rb, b| Ok((positive_ln(rb, "Tr ρ_RB²")? - positive_ln(b, "Tr ρ_B²")?) / norm))
}

pub fn coherent_information(
    d: usize,
    n_b: usize,
    k_logical: usize,
    t: usize,
    p: f64,
    trunc: &TruncationParams,
    normalize: bool,
) -> RtnResult<f64> {
    Ok(coherent_information_sweep(d, n_b, k_logical, t, t, p, trunc, normalize)?[0].1)
}

/// Linear XEB `d^N E[Σ_x p_cl(x) p_n(x)] - 1` against a device applying
/// `device` to both sites after every gate.
pub fn xeb_sweep(
    d: usize,
    n_sites: usize,
    t_min: usize,
    t_max: usize,
    device: &ChannelSuperop,
    trunc: &TruncationParams,
) -> RtnResult<Vec<(DepthResult, f64)>> {
    let basis = s2();
    let stack = ChannelStack::new(vec![identity_choi(d), device.clone()])?;
    let ipr = ipr_boundary(&basis, d, n_sites)?;
    let runs = Problem { stack: Some(&stack), ..Problem::clean(&basis, d, n_sites, &ipr) }.sweep(t_min, t_max, trunc)?;
    let ln_dim = n_sites as f64 * (d as f64).ln();
    Ok(runs
        .into_iter()
        .map(|r| {
            let chi = r.value.scale(ln_dim).value() - 1.0;
            (r, chi)
        })
        .collect())
}

pub fn xeb(d: usize, n_sites: usize, t: usize, device: &ChannelSuperop, trunc: &TruncationParams) -> RtnResult<f64> {
    Ok(xeb_sweep(d, n_sites, t, t, device, trunc)?[0].1)
}
