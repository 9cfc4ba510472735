use crate::channels::{noisy_overlaps, ChannelStack};
use crate::commutant::{dot, element_vector, loop_overlap, permutation_vector, CommutantBasis, Element, Permutation};
use crate::error::{RtnError, RtnResult};

/// What a single top-boundary site measures.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteObservable {
    /// Projector onto the diagonal: all `2k` labels equal.
    Diagonal,
    /// A permutation state `<<π|`.
    Perm(Permutation),
}

/// Top boundary of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub sites: Vec<SiteObservable>,
    /// `b_i(σ)`, one vector per site.
    pub per_site: Vec<Vec<f64>>,
    /// The boundary value is `Π_i b_i · exp(log_prefactor)`.
    pub log_prefactor: f64,
    pub label: String,
}

fn diagonal_vector(d: usize, k: usize) -> Vec<f64> {
    let len = d.pow(2 * k as u32);
    let step: usize = (0..2 * k).map(|e| d.pow(e as u32)).sum();
    let mut v = vec![0.0; len];
    for a in 0..d {
        v[a * step] = 1.0;
    }
    v
}

fn observable_vector(obs: &SiteObservable, d: usize, k: usize) -> Vec<f64> {
    match obs {
        SiteObservable::Diagonal => diagonal_vector(d, k),
        SiteObservable::Perm(p) => permutation_vector(p, d),
    }
}

fn clean_amplitudes(obs: &SiteObservable, basis: &CommutantBasis, d: usize) -> RtnResult<Vec<f64>> {
    let mut omega: Option<Vec<f64>> = None;
    (0..basis.len())
        .map(|s| {
            let el = &basis.elements[s];
            let fast = match (obs, el) {
                (_, Element::Q3(_)) => None,
                (SiteObservable::Diagonal, _) => Some(d as f64),
                (SiteObservable::Perm(p), _) => loop_overlap(&Element::Perm(p.clone()), el, d),
            };
            match fast {
                Some(x) => Ok(x),
                None => {
                    let w = omega.get_or_insert_with(|| observable_vector(obs, d, basis.k));
                    Ok(dot(w, &element_vector(basis, s, d)?))
                }
            }
        })
        .collect()
}

impl BoundarySpec {
    /// Build amplitudes for the given per-site observables.
    pub fn from_sites(basis: &CommutantBasis, d: usize, sites: Vec<SiteObservable>, label: &str) -> RtnResult<Self> {
        let per_site = amplitudes(basis, d, &sites, None)?;
        Ok(Self { sites, per_site, log_prefactor: 0.0, label: label.to_string() })
    }

    /// Amplitudes `<<Ω| N_1⊗..⊗N_k |σ>>` with the pending channel folded in.
    pub fn dressed(&self, basis: &CommutantBasis, d: usize, stack: &ChannelStack) -> RtnResult<Self> {
        let per_site = amplitudes(basis, d, &self.sites, Some(stack))?;
        Ok(Self { sites: self.sites.clone(), per_site, log_prefactor: self.log_prefactor, label: self.label.clone() })
    }

    /// Divide each site vector by its max-norm and move the logs into
    /// `log_prefactor`.
    pub fn rescaled(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.per_site {
            let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if m > 0.0 {
                v.iter_mut().for_each(|x| *x /= m);
                out.log_prefactor += m.ln();
            }
        }
        out
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }
}

fn amplitudes(
    basis: &CommutantBasis,
    d: usize,
    sites: &[SiteObservable],
    stack: Option<&ChannelStack>,
) -> RtnResult<Vec<Vec<f64>>> {
    let mut cache: Vec<(SiteObservable, Vec<f64>)> = Vec::new();
    sites
        .iter()
        .map(|obs| {
            if let Some((_, v)) = cache.iter().find(|(o, _)| o == obs) {
                return Ok(v.clone());
            }
            let v = match stack {
                Some(st) => noisy_overlaps(&observable_vector(obs, d, basis.k), basis, d, st)?,
                None => clean_amplitudes(obs, basis, d)?,
            };
            cache.push((obs.clone(), v.clone()));
            Ok(v)
        })
        .collect()
}

/// IPR boundary: the diagonal projector on every site (`b(σ) = d` for
/// permutations and Brauer diagrams).
pub fn ipr_boundary(basis: &CommutantBasis, d: usize, n_sites: usize) -> RtnResult<BoundarySpec> {
    BoundarySpec::from_sites(basis, d, vec![SiteObservable::Diagonal; n_sites], "ipr")
}

/// Rényi-k purity of the region `first..=last` (1-based, inclusive): the
/// cycle `m -> m+1 mod k` on the region, the identity elsewhere.
pub fn purity_boundary(basis: &CommutantBasis, d: usize, n_sites: usize, first: usize, last: usize) -> RtnResult<BoundarySpec> {
    if first < 1 || last > n_sites || first > last {
        return Err(RtnError::Invalid(format!("region {first}..{last} outside 1..{n_sites}")));
    }
    let k = basis.k;
    let sites = (1..=n_sites)
        .map(|i| {
            if (first..=last).contains(&i) {
                SiteObservable::Perm(Permutation::cyclic(k))
            } else {
                SiteObservable::Perm(Permutation::identity(k))
            }
        })
        .collect();
    BoundarySpec::from_sites(basis, d, sites, "purity")
}

/// Effective overlaps of a site Bell-paired with a reference qudit whose
/// top boundary is `beta`: `v(τ) = d^{#(τβ) - k}`.
pub fn bell_init_overlaps(beta: &Permutation, k: usize, d: usize) -> RtnResult<Vec<f64>> {
    if k != 2 || beta.k() != 2 {
        return Err(RtnError::Unsupported(format!("Bell overlaps need k = 2, got {k}")));
    }
    Ok(Permutation::all(k)
        .iter()
        .map(|tau| (d as f64).powi(tau.compose(beta).cycle_count() as i32 - k as i32))
        .collect())
}
