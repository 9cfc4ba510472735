//! Replica tensor-network contraction: dressed gates, the row MPS and the
//! layer-by-layer driver.
//!
//! Depth `t` means `t` brickwork layers. Layer 1 acts on the product
//! initial state and is absorbed into pair states on sites `(1,2), (3,4), ..`;
//! layers `2..t` are applied to the MPS with parity even, odd, even, ..

mod gate;
mod mps;

pub use gate::{dressed_gate, DressedGate};
pub use mps::{contract_top, pair_product_mps, Parity, RowMPS, SiteTensor, TruncationParams, UpdateStats, TWO_SITE_CAP};

use crate::commutant::{element_vector, weingarten_matrix, CommutantBasis, SiteMap};
use crate::error::{RtnError, RtnResult};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// A real number stored as `mantissa · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl LogValue {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// `ln |value|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn scale(self, ln_factor: f64) -> Self {
        Self { mantissa: self.mantissa, log_scale: self.log_scale + ln_factor }
    }
}

/// Per-site initial overlaps `v_i(τ) = <<τ|ρ₀>>_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitOverlaps {
    pub per_site: Vec<Vec<f64>>,
}

impl InitOverlaps {
    /// Every site in `|0>`.
    pub fn zero_state(basis: &CommutantBasis, d: usize, n_sites: usize) -> RtnResult<Self> {
        let v = (0..basis.len())
            .map(|i| element_vector(basis, i, d).map(|e| e[0]))
            .collect::<RtnResult<Vec<f64>>>()?;
        Ok(Self { per_site: vec![v; n_sites] })
    }
}

/// `c(σ) = Σ_τ Wg_{στ}(d²) v_l(τ) v_r(τ)`.
pub fn initial_pair_amplitudes(basis: &CommutantBasis, d: usize, v_left: &[f64], v_right: &[f64]) -> RtnResult<Vec<f64>> {
    let n = basis.len();
    if v_left.len() != n || v_right.len() != n {
        return Err(RtnError::Shape("overlap vectors must have one entry per basis element".into()));
    }
    let wg = weingarten_matrix(basis, d * d)?.entries;
    Ok((0..n).map(|s| (0..n).map(|t| wg[(s, t)] * v_left[t] * v_right[t]).sum()).collect())
}

/// Pair-correlated initial MPS after layer 1. With `rescaled`, each pair's
/// amplitudes are divided by their max-norm and the log goes into
/// `log_scale`. With a site map the physical legs are taken into its frame.
pub fn init_mps(
    n_sites: usize,
    basis: &CommutantBasis,
    d: usize,
    overlaps: &InitOverlaps,
    rescaled: bool,
    map: Option<&SiteMap>,
) -> RtnResult<RowMPS> {
    if n_sites == 0 || n_sites % 2 != 0 {
        return Err(RtnError::Invalid(format!("N must be even and positive, got {n_sites}")));
    }
    if overlaps.per_site.len() != n_sites {
        return Err(RtnError::Shape("one overlap vector per site".into()));
    }
    let n = basis.len();
    let mut log_scale = 0.0;
    let mut pairs = Vec::with_capacity(n_sites / 2);
    for j in 0..n_sites / 2 {
        let mut c = initial_pair_amplitudes(basis, d, &overlaps.per_site[2 * j], &overlaps.per_site[2 * j + 1])?;
        if rescaled {
            let m = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if m > 0.0 {
                c.iter_mut().for_each(|x| *x /= m);
                log_scale += m.ln();
            }
        }
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(c));
        pairs.push(match map {
            Some(s) => (&s.m * diag, s.m.transpose()),
            None => (diag, DMatrix::identity(n, n)),
        });
    }
    Ok(pair_product_mps(&pairs, log_scale))
}

/// Diagnostics of one applied layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDiagnostics {
    pub layer: usize,
    pub bond_dims: Vec<usize>,
    pub max_bond: usize,
    /// Summed over all layers applied so far.
    pub discarded_weight: f64,
    pub log_scale: f64,
}

/// Write diagnostics as JSON lines.
pub fn write_diagnostics<W: Write>(diags: &[LayerDiagnostics], mut w: W) -> io::Result<()> {
    for d in diags {
        serde_json::to_writer(&mut w, d)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Everything needed to contract one brickwork network: the initial MPS
/// (layer 1 absorbed), the gate for layers `2..`, and the top boundary.
#[derive(Debug, Clone)]
pub struct Network {
    pub init: RowMPS,
    pub gate: DressedGate,
    pub boundary: Vec<Vec<f64>>,
    /// Constant factored out of the boundary.
    pub boundary_log: f64,
}

/// One evaluated depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult {
    pub t: usize,
    pub value: LogValue,
    pub diagnostics: LayerDiagnostics,
}

impl Network {
    pub fn n_sites(&self) -> usize {
        self.init.len()
    }

    /// Evolve to `t_max`, calling `on_depth` after every depth in `t_min..=t_max`.
    pub fn evolve<F: FnMut(DepthResult)>(
        &self,
        t_min: usize,
        t_max: usize,
        trunc: &TruncationParams,
        extra_sweeps: bool,
        mut on_depth: F,
    ) -> RtnResult<()> {
        if t_min < 1 || t_max < t_min {
            return Err(RtnError::Invalid(format!("bad depth range {t_min}..{t_max}")));
        }
        let mut mps = self.init.clone();
        let mut discarded = 0.0;
        for t in 1..=t_max {
            if t > 1 {
                let stats = mps.apply_layer(&self.gate, Parity::of_layer(t), trunc)?;
                discarded += stats.discarded_weight;
                if extra_sweeps {
                    mps.sweep();
                }
            }
            if t >= t_min {
                let (m, l) = contract_top(&mps, &self.boundary);
                on_depth(DepthResult {
                    t,
                    value: LogValue::new(m, l + self.boundary_log),
                    diagnostics: LayerDiagnostics {
                        layer: t,
                        bond_dims: mps.bond_dims(),
                        max_bond: mps.max_bond(),
                        discarded_weight: discarded,
                        log_scale: mps.log_scale,
                    },
                });
            }
        }
        Ok(())
    }

    /// Value at a single depth.
    pub fn contract(&self, t: usize, trunc: &TruncationParams) -> RtnResult<DepthResult> {
        let mut out = None;
        self.evolve(t, t, trunc, false, |r| out = Some(r))?;
        Ok(out.expect("one depth evaluated"))
    }
}
