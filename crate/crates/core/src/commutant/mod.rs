//! Commutant bases of the k-fold twirl for each gate ensemble.
//!
//! A basis element is a vector in the doubled space of k replicas. Labels
//! are interleaved `(ket_1, bra_1, .., ket_k, bra_k)` with the first label
//! most significant. A permutation σ has components
//! `Π_m δ(b_m, b̄_σ(m))`; a Brauer matching is the product of Kronecker
//! deltas over its pairs, upper point `m` being `ket_m` and lower point
//! `m` being `bra_m`. Overlaps between combinatorial elements are
//! `q^loops`, computed exactly without building vectors.

mod brauer;
mod clifford;
mod gram;
mod irrep;
mod perm;

pub use brauer::BrauerDiagram;
pub use clifford::{pauli_twirl_operator, permutation_operator};
pub use gram::{gram_matrix, pseudo_inverse, weingarten_matrix, write_matrix_csv, GramMatrix, RANK_TOL};
pub use irrep::{irrep_projector, irrep_reduce_boundary, irrep_reduce_gate, IrrepProjector, SiteMap};
pub use perm::{cycle_count, Permutation};

use crate::error::{check_cap, RtnError, RtnResult};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default cap on `d^{2k}` for explicit element vectors.
pub const VECTOR_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Unitary,
    Orthogonal,
    Clifford,
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unitary => "unitary",
            Self::Orthogonal => "orthogonal",
            Self::Clifford => "clifford",
        })
    }
}

impl FromStr for Ensemble {
    type Err = RtnError;
    fn from_str(s: &str) -> RtnResult<Self> {
        match s {
            "unitary" | "haar" => Ok(Self::Unitary),
            "orthogonal" => Ok(Self::Orthogonal),
            "clifford" => Ok(Self::Clifford),
            _ => Err(RtnError::Invalid(format!("unknown ensemble `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Perm(Permutation),
    Diagram(BrauerDiagram),
    /// `O_σ · Qᵀ` with Q the Pauli twirl (qutrits, three replicas).
    Q3(Permutation),
}

impl Element {
    fn diagram(&self) -> Option<BrauerDiagram> {
        match self {
            Self::Perm(p) => Some(BrauerDiagram::from_permutation(p)),
            Self::Diagram(m) => Some(m.clone()),
            Self::Q3(_) => None,
        }
    }

    pub fn as_permutation(&self) -> Option<Permutation> {
        match self {
            Self::Perm(p) => Some(p.clone()),
            Self::Diagram(m) => m.as_permutation(),
            Self::Q3(_) => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Perm(p) => write!(f, "{p}"),
            Self::Diagram(m) => write!(f, "{:?}", m.pairs()),
            Self::Q3(p) => write!(f, "Q{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutantBasis {
    pub ensemble: Ensemble,
    pub k: usize,
    pub elements: Vec<Element>,
    /// Physical dimension the basis was built for, when it matters.
    pub d_hint: Option<usize>,
}

impl CommutantBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of the element equal to permutation `p`, if present.
    pub fn index_of_perm(&self, p: &Permutation) -> Option<usize> {
        self.elements.iter().position(|e| e.as_permutation().as_ref() == Some(p))
    }

    fn has_q3(&self) -> bool {
        self.elements.iter().any(|e| matches!(e, Element::Q3(_)))
    }
}

/// All `k!` permutations, identity first.
pub fn symmetric_basis(k: usize) -> RtnResult<CommutantBasis> {
    if !(1..=5).contains(&k) {
        return Err(RtnError::Unsupported(format!("symmetric basis needs 1 <= k <= 5, got {k}")));
    }
    Ok(CommutantBasis {
        ensemble: Ensemble::Unitary,
        k,
        elements: Permutation::all(k).into_iter().map(Element::Perm).collect(),
        d_hint: None,
    })
}

/// All `(2k-1)!!` Brauer diagrams, permutation diagrams first.
pub fn brauer_basis(k: usize) -> RtnResult<CommutantBasis> {
    if !(1..=4).contains(&k) {
        return Err(RtnError::Unsupported(format!("Brauer basis needs 1 <= k <= 4, got {k}")));
    }
    Ok(CommutantBasis {
        ensemble: Ensemble::Orthogonal,
        k,
        elements: BrauerDiagram::all(k).into_iter().map(Element::Diagram).collect(),
        d_hint: None,
    })
}

/// Clifford commutant: `S_2` at k=2 (any d), eight elements at k=3, d=3.
pub fn clifford_basis(k: usize, d: usize) -> RtnResult<CommutantBasis> {
    match (k, d) {
        (2, d) if d >= 2 => {
            let mut b = symmetric_basis(2)?;
            b.ensemble = Ensemble::Clifford;
            b.d_hint = Some(d);
            Ok(b)
        }
        (3, 3) => {
            let mut elements: Vec<Element> = Permutation::all(3).into_iter().map(Element::Perm).collect();
            elements.push(Element::Q3(Permutation::identity(3)));
            elements.push(Element::Q3(Permutation::transposition(3, 0, 1)));
            Ok(CommutantBasis { ensemble: Ensemble::Clifford, k: 3, elements, d_hint: Some(3) })
        }
        _ => Err(RtnError::Unsupported(format!("Clifford commutant for k={k}, d={d}"))),
    }
}

pub fn basis_for(ensemble: Ensemble, k: usize, d: usize) -> RtnResult<CommutantBasis> {
    match ensemble {
        Ensemble::Unitary => symmetric_basis(k),
        Ensemble::Orthogonal => brauer_basis(k),
        Ensemble::Clifford => clifford_basis(k, d),
    }
}

/// Base-`d` digits of `x`, most significant first, `len` of them.
pub(crate) fn digits(mut x: usize, d: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = x % d;
        x /= d;
    }
    out
}

/// Interleaved doubled-space vector of an operator on `(C^d)^{⊗k}`.
fn operator_vector(op: &nalgebra::DMatrix<f64>, d: usize, k: usize) -> Vec<f64> {
    let len = d.pow(2 * k as u32);
    let mut v = vec![0.0; len];
    for (idx, slot) in v.iter_mut().enumerate() {
        let labels = digits(idx, d, 2 * k);
        let (mut row, mut col) = (0, 0);
        for m in 0..k {
            row = row * d + labels[2 * m];
            col = col * d + labels[2 * m + 1];
        }
        *slot = op[(row, col)];
    }
    v
}

fn diagram_vector(diag: &BrauerDiagram, d: usize) -> Vec<f64> {
    let k = diag.k();
    let pos = |x: usize| if x < k { 2 * x } else { 2 * (x - k) + 1 };
    let pairs = diag.pairs();
    let mut v = vec![0.0; d.pow(2 * k as u32)];
    for assign in 0..d.pow(k as u32) {
        let vals = digits(assign, d, k);
        let mut labels = vec![0; 2 * k];
        for (p, &(x, y)) in pairs.iter().enumerate() {
            labels[pos(x)] = vals[p];
            labels[pos(y)] = vals[p];
        }
        let idx = labels.iter().fold(0, |acc, &b| acc * d + b);
        v[idx] = 1.0;
    }
    v
}

/// Explicit replica vector of element `index` at local dimension `d`.
pub fn element_vector(basis: &CommutantBasis, index: usize, d: usize) -> RtnResult<Vec<f64>> {
    element_vector_capped(basis, index, d, VECTOR_CAP)
}

pub fn element_vector_capped(basis: &CommutantBasis, index: usize, d: usize, cap: u128) -> RtnResult<Vec<f64>> {
    let el = basis
        .elements
        .get(index)
        .ok_or_else(|| RtnError::Invalid(format!("element index {index} out of range")))?;
    check_cap("element vector", (d as u128).pow(2 * basis.k as u32), cap)?;
    Ok(match el {
        Element::Perm(p) => diagram_vector(&BrauerDiagram::from_permutation(p), d),
        Element::Diagram(m) => diagram_vector(m, d),
        Element::Q3(p) => {
            if d != 3 {
                return Err(RtnError::Unsupported(format!("Clifford extra elements need d=3, got {d}")));
            }
            operator_vector(&clifford::q3_operator(p, d), d, basis.k)
        }
    })
}

/// Element vector of a bare permutation (not necessarily in a basis).
pub fn permutation_vector(perm: &Permutation, d: usize) -> Vec<f64> {
    diagram_vector(&BrauerDiagram::from_permutation(perm), d)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<<a|b>>` at dimension `q` for combinatorial elements.
pub(crate) fn loop_overlap(a: &Element, b: &Element, q: usize) -> Option<f64> {
    let (da, db) = (a.diagram()?, b.diagram()?);
    Some((q as f64).powi(da.loops_with(&db) as i32))
}
