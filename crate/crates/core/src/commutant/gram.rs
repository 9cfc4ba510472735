use super::{dot, element_vector, loop_overlap, CommutantBasis};
use crate::error::{RtnError, RtnResult};
use nalgebra::DMatrix;
use std::io::{self, Write};

/// Singular values below `RANK_TOL × max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// A square matrix of commutant overlaps evaluated at dimension `q`.
/// Also used for Weingarten matrices and noisy Grams.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub q: usize,
}

pub type WeingartenMatrix = GramMatrix;

impl GramMatrix {
    pub fn side(&self) -> usize {
        self.entries.nrows()
    }
}

/// Gram matrix `<<a|b>>` at dimension `q`.
///
/// Permutations and Brauer diagrams use `q^loops`. Bases with Clifford
/// extras are evaluated from explicit vectors at the physical `d`, and at
/// `q = d²` as the entrywise square.
pub fn gram_matrix(basis: &CommutantBasis, q: usize) -> RtnResult<GramMatrix> {
    if q < 1 {
        return Err(RtnError::Invalid("q must be positive".into()));
    }
    let n = basis.len();
    if basis.has_q3() {
        let d = basis.d_hint.unwrap_or(3);
        let square = if q == d {
            false
        } else if q == d * d {
            true
        } else {
            return Err(RtnError::Unsupported(format!("Clifford Gram at q={q} (allowed: {d} or {})", d * d)));
        };
        let vecs = (0..n).map(|i| element_vector(basis, i, d)).collect::<RtnResult<Vec<_>>>()?;
        let g = DMatrix::from_fn(n, n, |i, j| {
            let x = dot(&vecs[i], &vecs[j]);
            if square { x * x } else { x }
        });
        return Ok(GramMatrix { entries: g, q });
    }
    let g = DMatrix::from_fn(n, n, |i, j| {
        loop_overlap(&basis.elements[i], &basis.elements[j], q).expect("combinatorial element")
    });
    Ok(GramMatrix { entries: g, q })
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix; the exact inverse
/// when it is numerically full rank.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let tol = RANK_TOL * lmax;
    let full = eig.eigenvalues.iter().all(|x| x.abs() > tol);
    if full {
        if let Some(inv) = m.clone().lu().try_inverse() {
            return inv;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > tol {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

/// Numerical rank of a symmetric matrix.
#[cfg(test)]
pub(crate) fn symmetric_rank(m: &DMatrix<f64>) -> usize {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    eig.eigenvalues.iter().filter(|x| x.abs() > RANK_TOL * lmax).count()
}

/// Weingarten matrix: pseudo-inverse of the Gram at `q`.
pub fn weingarten_matrix(basis: &CommutantBasis, q: usize) -> RtnResult<WeingartenMatrix> {
    let g = gram_matrix(basis, q)?;
    Ok(GramMatrix { entries: pseudo_inverse(&g.entries), q })
}

/// Row-major CSV dump with 17 significant digits.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
