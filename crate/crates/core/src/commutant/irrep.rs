use super::gram::{pseudo_inverse, GramMatrix, RANK_TOL};
use crate::error::{RtnError, RtnResult};
use crate::rtn::DressedGate;
use nalgebra::DMatrix;

/// Orthonormal rows spanning the column space of a Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepProjector {
    /// `d_red × n_B`
    pub p: DMatrix<f64>,
}

impl IrrepProjector {
    pub fn d_red(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_b(&self) -> usize {
        self.p.ncols()
    }
}

pub fn irrep_projector(g: &GramMatrix) -> IrrepProjector {
    let n = g.side();
    let proj = pseudo_inverse(&g.entries) * &g.entries;
    let sym = (&proj + proj.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut keep: Vec<usize> = (0..n).filter(|&i| (eig.eigenvalues[i] - 1.0).abs() < 0.5).collect();
    keep.sort_unstable();
    let mut p = DMatrix::zeros(keep.len(), n);
    for (r, &i) in keep.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        // fix the sign so the largest component is positive
        let imax = col.iamax();
        let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            p[(r, j)] = s * col[j];
        }
    }
    IrrepProjector { p }
}

/// `(P⊗P) T (P⊗P)ᵀ`.
pub fn irrep_reduce_gate(t: &DressedGate, proj: &IrrepProjector) -> RtnResult<DressedGate> {
    SiteMap::projector(proj).map_gate(t)
}

/// `P · b`.
pub fn irrep_reduce_boundary(b: &[f64], proj: &IrrepProjector) -> RtnResult<Vec<f64>> {
    SiteMap::projector(proj).map_boundary(b)
}

/// A change of basis on every physical leg: `m` maps coefficients into
/// the new frame, `m_pinv` maps back, and `m_pinv · m` is the projector
/// onto the column space of the Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteMap {
    pub m: DMatrix<f64>,
    pub m_pinv: DMatrix<f64>,
}

impl SiteMap {
    pub fn projector(p: &IrrepProjector) -> Self {
        Self { m: p.p.clone(), m_pinv: p.p.transpose() }
    }

    /// Frame in which the coefficient norm is the doubled-space norm,
    /// `|M a|² = aᵀ G a`. Reduced to the rank of `G` when `reduce`, else
    /// `G^{1/2}` on the full basis.
    pub fn metric(g: &GramMatrix, reduce: bool) -> Self {
        let n = g.side();
        let eig = g.entries.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        let mut keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > RANK_TOL * lmax).collect();
        keep.sort_unstable();
        let r = keep.len();
        let mut m = DMatrix::zeros(r, n);
        let mut m_pinv = DMatrix::zeros(n, r);
        for (row, &i) in keep.iter().enumerate() {
            let col = eig.eigenvectors.column(i);
            let imax = col.iamax();
            let sgn = if col[imax] < 0.0 { -1.0 } else { 1.0 };
            let root = eig.eigenvalues[i].sqrt();
            for j in 0..n {
                m[(row, j)] = sgn * col[j] * root;
                m_pinv[(j, row)] = sgn * col[j] / root;
            }
        }
        if reduce {
            return Self { m, m_pinv };
        }
        let v = DMatrix::from_fn(n, r, |j, row| m_pinv[(j, row)] * eig.eigenvalues[keep[row]].sqrt());
        Self { m: &v * &m, m_pinv: &m_pinv * v.transpose() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `(M⊗M) T (M⁺⊗M⁺)`.
    pub fn map_gate(&self, t: &DressedGate) -> RtnResult<DressedGate> {
        if t.n() != self.m.ncols() {
            return Err(RtnError::Shape(format!("gate side {} vs map columns {}", t.n(), self.m.ncols())));
        }
        let mm = self.m.kronecker(&self.m);
        let mp = self.m_pinv.kronecker(&self.m_pinv);
        Ok(DressedGate::from_matrix(self.dim(), &mm * t.matrix() * mp, false))
    }

    /// `M⁺ᵀ · b`.
    pub fn map_boundary(&self, b: &[f64]) -> RtnResult<Vec<f64>> {
        if b.len() != self.m.ncols() {
            return Err(RtnError::Shape(format!("vector length {} vs map columns {}", b.len(), self.m.ncols())));
        }
        let v = self.m_pinv.transpose() * nalgebra::DVector::from_column_slice(b);
        Ok(v.iter().copied().collect())
    }
}
