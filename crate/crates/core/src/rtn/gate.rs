use crate::commutant::{weingarten_matrix, CommutantBasis, GramMatrix};
use crate::error::{RtnError, RtnResult};
use nalgebra::DMatrix;

/// Averaged two-site gate with Weingarten and link Grams folded in.
///
/// Stored as an `n² × n²` matrix with row `σ₁·n + σ₂` (outputs) and
/// column `τ₁·n + τ₂` (inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct DressedGate {
    n: usize,
    matrix: DMatrix<f64>,
    locked: bool,
}

impl DressedGate {
    /// Wrap a matrix. `locked` asserts that only rows `σσ` are non-zero.
    pub fn from_matrix(n: usize, matrix: DMatrix<f64>, locked: bool) -> Self {
        assert_eq!(matrix.nrows(), n * n);
        assert_eq!(matrix.ncols(), n * n);
        Self { n, matrix, locked }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(n, DMatrix::identity(n * n, n * n), false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_locked(&self) -> bool {
        self.locked
    }

    pub fn get(&self, s1: usize, s2: usize, t1: usize, t2: usize) -> f64 {
        self.matrix[(s1 * self.n + s2, t1 * self.n + t2)]
    }

    /// The `n × n²` block of rows `σσ` of a locked gate.
    pub(crate) fn locked_rows(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n * n, |s, c| self.matrix[(s * n + s, c)])
    }
}

/// `T[σ,σ,τ₁,τ₂] = Σ_π Wg_{σπ}(d²) · G^L_{πτ₁} · G^R_{πτ₂}`.
pub fn dressed_gate(basis: &CommutantBasis, d: usize, gram_left: &GramMatrix, gram_right: &GramMatrix) -> RtnResult<DressedGate> {
    let n = basis.len();
    if gram_left.side() != n || gram_right.side() != n {
        return Err(RtnError::Shape(format!(
            "link Grams are {}x{} and {}x{}, basis has {n} elements",
            gram_left.side(),
            gram_left.side(),
            gram_right.side(),
            gram_right.side()
        )));
    }
    let wg = weingarten_matrix(basis, d * d)?.entries;
    let (gl, gr) = (&gram_left.entries, &gram_right.entries);
    let mut m = DMatrix::zeros(n * n, n * n);
    for s in 0..n {
        for t1 in 0..n {
            for t2 in 0..n {
                m[(s * n + s, t1 * n + t2)] = (0..n).map(|p| wg[(s, p)] * gl[(p, t1)] * gr[(p, t2)]).sum();
            }
        }
    }
    Ok(DressedGate::from_matrix(n, m, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::{gram_matrix, symmetric_basis};

    #[test]
    fn k2_domain_wall_weight() {
        let b = symmetric_basis(2).unwrap();
        for d in [2usize, 3, 5] {
            let g = gram_matrix(&b, d).unwrap();
            let t = dressed_gate(&b, d, &g, &g).unwrap();
            let kd = d as f64 / (d * d + 1) as f64;
            let want = DMatrix::from_row_slice(
                4,
                4,
                &[1., kd, kd, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., kd, kd, 1.],
            );
            assert!((t.matrix() - want).abs().max() < 1e-13);
        }
    }

    #[test]
    fn shape_mismatch() {
        let b = symmetric_basis(2).unwrap();
        let g3 = gram_matrix(&symmetric_basis(3).unwrap(), 2).unwrap();
        assert!(dressed_gate(&b, 2, &g3, &g3).is_err());
    }
}
