//! The two extra qutrit Clifford elements at three replicas.
//!
//! `Q = (1/d) Σ_{a,b} (X^a Z^b)^{⊗3}` with clock `Z|j> = ω^j |j>` and
//! shift `X|j> = |j+1>`. The extra elements apply `(I ⊗ P)^{⊗3}` to the
//! bra side of `|σ>>`, i.e. the operator `O_σ · Qᵀ`, for σ the identity
//! and the transposition of the first two replicas.

use super::perm::Permutation;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn shift(d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { Complex64::ONE } else { Complex64::ZERO })
}

fn clock(d: usize) -> DMatrix<Complex64> {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::from_polar(1.0, w * i as f64) } else { Complex64::ZERO })
}

fn kron_power(m: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, Complex64::ONE);
    for _ in 0..k {
        out = out.kronecker(m);
    }
    out
}

/// `(1/d) Σ_P P^{⊗k}` over the d² clock-shift Paulis, as a `d^k × d^k` matrix.
pub fn pauli_twirl_operator(d: usize, k: usize) -> DMatrix<Complex64> {
    let (x, z) = (shift(d), clock(d));
    let side = d.pow(k as u32);
    let mut acc = DMatrix::zeros(side, side);
    let mut xa = DMatrix::identity(d, d);
    for _ in 0..d {
        let mut p = xa.clone();
        for _ in 0..d {
            acc += kron_power(&p, k);
            p = &p * &z;
        }
        xa = &xa * &x;
    }
    acc / Complex64::from(d as f64)
}

/// Permutation operator `O_σ` with `<b|O_σ|b̄> = Π_m δ(b_m, b̄_σ(m))`.
pub fn permutation_operator(perm: &Permutation, d: usize) -> DMatrix<f64> {
    let k = perm.k();
    let side = d.pow(k as u32);
    let mut out = DMatrix::zeros(side, side);
    for col in 0..side {
        let digits = super::digits(col, d, k);
        let mut row = 0;
        for m in 0..k {
            row = row * d + digits[perm.apply(m)];
        }
        out[(row, col)] = 1.0;
    }
    out
}

/// `O_σ · Qᵀ` as a real matrix. Panics if the imaginary part is not
/// negligible, which would signal a wrong Pauli convention.
pub fn q3_operator(perm: &Permutation, d: usize) -> DMatrix<f64> {
    let q = pauli_twirl_operator(d, perm.k());
    let im = q.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(im < 1e-9, "twirl operator is not real");
    let qr = q.map(|z| z.re.round());
    permutation_operator(perm, d) * qr.transpose()
}
