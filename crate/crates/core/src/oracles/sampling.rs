use crate::commutant::Ensemble;
use crate::error::{RtnError, RtnResult};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded family of independent streams, one per sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Generator for sample `index`; identical for identical `(seed, index)`.
    pub fn sample(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Haar-random `q × q` unitary (or real orthogonal) matrix via QR of a
/// Ginibre matrix with the diagonal phases of R divided out.
pub fn sample_gate<R: Rng + ?Sized>(ensemble: Ensemble, q: usize, rng: &mut R) -> RtnResult<DMatrix<Complex64>> {
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let g = match ensemble {
        Ensemble::Unitary => DMatrix::from_fn(q, q, |_, _| Complex64::new(normal(), normal()) * std::f64::consts::FRAC_1_SQRT_2),
        Ensemble::Orthogonal => DMatrix::from_fn(q, q, |_, _| Complex64::new(normal(), 0.0)),
        Ensemble::Clifford => return Err(RtnError::Unsupported("Clifford gate sampling".into())),
    };
    let qr = g.qr();
    let (mut qm, r) = (qr.q(), qr.r());
    for j in 0..q {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::ONE };
        let mut col = qm.column_mut(j);
        col *= phase;
    }
    Ok(qm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitarity() {
        let mut rng = RngStream::new(1).sample(0);
        for ens in [Ensemble::Unitary, Ensemble::Orthogonal] {
            let u = sample_gate(ens, 4, &mut rng).unwrap();
            let e = &u * u.adjoint() - DMatrix::identity(4, 4);
            assert!(e.iter().all(|z| z.norm() < 1e-12));
            if ens == Ensemble::Orthogonal {
                assert!(u.iter().all(|z| z.im == 0.0));
            }
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let s = RngStream::new(42);
        let a: f64 = s.sample(3).random();
        let b: f64 = s.sample(3).random();
        let c: f64 = s.sample(4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
