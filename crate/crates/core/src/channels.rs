//! Single-site channels as `d² × d²` superoperators and the noisy Gram
//! matrices they induce. `vec(ρ)` has index `ket·d + bra`, which matches
//! one `(ket_m, bra_m)` label pair of a replica vector.

use crate::commutant::{element_vector, CommutantBasis, GramMatrix};
use crate::error::{RtnError, RtnResult};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSuperop {
    pub matrix: DMatrix<Complex64>,
    pub label: String,
    pub d: usize,
    /// Noise rate, when the channel has one.
    pub p: Option<f64>,
}

impl ChannelSuperop {
    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.d * self.d, self.d * self.d)
    }

    /// Apply to `vec(ρ)`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let out = &self.matrix * nalgebra::DVector::from_column_slice(v);
        out.iter().copied().collect()
    }
}

fn vec_identity(d: usize) -> Vec<Complex64> {
    (0..d * d).map(|i| if i / d == i % d { Complex64::ONE } else { Complex64::ZERO }).collect()
}

pub fn identity_choi(d: usize) -> ChannelSuperop {
    ChannelSuperop { matrix: DMatrix::identity(d * d, d * d), label: "id".into(), d, p: None }
}

/// `ρ ↦ (1-p)ρ + p tr(ρ) 𝕀/d`.
pub fn depolarising_choi(d: usize, p: f64) -> RtnResult<ChannelSuperop> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RtnError::Invalid(format!("depolarising rate {p} outside [0, 1]")));
    }
    let e = vec_identity(d);
    let n = d * d;
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 - p } else { 0.0 };
        Complex64::from(id) + e[i] * e[j] * (p / d as f64)
    });
    Ok(ChannelSuperop { matrix, label: format!("dep:{p}"), d, p: Some(p) })
}

/// Parse `id` or `dep:<p>`.
pub fn parse_channel(spec: &str, d: usize) -> RtnResult<ChannelSuperop> {
    let spec = spec.trim();
    if spec == "id" {
        return Ok(identity_choi(d));
    }
    if let Some(rest) = spec.strip_prefix("dep:") {
        let p: f64 = rest
            .parse()
            .map_err(|_| RtnError::Invalid(format!("bad depolarising rate in `{spec}`")))?;
        return depolarising_choi(d, p);
    }
    Err(RtnError::Invalid(format!("unknown channel `{spec}` (expected `id` or `dep:<p>`)")))
}

/// One channel per replica.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    pub channels: Vec<ChannelSuperop>,
}

impl ChannelStack {
    pub fn new(channels: Vec<ChannelSuperop>) -> RtnResult<Self> {
        if let Some(c) = channels.first() {
            if channels.iter().any(|x| x.d != c.d) {
                return Err(RtnError::Shape("channels in a stack must share d".into()));
            }
        }
        Ok(Self { channels })
    }

    pub fn identity(d: usize, k: usize) -> Self {
        Self { channels: vec![identity_choi(d); k] }
    }

    /// The same channel on every replica.
    pub fn uniform(ch: ChannelSuperop, k: usize) -> Self {
        Self { channels: vec![ch; k] }
    }

    pub fn k(&self) -> usize {
        self.channels.len()
    }

    pub fn is_identity(&self) -> bool {
        self.channels.iter().all(ChannelSuperop::is_identity)
    }

    /// Apply replica by replica to an interleaved vector of length `d^{2k}`.
    pub fn apply(&self, v: &[f64]) -> RtnResult<Vec<Complex64>> {
        let k = self.k();
        let Some(d) = self.channels.first().map(|c| c.d) else {
            return Ok(v.iter().map(|&x| x.into()).collect());
        };
        let n = d * d;
        if v.len() != n.pow(k as u32) {
            return Err(RtnError::Shape(format!("vector length {} vs d^(2k) = {}", v.len(), n.pow(k as u32))));
        }
        let mut cur: Vec<Complex64> = v.iter().map(|&x| x.into()).collect();
        let mut buf = vec![Complex64::ZERO; n];
        for (m, ch) in self.channels.iter().enumerate() {
            if ch.is_identity() {
                continue;
            }
            let stride = n.pow((k - 1 - m) as u32);
            let block = stride * n;
            for outer in (0..cur.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (a, slot) in buf.iter_mut().enumerate() {
                        *slot = (0..n).map(|b| ch.matrix[(a, b)] * cur[base + b * stride]).sum();
                    }
                    for (a, &x) in buf.iter().enumerate() {
                        cur[base + a * stride] = x;
                    }
                }
            }
        }
        Ok(cur)
    }
}

/// `<<ω| N_1⊗..⊗N_k |σ>>` for every basis element σ.
pub fn noisy_overlaps(omega: &[f64], basis: &CommutantBasis, d: usize, stack: &ChannelStack) -> RtnResult<Vec<f64>> {
    check_stack(basis, d, stack)?;
    (0..basis.len())
        .map(|s| {
            let v = stack.apply(&element_vector(basis, s, d)?)?;
            Ok(omega.iter().zip(&v).map(|(a, b)| a * b.re).sum())
        })
        .collect()
}

fn check_stack(basis: &CommutantBasis, d: usize, stack: &ChannelStack) -> RtnResult<()> {
    if stack.k() != basis.k {
        return Err(RtnError::Shape(format!("stack has {} channels for k = {}", stack.k(), basis.k)));
    }
    if stack.channels.iter().any(|c| c.d != d) {
        return Err(RtnError::Shape(format!("channel dimension differs from d = {d}")));
    }
    Ok(())
}

/// Noisy Gram when a stack is given, otherwise a copy of `clean`.
pub fn noisy_gram_or_clean(
    basis: &CommutantBasis,
    d: usize,
    stack: Option<&ChannelStack>,
    clean: &GramMatrix,
) -> RtnResult<GramMatrix> {
    match stack {
        Some(s) => noisy_gram(basis, d, s),
        None => Ok(clean.clone()),
    }
}

/// `G̃_{πσ} = <<π| N_1⊗..⊗N_k |σ>>`.
pub fn noisy_gram(basis: &CommutantBasis, d: usize, stack: &ChannelStack) -> RtnResult<GramMatrix> {
    check_stack(basis, d, stack)?;
    let n = basis.len();
    let vecs = (0..n).map(|i| element_vector(basis, i, d)).collect::<RtnResult<Vec<_>>>()?;
    let noisy = vecs.iter().map(|v| stack.apply(v)).collect::<RtnResult<Vec<_>>>()?;
    let g = DMatrix::from_fn(n, n, |p, s| vecs[p].iter().zip(&noisy[s]).map(|(a, b)| a * b.re).sum());
    Ok(GramMatrix { entries: g, q: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::{gram_matrix, symmetric_basis};

    #[test]
    fn depolarising_action() {
        let ch = depolarising_choi(2, 0.5).unwrap();
        let rho0: Vec<Complex64> = [1.0, 0.0, 0.0, 0.0].iter().map(|&x| x.into()).collect();
        let out = ch.apply(&rho0);
        let want = [0.75, 0.0, 0.0, 0.25];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
        let full = depolarising_choi(3, 1.0).unwrap();
        let e = vec_identity(3);
        assert_eq!(full.apply(&e), e);
        assert!(depolarising_choi(2, 0.0).unwrap().is_identity());
        assert!(depolarising_choi(2, 1.5).is_err());
    }

    #[test]
    fn trace_preserving() {
        for ch in [identity_choi(3), depolarising_choi(3, 0.3).unwrap(), depolarising_choi(2, 1.0).unwrap()] {
            let n = ch.d * ch.d;
            let e = nalgebra::DVector::from_vec(vec_identity(ch.d));
            let left = ch.matrix.transpose() * &e;
            for i in 0..n {
                assert!((left[i] - e[i]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn noisy_gram_golden() {
        let b = symmetric_basis(2).unwrap();
        let g = noisy_gram(&b, 2, &ChannelStack::identity(2, 2)).unwrap();
        assert_eq!(g.entries, gram_matrix(&b, 2).unwrap().entries);
        let full = ChannelStack::uniform(depolarising_choi(2, 1.0).unwrap(), 2);
        let g = noisy_gram(&b, 2, &full).unwrap().entries;
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[4., 2., 2., 1.]));
        for p in [0.0, 0.3, 1.0] {
            let st = ChannelStack::new(vec![identity_choi(2), depolarising_choi(2, p).unwrap()]).unwrap();
            let g = noisy_gram(&b, 2, &st).unwrap().entries;
            assert!((g[(0, 0)] - 4.0).abs() < 1e-12);
            assert!((g[(1, 1)] - ((1.0 - p) * 4.0 + p)).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_specs() {
        assert!(parse_channel("id", 2).unwrap().is_identity());
        assert_eq!(parse_channel("dep:0.25", 2).unwrap().p, Some(0.25));
        assert!(parse_channel("dep:x", 2).is_err());
        assert!(parse_channel("amp:0.1", 2).is_err());
    }
}
