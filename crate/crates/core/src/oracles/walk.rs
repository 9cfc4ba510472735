//! Random-walk (entanglement-membrane) closed form of the k=2 subsystem
//! purity. A single domain wall starts at the cut and performs a simple
//! random walk on `{0..N}` absorbed at the ends; each step costs `2 K_d`.

use crate::error::{RtnError, RtnResult};
use std::f64::consts::PI;

/// First-passage probability of absorption at step `s` for a walk started
/// at `z`. Zero at `s = 0` since the walk starts strictly inside.
pub fn absorption_kernel(n: usize, z: usize, s: usize) -> f64 {
    if s == 0 {
        return 0.0;
    }
    (0..n / 2)
        .map(|nu| {
            let th = PI * (2 * nu + 1) as f64 / n as f64;
            2.0 / n as f64 * th.sin() * th.cos().powi(s as i32 - 1) * (th * z as f64).sin()
        })
        .sum()
}

/// The closed form evaluated with exactly `steps` membrane steps:
/// `(2K)^steps · Σ_{s>steps} u + Σ_{s≤steps} (2K)^s u_s`, the tail taken
/// as `1 - Σ_{s≤steps} u`.
pub fn membrane_purity(n: usize, ell: usize, d: usize, steps: usize) -> f64 {
    let kd = d as f64 / (d * d + 1) as f64;
    let w = 2.0 * kd;
    let mut head = 0.0;
    let mut absorbed = 0.0;
    for s in 0..=steps {
        let u = absorption_kernel(n, ell, s);
        head += w.powi(s as i32) * u;
        absorbed += u;
    }
    w.powi(steps as i32) * (1.0 - absorbed) + head
}

/// Brickwork half-chain (first `ell` sites) purity at depth `t`.
///
/// The wall only moves on layers whose gates straddle the cut, i.e. layers
/// with the parity of `ell`; in between the purity is constant. Depth `t`
/// therefore maps to the closed form at the last straddling layer.
pub fn rw_purity(n: usize, ell: usize, d: usize, t: usize) -> RtnResult<f64> {
    if n % 2 != 0 || ell < 1 || ell >= n {
        return Err(RtnError::Invalid(format!("rw_purity needs even N and 1 <= ell < N, got N={n}, ell={ell}")));
    }
    let steps = if t % 2 == ell % 2 { t } else { t.saturating_sub(1) };
    Ok(membrane_purity(n, ell, d, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_identity() {
        for (n, ell) in [(8, 4), (8, 1), (16, 5), (32, 16)] {
            let mut acc = 0.0;
            let mut prev = -1.0;
            for s in 0..20000 {
                acc += absorption_kernel(n, ell, s);
                assert!(acc >= prev - 1e-14);
                prev = acc;
            }
            assert!((acc - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_cases() {
        assert_eq!(rw_purity(4, 2, 2, 1).unwrap(), 1.0);
        assert!((rw_purity(4, 2, 2, 3).unwrap() - 0.64).abs() < 1e-12);
        let page = (16.0 + 16.0) / (256.0 + 1.0);
        assert!((rw_purity(8, 4, 2, 400).unwrap() / page - 1.0).abs() < 1e-10);
        assert!(rw_purity(5, 2, 2, 3).is_err());
    }

    #[test]
    fn early_time_velocity() {
        let v = -(rw_purity(200, 100, 2, 41).unwrap() / rw_purity(200, 100, 2, 21).unwrap()).ln() / 20.0;
        assert!((v - (5.0f64 / 4.0).ln()).abs() < 1e-12);
    }
}
