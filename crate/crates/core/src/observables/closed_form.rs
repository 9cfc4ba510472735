//! Global-Haar reference values.

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|m| (m as f64).ln()).sum()
}

fn ln_double_factorial_odd(k: usize) -> f64 {
    // (2k-1)!!
    (1..=k).map(|m| ((2 * m - 1) as f64).ln()).sum()
}

/// `ln(D + a)` from `ln D`, stable for huge `D`.
fn ln_shifted(ln_d: f64, a: f64) -> f64 {
    ln_d + (a * (-ln_d).exp()).ln_1p()
}

/// `E[I^(k)] = k! / ((D+1)(D+2)..(D+k-1))` for a Haar state of dimension D.
pub fn haar_ipr(dim: f64, k: usize) -> f64 {
    ln_haar_ipr(dim.ln(), k).exp()
}

/// `ln haar_ipr` from `ln D`.
pub fn ln_haar_ipr(ln_dim: f64, k: usize) -> f64 {
    ln_factorial(k) - (1..k).map(|m| ln_shifted(ln_dim, m as f64)).sum::<f64>()
}

/// Page value of the subsystem purity, `(D_A + D_B) / (D_A D_B + 1)`.
pub fn page_purity(dim_a: f64, dim_b: f64) -> f64 {
    ln_page_purity(dim_a.ln(), dim_b.ln()).exp()
}

pub fn ln_page_purity(ln_a: f64, ln_b: f64) -> f64 {
    let (hi, lo) = if ln_a >= ln_b { (ln_a, ln_b) } else { (ln_b, ln_a) };
    // ln(D_hi + D_lo) - ln(D_hi D_lo + 1)
    let num = hi + (lo - hi).exp().ln_1p();
    let den = ln_shifted(hi + lo, 1.0);
    num - den
}

/// `(2k-1)!! / ((D+2)(D+4)..(D+2k-2))` for a Haar-orthogonal state.
pub fn orthogonal_ipr_stat(dim: f64, k: usize) -> f64 {
    ln_orthogonal_ipr_stat(dim.ln(), k).exp()
}

pub fn ln_orthogonal_ipr_stat(ln_dim: f64, k: usize) -> f64 {
    ln_double_factorial_odd(k) - (1..k).map(|m| ln_shifted(ln_dim, 2.0 * m as f64)).sum::<f64>()
}

/// Clifford stationary IPR `(-d^{2-k}; d)_N / (-d; d)_N`.
pub fn clifford_ipr_stat(d: usize, n: usize, k: usize) -> f64 {
    ln_clifford_ipr_stat(d, n, k).exp()
}

pub fn ln_clifford_ipr_stat(d: usize, n: usize, k: usize) -> f64 {
    let ln_d = (d as f64).ln();
    // ln(1 + d^e)
    let term = |e: f64| {
        let x = e * ln_d;
        if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() }
    };
    (0..n)
        .map(|m| term(2.0 - k as f64 + m as f64) - term(1.0 + m as f64))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_forms() {
        for dim in [4.0, 64.0, 4096.0] {
            assert!((haar_ipr(dim, 2) - 2.0 / (dim + 1.0)).abs() < 1e-15);
            assert!((orthogonal_ipr_stat(dim, 2) - 3.0 / (dim + 2.0)).abs() < 1e-15);
        }
        assert!((haar_ipr(16.0, 3) - 6.0 / (17.0 * 18.0)).abs() < 1e-15);
        assert!((orthogonal_ipr_stat(16.0, 3) - 15.0 / (18.0 * 20.0)).abs() < 1e-15);
        assert!((page_purity(2.0, 2.0) - 0.8).abs() < 1e-15);
        assert!((page_purity(3.0, 9.0) - 12.0 / 28.0).abs() < 1e-15);
    }

    #[test]
    fn huge_dimensions_stay_finite() {
        let ln_d = 256.0 * 2f64.ln();
        assert!((ln_haar_ipr(ln_d, 2) - (2f64.ln() - ln_d)).abs() < 1e-12);
        assert!(ln_page_purity(ln_d, ln_d).is_finite());
    }

    #[test]
    fn clifford_special_cases() {
        for n in 1..8 {
            let dim = 3f64.powi(n as i32);
            let want = 8.0 / ((dim + 1.0) * (dim + 3.0));
            assert!((clifford_ipr_stat(3, n, 3) / want - 1.0).abs() < 1e-12);
        }
    }
}
