//! Row MPS over replica-spin sites with a log-scale accumulator.
//!
//! Tensors are `(left, phys, right)` arrays stored row-major. The value
//! represented is `ψ · exp(log_scale)`.

use super::gate::DressedGate;
use crate::error::{check_cap, RtnResult};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub chi_max: usize,
    /// Relative singular-value cutoff against the largest one.
    pub cutoff: f64,
    /// Split the SVD into one block per replica label when the gate is
    /// output-locked.
    pub block_svd: bool,
}

impl TruncationParams {
    pub const DEFAULT_CUTOFF: f64 = 1e-13;

    /// `chi_max = 4 n²`, cutoff `1e-13`.
    pub fn default_for(n: usize) -> Self {
        Self { chi_max: 4 * n * n, cutoff: Self::DEFAULT_CUTOFF, block_svd: true }
    }

    /// Never truncates anything but exact zeros.
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, cutoff: 0.0, block_svd: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// Bonds (1,2), (3,4), .. in 1-based site labels.
    Odd,
    /// Bonds (2,3), (4,5), ..; edge sites idle.
    Even,
}

impl Parity {
    /// Parity of brickwork layer `layer` (1-based).
    pub fn of_layer(layer: usize) -> Self {
        if layer % 2 == 1 { Self::Odd } else { Self::Even }
    }

    /// 0-based left sites of the bonds this parity touches.
    pub fn bonds(self, n_sites: usize) -> Vec<usize> {
        let start = match self {
            Self::Odd => 0,
            Self::Even => 1,
        };
        (start..n_sites.saturating_sub(1)).step_by(2).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self { left, phys, right, data: vec![0.0; left * phys * right] }
    }

    #[inline]
    pub fn at(&self, a: usize, s: usize, b: usize) -> f64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, s: usize, b: usize) -> &mut f64 {
        &mut self.data[(a * self.phys + s) * self.right + b]
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `(left·phys) × right`
    fn left_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    /// `left × (phys·right)`
    fn right_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    fn from_matrix(left: usize, phys: usize, right: usize, m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(left * phys * right);
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        Self { left, phys, right, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMPS {
    pub sites: Vec<SiteTensor>,
    pub log_scale: f64,
    pub center: Option<usize>,
}

/// Result of one two-site update or one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub discarded_weight: f64,
    pub max_bond: usize,
}

impl RowMPS {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn phys(&self) -> usize {
        self.sites[0].phys
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().take(self.len().saturating_sub(1)).map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn normalize_site(&mut self, i: usize) {
        let m = self.sites[i].max_abs();
        if m > 0.0 && m.is_finite() {
            for x in &mut self.sites[i].data {
                *x /= m;
            }
            self.log_scale += m.ln();
        }
    }

    /// Normalize every tensor to unit max-norm.
    pub fn normalize_all(&mut self) {
        for i in 0..self.len() {
            self.normalize_site(i);
        }
    }

    fn shift_right(&mut self, i: usize) {
        let a = &self.sites[i];
        let (l, p) = (a.left, a.phys);
        let qr = a.left_matrix().qr();
        let (q, r) = (qr.q(), qr.r());
        let m = q.ncols();
        self.sites[i] = SiteTensor::from_matrix(l, p, m, &q);
        let b = &self.sites[i + 1];
        let (bp, br) = (b.phys, b.right);
        let nb = r * b.right_matrix();
        self.sites[i + 1] = SiteTensor::from_matrix(m, bp, br, &nb);
        self.normalize_site(i + 1);
    }

    fn shift_left(&mut self, i: usize) {
        let a = &self.sites[i];
        let (p, r) = (a.phys, a.right);
        let qr = a.right_matrix().transpose().qr();
        let (q, rr) = (qr.q(), qr.r());
        let m = q.ncols();
        self.sites[i] = SiteTensor::from_matrix(m, p, r, &q.transpose());
        let b = &self.sites[i - 1];
        let (bl, bp) = (b.left, b.phys);
        let nb = b.left_matrix() * rr.transpose();
        self.sites[i - 1] = SiteTensor::from_matrix(bl, bp, m, &nb);
        self.normalize_site(i - 1);
    }

    /// Move the orthogonality centre to `target`, canonicalizing first
    /// if there is none.
    pub fn move_center(&mut self, target: usize) {
        let mut c = match self.center {
            Some(c) => c,
            None => {
                for i in 0..self.len() - 1 {
                    self.shift_right(i);
                }
                self.len() - 1
            }
        };
        while c < target {
            self.shift_right(c);
            c += 1;
        }
        while c > target {
            self.shift_left(c);
            c -= 1;
        }
        self.center = Some(target);
    }

    /// Re-canonicalize from scratch: a full sweep right, then back to the
    /// current centre.
    pub fn sweep(&mut self) {
        let c = self.center.take().unwrap_or(0);
        self.move_center(c);
    }

    /// Apply `gate` to sites `(i, i+1)`; the centre must be at `i` or `i+1`
    /// and ends at `i+1` when `center_right`, else at `i`.
    fn apply_two_site(&mut self, i: usize, gate: &DressedGate, trunc: &TruncationParams, center_right: bool) -> RtnResult<f64> {
        let (a, b) = (&self.sites[i], &self.sites[i + 1]);
        let (l, p, r) = (a.left, a.phys, b.right);
        let n = gate.n();
        assert_eq!(p, n, "gate side does not match physical dimension");
        check_cap("two-site matrix", (l * n) as u128 * (n * r) as u128, TWO_SITE_CAP)?;
        let theta = a.left_matrix() * b.right_matrix(); // (l p) × (p r)
        // Y[(s1 s2), (a b)]
        let mut y = DMatrix::zeros(n * n, l * r);
        for aa in 0..l {
            for s1 in 0..n {
                for s2 in 0..n {
                    for bb in 0..r {
                        y[(s1 * n + s2, aa * r + bb)] = theta[(aa * p + s1, s2 * r + bb)];
                    }
                }
            }
        }
        let (new_a, new_b, discarded) = if gate.is_locked() && trunc.block_svd {
            let z = gate.locked_rows() * y; // n × (l r)
            let blocks: Vec<DMatrix<f64>> = (0..n)
                .map(|s| DMatrix::from_fn(l, r, |aa, bb| z[(s, aa * r + bb)]))
                .collect();
            split_blocks(&blocks, l, n, r, trunc, center_right)
        } else {
            let z = gate.matrix() * y; // n² × (l r)
            let m = DMatrix::from_fn(l * n, n * r, |row, col| {
                let (aa, o1) = (row / n, row % n);
                let (o2, bb) = (col / r, col % r);
                z[(o1 * n + o2, aa * r + bb)]
            });
            split_dense(&m, l, n, r, trunc, center_right)
        };
        self.sites[i] = new_a;
        self.sites[i + 1] = new_b;
        let c = if center_right { i + 1 } else { i };
        self.normalize_site(c);
        self.center = Some(c);
        Ok(discarded)
    }

    /// Apply one brickwork layer of `gate`.
    ///
    /// Fails only if a two-site matrix would exceed [`TWO_SITE_CAP`]
    /// entries; the MPS is then partially updated and should be dropped.
    pub fn apply_layer(&mut self, gate: &DressedGate, parity: Parity, trunc: &TruncationParams) -> RtnResult<UpdateStats> {
        let n_sites = self.len();
        let mut bonds = parity.bonds(n_sites);
        if bonds.is_empty() {
            return Ok(UpdateStats { discarded_weight: 0.0, max_bond: self.max_bond() });
        }
        if self.center.is_none() {
            self.move_center(0);
        }
        let c = self.center.unwrap();
        let rightward = c <= n_sites - 1 - c;
        if !rightward {
            bonds.reverse();
        }
        let mut discarded = 0.0;
        for &i in &bonds {
            self.move_center(if rightward { i } else { i + 1 });
            discarded += self.apply_two_site(i, gate, trunc, rightward)?;
        }
        Ok(UpdateStats { discarded_weight: discarded, max_bond: self.max_bond() })
    }
}

/// Largest two-site matrix (entries) formed during an update.
pub const TWO_SITE_CAP: u128 = 1 << 27;

struct Kept {
    count: usize,
    discarded: f64,
}

/// Singular values this close (relative) to the last kept one are kept too.
const DEGENERACY_TOL: f64 = 1e-12;

/// Decide how many of the descending singular values survive.
fn truncate(sv: &[f64], trunc: &TruncationParams) -> Kept {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return Kept { count: 1, discarded: 0.0 };
    }
    let mut count = sv.iter().take_while(|&&s| s > 0.0 && s >= trunc.cutoff * smax).count().max(1);
    if count > trunc.chi_max.max(1) {
        let edge = sv[trunc.chi_max.max(1) - 1];
        count = trunc.chi_max.max(1);
        while count < sv.len() && (sv[count] - edge).abs() <= DEGENERACY_TOL * edge {
            count += 1;
        }
    }
    let dropped: f64 = sv[count..].iter().map(|s| s * s).sum();
    Kept { count, discarded: if total > 0.0 { dropped / total } else { 0.0 } }
}

fn sorted_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    match fm.thin_svd() {
        Ok(svd) => {
            let (u, v) = (svd.U(), svd.V());
            let sd = svd.S().column_vector();
            let kk = sd.nrows();
            let s: Vec<f64> = (0..kk).map(|j| sd[j]).collect();
            let mut order: Vec<usize> = (0..kk).collect();
            order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
            let uu = DMatrix::from_fn(m.nrows(), kk, |i, j| u[(i, order[j])]);
            let vt = DMatrix::from_fn(kk, m.ncols(), |i, j| v[(j, order[i])]);
            (uu, order.iter().map(|&j| s[j]).collect(), vt)
        }
        Err(_) => nalgebra_svd(m),
    }
}

fn nalgebra_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let s: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let vt = DMatrix::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]);
    (u, s, vt)
}

fn split_dense(
    m: &DMatrix<f64>,
    l: usize,
    n: usize,
    r: usize,
    trunc: &TruncationParams,
    center_right: bool,
) -> (SiteTensor, SiteTensor, f64) {
    let (u, s, vt) = sorted_svd(m);
    let kept = truncate(&s, trunc);
    let chi = kept.count;
    let mut a = SiteTensor::zeros(l, n, chi);
    let mut b = SiteTensor::zeros(chi, n, r);
    for row in 0..l * n {
        for j in 0..chi {
            let w = if center_right { 1.0 } else { s[j] };
            a.data[row * chi + j] = u[(row, j)] * w;
        }
    }
    for j in 0..chi {
        let w = if center_right { s[j] } else { 1.0 };
        for col in 0..n * r {
            b.data[j * n * r + col] = vt[(j, col)] * w;
        }
    }
    (a, b, kept.discarded)
}

/// SVD of the block-diagonal two-site matrix `⊕_σ B_σ`, where block σ
/// sits at rows `(a, σ)` and columns `(σ, b)`.
fn split_blocks(
    blocks: &[DMatrix<f64>],
    l: usize,
    n: usize,
    r: usize,
    trunc: &TruncationParams,
    center_right: bool,
) -> (SiteTensor, SiteTensor, f64) {
    // (value, block, column)
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    let mut svds = Vec::with_capacity(n);
    for (sigma, blk) in blocks.iter().enumerate() {
        if blk.iter().all(|&x| x == 0.0) {
            svds.push(None);
            continue;
        }
        let (u, s, vt) = sorted_svd(blk);
        for (j, &v) in s.iter().enumerate() {
            all.push((v, sigma, j));
        }
        svds.push(Some((u, s, vt)));
    }
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let values: Vec<f64> = all.iter().map(|x| x.0).collect();
    if values.is_empty() {
        return (SiteTensor::zeros(l, n, 1), SiteTensor::zeros(1, n, r), 0.0);
    }
    let kept = truncate(&values, trunc);
    let chi = kept.count;
    let mut a = SiteTensor::zeros(l, n, chi);
    let mut b = SiteTensor::zeros(chi, n, r);
    for (k, &(val, sigma, j)) in all.iter().take(chi).enumerate() {
        let (u, _, vt) = svds[sigma].as_ref().unwrap();
        let (wa, wb) = if center_right { (1.0, val) } else { (val, 1.0) };
        for aa in 0..l {
            *a.at_mut(aa, sigma, k) = u[(aa, j)] * wa;
        }
        for bb in 0..r {
            *b.at_mut(k, sigma, bb) = vt[(j, bb)] * wb;
        }
    }
    (a, b, kept.discarded)
}

/// `Σ_σ Π_i b_i(σ_i) ψ(σ)`, returned as `(mantissa, log)` with value
/// `mantissa · exp(log)`.
pub fn contract_top(mps: &RowMPS, per_site: &[Vec<f64>]) -> (f64, f64) {
    assert_eq!(per_site.len(), mps.len(), "one boundary vector per site");
    let mut env = vec![1.0];
    let mut log = mps.log_scale;
    for (site, b) in mps.sites.iter().zip(per_site) {
        assert_eq!(b.len(), site.phys, "boundary vector length");
        let mut next = vec![0.0; site.right];
        for (aa, &e) in env.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            for (s, &bs) in b.iter().enumerate() {
                let w = e * bs;
                if w == 0.0 {
                    continue;
                }
                let off = (aa * site.phys + s) * site.right;
                for (slot, &x) in next.iter_mut().zip(&site.data[off..off + site.right]) {
                    *slot += w * x;
                }
            }
        }
        let m = next.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if m > 0.0 {
            for x in &mut next {
                *x /= m;
            }
            log += m.ln();
        }
        env = next;
    }
    (env[0], log)
}

/// Product of independent pair states: pair `j` on sites `(2j, 2j+1)` is
/// `Σ_μ left_j[·, μ] ⊗ right_j[μ, ·]`.
pub fn pair_product_mps(pairs: &[(DMatrix<f64>, DMatrix<f64>)], log_scale: f64) -> RowMPS {
    let mut sites = Vec::with_capacity(2 * pairs.len());
    for (left, right) in pairs {
        let (p, m) = (left.nrows(), left.ncols());
        assert_eq!(right.nrows(), m);
        sites.push(SiteTensor::from_matrix(1, p, m, left));
        sites.push(SiteTensor::from_matrix(m, right.ncols(), 1, right));
    }
    RowMPS { sites, log_scale, center: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_mps(n_sites: usize, p: usize, chi: usize, seed: u64) -> RowMPS {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut sites = Vec::new();
        for i in 0..n_sites {
            let l = if i == 0 { 1 } else { chi };
            let r = if i == n_sites - 1 { 1 } else { chi };
            let mut t = SiteTensor::zeros(l, p, r);
            for v in &mut t.data {
                *v = next();
            }
            sites.push(t);
        }
        RowMPS { sites, log_scale: 0.0, center: None }
    }

    fn ones(n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..p).map(|s| 1.0 + 0.1 * (i + s) as f64).collect()).collect()
    }

    fn value(m: &RowMPS, b: &[Vec<f64>]) -> f64 {
        let (v, l) = contract_top(m, b);
        v * l.exp()
    }

    #[test]
    fn gauge_moves_preserve_value() {
        let mut m = random_mps(6, 3, 4, 7);
        let b = ones(6, 3);
        let v0 = value(&m, &b);
        m.move_center(0);
        m.move_center(5);
        m.move_center(2);
        m.sweep();
        assert!((value(&m, &b) / v0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_gate_preserves_value() {
        let mut m = random_mps(6, 2, 3, 3);
        let b = ones(6, 2);
        let v0 = value(&m, &b);
        let trunc = TruncationParams::exact();
        m.apply_layer(&DressedGate::identity(2), Parity::Odd, &trunc).unwrap();
        m.apply_layer(&DressedGate::identity(2), Parity::Even, &trunc).unwrap();
        assert!((value(&m, &b) / v0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_rules() {
        let t = TruncationParams { chi_max: 2, cutoff: 0.0, block_svd: true };
        let k = truncate(&[1.0, 0.5, 0.5, 0.1], &t);
        assert_eq!(k.count, 3);
        assert!((k.discarded - 0.01 / 1.51).abs() < 1e-15);
        let t = TruncationParams { chi_max: 10, cutoff: 0.2, block_svd: true };
        assert_eq!(truncate(&[1.0, 0.5, 0.1], &t).count, 2);
        assert_eq!(truncate(&[0.0, 0.0], &t).count, 1);
    }

    #[test]
    fn parity_bonds() {
        assert_eq!(Parity::Odd.bonds(6), vec![0, 2, 4]);
        assert_eq!(Parity::Even.bonds(6), vec![1, 3]);
        assert_eq!(Parity::of_layer(2), Parity::Even);
    }
}
