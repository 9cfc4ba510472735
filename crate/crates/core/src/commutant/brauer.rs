use super::perm::Permutation;
use crate::error::{RtnError, RtnResult};
use serde::{Deserialize, Serialize};

/// A perfect matching of `2k` points. Points `0..k` are the upper (ket)
/// points, `k..2k` the lower (bra) points; `partner[x]` is the point
/// matched with `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BrauerDiagram {
    partner: Vec<usize>,
}

impl BrauerDiagram {
    pub fn new(partner: Vec<usize>) -> RtnResult<Self> {
        let n = partner.len();
        let ok = n % 2 == 0
            && partner
                .iter()
                .enumerate()
                .all(|(x, &y)| y < n && y != x && partner[y] == x);
        if !ok {
            return Err(RtnError::Invalid(format!("{partner:?} is not a perfect matching")));
        }
        Ok(Self { partner })
    }

    /// Upper point `m` joined to lower point `σ(m)`.
    pub fn from_permutation(perm: &Permutation) -> Self {
        let k = perm.k();
        let mut partner = vec![0; 2 * k];
        for m in 0..k {
            let low = k + perm.apply(m);
            partner[m] = low;
            partner[low] = m;
        }
        Self { partner }
    }

    pub fn k(&self) -> usize {
        self.partner.len() / 2
    }

    pub fn partner(&self, x: usize) -> usize {
        self.partner[x]
    }

    /// Matched pairs `(x, y)` with `x < y`, in increasing order of `x`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(x, &y)| x < y)
            .map(|(x, &y)| (x, y))
            .collect()
    }

    pub fn as_permutation(&self) -> Option<Permutation> {
        let k = self.k();
        let images: Option<Vec<usize>> = (0..k)
            .map(|m| self.partner[m].checked_sub(k))
            .collect();
        images.map(|im| Permutation::new(im).expect("valid matching"))
    }

    /// Number of closed loops formed by stacking `self` on `other`.
    pub fn loops_with(&self, other: &Self) -> usize {
        let n = self.partner.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut comps = n;
        for diag in [self, other] {
            for (x, y) in diag.pairs() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a] = b;
                    comps -= 1;
                }
            }
        }
        comps
    }

    /// All `(2k-1)!!` matchings: the `k!` permutation diagrams in
    /// lexicographic permutation order, then the rest ordered
    /// lexicographically by their partner vector.
    pub fn all(k: usize) -> Vec<Self> {
        let mut out: Vec<Self> = Permutation::all(k).iter().map(Self::from_permutation).collect();
        let mut rest = Vec::new();
        let mut partner = vec![usize::MAX; 2 * k];
        enumerate(&mut partner, &mut rest);
        rest.retain(|d: &Self| d.as_permutation().is_none());
        rest.sort_by(|a, b| a.partner.cmp(&b.partner));
        out.extend(rest);
        out
    }
}

fn enumerate(partner: &mut Vec<usize>, out: &mut Vec<BrauerDiagram>) {
    let Some(x) = partner.iter().position(|&p| p == usize::MAX) else {
        out.push(BrauerDiagram { partner: partner.clone() });
        return;
    };
    for y in x + 1..partner.len() {
        if partner[y] == usize::MAX {
            partner[x] = y;
            partner[y] = x;
            enumerate(partner, out);
            partner[x] = usize::MAX;
            partner[y] = usize::MAX;
        }
    }
}
