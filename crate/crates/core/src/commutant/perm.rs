use crate::error::{RtnError, RtnResult};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A permutation of `{0, .., k-1}` in one-line notation: `m -> images[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> RtnResult<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &x in &images {
            if x >= k || seen[x] {
                return Err(RtnError::Invalid(format!("{images:?} is not a permutation")));
            }
            seen[x] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self { images: (0..k).collect() }
    }

    /// The cycle `m -> m+1 mod k`.
    pub fn cyclic(k: usize) -> Self {
        Self { images: (0..k).map(|m| (m + 1) % k).collect() }
    }

    /// Transposition of `a` and `b`.
    pub fn transposition(k: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (0..k).collect();
        images.swap(a, b);
        Self { images }
    }

    pub fn k(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, m: usize) -> usize {
        self.images[m]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.k()];
        for (m, &x) in self.images.iter().enumerate() {
            inv[x] = m;
        }
        Self { images: inv }
    }

    /// `self ∘ other`, i.e. `m -> self(other(m))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { images: other.images.iter().map(|&x| self.images[x]).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(m, &x)| m == x)
    }

    pub fn cycle_count(&self) -> usize {
        let k = self.k();
        let mut seen = vec![false; k];
        let mut cycles = 0;
        for start in 0..k {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut m = start;
            while !seen[m] {
                seen[m] = true;
                m = self.images[m];
            }
        }
        cycles
    }

    /// All permutations of `k` points in lexicographic order of their
    /// one-line notation; the identity comes first.
    pub fn all(k: usize) -> Vec<Self> {
        let mut cur: Vec<usize> = (0..k).collect();
        let mut out = vec![Self { images: cur.clone() }];
        // standard next-permutation step
        loop {
            let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
            out.push(Self { images: cur.clone() });
        }
        out
    }
}

/// Number of disjoint cycles of `perm`, fixed points included.
pub fn cycle_count(perm: &Permutation) -> usize {
    perm.cycle_count()
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}
