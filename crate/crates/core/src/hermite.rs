//! Probabilists' Hermite polynomials and multi-indices.

use std::fmt;

/// `He_n(x)` through the three-term recurrence `He_{n+1} = x He_n - n He_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = He_k(x) / sqrt(k!)` for `k < out.len()`.
///
/// Uses the normalized recurrence, which stays bounded where the raw
/// polynomials overflow.
pub fn orthonormal_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
}

/// `He_n(x) / sqrt(n!)`.
pub fn orthonormal_eval(n: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    orthonormal_values(x, &mut buf);
    buf[n]
}

/// Degrees of a tensor Hermite product, one per axis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(degrees: Vec<usize>) -> Self {
        MultiIndex(degrees)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `e_axis` scaled by `degree`.
    pub fn axis(dim: usize, axis: usize, degree: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = degree;
        MultiIndex(v)
    }

    pub fn degrees(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn raised(&self, axis: usize) -> Self {
        let mut v = self.0.clone();
        v[axis] += 1;
        MultiIndex(v)
    }

    pub fn lowered(&self, axis: usize) -> Option<Self> {
        if self.0[axis] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[axis] -= 1;
        Some(MultiIndex(v))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// All multi-indices in `dim` variables with total degree `<= cap`, graded
/// by total degree and lexicographic within a degree.
pub fn indices_up_to(dim: usize, cap: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=cap {
        let mut cur = vec![0; dim];
        compositions(total, 0, &mut cur, &mut out);
    }
    out
}

fn compositions(rem: usize, axis: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if axis + 1 == cur.len() {
        cur[axis] = rem;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for k in (0..=rem).rev() {
        cur[axis] = k;
        compositions(rem - k, axis + 1, cur, out);
    }
    cur[axis] = 0;
}
