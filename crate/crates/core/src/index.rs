//! Multi-indices and the graded monomial ordering.
//!
//! Every vector and matrix indexed by monomials uses one global convention:
//! total degree ascending, and within a degree the lexicographic order with
//! `x_1 > x_2 > ... > x_d`. For `d = 2`, degree 2 reads `(2,0), (1,1), (0,2)`.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Exponent vector `alpha` of a monomial `x^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit vector `e_i` (zero-based coordinate).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `alpha + e_i`.
    pub fn bump(&self, i: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[i] += 1;
        MultiIndex(e)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// `C(n, k)` for small arguments.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as usize
}

/// `r_n = dim Pi_n^d`.
pub fn dim_total(d: usize, n: usize) -> usize {
    binomial(n + d, d)
}

/// `r_n^0`, the number of monomials of exact degree `n`.
pub fn dim_homogeneous(d: usize, n: usize) -> usize {
    binomial(n + d - 1, d - 1)
}

/// All multi-indices of exact degree `k` in `d` variables, in lex order.
pub fn homogeneous_indices(d: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(dim_homogeneous(d, k));
    let mut cur = vec![0u32; d];
    fill_homogeneous(&mut cur, 0, k as u32, &mut out);
    out
}

fn fill_homogeneous(cur: &mut Vec<u32>, pos: usize, rest: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=rest).rev() {
        cur[pos] = a;
        fill_homogeneous(cur, pos + 1, rest - a, out);
    }
    cur[pos] = 0;
}

/// Ordered monomial basis of `Pi_n^d`.
#[derive(Debug, Clone)]
pub struct GradedBasis {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl GradedBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, pos: usize) -> &MultiIndex {
        &self.indices[pos]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    /// Offset of the first index of degree `k`.
    pub fn block_start(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            dim_total(self.dim, k - 1)
        }
    }

    /// Index range of the degree-`k` block.
    pub fn block(&self, k: usize) -> std::ops::Range<usize> {
        let s = self.block_start(k);
        s..s + dim_homogeneous(self.dim, k)
    }

    /// Position of `alpha` within its own degree block.
    pub fn position_in_block(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position(alpha).map(|p| p - self.block_start(alpha.degree()))
    }

    /// Monomial vector `x^n = [x^alpha : |alpha| <= n]` at a complex point.
    pub fn monomials(&self, z: &[Complex64]) -> Vec<Complex64> {
        let powers = power_table(z, self.degree);
        self.indices
            .iter()
            .map(|a| {
                a.exponents()
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(1.0, 0.0), |acc, (j, &e)| acc * powers[j][e as usize])
            })
            .collect()
    }

    /// Partial derivative `d/dx_j` of the monomial vector at `z`.
    pub fn monomials_dj(&self, z: &[Complex64], j: usize) -> Vec<Complex64> {
        let powers = power_table(z, self.degree);
        self.indices
            .iter()
            .map(|a| {
                let e = a.exponents();
                if e[j] == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mut v = Complex64::new(e[j] as f64, 0.0);
                for (k, &ek) in e.iter().enumerate() {
                    let p = if k == j { ek - 1 } else { ek };
                    v *= powers[k][p as usize];
                }
                v
            })
            .collect()
    }
}

pub(crate) fn power_table(z: &[Complex64], max: usize) -> Vec<Vec<Complex64>> {
    z.iter()
        .map(|&zj| {
            let mut row = Vec::with_capacity(max + 1);
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..=max {
                row.push(p);
                p *= zj;
            }
            row
        })
        .collect()
}

/// Canonical graded basis of `Pi_n^d`.
pub fn graded_monomials(d: usize, n: usize) -> GradedBasis {
    assert!(d >= 1, "dimension must be positive");
    let mut indices = Vec::with_capacity(dim_total(d, n));
    for k in 0..=n {
        indices.extend(homogeneous_indices(d, k));
    }
    let position = indices.iter().cloned().enumerate().map(|(p, a)| (a, p)).collect();
    GradedBasis { dim: d, degree: n, indices, position }
}

/// Shift matrix `L_{n,i}` of shape `r_n^0 x r_{n+1}^0` with
/// `L_{n,i} x_0^{n+1} = x_i x_0^n`. `i` is zero-based.
pub fn shift_matrix(d: usize, n: usize, i: usize) -> DMatrix<f64> {
    assert!(i < d, "coordinate out of range");
    let rows = homogeneous_indices(d, n);
    let cols = homogeneous_indices(d, n + 1);
    let lookup: HashMap<&MultiIndex, usize> = cols.iter().enumerate().map(|(p, a)| (a, p)).collect();
    let mut l = DMatrix::zeros(rows.len(), cols.len());
    for (r, a) in rows.iter().enumerate() {
        let c = lookup[&a.bump(i)];
        l[(r, c)] = 1.0;
    }
    l
}

/// `z^alpha` for a complex point.
pub fn multi_power(z: &[Complex64], alpha: &MultiIndex) -> Complex64 {
    assert_eq!(z.len(), alpha.dim(), "point and multi-index lengths differ");
    z.iter()
        .zip(alpha.exponents())
        .filter(|(_, &a)| a > 0)
        .fold(Complex64::new(1.0, 0.0), |acc, (zj, &a)| acc * zj.powu(a))
}

/// `x^alpha` for a real point.
pub fn multi_power_real(x: &[f64], alpha: &MultiIndex) -> f64 {
    assert_eq!(x.len(), alpha.dim(), "point and multi-index lengths differ");
    x.iter()
        .zip(alpha.exponents())
        .filter(|(_, &a)| a > 0)
        .fold(1.0, |acc, (xj, &a)| acc * xj.powi(a as i32))
}

/// All multi-indices with `|alpha| <= n`, in graded order.
pub fn lower_triangle(d: usize, n: usize) -> Vec<MultiIndex> {
    graded_monomials(d, n).indices
}

/// True if `set` is closed under componentwise decrease.
pub fn is_lower_set(set: &[MultiIndex]) -> bool {
    let members: std::collections::HashSet<&MultiIndex> = set.iter().collect();
    set.iter().all(|a| {
        (0..a.dim()).all(|j| {
            if a.exponents()[j] == 0 {
                return true;
            }
            let mut b = a.exponents().to_vec();
            b[j] -= 1;
            members.contains(&MultiIndex(b))
        })
    })
}
