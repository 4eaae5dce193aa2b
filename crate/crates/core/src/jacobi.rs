//! Truncated Jacobi matrices, commutativity tests and common zeros as joint
//! generalized eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cubature::bilinear_kernel_from_values;
use crate::error::{Error, Result};
use crate::index::{dim_homogeneous, dim_total, graded_monomials, GradedBasis};
use crate::linalg::{complex_eigenvalues, max_abs, null_vector, solve, to_complex, vec_norm, CVector};
use crate::orthopoly::{Flavor, PolyBasis, RecurrenceData};
use crate::Tolerances;

/// `J_{n,i}` for every coordinate, of size `r_{n-1} x r_{n-1}`, and the
/// block-diagonal signature `S = diag(S_0, ..., S_{n-1})`.
#[derive(Debug, Clone)]
pub struct TruncatedJacobi {
    pub n: usize,
    pub flavor: Flavor,
    pub j: Vec<DMatrix<f64>>,
    pub s: Vec<f64>,
    graded: GradedBasis,
    top_blocks: TopBlocks,
}

#[derive(Debug, Clone)]
enum TopBlocks {
    /// `A_{n-1,i}` and `S_n`.
    Sign { a: Vec<DMatrix<f64>>, s_n: Vec<f64> },
    /// `A_{n-1,i}` and `C_{n,i}` (empty when `C_n` was not computed).
    Monic { a: Vec<DMatrix<f64>>, c: Vec<DMatrix<f64>> },
}

impl TruncatedJacobi {
    pub fn dim(&self) -> usize {
        self.j.len()
    }

    pub fn size(&self) -> usize {
        self.s.len()
    }

    /// Multiplication table `M_i = S J_i`.
    pub fn multiplication_table(&self, i: usize) -> DMatrix<f64> {
        let mut m = self.j[i].clone();
        for (r, &s) in self.s.iter().enumerate() {
            m.row_mut(r).scale_mut(s);
        }
        m
    }

    /// Range of rows belonging to degree block `k`.
    pub fn block(&self, k: usize) -> std::ops::Range<usize> {
        self.graded.block(k)
    }
}

/// Assemble `J_{n,i}` from recurrence data covering degrees `0..=n-1`.
pub fn build_truncated(rec: &RecurrenceData, n: usize) -> Result<TruncatedJacobi> {
    if n == 0 {
        return Err(Error::IncompleteRecurrence { have: rec.degree + 1, need: 1 });
    }
    if rec.degree + 1 < n {
        return Err(Error::IncompleteRecurrence { have: rec.degree + 1, need: n });
    }
    let d = rec.dim;
    let graded = graded_monomials(d, n - 1);
    let size = graded.len();
    let mut j = Vec::with_capacity(d);
    for i in 0..d {
        let mut m = DMatrix::zeros(size, size);
        for k in 0..n {
            let rk = graded.block(k);
            m.view_mut((rk.start, rk.start), (rk.len(), rk.len())).copy_from(&rec.b[k][i]);
            if k + 1 < n {
                let rn = graded.block(k + 1);
                m.view_mut((rk.start, rn.start), (rk.len(), rn.len())).copy_from(&rec.a[k][i]);
            }
            if k > 0 {
                let rp = graded.block(k - 1);
                m.view_mut((rk.start, rp.start), (rk.len(), rp.len())).copy_from(&rec.c[k][i]);
            }
        }
        j.push(m);
    }
    let s: Vec<f64> = rec.signature[..n].iter().flatten().copied().collect();
    let top_blocks = match rec.flavor {
        Flavor::SignOrthonormal => TopBlocks::Sign { a: rec.a[n - 1].clone(), s_n: rec.signature[n].clone() },
        Flavor::Monic => match rec.c.get(n) {
            Some(c) if !c.is_empty() => TopBlocks::Monic { a: rec.a[n - 1].clone(), c: c.clone() },
            _ => TopBlocks::Monic { a: Vec::new(), c: Vec::new() },
        },
    };
    Ok(TruncatedJacobi { n, flavor: rec.flavor, j, s, graded, top_blocks })
}

/// Residuals for one coordinate pair `(i, j)`, one-based.
#[derive(Debug, Clone, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    /// `|J_i S J_j - J_j S J_i|_max`, relative.
    pub commutator: f64,
    /// Last-row block condition, relative.
    pub top_block: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutativityReport {
    pub n: usize,
    pub pairs: Vec<PairResidual>,
    pub max_commutator: f64,
    pub max_top_block: f64,
    pub verdict: bool,
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Test whether the multiplication tables commute, both through the full
/// commutator and through the last-row block condition.
pub fn commutativity_report(tj: &TruncatedJacobi, tol: f64) -> CommutativityReport {
    let d = tj.dim();
    let sdiag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(tj.s.clone()));
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let x = &tj.j[i] * &sdiag * &tj.j[j];
            let y = &tj.j[j] * &sdiag * &tj.j[i];
            // scale by the factors: the products themselves may vanish identically
            let commutator = relative(max_abs(&(&x - &y)), max_abs(&tj.j[i]) * max_abs(&tj.j[j]));
            let top_block = match &tj.top_blocks {
                TopBlocks::Sign { a, s_n } => {
                    let sn = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s_n.clone()));
                    let p = &a[i] * &sn * a[j].transpose();
                    let q = &a[j] * &sn * a[i].transpose();
                    relative(max_abs(&(&p - &q)), max_abs(&a[i]) * max_abs(&a[j]))
                }
                TopBlocks::Monic { a, c } if !a.is_empty() => {
                    let p = &a[i] * &c[j];
                    let q = &a[j] * &c[i];
                    relative(max_abs(&(&p - &q)), (max_abs(&a[i]) * max_abs(&c[j])).max(max_abs(&a[j]) * max_abs(&c[i])))
                }
                TopBlocks::Monic { .. } => 0.0,
            };
            pairs.push(PairResidual { i: i + 1, j: j + 1, commutator, top_block });
        }
    }
    let max_commutator = pairs.iter().map(|p| p.commutator).fold(0.0, f64::max);
    let max_top_block = pairs.iter().map(|p| p.top_block).fold(0.0, f64::max);
    let verdict = max_commutator <= tol && max_top_block <= tol;
    CommutativityReport { n: tj.n, pairs, max_commutator, max_top_block, verdict }
}

/// One common zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPoint {
    pub z: Vec<Complex64>,
    /// Simple verdict (non-defective and nonvanishing kernel).
    pub simple: bool,
    /// The eigenvector was flagged as defective or clustered.
    pub defective: bool,
    /// Worst of the per-coordinate eigenpair residual and `|P_n(z)|`.
    pub residual: f64,
    /// `K_n(z, z)` once computed.
    pub kernel: Option<Complex64>,
    /// Whether `P_{n+1}(z) != 0`; `None` when that check was skipped.
    pub next_nonzero: Option<bool>,
}

impl ZeroPoint {
    pub fn is_real(&self) -> bool {
        self.z.iter().all(|c| c.im == 0.0)
    }
}

/// Common zeros of `P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub n: usize,
    pub dim: usize,
    pub points: Vec<ZeroPoint>,
    /// `r_{n-1}`.
    pub expected: usize,
}

impl ZeroSet {
    pub fn is_complete(&self) -> bool {
        self.points.len() == self.expected
    }

    pub fn any_defective(&self) -> bool {
        self.points.iter().any(|p| p.defective)
    }

    /// Fail with `MultipleZeros` if any point is not simple.
    pub fn ensure_simple(&self) -> Result<()> {
        if self.points.iter().any(|p| p.defective || !p.simple) {
            Err(Error::MultipleZeros { degree: self.n })
        } else {
            Ok(())
        }
    }
}

/// Total order used for deterministic output: real parts lexicographically,
/// then imaginary parts.
pub fn point_order(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    a.iter()
        .map(|c| c.re)
        .zip(b.iter().map(|c| c.re))
        .map(|(x, y)| x.total_cmp(&y))
        .chain(a.iter().map(|c| c.im).zip(b.iter().map(|c| c.im)).map(|(x, y)| x.total_cmp(&y)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Tolerance used to treat coordinates as tied when ordering points.
pub const ORDER_TOL: f64 = 1e-9;

/// Sort points lexicographically (real parts, then imaginary parts) while
/// treating coordinates that agree to `tol` (relative to `1 + |x|`) as tied,
/// so that rounding noise cannot reorder symmetric configurations.
pub fn sort_points<T>(items: &mut [T], key: impl Fn(&T) -> &[Complex64] + Copy, tol: f64) {
    fn part(c: &[Complex64], k: usize) -> f64 {
        let d = c.len();
        if k < d {
            c[k].re
        } else {
            c[k - d].im
        }
    }
    fn go<T>(items: &mut [T], key: impl Fn(&T) -> &[Complex64] + Copy, tol: f64, k: usize) {
        if items.len() < 2 || items.iter().all(|t| k >= 2 * key(t).len()) {
            return;
        }
        items.sort_by(|a, b| part(key(a), k).total_cmp(&part(key(b), k)));
        let mut start = 0;
        for end in 1..=items.len() {
            let split = end == items.len() || {
                let (x, y) = (part(key(&items[end - 1]), k), part(key(&items[end]), k));
                (y - x).abs() > tol * (1.0 + x.abs().max(y.abs()))
            };
            if split {
                go(&mut items[start..end], key, tol, k + 1);
                start = end;
            }
        }
    }
    go(items, key, tol, 0);
}

/// Common zeros of `P_n` from the joint eigenproblem `J_i xi = z_i S xi`.
///
/// A random real combination of the multiplication tables (seeded) is
/// diagonalized; each eigenvector is normalized by its degree-0 entry, the
/// point is read off the degree-1 block and then verified coordinate by
/// coordinate and by evaluating `P_n`. `basis` must hold degree `n`.
pub fn common_zeros(tj: &TruncatedJacobi, basis: &dyn PolyBasis, tol: &Tolerances, seed: u64) -> Result<ZeroSet> {
    let report = commutativity_report(tj, tol.comm);
    if !report.verdict {
        return Err(Error::CommutativityFailed {
            degree: tj.n,
            residual: report.max_commutator.max(report.max_top_block),
        });
    }
    let (n, d, size) = (tj.n, tj.dim(), tj.size());
    assert!(basis.degree() >= n, "basis must reach degree n");
    let tables: Vec<DMatrix<f64>> = (0..d).map(|i| tj.multiplication_table(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut comb = DMatrix::zeros(size, size);
    for (w, t) in weights.iter().zip(&tables) {
        comb += t * *w;
    }
    let comb_c = to_complex(&comb);
    let scale = max_abs(&comb).max(f64::MIN_POSITIVE);
    let eigenvalues = complex_eigenvalues(&comb_c);

    let p0 = basis.coefficients()[0][(0, 0)];
    // degree-one block: P_1(z) = c0 + G z
    let (c0, g1) = if n >= 2 {
        let c1 = &basis.coefficients()[1];
        let c0: Vec<f64> = (0..d).map(|r| c1[(0, r)]).collect();
        (c0, Some(c1.rows(1, d).transpose()))
    } else {
        (Vec::new(), None)
    };

    let mut points = Vec::with_capacity(size);
    for lambda in eigenvalues {
        let mut shifted = comb_c.clone();
        for k in 0..size {
            shifted[(k, k)] -= lambda;
        }
        let (v, _s0, s1) = null_vector(&shifted);
        let defective = s1 <= tol.eig * scale;
        let xi: CVector = if v[0].norm() > 0.0 { &v * (Complex64::new(p0, 0.0) / v[0]) } else { v.clone() };
        let z: Vec<Complex64> = match &g1 {
            Some(g) => {
                let rhs: Vec<Complex64> = (0..d).map(|r| xi[1 + r] - c0[r]).collect();
                let re = solve(g, &DMatrix::from_fn(d, 1, |r, _| rhs[r].re));
                let im = solve(g, &DMatrix::from_fn(d, 1, |r, _| rhs[r].im));
                match (re, im) {
                    (Some(re), Some(im)) => (0..d).map(|r| Complex64::new(re[(r, 0)], im[(r, 0)])).collect(),
                    _ => return Err(Error::InconsistentEigenpair { degree: n, residual: f64::INFINITY }),
                }
            }
            None => tables.iter().map(|t| Complex64::new(t[(0, 0)], 0.0)).collect(),
        };
        points.push(ZeroPoint { z, simple: !defective, defective, residual: 0.0, kernel: None, next_nonzero: None });
    }

    snap_and_pair(&mut points, tol.pair);

    let mut zs = ZeroSet { n, dim: d, points, expected: dim_total(d, n - 1) };
    for (idx, p) in zs.points.iter_mut().enumerate() {
        p.residual = point_residual(tj, basis, &p.z);
        if !p.defective && !(p.residual <= tol.eig) {
            let _ = idx;
            return Err(Error::InconsistentEigenpair { degree: n, residual: p.residual });
        }
    }
    sort_points(&mut zs.points, |p| &p.z, ORDER_TOL);
    Ok(zs)
}

/// Worst of `|J_i xi - z_i S xi| / (|J_i| |xi|)` over coordinates with
/// `xi = (P_0(z), ..., P_{n-1}(z))`, and `|P_n(z)| / |xi|`.
pub fn point_residual(tj: &TruncatedJacobi, basis: &dyn PolyBasis, z: &[Complex64]) -> f64 {
    let vals = basis.evaluate(z);
    let n = tj.n;
    let xi: CVector = CVector::from_iterator(tj.size(), vals[..n].iter().flat_map(|v| v.iter().copied()));
    let xn = vec_norm(&xi).max(f64::MIN_POSITIVE);
    let sxi = CVector::from_iterator(tj.size(), xi.iter().zip(&tj.s).map(|(v, &s)| v * s));
    let mut worst: f64 = 0.0;
    for (i, ji) in tj.j.iter().enumerate() {
        let r = to_complex(ji) * &xi - &sxi * z[i];
        worst = worst.max(vec_norm(&r) / (max_abs(ji).max(1.0) * xn));
    }
    worst.max(vec_norm(&vals[n]) / xn)
}

/// Zero out negligible imaginary parts and make conjugate partners exact
/// mirrors of each other.
fn snap_and_pair(points: &mut [ZeroPoint], tol: f64) {
    let mag = |z: &[Complex64]| z.iter().map(|c| c.norm()).fold(1.0, f64::max);
    for p in points.iter_mut() {
        let m = mag(&p.z);
        if p.z.iter().all(|c| c.im.abs() <= tol * m) {
            p.z.iter_mut().for_each(|c| c.im = 0.0);
        }
    }
    let mut used = vec![false; points.len()];
    for a in 0..points.len() {
        if used[a] || points[a].is_real() {
            continue;
        }
        let m = mag(&points[a].z);
        let partner = (0..points.len())
            .filter(|&b| b != a && !used[b] && !points[b].is_real())
            .map(|b| {
                let dist = points[a].z.iter().zip(&points[b].z).map(|(x, y)| (x - y.conj()).norm()).fold(0.0, f64::max);
                (b, dist)
            })
            .filter(|&(_, dist)| dist <= tol * m)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((b, _)) = partner {
            let avg: Vec<Complex64> =
                points[a].z.iter().zip(&points[b].z).map(|(x, y)| (x + y.conj()) * 0.5).collect();
            let (upper, lower): (Vec<Complex64>, Vec<Complex64>) = if point_order(&avg, &conj(&avg)).is_le() {
                (avg.clone(), conj(&avg))
            } else {
                (conj(&avg), avg.clone())
            };
            points[a].z = upper;
            points[b].z = lower;
            used[a] = true;
            used[b] = true;
        }
    }
}

fn conj(z: &[Complex64]) -> Vec<Complex64> {
    z.iter().map(|c| c.conj()).collect()
}

/// Per-point simplicity verdicts: a point is simple iff its eigenvector was
/// not defective and `|sum_k P_k(z)^T S_k P_k(z)| > tol_k * sum_k |P_k(z)|^2`
/// (the unconjugated diagonal kernel, `K_n(z,z)` at real points). When `basis`
/// reaches degree `n+1`, also records whether `P_{n+1}(z) != 0`.
pub fn simplicity_check(zs: &mut ZeroSet, basis: &dyn PolyBasis, signature: &[Vec<f64>], tol_k: f64) {
    let n = zs.n;
    for p in zs.points.iter_mut() {
        let vals = basis.evaluate(&p.z);
        let k = bilinear_kernel_from_values(&vals[..=n], signature);
        let mass: f64 = vals[..=n].iter().map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        p.kernel = Some(k);
        p.simple = !p.defective && k.norm() > tol_k * mass;
        if vals.len() > n + 1 {
            let next = vec_norm(&vals[n + 1]);
            p.next_nonzero = Some(next > tol_k * mass.sqrt());
        }
    }
}

/// JSON form of a zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSetJson {
    pub n: usize,
    pub points: Vec<ZeroPointJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroPointJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub simple: bool,
    pub residual: f64,
}

impl From<&ZeroSet> for ZeroSetJson {
    fn from(zs: &ZeroSet) -> Self {
        ZeroSetJson {
            n: zs.n,
            points: zs
                .points
                .iter()
                .map(|p| ZeroPointJson {
                    re: p.z.iter().map(|c| c.re).collect(),
                    im: p.z.iter().map(|c| c.im).collect(),
                    simple: p.simple,
                    residual: p.residual,
                })
                .collect(),
        }
    }
}

impl ZeroSetJson {
    /// Validate and rebuild a [`ZeroSet`] in dimension `d`.
    pub fn into_zero_set(self, d: usize) -> Result<ZeroSet> {
        if d == 0 || self.n == 0 {
            return Err(Error::Parse("dimension and degree must be positive".into()));
        }
        let expected = if self.n > 64 { usize::MAX } else { dim_total(d, self.n - 1) };
        if self.points.len() > expected {
            return Err(Error::Parse(format!("{} points exceed the maximum {expected}", self.points.len())));
        }
        let points = self
            .points
            .into_iter()
            .map(|p| {
                if p.re.len() != d || p.im.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: p.re.len().max(p.im.len()) });
                }
                if p.re.iter().chain(&p.im).any(|v| !v.is_finite()) || !(p.residual >= 0.0) {
                    return Err(Error::Parse("non-finite coordinate or residual".into()));
                }
                Ok(ZeroPoint {
                    z: p.re.iter().zip(&p.im).map(|(&r, &i)| Complex64::new(r, i)).collect(),
                    simple: p.simple,
                    defective: !p.simple,
                    residual: p.residual,
                    kernel: None,
                    next_nonzero: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ZeroSet { n: self.n, dim: d, points, expected })
    }
}

/// Number of rows of `J_{n,i}`.
pub fn truncated_size(d: usize, n: usize) -> usize {
    (0..n).map(|k| dim_homogeneous(d, k)).sum()
}
