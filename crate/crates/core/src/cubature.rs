//! Reproducing kernels, Christoffel-Darboux identities, interpolation and
//! Gaussian cubature rules.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{binomial, lower_triangle, multi_power, MultiIndex};
use crate::jacobi::{sort_points, ZeroSet, ORDER_TOL};
use crate::linalg::{complex_eigenvalues, dot_t, to_complex, CVector};
use crate::moments::MomentProvider;
use crate::orthopoly::{build_monic, recurrence_monic, sign_orthonormalize, PolyBasis, RecurrenceData, SignOrthoBasis};
use crate::quad1d::{gauss_chebyshev, gauss_legendre, Rule1d};
use crate::weight::{BaseWeight, SymSign, WeightDescriptor};

/// `sum_k P_k(x)^T S_k conj(P_k(y))` from stacked values.
pub fn kernel_from_values(px: &[CVector], py: &[CVector], signature: &[Vec<f64>]) -> Complex64 {
    px.iter()
        .zip(py)
        .zip(signature)
        .map(|((a, b), s)| a.iter().zip(b.iter()).zip(s).map(|((u, v), &s)| u * v.conj() * s).sum::<Complex64>())
        .sum()
}

/// `sum_k P_k(z)^T S_k P_k(z)`: the kernel on the diagonal without
/// conjugation, which is what the Gauss weight at a (possibly complex) zero
/// inverts. Equals `K_n(z, z)` for real `z`.
pub fn bilinear_kernel_from_values(pz: &[CVector], signature: &[Vec<f64>]) -> Complex64 {
    pz.iter()
        .zip(signature)
        .map(|(a, s)| a.iter().zip(s).map(|(u, &s)| u * u * s).sum::<Complex64>())
        .sum()
}

/// Reproducing kernel `K_n(x, y)`; `basis` must reach degree `n`.
pub fn kernel(basis: &SignOrthoBasis, n: usize, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    assert!(basis.degree() >= n, "basis must reach degree n");
    let px = basis.evaluate(x);
    let py = basis.evaluate(y);
    kernel_from_values(&px[..=n], &py[..=n], &basis.signature)
}

fn conj_vec(v: &CVector) -> CVector {
    v.map(|c| c.conj())
}

/// Relative residual of the Christoffel-Darboux formula in coordinate `j`
/// (zero-based):
/// `K_n(x,y) (x_j - conj y_j) = [A_{n,j} P_{n+1}(x)]^T conj P_n(y) - P_n(x)^T A_{n,j} conj P_{n+1}(y)`.
pub fn christoffel_darboux_residual(
    basis: &SignOrthoBasis,
    rec: &RecurrenceData,
    n: usize,
    x: &[Complex64],
    y: &[Complex64],
    j: usize,
) -> Result<f64> {
    let gap = x[j] - y[j].conj();
    if gap == Complex64::new(0.0, 0.0) {
        return Err(Error::ConfluentRequested);
    }
    if basis.degree() < n + 1 || rec.degree < n {
        return Err(Error::IncompleteRecurrence { have: rec.degree.min(basis.degree().saturating_sub(1)) + 1, need: n + 1 });
    }
    let px = basis.evaluate(x);
    let py = basis.evaluate(y);
    let lhs = kernel_from_values(&px[..=n], &py[..=n], &basis.signature) * gap;
    let a = to_complex(&rec.a[n][j]);
    let t1 = dot_t(&(&a * &px[n + 1]), &conj_vec(&py[n]));
    let t2 = dot_t(&px[n], &(&a * conj_vec(&py[n + 1])));
    let rhs = t1 - t2;
    let scale = lhs.norm().max(t1.norm()).max(t2.norm()).max(1.0);
    Ok((lhs - rhs).norm() / scale)
}

/// Confluent form at a real point `x`:
/// `K_n(x,x) = P_n(x)^T A_{n,j} d_j P_{n+1}(x) - [A_{n,j} P_{n+1}(x)]^T d_j P_n(x)`.
pub fn confluent_kernel(basis: &SignOrthoBasis, rec: &RecurrenceData, n: usize, x: &[f64], j: usize) -> f64 {
    let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let p = basis.evaluate(&z);
    let dp = basis.evaluate_dj(&z, j);
    let a = to_complex(&rec.a[n][j]);
    (dot_t(&p[n], &(&a * &dp[n + 1])) - dot_t(&(&a * &p[n + 1]), &dp[n])).re
}

/// Where a cubature rule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ZeroSet,
    ClosedForm,
}

/// Cubature rule `sum_zeta w_zeta f(zeta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureRule {
    pub exact_degree: usize,
    pub nodes: Vec<Vec<Complex64>>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

/// Worst monomial mismatch of a rule against a provider.
#[derive(Debug, Clone, Serialize)]
pub struct ExactnessReport {
    pub max_abs_dev: f64,
    pub max_rel_dev: f64,
    pub worst_alpha: Option<MultiIndex>,
    /// Largest imaginary part of a rule moment.
    pub max_imag: f64,
}

impl CubatureRule {
    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |z| z.len())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[Complex64]) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(z, &w)| f(z) * w).sum()
    }

    pub fn moment(&self, alpha: &MultiIndex) -> Complex64 {
        self.integrate(|z| multi_power(z, alpha))
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Compare every `|alpha| <= degree` against the provider.
    pub fn exactness(&self, provider: &MomentProvider, degree: usize) -> Result<ExactnessReport> {
        let mut rep = ExactnessReport { max_abs_dev: 0.0, max_rel_dev: 0.0, worst_alpha: None, max_imag: 0.0 };
        let mut scale: f64 = 0.0;
        let alphas = lower_triangle(self.dim(), degree);
        let mut devs = Vec::with_capacity(alphas.len());
        for alpha in alphas {
            let exact = provider.moment(&alpha)?;
            let got = self.moment(&alpha);
            scale = scale.max(exact.abs());
            rep.max_imag = rep.max_imag.max(got.im.abs());
            devs.push(((got - exact).norm(), alpha));
        }
        for (dev, alpha) in devs {
            if dev > rep.max_abs_dev || rep.worst_alpha.is_none() {
                rep.max_abs_dev = dev;
                rep.worst_alpha = Some(alpha);
            }
        }
        rep.max_rel_dev = rep.max_abs_dev / scale.max(f64::MIN_POSITIVE);
        Ok(rep)
    }

    /// Sort nodes by the canonical point order.
    pub fn sorted(mut self) -> Self {
        let mut pairs: Vec<(Vec<Complex64>, f64)> = self.nodes.into_iter().zip(self.weights).collect();
        sort_points(&mut pairs, |p| &p.0, ORDER_TOL);
        (self.nodes, self.weights) = pairs.into_iter().unzip();
        self
    }

    /// Plain-text table: one node per line, coordinates then weight.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = String::new();
        let _ = write!(s, "# exact_degree {}\n#", self.exact_degree);
        for j in 1..=d {
            let _ = write!(s, " re{j}");
        }
        for j in 1..=d {
            let _ = write!(s, " im{j}");
        }
        s.push_str(" weight\n");
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            let cells: Vec<String> = z
                .iter()
                .map(|c| c.re)
                .chain(z.iter().map(|c| c.im))
                .chain(std::iter::once(*w))
                .map(|v| format!("{v:.16e}"))
                .collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

/// JSON form: each node is `[[re_1..re_d], [im_1..im_d]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubatureJson {
    pub exact_degree: usize,
    pub nodes: Vec<[Vec<f64>; 2]>,
    pub weights: Vec<f64>,
}

impl From<&CubatureRule> for CubatureJson {
    fn from(r: &CubatureRule) -> Self {
        CubatureJson {
            exact_degree: r.exact_degree,
            nodes: r
                .nodes
                .iter()
                .map(|z| [z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect()])
                .collect(),
            weights: r.weights.clone(),
        }
    }
}

impl CubatureJson {
    pub fn into_rule(self) -> Result<CubatureRule> {
        if self.nodes.len() != self.weights.len() {
            return Err(Error::Parse(format!("{} nodes but {} weights", self.nodes.len(), self.weights.len())));
        }
        let d = self.nodes.first().map_or(0, |n| n[0].len());
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for [re, im] in self.nodes {
            if re.len() != d || im.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: re.len().max(im.len()) });
            }
            if re.iter().chain(&im).any(|v| !v.is_finite()) {
                return Err(Error::Parse("non-finite node coordinate".into()));
            }
            nodes.push(re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect());
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Parse("non-finite weight".into()));
        }
        Ok(CubatureRule { exact_degree: self.exact_degree, nodes, weights: self.weights, provenance: Provenance::ZeroSet })
    }
}

/// Gaussian cubature `w_zeta = 1 / K_n(zeta, zeta)` on a complete, simple
/// and real zero set of `P_n`.
pub fn gauss_cubature(zs: &ZeroSet, basis: &SignOrthoBasis, tol_k: f64) -> Result<CubatureRule> {
    if !zs.is_complete() {
        return Err(Error::IncompleteZeroSet { found: zs.points.len(), expected: zs.expected });
    }
    if zs.any_defective() {
        return Err(Error::MultipleZeros { degree: zs.n });
    }
    if !zs.points.iter().all(|p| p.is_real()) {
        return Err(Error::ComplexNodes { degree: zs.n });
    }
    let n = zs.n;
    let mut weights = Vec::with_capacity(zs.points.len());
    for (index, p) in zs.points.iter().enumerate() {
        let vals = basis.evaluate(&p.z);
        let k = kernel_from_values(&vals[..=n], &vals[..=n], &basis.signature).re;
        let mass: f64 = vals[..=n].iter().map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        if !(k.abs() > tol_k * mass) {
            return Err(Error::ZeroKernelValue { index });
        }
        weights.push(1.0 / k);
    }
    Ok(CubatureRule {
        exact_degree: 2 * n - 1,
        nodes: zs.points.iter().map(|p| p.z.clone()).collect(),
        weights,
        provenance: Provenance::ZeroSet,
    })
}

/// Interpolant `L_n f(x) = sum_zeta f(zeta) K_n(x, zeta) / K_n(zeta, zeta)`.
pub fn lagrange_interpolate(
    zs: &ZeroSet,
    basis: &SignOrthoBasis,
    samples: &[Complex64],
    x: &[Complex64],
) -> Result<Complex64> {
    if !zs.is_complete() {
        return Err(Error::IncompleteZeroSet { found: zs.points.len(), expected: zs.expected });
    }
    assert_eq!(samples.len(), zs.points.len(), "one sample per node");
    let n = zs.n;
    let px = basis.evaluate(x);
    let mut acc = Complex64::new(0.0, 0.0);
    for (index, (p, f)) in zs.points.iter().zip(samples).enumerate() {
        let pz = basis.evaluate(&p.z);
        let kzz = kernel_from_values(&pz[..=n], &pz[..=n], &basis.signature);
        if kzz.norm() == 0.0 {
            return Err(Error::ZeroKernelValue { index });
        }
        acc += f * kernel_from_values(&px[..=n], &pz[..=n], &basis.signature) / kzz;
    }
    Ok(acc)
}

/// `n`-point Gauss rule of a univariate base weight. Classical weights use
/// their closed-form rules; the signed family goes through its monic
/// recurrence (nonsymmetric tridiagonal eigenproblem) and Christoffel weights
/// `1 / K_{n-1}(t, t)`.
pub fn gauss_rule_1d(base: BaseWeight, n: usize) -> Result<Rule1d> {
    match base {
        BaseWeight::Legendre => Ok(gauss_legendre(n).scale(0.5)),
        BaseWeight::Chebyshev => Ok(gauss_chebyshev(n)),
        BaseWeight::SignedGegenbauer { .. } => {
            let provider = MomentProvider::from_descriptor(&WeightDescriptor::Base(base), 1, 2 * n + 2)?;
            let monic = build_monic(&provider, n, 1e-12)
                .map_err(|e| Error::Insufficient1DRule(format!("{n}-point rule: {e}")))?;
            let basis = sign_orthonormalize(&monic, 1e-12)
                .map_err(|e| Error::Insufficient1DRule(format!("{n}-point rule: {e}")))?;
            let mut jm = DMatrix::zeros(n, n);
            if n > 0 {
                let rec = recurrence_monic(&monic, 1e-12).map_err(|e| Error::Insufficient1DRule(e.to_string()))?;
                for k in 0..n {
                    jm[(k, k)] = rec.b[k][0][(0, 0)];
                    if k + 1 < n {
                        jm[(k, k + 1)] = 1.0;
                        jm[(k + 1, k)] = rec.c[k + 1][0][(0, 0)];
                    }
                }
            }
            let eig = complex_eigenvalues(&to_complex(&jm));
            let scale = eig.iter().map(|c| c.norm()).fold(1.0, f64::max);
            if eig.iter().any(|c| c.im.abs() > 1e-10 * scale) {
                return Err(Error::Insufficient1DRule(format!("{n}-point rule has complex nodes")));
            }
            let mut nodes: Vec<f64> = eig.iter().map(|c| c.re).collect();
            nodes.sort_by(f64::total_cmp);
            // polish on the monic polynomial
            for t in nodes.iter_mut() {
                for _ in 0..3 {
                    let (p, dp) = monic_value(&monic, n, *t);
                    if dp == 0.0 {
                        break;
                    }
                    *t -= p / dp;
                }
            }
            if nodes.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-10 * scale) {
                return Err(Error::Insufficient1DRule(format!("{n}-point rule has repeated nodes")));
            }
            let mut weights = Vec::with_capacity(n);
            for &t in &nodes {
                let vals = basis.evaluate(&[Complex64::new(t, 0.0)]);
                let k = kernel_from_values(&vals[..n], &vals[..n], &basis.signature).re;
                if k == 0.0 {
                    return Err(Error::Insufficient1DRule("vanishing Christoffel function".into()));
                }
                weights.push(1.0 / k);
            }
            Ok(Rule1d { nodes, weights, exact_degree: (2 * n).saturating_sub(1) })
        }
    }
}

fn monic_value(monic: &crate::orthopoly::MonicBasis, n: usize, t: f64) -> (f64, f64) {
    let c = &monic.coef[n];
    let (mut p, mut dp) = (0.0, 0.0);
    for k in (0..=n).rev() {
        dp = dp * t + p;
        p = p * t + c[(k, 0)];
    }
    (p, dp)
}

fn elementary(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (m, &xi) in x.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += xi * e[k - 1];
        }
    }
    e[1..].to_vec()
}

/// All `gamma` with `gamma_1 >= ... >= gamma_d` (or strictly decreasing) in
/// `1..=m`, as zero-based indices.
fn decreasing_tuples(m: usize, d: usize, strict: bool) -> Vec<Vec<usize>> {
    fn rec(m: usize, d: usize, strict: bool, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        let hi = match prefix.last() {
            None => m,
            Some(&l) if strict => l,
            Some(&l) => l + 1,
        };
        for g in (0..hi).rev() {
            prefix.push(g);
            rec(m, d, strict, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, d, strict, &mut Vec::new(), &mut out);
    out
}

/// Closed-form Gaussian cubature of degree `2n-1` for the symmetric-map
/// families: nodes `u(t_gamma)` built from a univariate Gauss rule.
///
/// For `-1/2`, `gamma_1 >= ... >= gamma_d` runs over the `n`-point rule and
/// the weight is `prod lambda_{gamma_i} / prod m_j!` with `m_j` the
/// multiplicities in `gamma`. For `+1/2`, `gamma` is strictly decreasing over
/// the `(n+d-1)`-point rule and the weight is `J(t_gamma)^2 prod lambda`.
/// Both carry the `1/d!` normalization of the pushforward moments.
pub fn closed_form_symmap_rule(base: BaseWeight, d: usize, sign: SymSign, n: usize) -> Result<CubatureRule> {
    if n == 0 || d == 0 {
        return Err(Error::Insufficient1DRule("degree and dimension must be positive".into()));
    }
    let (m, strict) = match sign {
        SymSign::MinusHalf => (n, false),
        SymSign::PlusHalf => (n + d - 1, true),
    };
    let rule = gauss_rule_1d(base, m)?;
    if rule.len() != m {
        return Err(Error::Insufficient1DRule(format!("expected {m} nodes, found {}", rule.len())));
    }
    let tuples = decreasing_tuples(m, d, strict);
    debug_assert_eq!(tuples.len(), binomial(n + d - 1, d));
    let mut nodes = Vec::with_capacity(tuples.len());
    let mut weights = Vec::with_capacity(tuples.len());
    for g in tuples {
        let t: Vec<f64> = g.iter().map(|&k| rule.nodes[k]).collect();
        let mut w: f64 = g.iter().map(|&k| rule.weights[k]).product();
        match sign {
            SymSign::MinusHalf => {
                // multiplicities come from the index tuple, not from node values
                let mut run = 1;
                for k in 1..=g.len() {
                    if k < g.len() && g[k] == g[k - 1] {
                        run += 1;
                    } else {
                        w /= (1..=run).product::<usize>() as f64;
                        run = 1;
                    }
                }
            }
            SymSign::PlusHalf => {
                let mut jac = 1.0;
                for a in 0..d {
                    for b in a + 1..d {
                        jac *= t[a] - t[b];
                    }
                }
                w *= jac * jac;
            }
        }
        nodes.push(elementary(&t).into_iter().map(|v| Complex64::new(v, 0.0)).collect());
        weights.push(w);
    }
    Ok(CubatureRule { exact_degree: 2 * n - 1, nodes, weights, provenance: Provenance::ClosedForm }.sorted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{build_truncated, common_zeros, simplicity_check};
    use crate::orthopoly::{recurrence_from_l, sign_orthonormal_basis};
    use crate::Tolerances;
    use rand::{Rng, SeedableRng};

    struct Fixture {
        provider: MomentProvider,
        basis: SignOrthoBasis,
        rec: RecurrenceData,
    }

    fn fixture(desc: &str, d: usize, n: usize) -> Fixture {
        let provider = MomentProvider::from_descriptor(&desc.parse().unwrap(), d, 2 * n + 4).unwrap();
        let basis = sign_orthonormal_basis(&provider, n + 2, 1e-10).unwrap();
        let rec = recurrence_from_l(&basis, &provider, 1e-10).unwrap();
        Fixture { provider, basis, rec }
    }

    fn zero_set(f: &Fixture, n: usize) -> ZeroSet {
        let tj = build_truncated(&f.rec, n).unwrap();
        let mut zs = common_zeros(&tj, &f.basis, &Tolerances::default(), crate::DEFAULT_SEED).unwrap();
        simplicity_check(&mut zs, &f.basis, &f.basis.signature, 1e-10);
        zs
    }

    fn random_points(seed: u64, d: usize, count: usize) -> Vec<Vec<Complex64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..d).map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0))).collect())
            .collect()
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn kernel_basics() {
        let f = fixture("legendre", 1, 2);
        assert!((kernel(&f.basis, 0, &[c(0.3)], &[c(-2.0)]) - c(1.0)).norm() < 1e-15);
        assert!((kernel(&f.basis, 1, &[c(0.0)], &[c(0.0)]) - c(1.0)).norm() < 1e-15);
        let g = fixture("gegenbauer:lambda=0.5,mu=1", 1, 2);
        let mu0 = g.provider.moment(&MultiIndex::zero(1)).unwrap();
        assert!((kernel(&g.basis, 0, &[c(0.1)], &[c(0.4)]).re - mu0.signum() / mu0.abs()).abs() < 1e-14);
    }

    #[test]
    fn kernel_is_hermitian_and_real_on_diagonal() {
        let f = fixture("symmap:base=chebyshev,d=2,sign=+0.5", 2, 3);
        let pts = random_points(3, 2, 10);
        for w in pts.windows(2) {
            let kxy = kernel(&f.basis, 3, &w[0], &w[1]);
            let kyx = kernel(&f.basis, 3, &w[1], &w[0]);
            assert!((kxy - kyx.conj()).norm() < 1e-12 * kxy.norm().max(1.0));
            let kxx = kernel(&f.basis, 3, &w[0], &w[0]);
            assert!(kxx.im.abs() < 1e-12 * kxx.norm().max(1.0));
        }
    }

    #[test]
    fn reproducing_property() {
        // L(K_n(x, .) q) = q(x) for q = c^T x^n, with L applied through M_n
        let f = fixture("symmap:base=legendre,d=2,sign=-0.5", 2, 3);
        let n = 3;
        let g = graded(2, n);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let q: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = vec![c(0.3), c(-0.2)];
        // K_n(x, y) = k(x)^T y^n with k(x) = sum_k coef_k S_k P_k(x)
        let px = f.basis.evaluate(&x);
        let mut kx = vec![c(0.0); g.len()];
        for k in 0..=n {
            let ck = &f.basis.coef[k];
            for r in 0..ck.nrows() {
                for col in 0..ck.ncols() {
                    kx[r] += ck[(r, col)] * f.basis.signature[k][col] * px[k][col];
                }
            }
        }
        let m = &f.basis.moments.view((0, 0), (g.len(), g.len()));
        let mut lhs = c(0.0);
        for a in 0..g.len() {
            for b in 0..g.len() {
                lhs += kx[a] * m[(a, b)] * q[b];
            }
        }
        let rhs: Complex64 = g.monomials(&x).iter().zip(&q).map(|(v, &w)| v * w).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    fn graded(d: usize, n: usize) -> crate::index::GradedBasis {
        crate::index::graded_monomials(d, n)
    }

    #[test]
    fn christoffel_darboux_random_pairs() {
        for (desc, d, n, tol) in [("legendre", 1, 3, 1e-10), ("symmap:base=chebyshev,d=2,sign=-0.5", 2, 2, 1e-9)] {
            let f = fixture(desc, d, n);
            let pts = random_points(5, d, 40);
            for pair in pts.chunks(2) {
                let r: Vec<f64> = (0..d)
                    .map(|j| christoffel_darboux_residual(&f.basis, &f.rec, n, &pair[0], &pair[1], j).unwrap())
                    .collect();
                assert!(r.iter().all(|&v| v <= tol), "{desc}: {r:?}");
            }
        }
    }

    #[test]
    fn confluent_requested() {
        let f = fixture("legendre", 1, 2);
        let x = [Complex64::new(0.2, 0.5)];
        let y = [Complex64::new(0.2, -0.5)];
        assert_eq!(christoffel_darboux_residual(&f.basis, &f.rec, 2, &x, &y, 0), Err(Error::ConfluentRequested));
    }

    #[test]
    fn confluent_form_matches_limit() {
        for (desc, d) in [("legendre", 1), ("gegenbauer:lambda=0.5,mu=1", 1), ("symmap:base=chebyshev,d=2,sign=+0.5", 2)] {
            let f = fixture(desc, d, 3);
            let x: Vec<f64> = [0.31, -0.17][..d].to_vec();
            let xc: Vec<Complex64> = x.iter().map(|&v| c(v)).collect();
            let exact = kernel(&f.basis, 3, &xc, &xc).re;
            for j in 0..d {
                let conf = confluent_kernel(&f.basis, &f.rec, 3, &x, j);
                assert!((conf - exact).abs() < 1e-10 * exact.abs().max(1.0), "{desc} j={j}: {conf} vs {exact}");
                // divided difference of the non-confluent numerator
                let h = 1e-6;
                let mut y = xc.clone();
                y[j] += h;
                let py = f.basis.evaluate(&y);
                let px = f.basis.evaluate(&xc);
                let a = to_complex(&f.rec.a[3][j]);
                let num = dot_t(&(&a * &px[4]), &conj_vec(&py[3])) - dot_t(&px[3], &(&a * conj_vec(&py[4])));
                let dd = (num / (xc[j] - y[j].conj())).re;
                assert!((dd - conf).abs() < 1e-4 * conf.abs().max(1.0), "{desc}: {dd} vs {conf}");
            }
        }
    }

    #[test]
    fn chebyshev_three_point_rule() {
        let f = fixture("chebyshev", 1, 3);
        let rule = gauss_cubature(&zero_set(&f, 3), &f.basis, 1e-10).unwrap();
        for w in &rule.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-13);
        }
        let g = gauss_chebyshev(3);
        for (z, t) in rule.nodes.iter().zip(&g.nodes) {
            assert!((z[0].re - t).abs() < 1e-13);
        }
    }

    #[test]
    fn symmap_rule_exactness_and_weight_sum() {
        let f = fixture("symmap:base=chebyshev,d=2,sign=-0.5", 2, 2);
        let rule = gauss_cubature(&zero_set(&f, 2), &f.basis, 1e-10).unwrap();
        assert_eq!(rule.len(), 3);
        let rep = rule.exactness(&f.provider, 3).unwrap();
        assert!(rep.max_rel_dev < 1e-9, "{rep:?}");
        assert!((rule.weight_sum() - 0.5).abs() < 1e-10);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn lagrange_interpolation() {
        let f = fixture("symmap:base=chebyshev,d=2,sign=-0.5", 2, 2);
        let zs = zero_set(&f, 2);
        let ones = vec![c(1.0); zs.points.len()];
        let x = vec![Complex64::new(0.4, 0.3), c(-0.6)];
        assert!((lagrange_interpolate(&zs, &f.basis, &ones, &x).unwrap() - c(1.0)).norm() < 1e-10);
        // random polynomial of degree n-1 = 1
        let poly = |z: &[Complex64]| c(0.7) - z[0] * 1.3 + z[1] * 0.25;
        let samples: Vec<Complex64> = zs.points.iter().map(|p| poly(&p.z)).collect();
        assert!((lagrange_interpolate(&zs, &f.basis, &samples, &x).unwrap() - poly(&x)).norm() < 1e-9);
        for p in &zs.points {
            let v = lagrange_interpolate(&zs, &f.basis, &samples, &p.z).unwrap();
            assert!((v - poly(&p.z)).norm() < 1e-10);
        }
    }

    #[test]
    fn closed_form_symmap_examples() {
        let r = closed_form_symmap_rule(BaseWeight::Chebyshev, 2, SymSign::MinusHalf, 2).unwrap();
        let s2 = 2f64.sqrt();
        let expect = [([-s2, 0.5], 0.125), ([0.0, -0.5], 0.25), ([s2, 0.5], 0.125)];
        for ((z, w), (e, ew)) in r.nodes.iter().zip(&r.weights).zip(expect) {
            assert!((z[0].re - e[0]).abs() < 1e-14 && (z[1].re - e[1]).abs() < 1e-14);
            assert!((w - ew).abs() < 1e-15);
        }

        let r = closed_form_symmap_rule(BaseWeight::Chebyshev, 2, SymSign::PlusHalf, 1).unwrap();
        assert_eq!(r.len(), 1);
        let t = 0.5f64.sqrt();
        assert!(r.nodes[0][0].norm() < 1e-15 && (r.nodes[0][1].re + 0.5).abs() < 1e-15);
        assert!((r.weights[0] - (2.0 * t).powi(2) * 0.25).abs() < 1e-15);
    }

    #[test]
    fn closed_form_and_pipeline_agree() {
        for base in [BaseWeight::Chebyshev, BaseWeight::Legendre] {
            for sign in [SymSign::MinusHalf, SymSign::PlusHalf] {
                let desc = format!("symmap:base={base},d=2,sign={sign}");
                let f = fixture(&desc, 2, 3);
                for n in 1..=3 {
                    let eig = gauss_cubature(&zero_set(&f, n), &f.basis, 1e-10).unwrap();
                    let cf = closed_form_symmap_rule(base, 2, sign, n).unwrap();
                    assert_eq!(eig.len(), cf.len());
                    for k in 0..eig.len() {
                        for j in 0..2 {
                            assert!((eig.nodes[k][j] - cf.nodes[k][j]).norm() < 1e-8, "{desc} n={n}");
                        }
                        assert!((eig.weights[k] - cf.weights[k]).abs() < 1e-8, "{desc} n={n}");
                    }
                    let rep = cf.exactness(&f.provider, 2 * n - 1).unwrap();
                    assert!(rep.max_rel_dev < 1e-9, "{desc} n={n}: {rep:?}");
                }
            }
        }
    }

    #[test]
    fn signed_gauss_rule_1d() {
        let base = BaseWeight::SignedGegenbauer { lambda: 0.5, mu: 1.0 };
        for n in 1..=6 {
            let r = gauss_rule_1d(base, n).unwrap();
            for k in 0..2 * n {
                let got = r.integrate(|t| t.powi(k as i32));
                let exact = base.moment(k);
                assert!((got - exact).abs() < 1e-10 * exact.abs().max(1e-3), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn cubature_json_round_trip() {
        let r = closed_form_symmap_rule(BaseWeight::Legendre, 2, SymSign::PlusHalf, 2).unwrap();
        let js = crate::json::to_json(&CubatureJson::from(&r));
        let back: CubatureJson = crate::json::from_json(&js).unwrap();
        let r2 = back.into_rule().unwrap();
        assert_eq!(r2.nodes, r.nodes);
        assert_eq!(r2.weights, r.weights);
        assert!(r.to_text().lines().count() == r.len() + 2);
        let bad: CubatureJson = crate::json::from_json(r#"{"exact_degree":1,"nodes":[[[0.0],[0.0]]],"weights":[]}"#).unwrap();
        assert!(bad.into_rule().is_err());
    }
}
