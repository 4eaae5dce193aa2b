//! Reference weight families with closed forms: classical Jacobi
//! polynomials, the signed weight `t^{2 mu + 1} (1 - t) (1 - t^2)^{lambda - 1/2}`
//! with its generalized Gegenbauer polynomials, and the symmetric
//! polynomials `Q_alpha^{+-1/2}` behind the symmetric-map families.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moments::MomentProvider;
use crate::orthopoly::{sign_orthonormal_basis, span_residual, PolyBasis, SignOrthoBasis};
use crate::quad1d::gauss_jacobi;
use crate::weight::{BaseWeight, SymSign, WeightDescriptor};

/// Parameters of `P_n^{(alpha, beta)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::BadDescriptor(format!("Jacobi parameters must exceed -1 (got {alpha}, {beta})")));
        }
        Ok(JacobiParams { alpha, beta })
    }
}

/// `P_n^{(alpha, beta)}(t)` in the standard normalization
/// `P_n(1) = C(n + alpha, n)`, by the classical three-term recurrence.
pub fn jacobi_poly(p: JacobiParams, n: usize, t: f64) -> f64 {
    let (a, b) = (p.alpha, p.beta);
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * t;
    for k in 1..n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * s;
        let c2 = (s + 1.0) * (a * a - b * b);
        let c3 = s * (s + 1.0) * (s + 2.0);
        let c4 = 2.0 * (k + a) * (k + b) * (s + 2.0);
        let next = ((c2 + c3 * t) * cur - c4 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}

/// Zeros of `P_n^{(alpha, beta)}`, ascending.
pub fn jacobi_zeros(p: JacobiParams, n: usize) -> Vec<f64> {
    let mut z = gauss_jacobi(n, p.alpha, p.beta).nodes;
    z.sort_by(f64::total_cmp);
    z
}

/// `C_{2n}^{(lambda, mu)}(t) = P_n^{(lambda - 1/2, mu - 1/2)}(2t^2 - 1)`, the
/// even generalized Gegenbauer polynomial with unit leading multiplier.
pub fn gen_gegenbauer_even(lambda: f64, mu: f64, n: usize, t: f64) -> f64 {
    jacobi_poly(JacobiParams { alpha: lambda - 0.5, beta: mu - 0.5 }, n, 2.0 * t * t - 1.0)
}

/// Zeros of `C_{2n}^{(lambda, mu)}`: `+-sqrt((1 + s_k) / 2)` over the zeros
/// `s_k` of `P_n^{(lambda - 1/2, mu - 1/2)}`, ascending.
pub fn gen_gegenbauer_even_zeros(lambda: f64, mu: f64, n: usize) -> Vec<f64> {
    let s = jacobi_zeros(JacobiParams { alpha: lambda - 0.5, beta: mu - 0.5 }, n);
    let mut z: Vec<f64> = s.iter().flat_map(|&s| {
        let r = ((1.0 + s) / 2.0).sqrt();
        [-r, r]
    }).collect();
    z.sort_by(f64::total_cmp);
    z
}

/// Degree-`n` orthogonal polynomial of the signed weight, monic, with its
/// zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGegenbauerPoly {
    pub degree: usize,
    /// Ascending power-basis coefficients; the last one is 1.
    pub coefficients: Vec<f64>,
    /// Real zeros, ascending.
    pub zeros: Vec<f64>,
}

impl SignedGegenbauerPoly {
    pub fn value(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Closed form of the orthogonal polynomials of
/// `w(t) = t^{2 mu + 1} (1 - t) (1 - t^2)^{lambda - 1/2}`:
/// `p_{2m} = C_{2m}^{(lambda, mu + 1)}` and `p_{2m+1} = (1 + t) C_{2m}^{(lambda + 1, mu + 1)}`.
///
/// On even polynomials the odd factor `t^{2 mu + 1}` integrates out and the
/// remaining weight is `t^{2 mu + 2} (1 - t^2)^{lambda - 1/2}`, whence the
/// second parameter `mu + 1`; the odd case reduces the same way after
/// absorbing `(1 + t)(1 - t)`.
pub fn signed_gegenbauer_ops(lambda: f64, mu: f64, n: usize) -> Result<SignedGegenbauerPoly> {
    if !(lambda > -0.5 && mu > 0.0) {
        return Err(Error::BadDescriptor(format!("need lambda > -1/2 and mu > 0 (got {lambda}, {mu})")));
    }
    let m = n / 2;
    let mut zeros = if n % 2 == 0 {
        gen_gegenbauer_even_zeros(lambda, mu + 1.0, m)
    } else {
        let mut z = gen_gegenbauer_even_zeros(lambda + 1.0, mu + 1.0, m);
        z.push(-1.0);
        z
    };
    zeros.sort_by(f64::total_cmp);
    let mut coefficients = vec![1.0];
    for &r in &zeros {
        // multiply by (t - r)
        let mut next = vec![0.0; coefficients.len() + 1];
        for (k, &c) in coefficients.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= r * c;
        }
        coefficients = next;
    }
    Ok(SignedGegenbauerPoly { degree: n, coefficients, zeros })
}

/// A symmetric-map family `W_{+-1/2}` over a univariate base weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMapFamily {
    pub base: BaseWeight,
    pub d: usize,
    pub sign: SymSign,
}

impl SymMapFamily {
    pub fn descriptor(&self) -> WeightDescriptor {
        WeightDescriptor::SymMap { base: self.base, d: self.d, sign: self.sign }
    }
}

/// Sign-orthonormal univariate polynomials `p_0..p_m` of a base weight.
#[derive(Debug, Clone)]
pub struct Univariate {
    basis: SignOrthoBasis,
}

impl Univariate {
    pub fn new(base: BaseWeight, m: usize) -> Result<Self> {
        let provider = MomentProvider::from_descriptor(&WeightDescriptor::Base(base), 1, 2 * m)?;
        Ok(Univariate { basis: sign_orthonormal_basis(&provider, m, 1e-12)? })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// `(p_0(t), ..., p_m(t))`.
    pub fn values(&self, t: f64) -> Vec<f64> {
        self.basis.evaluate(&[Complex64::new(t, 0.0)]).iter().map(|v| v[0].re).collect()
    }
}

/// Check that `alpha` is a partition (weakly decreasing).
fn check_partition(alpha: &[usize]) -> Result<()> {
    if alpha.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Parse(format!("{alpha:?} is not a partition (weakly decreasing)")));
    }
    Ok(())
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            cur.push(v);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(k, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..d).collect(), &mut Vec::new(), &mut out);
    out
}

/// `Q_alpha^{-1/2}(x) = sum_{beta in S_d} prod_i p_{alpha_i}(x_{beta_i})` and
/// `Q_alpha^{+1/2}(x) = det[p_{alpha_i + d - i}(x_j)] / J(x)`, with
/// `J(x) = prod_{i<j} (x_i - x_j)`. `uni` must reach degree `alpha_1 + d - 1`.
pub fn symmetric_polynomial(uni: &Univariate, sign: SymSign, alpha: &[usize], x: &[f64]) -> Result<f64> {
    check_partition(alpha)?;
    let d = x.len();
    if alpha.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: alpha.len() });
    }
    let vals: Vec<Vec<f64>> = x.iter().map(|&t| uni.values(t)).collect();
    let need = alpha.first().map_or(0, |&a| a + d - 1);
    if need > uni.degree() {
        return Err(Error::DegreeExceeded { requested: need, max: uni.degree() });
    }
    match sign {
        SymSign::MinusHalf => Ok(permutations(d)
            .iter()
            .map(|beta| (0..d).map(|i| vals[beta[i]][alpha[i]]).product::<f64>())
            .sum()),
        SymSign::PlusHalf => {
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let mut jac = 1.0;
            for i in 0..d {
                for j in i + 1..d {
                    if (x[i] - x[j]).abs() <= 1e-14 * scale {
                        return Err(Error::ConfluentPoint);
                    }
                    jac *= x[i] - x[j];
                }
            }
            let m = DMatrix::from_fn(d, d, |i, j| vals[j][alpha[i] + d - 1 - i]);
            Ok(m.determinant() / jac)
        }
    }
}

/// Partitions `alpha_1 >= ... >= alpha_d >= 0` with `alpha_1 = n`, in
/// lexicographically decreasing order.
pub fn partitions_with_top(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, hi: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for v in (0..=hi).rev() {
            cur.push(v);
            rec(d, v, cur, out);
            cur.pop();
        }
    }
    if d == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(d, n, &mut vec![n], &mut out);
    out
}

/// Residual between the pipeline's degree-`n` orthogonal space of the
/// pushforward functional and the span of `Q_alpha(x)`, `alpha_1 = n`, read as
/// functions of `u = e(x)`. Both are sampled at seeded random points with
/// distinct coordinates and compared by two-sided projection.
pub fn pushforward_basis_check(family: SymMapFamily, n: usize, seed: u64) -> Result<f64> {
    let d = family.d;
    let provider = MomentProvider::from_descriptor(&family.descriptor(), d, 2 * n)?;
    let basis = sign_orthonormal_basis(&provider, n, 1e-10)?;
    let uni = Univariate::new(family.base, n + d - 1)?;
    let parts = partitions_with_top(n, d);
    let samples = 3 * crate::index::dim_total(d, n) + 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = basis.coefficients()[n].ncols();
    let mut a = DMatrix::zeros(samples, width);
    let mut b = DMatrix::zeros(samples, parts.len());
    for s in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<Complex64> = elementary(&x).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let p = &basis.evaluate(&u)[n];
        for c in 0..width {
            a[(s, c)] = p[c].re;
        }
        for (c, alpha) in parts.iter().enumerate() {
            b[(s, c)] = symmetric_polynomial(&uni, family.sign, alpha, &x)?;
        }
    }
    Ok(span_residual(&a, &b).max(span_residual(&b, &a)))
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

/// Random point in `(-1, 1)^d`, for property tests and sampling.
pub fn random_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::gauss_rule_1d;
    use crate::orthopoly::build_monic;
    use crate::quad1d::gauss_chebyshev;
    use proptest::prelude::*;

    #[test]
    fn jacobi_low_degrees() {
        let p = JacobiParams::new(0.0, 0.0).unwrap();
        assert_eq!(jacobi_poly(p, 0, 0.3), 1.0);
        assert!((jacobi_poly(p, 1, 0.3) - 0.3).abs() < 1e-15);
        assert!((jacobi_poly(p, 2, 0.5) + 0.125).abs() < 1e-15);
        let q = JacobiParams::new(0.5, -0.25).unwrap();
        // P_n(1) = C(n + alpha, n)
        let binom = |n: usize, a: f64| (1..=n).fold(1.0, |acc, k| acc * (a + k as f64) / k as f64);
        for n in 0..6 {
            assert!((jacobi_poly(q, n, 1.0) - binom(n, 0.5)).abs() < 1e-12, "n={n}");
        }
        assert!(JacobiParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn jacobi_zeros_are_roots() {
        let p = JacobiParams::new(0.5, 1.5).unwrap();
        for z in jacobi_zeros(p, 5) {
            assert!(jacobi_poly(p, 5, z).abs() < 1e-12);
        }
    }

    #[test]
    fn gegenbauer_even_substitution() {
        let (l, m) = (0.7, 1.3);
        for t in [0.1, 0.45, 0.9] {
            assert_eq!(gen_gegenbauer_even(l, m, 3, t), gen_gegenbauer_even(l, m, 3, -t));
        }
        let z = gen_gegenbauer_even_zeros(l, m, 2);
        assert_eq!(z.len(), 4);
        for t in z {
            assert!(gen_gegenbauer_even(l, m, 2, t).abs() < 1e-12);
        }
    }

    #[test]
    fn gegenbauer_reduces_to_legendre() {
        // lambda = 1/2, mu = 0: weight 1 on [-1,1], so C_{2n} is Legendre P_{2n}
        let legendre = JacobiParams::new(0.0, 0.0).unwrap();
        for n in 1..=3 {
            let want = jacobi_zeros(legendre, 2 * n);
            let got = gen_gegenbauer_even_zeros(0.5, 0.0, n);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn signed_ops_first_degree_and_zero_location() {
        let p1 = signed_gegenbauer_ops(0.5, 1.0, 1).unwrap();
        assert_eq!(p1.coefficients, vec![1.0, 1.0]);
        for n in 1..=6 {
            let p = signed_gegenbauer_ops(0.5, 1.0, n).unwrap();
            assert_eq!(p.zeros.len(), n);
            assert!(p.zeros.windows(2).all(|w| w[1] - w[0] > 1e-8));
            assert!(p.zeros.iter().all(|z| z.abs() <= 1.0));
        }
        assert!(signed_gegenbauer_ops(-0.5, 1.0, 2).is_err());
    }

    #[test]
    fn signed_ops_match_moment_pipeline() {
        let base = BaseWeight::SignedGegenbauer { lambda: 0.5, mu: 1.0 };
        let provider = MomentProvider::from_descriptor(&WeightDescriptor::Base(base), 1, 14).unwrap();
        let monic = build_monic(&provider, 6, 1e-12).unwrap();
        for n in 1..=6 {
            let closed = signed_gegenbauer_ops(0.5, 1.0, n).unwrap();
            let c = &monic.coef[n];
            for k in 0..=n {
                assert!((c[(k, 0)] - closed.coefficients[k]).abs() < 1e-7, "n={n} k={k}");
            }
            let rule = gauss_rule_1d(base, n).unwrap();
            for (a, b) in rule.nodes.iter().zip(&closed.zeros) {
                assert!((a - b).abs() < 1e-7, "n={n}");
            }
        }
    }

    #[test]
    fn even_degree_norms_are_negative_for_integer_mu() {
        let base = BaseWeight::SignedGegenbauer { lambda: 0.5, mu: 1.0 };
        let rule = base.quadrature(20).unwrap();
        for m in 1..=3 {
            let p = signed_gegenbauer_ops(0.5, 1.0, 2 * m).unwrap();
            let norm = rule.integrate(|t| p.value(t).powi(2));
            assert!(norm < 0.0, "m={m}: {norm}");
        }
    }

    #[test]
    fn symmetric_constant_and_confluence() {
        let uni = Univariate::new(BaseWeight::Chebyshev, 4).unwrap();
        let p0 = uni.values(0.2)[0];
        for x in [[0.1, 0.7], [-0.4, 0.3]] {
            let q = symmetric_polynomial(&uni, SymSign::MinusHalf, &[0, 0], &x).unwrap();
            assert!((q - 2.0 * p0 * p0).abs() < 1e-14);
        }
        assert_eq!(
            symmetric_polynomial(&uni, SymSign::PlusHalf, &[1, 0], &[0.3, 0.3]),
            Err(Error::ConfluentPoint)
        );
        assert!(symmetric_polynomial(&uni, SymSign::MinusHalf, &[0, 1], &[0.3, 0.2]).is_err());
    }

    #[test]
    fn symmetric_orthogonality_under_tensor_quadrature() {
        let uni = Univariate::new(BaseWeight::Chebyshev, 5).unwrap();
        let rule = gauss_chebyshev(8);
        let parts: Vec<Vec<usize>> = (0..=3).flat_map(|n| partitions_with_top(n, 2)).collect();
        for sign in [SymSign::MinusHalf, SymSign::PlusHalf] {
            let gram = |a: &[usize], b: &[usize]| {
                let mut acc = 0.0;
                for (i, &x) in rule.nodes.iter().enumerate() {
                    for (j, &y) in rule.nodes.iter().enumerate() {
                        let w = rule.weights[i] * rule.weights[j] / 2.0;
                        let (qa, qb) = match sign {
                            SymSign::MinusHalf => (
                                symmetric_polynomial(&uni, sign, a, &[x, y]).unwrap(),
                                symmetric_polynomial(&uni, sign, b, &[x, y]).unwrap(),
                            ),
                            // J^2 Q_a Q_b = det_a det_b, finite at x = y
                            SymSign::PlusHalf => {
                                if i == j {
                                    continue;
                                }
                                let jac = x - y;
                                (
                                    symmetric_polynomial(&uni, sign, a, &[x, y]).unwrap() * jac,
                                    symmetric_polynomial(&uni, sign, b, &[x, y]).unwrap() * jac,
                                )
                            }
                        };
                        acc += w * qa * qb;
                    }
                }
                acc
            };
            for (k, a) in parts.iter().enumerate() {
                for b in &parts[k + 1..] {
                    assert!(gram(a, b).abs() < 1e-12, "{sign} {a:?} {b:?}");
                }
                assert!(gram(a, a).abs() > 1e-3);
            }
        }
    }

    #[test]
    fn partition_counts() {
        for n in 0..6 {
            assert_eq!(partitions_with_top(n, 2).len(), n + 1);
        }
        assert_eq!(partitions_with_top(2, 3), vec![vec![2, 2, 2], vec![2, 2, 1], vec![2, 2, 0], vec![2, 1, 1], vec![2, 1, 0], vec![2, 0, 0]]);
    }

    #[test]
    fn pushforward_spans_agree() {
        for base in [BaseWeight::Chebyshev, BaseWeight::Legendre] {
            for sign in [SymSign::MinusHalf, SymSign::PlusHalf] {
                for n in 1..=3 {
                    let fam = SymMapFamily { base, d: 2, sign };
                    let r = pushforward_basis_check(fam, n, crate::DEFAULT_SEED).unwrap();
                    assert!(r <= 1e-8, "{base} {sign} n={n}: {r:e}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_polynomials_are_symmetric(x in -1.0f64..1.0, y in -1.0f64..1.0, a in 0usize..4, b in 0usize..4) {
            prop_assume!((x - y).abs() > 1e-3);
            let uni = Univariate::new(BaseWeight::Legendre, 6).unwrap();
            let alpha = [a.max(b), a.min(b)];
            for sign in [SymSign::MinusHalf, SymSign::PlusHalf] {
                let u = symmetric_polynomial(&uni, sign, &alpha, &[x, y]).unwrap();
                let v = symmetric_polynomial(&uni, sign, &alpha, &[y, x]).unwrap();
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0));
            }
        }
    }
}
