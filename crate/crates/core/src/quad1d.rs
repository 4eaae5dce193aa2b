//! Univariate Gauss rules for the classical Jacobi family.
//!
//! Nodes come from the symmetric tridiagonal (Golub-Welsch) eigenproblem and
//! are then polished by Newton steps on the orthonormal recurrence; weights are
//! the Christoffel numbers `1 / sum_k p_k(t)^2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::linalg::sym_eigen_sorted;

/// A univariate rule `sum_k w_k f(t_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Largest polynomial degree integrated exactly against the measure the
    /// weights represent.
    pub exact_degree: usize,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights are symmetric under `t -> -t` (to rounding).
    pub fn is_symmetric(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.nodes.len()).collect();
        idx.sort_by(|&a, &b| self.nodes[a].total_cmp(&self.nodes[b]));
        let n = idx.len();
        let scale = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        (0..n).all(|k| {
            let (a, b) = (idx[k], idx[n - 1 - k]);
            (self.nodes[a] + self.nodes[b]).abs() <= 1e-13
                && (self.weights[a] - self.weights[b]).abs() <= 1e-12 * scale
        })
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Multiply every weight by `factor(t_k)`. A polynomial factor of degree
    /// `deg` lowers the exactness by `deg`.
    pub fn fold_factor(mut self, factor: impl Fn(f64) -> f64, deg: usize) -> Rule1d {
        for (w, &t) in self.weights.iter_mut().zip(&self.nodes) {
            *w *= factor(t);
        }
        self.exact_degree = self.exact_degree.saturating_sub(deg);
        self
    }

    pub fn scale(mut self, s: f64) -> Rule1d {
        self.weights.iter_mut().for_each(|w| *w *= s);
        self
    }
}

/// `integral_{-1}^{1} (1-t)^a (1+t)^b dt`.
pub fn jacobi_mass(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 2.0;
    }
    if a == -0.5 && b == -0.5 {
        return std::f64::consts::PI;
    }
    ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp()
}

/// Monic Jacobi recurrence `p_{k+1} = (t - alpha_k) p_k - beta_k p_{k-1}`.
/// Returns `(alpha_k, beta_k)`; `beta_0` is the mass.
pub fn jacobi_recurrence(a: f64, b: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let s = 2.0 * kf + a + b;
    let alpha = if k == 0 {
        (b - a) / (a + b + 2.0)
    } else {
        (b * b - a * a) / (s * (s + 2.0))
    };
    let beta = match k {
        0 => jacobi_mass(a, b),
        1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b)),
        _ => 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0)),
    };
    (alpha, beta)
}

/// Orthonormal values `p_0..p_{n}` and derivative of `p_n` at `t`.
fn orthonormal_values(n: usize, t: f64, coef: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0 / coef[0].1.sqrt();
    for k in 0..n {
        let (ak, _) = coef[k];
        let sb1 = coef[k + 1].1.sqrt();
        let (pm, dpm) = if k == 0 { (0.0, 0.0) } else { (p[k - 1], dp[k - 1]) };
        let sbk = if k == 0 { 0.0 } else { coef[k].1.sqrt() };
        p[k + 1] = ((t - ak) * p[k] - sbk * pm) / sb1;
        dp[k + 1] = (p[k] + (t - ak) * dp[k] - sbk * dpm) / sb1;
    }
    let d = dp[n];
    (p, d)
}

/// Gauss rule from monic recurrence coefficients `(alpha_k, beta_k)`,
/// `k = 0..=n`, for a positive measure of mass `beta_0`.
pub fn gauss_from_recurrence(n: usize, coef: &[(f64, f64)]) -> Rule1d {
    assert!(coef.len() > n, "need n+1 recurrence coefficients");
    if n == 0 {
        return Rule1d { nodes: vec![], weights: vec![], exact_degree: 0 };
    }
    let mut jm = DMatrix::zeros(n, n);
    for k in 0..n {
        jm[(k, k)] = coef[k].0;
        if k + 1 < n {
            let off = coef[k + 1].1.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let (mut nodes, _) = sym_eigen_sorted(&jm);
    nodes.reverse();
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = orthonormal_values(n, *t, coef);
            if dp == 0.0 {
                break;
            }
            let step = p[n] / dp;
            *t -= step;
            if step.abs() < 1e-16 * t.abs().max(1.0) {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&t| {
            let (p, _) = orthonormal_values(n - 1, t, coef);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Rule1d { nodes, weights, exact_degree: 2 * n - 1 }
}

/// `n`-point Gauss-Jacobi rule for `(1-t)^a (1+t)^b` on `[-1,1]`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule1d {
    let coef: Vec<_> = (0..=n).map(|k| jacobi_recurrence(a, b, k)).collect();
    gauss_from_recurrence(n, &coef)
}

/// `n`-point Gauss-Legendre rule for `dt` on `[-1,1]`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    gauss_jacobi(n, 0.0, 0.0)
}

/// `n`-point Gauss-Chebyshev rule for `dt / (pi sqrt(1-t^2))` (mass 1).
pub fn gauss_chebyshev(n: usize) -> Rule1d {
    let mut nodes: Vec<f64> = (1..=n)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect();
    nodes.reverse();
    for t in nodes.iter_mut() {
        if t.abs() < 1e-15 {
            *t = 0.0;
        }
    }
    Rule1d { nodes, weights: vec![1.0 / n as f64; n], exact_degree: (2 * n).saturating_sub(1) }
}
