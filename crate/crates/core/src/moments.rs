//! Moment sequences, moment matrices and the Hankel-Schur test.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{graded_monomials, lower_triangle, multi_power, GradedBasis, MultiIndex};
use crate::linalg::{max_abs, singular_values, solve};
use crate::quad1d::Rule1d;
use crate::weight::{BaseWeight, WeightDescriptor};

/// Default relative singular-value floor for definiteness.
pub const TOL_DEF: f64 = 1e-10;

/// Map applied to tensor quadrature nodes before taking monomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushforwardMap {
    Identity,
    /// `u_k = e_k(x_1, ..., x_d)`.
    ElementarySymmetric,
}

/// Where the moments come from.
#[derive(Debug)]
pub enum MomentSource {
    /// Closed-form univariate moments, tensorized for `d > 1`.
    Product(BaseWeight),
    /// Tensor quadrature of a 1D rule pushed through a map.
    Pushforward {
        rule: Rule1d,
        /// The rule is symmetric under `t -> -t`, so moments odd under
        /// `x -> -x` vanish exactly.
        symmetric: bool,
        map: PushforwardMap,
        jacobian_power: u32,
        grid: OnceLock<Vec<(Vec<f64>, f64)>>,
    },
    /// Explicit table of moments.
    Table(HashMap<MultiIndex, f64>),
    /// `mu_alpha = Re sum_zeta c_zeta zeta^alpha`.
    Exponential { nodes: Vec<Vec<Complex64>>, coeffs: Vec<Complex64> },
    /// Another provider times a constant.
    Scaled { inner: Box<MomentProvider>, factor: f64 },
}

/// Source of real moments `mu_alpha` with a declared reliable degree.
///
/// Moments are memoized after the first fetch; concurrent fills are
/// idempotent.
#[derive(Debug)]
pub struct MomentProvider {
    dim: usize,
    max_degree: Option<usize>,
    descriptor: String,
    source: MomentSource,
    memo: RwLock<HashMap<MultiIndex, f64>>,
}

fn elementary_symmetric(x: &[f64]) -> Vec<f64> {
    // coefficients of prod (1 + x_i s)
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (m, &xi) in x.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += xi * e[k - 1];
        }
    }
    e[1..].to_vec()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl MomentProvider {
    pub fn new(dim: usize, max_degree: Option<usize>, descriptor: impl Into<String>, source: MomentSource) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        MomentProvider { dim, max_degree, descriptor: descriptor.into(), source, memo: RwLock::new(HashMap::new()) }
    }

    /// Provider for a parsed weight descriptor in dimension `d`, reliable
    /// through total degree `max_degree`.
    pub fn from_descriptor(w: &WeightDescriptor, d: usize, max_degree: usize) -> Result<Self> {
        if let Some(fd) = w.fixed_dim() {
            if fd != d {
                return Err(Error::DimensionMismatch { expected: fd, got: d });
            }
        }
        match *w {
            WeightDescriptor::Base(base) => {
                let max = if d == 1 { None } else { Some(max_degree) };
                Ok(MomentProvider::new(d, max, w.to_string(), MomentSource::Product(base)))
            }
            WeightDescriptor::SymMap { base, d, sign } => {
                let npts = max_degree * d.max(2) + 10 + base.factor_degree();
                let rule = base.quadrature(npts)?;
                let mut p = quadrature_pushforward_provider(
                    rule,
                    PushforwardMap::ElementarySymmetric,
                    sign.jacobian_power(),
                    d,
                    max_degree,
                )?;
                p.descriptor = w.to_string();
                Ok(p)
            }
        }
    }

    /// Table-backed provider.
    pub fn from_table(dim: usize, max_degree: Option<usize>, entries: HashMap<MultiIndex, f64>) -> Self {
        MomentProvider::new(dim, max_degree, "table", MomentSource::Table(entries))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.max_degree
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn source(&self) -> &MomentSource {
        &self.source
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        match self.max_degree {
            Some(max) if degree > max => Err(Error::DegreeExceeded { requested: degree, max }),
            _ => Ok(()),
        }
    }

    /// `mu_alpha`.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: alpha.dim() });
        }
        self.check_degree(alpha.degree())?;
        if let Some(v) = self.memo.read().expect("memo lock").get(alpha) {
            return Ok(*v);
        }
        let v = self.compute(alpha)?;
        self.memo.write().expect("memo lock").insert(alpha.clone(), v);
        Ok(v)
    }

    fn compute(&self, alpha: &MultiIndex) -> Result<f64> {
        match &self.source {
            MomentSource::Product(base) => Ok(alpha.exponents().iter().map(|&a| base.moment(a as usize)).product()),
            MomentSource::Pushforward { rule, symmetric, map, jacobian_power, grid } => {
                if *symmetric && odd_under_reflection(alpha, *map, *jacobian_power, self.dim) {
                    return Ok(0.0);
                }
                let grid = grid.get_or_init(|| build_grid(rule, *map, *jacobian_power, self.dim));
                Ok(neumaier_sum(grid.iter().map(|(u, w)| {
                        let mut m = *w;
                        for (uj, &a) in u.iter().zip(alpha.exponents()) {
                            if a > 0 {
                                m *= uj.powi(a as i32);
                            }
                        }
                        m
                    })))
            }
            MomentSource::Table(t) => t
                .get(alpha)
                .copied()
                .ok_or_else(|| Error::Parse(format!("moment table has no entry for {alpha}"))),
            MomentSource::Exponential { nodes, coeffs } => Ok(exp_moment(nodes, coeffs, alpha).re),
            MomentSource::Scaled { inner, factor } => Ok(inner.moment(alpha)? * factor),
        }
    }

    /// Provider with every moment multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> MomentProvider {
        let descriptor = format!("{}*{factor}", self.descriptor);
        let (dim, max) = (self.dim, self.max_degree);
        MomentProvider::new(dim, max, descriptor, MomentSource::Scaled { inner: Box::new(self), factor })
    }

    /// Table of all moments with `|alpha| <= max_degree`.
    pub fn to_table(&self, max_degree: usize) -> Result<MomentTable> {
        let entries = lower_triangle(self.dim, max_degree)
            .into_iter()
            .map(|alpha| Ok(MomentEntry { value: self.moment(&alpha)?, alpha }))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentTable { d: self.dim, max_degree, entries })
    }
}

/// Parity of `u(x)^alpha J(x)^p` under `x -> -x`.
fn odd_under_reflection(alpha: &MultiIndex, map: PushforwardMap, jacobian_power: u32, d: usize) -> bool {
    let u_degree: usize = match map {
        PushforwardMap::Identity => alpha.degree(),
        // u_k = e_k has degree k
        PushforwardMap::ElementarySymmetric => {
            alpha.exponents().iter().enumerate().map(|(k, &a)| (k + 1) * a as usize).sum()
        }
    };
    let j_degree = jacobian_power as usize * d * (d - 1) / 2;
    (u_degree + j_degree) % 2 == 1
}

/// Compensated (Kahan-Babuska-Neumaier) sum.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn exp_moment(nodes: &[Vec<Complex64>], coeffs: &[Complex64], alpha: &MultiIndex) -> Complex64 {
    nodes.iter().zip(coeffs).map(|(z, c)| c * multi_power(z, alpha)).sum()
}

fn build_grid(rule: &Rule1d, map: PushforwardMap, jacobian_power: u32, d: usize) -> Vec<(Vec<f64>, f64)> {
    let n = rule.len();
    let norm = match map {
        PushforwardMap::Identity => 1.0,
        PushforwardMap::ElementarySymmetric => 1.0 / factorial(d),
    };
    let mut out = Vec::with_capacity(n.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&k| rule.nodes[k]).collect();
        let mut w: f64 = idx.iter().map(|&k| rule.weights[k]).product::<f64>() * norm;
        if jacobian_power > 0 {
            let mut jac = 1.0;
            for i in 0..d {
                for j in i + 1..d {
                    jac *= x[i] - x[j];
                }
            }
            w *= jac.powi(jacobian_power as i32);
        }
        let u = match map {
            PushforwardMap::Identity => x,
            PushforwardMap::ElementarySymmetric => elementary_symmetric(&x),
        };
        if w != 0.0 {
            out.push((u, w));
        }
        // odometer
        let mut pos = 0;
        loop {
            if pos == d {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Moments of a tensor 1D rule pushed through `map`, optionally weighted by
/// `J(x)^jacobian_power` with `J(x) = prod_{i<j} (x_i - x_j)`. The
/// elementary-symmetric map carries the `1/d!` normalization.
pub fn quadrature_pushforward_provider(
    rule: Rule1d,
    map: PushforwardMap,
    jacobian_power: u32,
    d: usize,
    max_degree: usize,
) -> Result<MomentProvider> {
    // each e_k is affine in every x_i, so u^alpha has per-variable degree |alpha|
    let needed = max_degree + jacobian_power as usize * (d - 1);
    if needed > rule.exact_degree {
        return Err(Error::DegreeExceeded { requested: needed, max: rule.exact_degree });
    }
    let name = match map {
        PushforwardMap::Identity => "tensor-quadrature",
        PushforwardMap::ElementarySymmetric => "symmetric-map-quadrature",
    };
    Ok(MomentProvider::new(
        d,
        Some(max_degree),
        name,
        MomentSource::Pushforward { symmetric: rule.is_symmetric(), rule, map, jacobian_power, grid: OnceLock::new() },
    ))
}

/// `M_n = [mu_{alpha+beta}]` with its block partition.
#[derive(Debug, Clone)]
pub struct MomentMatrixSet {
    pub n: usize,
    pub basis: GradedBasis,
    pub full: DMatrix<f64>,
}

impl MomentMatrixSet {
    fn split(&self) -> usize {
        self.basis.block_start(self.n)
    }

    /// `M_{n-1}`.
    pub fn lower(&self) -> DMatrix<f64> {
        let s = self.split();
        self.full.view((0, 0), (s, s)).into_owned()
    }

    /// `M_{n-1,n}` (rows `|alpha| <= n-1`, columns `|beta| = n`).
    pub fn cross(&self) -> DMatrix<f64> {
        let s = self.split();
        let t = self.full.nrows() - s;
        self.full.view((0, s), (s, t)).into_owned()
    }

    /// `M_{n,n}`.
    pub fn top(&self) -> DMatrix<f64> {
        let s = self.split();
        let t = self.full.nrows() - s;
        self.full.view((s, s), (t, t)).into_owned()
    }
}

/// Rectangular moment matrix `[mu_{alpha+beta+shift}]` for `|alpha| <= rows`,
/// `|beta| <= cols`.
pub(crate) fn shifted_moment_matrix(
    provider: &MomentProvider,
    rows: usize,
    cols: usize,
    shift: Option<&MultiIndex>,
) -> Result<DMatrix<f64>> {
    let d = provider.dim();
    let rb = graded_monomials(d, rows);
    let cb = graded_monomials(d, cols);
    let mut m = DMatrix::zeros(rb.len(), cb.len());
    for (i, a) in rb.indices().iter().enumerate() {
        for (j, b) in cb.indices().iter().enumerate() {
            let mut g = a.add(b);
            if let Some(s) = shift {
                g = g.add(s);
            }
            m[(i, j)] = provider.moment(&g)?;
        }
    }
    Ok(m)
}

/// Assemble `M_n`.
pub fn moment_matrix(provider: &MomentProvider, n: usize) -> Result<MomentMatrixSet> {
    provider.check_degree(2 * n)?;
    let basis = graded_monomials(provider.dim(), n);
    let full = shifted_moment_matrix(provider, n, n, None)?;
    Ok(MomentMatrixSet { n, basis, full })
}

/// One row of a definiteness scan.
#[derive(Debug, Clone, Serialize)]
pub struct DefinitenessEntry {
    pub n: usize,
    pub det: f64,
    pub sv_min: f64,
    pub sv_max: f64,
    pub definite: bool,
}

pub(crate) fn is_definite(m: &DMatrix<f64>, tol: f64) -> (bool, f64, f64) {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    (smax > 0.0 && smin > tol * smax, smin, smax)
}

/// Flag each `M_n`, `n <= big_n`, as definite iff its smallest singular value
/// exceeds `tol` times the largest.
pub fn definiteness_scan(provider: &MomentProvider, big_n: usize, tol: f64) -> Result<Vec<DefinitenessEntry>> {
    provider.check_degree(2 * big_n)?;
    (0..=big_n)
        .map(|n| {
            let m = moment_matrix(provider, n)?;
            let (definite, sv_min, sv_max) = is_definite(&m.full, tol);
            let det = m.full.clone().lu().determinant();
            Ok(DefinitenessEntry { n, det, sv_min, sv_max, definite })
        })
        .collect()
}

/// Outcome of the Hankel-Schur test at one degree.
#[derive(Debug, Clone)]
pub struct HankelSchurReport {
    pub n: usize,
    /// `M_{n,n-1}^T M_{n-1}^{-1} M_{n,n-1}`, indexed by the degree-`n` block.
    pub matrix: DMatrix<f64>,
    /// Largest spread among entries sharing the same `alpha + beta`.
    pub deviation: f64,
    pub scale: f64,
    /// Two index pairs `(alpha, beta)`, `(alpha', beta')` with equal sums and
    /// the largest disagreement.
    pub violated_pair: Option<((MultiIndex, MultiIndex), (MultiIndex, MultiIndex))>,
    pub verdict: bool,
}

/// Test whether `M_{n,n-1}^T M_{n-1}^{-1} M_{n,n-1}` is a Hankel matrix.
pub fn hankel_schur_test(provider: &MomentProvider, n: usize, tol: f64) -> Result<HankelSchurReport> {
    let mm = moment_matrix(provider, n)?;
    let lower = mm.lower();
    let cross = mm.cross();
    let matrix = if n == 0 {
        DMatrix::zeros(1, 1)
    } else {
        if !is_definite(&lower, TOL_DEF).0 {
            return Err(Error::SingularMomentMatrix { degree: n - 1 });
        }
        let x = solve(&lower, &cross).ok_or(Error::SingularMomentMatrix { degree: n - 1 })?;
        let h = cross.transpose() * x;
        (&h + h.transpose()) * 0.5
    };
    let top: Vec<MultiIndex> = mm.basis.indices()[mm.basis.block(n)].to_vec();
    let mut groups: HashMap<MultiIndex, Vec<(usize, usize)>> = HashMap::new();
    for (i, a) in top.iter().enumerate() {
        for (j, b) in top.iter().enumerate() {
            groups.entry(a.add(b)).or_default().push((i, j));
        }
    }
    let mut deviation = 0.0;
    let mut worst = None;
    for cells in groups.values() {
        let (mut lo, mut hi) = (cells[0], cells[0]);
        for &c in cells {
            if matrix[c] < matrix[lo] {
                lo = c;
            }
            if matrix[c] > matrix[hi] {
                hi = c;
            }
        }
        let spread = matrix[hi] - matrix[lo];
        if spread > deviation {
            deviation = spread;
            worst = Some(((top[lo.0].clone(), top[lo.1].clone()), (top[hi.0].clone(), top[hi.1].clone())));
        }
    }
    let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
    let verdict = deviation <= tol * scale;
    Ok(HankelSchurReport { n, matrix, deviation, scale, violated_pair: if verdict { None } else { worst }, verdict })
}

/// JSON moment-sequence format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub d: usize,
    pub max_degree: usize,
    pub entries: Vec<MomentEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub alpha: MultiIndex,
    pub value: f64,
}

impl MomentTable {
    /// Validate and turn into a provider: every `|alpha| <= max_degree` must
    /// appear exactly once with a finite value, and `mu_0 != 0`.
    pub fn into_provider(self) -> Result<MomentProvider> {
        if self.d == 0 || self.d > 8 {
            return Err(Error::Parse(format!("unsupported dimension {}", self.d)));
        }
        if self.max_degree > 64 {
            return Err(Error::Parse(format!("max_degree {} too large", self.max_degree)));
        }
        let mut map = HashMap::with_capacity(self.entries.len());
        for e in self.entries {
            if e.alpha.dim() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: e.alpha.dim() });
            }
            if e.alpha.degree() > self.max_degree {
                return Err(Error::Parse(format!("entry {} exceeds max_degree", e.alpha)));
            }
            if !e.value.is_finite() {
                return Err(Error::Parse(format!("non-finite moment at {}", e.alpha)));
            }
            if map.insert(e.alpha.clone(), e.value).is_some() {
                return Err(Error::Parse(format!("duplicate entry {}", e.alpha)));
            }
        }
        let expected = crate::index::dim_total(self.d, self.max_degree);
        if map.len() != expected {
            return Err(Error::Parse(format!("table has {} entries, {} required", map.len(), expected)));
        }
        if map.get(&MultiIndex::zero(self.d)).copied() == Some(0.0) {
            return Err(Error::Parse("mu_0 must be nonzero".into()));
        }
        Ok(MomentProvider::from_table(self.d, Some(self.max_degree), map))
    }
}
