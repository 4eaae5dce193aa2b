//! Exponential-polynomial reconstruction of moment sequences and the
//! rational convergents built from it.
//!
//! At level `n` the common zeros `Z_n` of `P_n` carry an exponential
//! polynomial `g_n(alpha) = sum_zeta G_zeta zeta^alpha` fitted to the previous
//! sequence on `|alpha| <= n-1`. The resulting `mu^n` agrees with the original
//! moments on `|alpha| <= 2n-1`, and its generating function is the rational
//! form `sum_zeta G_zeta prod_j z_j / (z_j - zeta_j)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cubature::bilinear_kernel_from_values;
use crate::error::{Error, Result};
use crate::index::{dim_total, is_lower_set, lower_triangle, MultiIndex};
use crate::jacobi::{build_truncated, common_zeros, simplicity_check, ZeroSet};
use crate::linalg::{singular_values, CMatrix, CVector};
use crate::moments::{exp_moment, moment_matrix, MomentProvider, MomentSource};
use crate::orthopoly::{recurrence_from_l, sign_orthonormal_basis, PolyBasis, RecurrenceData};
use crate::Tolerances;

/// Relative tolerance of the coincidence check on `|alpha| <= 2n-1`.
pub const COINCIDENCE_TOL: f64 = 1e-8;

/// `g_n(alpha) = sum_zeta G_zeta zeta^alpha` over a simple zero set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialPolynomial {
    pub n: usize,
    pub nodes: Vec<Vec<Complex64>>,
    pub coeffs: Vec<Complex64>,
    /// Relative residual of the fit system.
    pub fit_residual: f64,
    /// 2-norm condition number of the column-scaled Vandermonde matrix.
    pub condition: f64,
}

impl ExponentialPolynomial {
    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |z| z.len())
    }

    /// `g_n(alpha)` before discarding the imaginary part.
    pub fn value(&self, alpha: &MultiIndex) -> Complex64 {
        exp_moment(&self.nodes, &self.coeffs, alpha)
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ExponentialPolynomial {
        ExponentialPolynomial { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), ..self.clone() }
    }

    /// Largest `|Im g(alpha)|` over `|alpha| <= max_degree`, relative to
    /// `sum_zeta |G_zeta zeta^alpha|`.
    pub fn imaginary_residue(&self, max_degree: usize) -> f64 {
        lower_triangle(self.dim(), max_degree)
            .iter()
            .map(|alpha| {
                let scale: f64 = self
                    .nodes
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(z, c)| (c * crate::index::multi_power(z, alpha)).norm())
                    .sum();
                if scale > 0.0 {
                    self.value(alpha).im.abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix `[zeta^alpha]`, rows indexed by a lower set and columns by nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVandermonde {
    pub rows: Vec<MultiIndex>,
    pub matrix: CMatrix,
}

impl ThetaVandermonde {
    pub fn new(nodes: &[Vec<Complex64>], rows: Vec<MultiIndex>) -> ThetaVandermonde {
        let matrix =
            CMatrix::from_fn(rows.len(), nodes.len(), |r, c| crate::index::multi_power(&nodes[c], &rows[r]));
        ThetaVandermonde { rows, matrix }
    }

    /// Column scaling factors `1 / max_r |V_rc|`.
    fn column_scales(&self) -> Vec<f64> {
        self.matrix
            .column_iter()
            .map(|col| {
                let m = col.iter().map(|c| c.norm()).fold(0.0, f64::max);
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            })
            .collect()
    }

    fn scaled(&self) -> CMatrix {
        let s = self.column_scales();
        let mut m = self.matrix.clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= Complex64::new(s[j], 0.0);
        }
        m
    }

    /// 2-norm condition number of the column-scaled matrix.
    pub fn condition(&self) -> f64 {
        let sv = self.scaled().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

/// Solve `sum_zeta G_zeta zeta^alpha = previous(alpha)` for `alpha` in the lower
/// set (default: the triangle `|alpha| <= n-1`). Columns are scaled before an
/// LU solve with partial pivoting; coefficients of conjugate nodes are made
/// conjugate and those of real nodes real.
pub fn fit_exponential(
    zs: &ZeroSet,
    previous: &dyn Fn(&MultiIndex) -> Result<f64>,
    lower: Option<&[MultiIndex]>,
    tol_fit: f64,
) -> Result<ExponentialPolynomial> {
    if !zs.is_complete() {
        return Err(Error::IncompleteZeroSet { found: zs.points.len(), expected: zs.expected });
    }
    zs.ensure_simple()?;
    let n = zs.n;
    let d = zs.dim;
    let rows = match lower {
        Some(set) => {
            if set.len() != zs.expected || !is_lower_set(set) || set.iter().any(|a| a.dim() != d) {
                return Err(Error::Parse(format!(
                    "fit conditions need a lower set of {} multi-indices in dimension {d}",
                    zs.expected
                )));
            }
            set.to_vec()
        }
        None => lower_triangle(d, n - 1),
    };
    let nodes: Vec<Vec<Complex64>> = zs.points.iter().map(|p| p.z.clone()).collect();
    let v = ThetaVandermonde::new(&nodes, rows);
    let rhs = v.rows.iter().map(|a| previous(a).map(|x| Complex64::new(x, 0.0))).collect::<Result<Vec<_>>>()?;
    let rhs = CVector::from_vec(rhs);

    let condition = v.condition();
    let scales = v.column_scales();
    let y = v.scaled().lu().solve(&rhs).ok_or(Error::SingularVandermonde { cond: condition })?;
    let mut coeffs: Vec<Complex64> = y.iter().zip(&scales).map(|(c, s)| c * s).collect();
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::SingularVandermonde { cond: condition });
    }
    enforce_conjugate_symmetry(&nodes, &mut coeffs);

    let fitted = &v.matrix * CVector::from_vec(coeffs.clone());
    let scale = rhs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let fit_residual = (&fitted - &rhs).iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
    if !(fit_residual <= tol_fit) {
        return Err(Error::SingularVandermonde { cond: condition });
    }
    Ok(ExponentialPolynomial { n, nodes, coeffs, fit_residual, condition })
}

fn enforce_conjugate_symmetry(nodes: &[Vec<Complex64>], coeffs: &mut [Complex64]) {
    let mut done = vec![false; nodes.len()];
    for i in 0..nodes.len() {
        if done[i] {
            continue;
        }
        done[i] = true;
        if nodes[i].iter().all(|c| c.im == 0.0) {
            coeffs[i] = Complex64::new(coeffs[i].re, 0.0);
            continue;
        }
        let conj: Vec<Complex64> = nodes[i].iter().map(|c| c.conj()).collect();
        let partner = (0..nodes.len()).filter(|&j| !done[j]).min_by(|&a, &b| {
            let da: f64 = nodes[a].iter().zip(&conj).map(|(x, y)| (x - y).norm()).sum();
            let db: f64 = nodes[b].iter().zip(&conj).map(|(x, y)| (x - y).norm()).sum();
            da.total_cmp(&db)
        });
        if let Some(j) = partner {
            done[j] = true;
            let avg = (coeffs[i] + coeffs[j].conj()) * 0.5;
            coeffs[i] = avg;
            coeffs[j] = avg.conj();
        }
    }
}

/// Provider with `mu^n_alpha = Re g_n(alpha)` and no degree limit.
pub fn reconstructed_provider(g: &ExponentialPolynomial) -> MomentProvider {
    MomentProvider::new(
        g.dim(),
        None,
        format!("exponential:n={}", g.n),
        MomentSource::Exponential { nodes: g.nodes.clone(), coeffs: g.coeffs.clone() },
    )
}

/// Agreement of a reconstructed sequence with the original on `|alpha| <= 2n-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub n: usize,
    /// Largest `|mu_alpha - mu^n_alpha|` relative to `max |mu_alpha|` on the set.
    pub max_dev: f64,
    /// First multi-index (graded order) whose deviation exceeds the tolerance.
    pub first_mismatch: Option<MultiIndex>,
    /// Largest relative deviation at `|alpha| = 2n`, when the original reaches it.
    pub probe_dev: Option<f64>,
}

/// Compare `original` and `reconstructed` exhaustively on `|alpha| <= 2n-1`
/// and probe the first order beyond.
pub fn verify_coincidence(
    original: &MomentProvider,
    reconstructed: &MomentProvider,
    n: usize,
    tol: f64,
) -> Result<CoincidenceReport> {
    let top = 2 * n - 1;
    original.check_degree(top)?;
    let set = lower_triangle(original.dim(), top);
    let mut pairs = Vec::with_capacity(set.len());
    for alpha in &set {
        pairs.push((original.moment(alpha)?, reconstructed.moment(alpha)?));
    }
    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let devs: Vec<f64> = pairs.iter().map(|(a, b)| (a - b).abs() / scale).collect();
    let max_dev = devs.iter().copied().fold(0.0, f64::max);
    let first_mismatch = devs.iter().position(|&x| !(x <= tol)).map(|k| set[k].clone());
    let probe_dev = if original.check_degree(top + 1).is_ok() {
        let mut worst = 0.0f64;
        for alpha in crate::index::homogeneous_indices(original.dim(), top + 1) {
            worst = worst.max((original.moment(&alpha)? - reconstructed.moment(&alpha)?).abs() / scale);
        }
        Some(worst)
    } else {
        None
    };
    Ok(CoincidenceReport { n, max_dev, first_mismatch, probe_dev })
}

/// Rational form `mu^n(z) = sum_zeta G_zeta prod_j z_j / (z_j - zeta_j)`.
pub fn rational_eval(g: &ExponentialPolynomial, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: z.len() });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (zeta, c) in g.nodes.iter().zip(&g.coeffs) {
        let mut term = *c;
        for (j, (zj, tj)) in z.iter().zip(zeta).enumerate() {
            let gap = zj - tj;
            if gap.norm() <= f64::EPSILON * (1.0 + zj.norm()) {
                return Err(Error::PoleHit { coordinate: j + 1 });
            }
            term *= zj / gap;
        }
        sum += term;
    }
    Ok(sum)
}

/// Parse an evaluation point written as comma-separated complex numbers,
/// e.g. `3+0.5i,-2,1i`.
pub fn parse_point(text: &str) -> Result<Vec<Complex64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty point".into()));
    }
    text.split(',')
        .map(|part| {
            let c: Complex64 = part
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{part:?} is not a complex number")))?;
            if c.re.is_finite() && c.im.is_finite() {
                Ok(c)
            } else {
                Err(Error::Parse(format!("{part:?} is not finite")))
            }
        })
        .collect()
}

/// Coefficients of `z^{-alpha}`, `|alpha| <= max_total_degree`, in the
/// expansion of the rational form at infinity. Each factor
/// `z_j / (z_j - zeta_j)` expands to `sum_k zeta_j^k z_j^{-k}`, so the
/// coefficients are assembled from per-coordinate geometric series.
pub fn laurent_coefficients(g: &ExponentialPolynomial, max_total_degree: usize) -> Vec<(MultiIndex, Complex64)> {
    let d = g.dim();
    // series[node][j][k] = zeta_j^k
    let series: Vec<Vec<Vec<Complex64>>> = g
        .nodes
        .iter()
        .map(|zeta| {
            zeta.iter()
                .map(|&t| {
                    let mut s = Vec::with_capacity(max_total_degree + 1);
                    let mut p = Complex64::new(1.0, 0.0);
                    for _ in 0..=max_total_degree {
                        s.push(p);
                        p *= t;
                    }
                    s
                })
                .collect()
        })
        .collect();
    lower_triangle(d, max_total_degree)
        .into_iter()
        .map(|alpha| {
            let c = series
                .iter()
                .zip(&g.coeffs)
                .map(|(s, c)| alpha.exponents().iter().enumerate().fold(*c, |acc, (j, &a)| acc * s[j][a as usize]))
                .sum();
            (alpha, c)
        })
        .collect()
}

/// Singular values of the degree-`n` moment matrix of a provider, descending.
pub fn hankel_singular_values(provider: &MomentProvider, n: usize) -> Result<Vec<f64>> {
    let set = moment_matrix(provider, n)?;
    let mut sv = singular_values(&set.full);
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Continued-fraction coefficients of one level, read off the recurrence
/// that produces `P_n` from `P_{n-1}`:
/// `P_n = (G_n(z) - E_n) P_{n-1} - F_n P_{n-2}` with
/// `G_n(z) = sum_i D_i^T z_i S_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionCoefficients {
    pub signature: Vec<f64>,
    pub d: Vec<DMatrix<f64>>,
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl FractionCoefficients {
    fn from_recurrence(rec: &RecurrenceData, k: usize) -> FractionCoefficients {
        FractionCoefficients {
            signature: rec.signature[k].clone(),
            d: rec.d[k].clone(),
            e: rec.e[k].clone(),
            f: rec.f[k].clone(),
        }
    }

    /// `G_n(z) = sum_i D_i^T z_i S_{n-1}`.
    pub fn g_matrix(&self, z: &[Complex64]) -> CMatrix {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.signature.clone()));
        let mut g = CMatrix::zeros(self.d[0].ncols(), s.nrows());
        for (di, zi) in self.d.iter().zip(z) {
            g += (di.transpose() * &s).map(|v| Complex64::new(v, 0.0)) * *zi;
        }
        g
    }
}

/// One level of the continued-fraction run.
#[derive(Debug)]
pub struct Level {
    pub n: usize,
    /// Exponential polynomial of `mu^n` in the caller's normalization.
    pub exp: ExponentialPolynomial,
    pub provider: MomentProvider,
    pub coincidence: CoincidenceReport,
    /// `max |mu^n_alpha - mu^{n-1}_alpha|` over the fit conditions.
    pub nesting_dev: f64,
    /// `max |G_zeta - 1 / K_n(zeta, zeta)|` in the `mu_0 = 1` normalization.
    pub gauss_weight_dev: f64,
    pub fraction: FractionCoefficients,
}

impl Level {
    pub fn report(&self) -> LevelReport {
        LevelReport {
            n: self.n,
            nodes: self.exp.nodes.iter().map(|z| [z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect()]).collect(),
            coefficients: self.exp.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            coincidence_max_dev: self.coincidence.max_dev,
            first_mismatch_alpha: self.coincidence.first_mismatch.as_ref().map(|a| a.exponents().to_vec()),
        }
    }
}

/// Convergents `mu^1, ..., mu^N`.
#[derive(Debug)]
pub struct ConvergentSequence {
    pub dim: usize,
    /// `mu_0` of the input provider; levels are fitted with `mu_0 = 1`.
    pub mu0: f64,
    pub levels: Vec<Level>,
}

/// Per-level JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub n: usize,
    /// Each node as `[real parts, imaginary parts]`.
    pub nodes: Vec<[Vec<f64>; 2]>,
    /// Each coefficient as `[re, im]`.
    pub coefficients: Vec<[f64; 2]>,
    pub coincidence_max_dev: f64,
    pub first_mismatch_alpha: Option<Vec<u32>>,
}

impl LevelReport {
    /// Rebuild the exponential polynomial of a stored level.
    pub fn into_exponential(self) -> Result<ExponentialPolynomial> {
        if self.nodes.len() != self.coefficients.len() {
            return Err(Error::Parse(format!(
                "{} nodes but {} coefficients",
                self.nodes.len(),
                self.coefficients.len()
            )));
        }
        let d = self.nodes.first().map_or(0, |z| z[0].len());
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for [re, im] in &self.nodes {
            if re.len() != d || im.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: re.len().max(im.len()) });
            }
            if re.iter().chain(im).any(|v| !v.is_finite()) {
                return Err(Error::Parse("non-finite node coordinate".into()));
            }
            nodes.push(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect());
        }
        if self.coefficients.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite coefficient".into()));
        }
        let coeffs = self.coefficients.iter().map(|&[r, i]| Complex64::new(r, i)).collect();
        Ok(ExponentialPolynomial { n: self.n, nodes, coeffs, fit_residual: 0.0, condition: f64::NAN })
    }
}

/// Run the level iteration for `n = 1..=levels`. Each level takes the common
/// zeros of `P_n` (from the recurrence of the normalized functional) and fits
/// them to the previous convergent only; the original moments enter solely
/// through the recurrence matrices and the coincidence reports.
pub fn continued_fraction_run(
    provider: &MomentProvider,
    levels: usize,
    tol: &Tolerances,
    seed: u64,
) -> Result<ConvergentSequence> {
    let d = provider.dim();
    provider.check_degree(2 * levels)?;
    let mu0 = provider.moment(&MultiIndex::zero(d))?;
    if mu0 == 0.0 || !mu0.is_finite() {
        return Err(Error::SingularMomentMatrix { degree: 0 });
    }
    let table: HashMap<MultiIndex, f64> = lower_triangle(d, 2 * levels)
        .into_iter()
        .map(|a| Ok((a.clone(), provider.moment(&a)? / mu0)))
        .collect::<Result<_>>()?;
    let normalized = MomentProvider::from_table(d, Some(2 * levels), table);

    let basis = sign_orthonormal_basis(&normalized, levels, tol.def)?;
    let rec = recurrence_from_l(&basis, &normalized, tol.def)?;

    let mut out: Vec<Level> = Vec::with_capacity(levels);
    let mut previous: Option<ExponentialPolynomial> = None;
    for n in 1..=levels {
        let wrap = |e: Error| Error::LevelFailed { level: n, source: Box::new(e) };
        let tj = build_truncated(&rec, n).map_err(wrap)?;
        let mut zs = common_zeros(&tj, &basis, tol, seed).map_err(wrap)?;
        simplicity_check(&mut zs, &basis, &basis.signature, tol.kernel);
        if zs.points.is_empty() {
            return Err(wrap(Error::IncompleteZeroSet { found: 0, expected: zs.expected }));
        }
        let prev = |a: &MultiIndex| -> Result<f64> {
            Ok(match &previous {
                None => 1.0,
                Some(g) => g.value(a).re,
            })
        };
        let g = fit_exponential(&zs, &prev, None, tol.fit).map_err(wrap)?;

        let mut nesting_dev = 0.0f64;
        for a in lower_triangle(d, n - 1) {
            nesting_dev = nesting_dev.max((g.value(&a).re - prev(&a)?).abs());
        }
        let mut gauss_weight_dev = 0.0f64;
        for (p, c) in zs.points.iter().zip(&g.coeffs) {
            let vals = basis.evaluate(&p.z);
            let k = bilinear_kernel_from_values(&vals[..=n], &basis.signature);
            gauss_weight_dev = gauss_weight_dev.max((c - k.inv()).norm());
        }

        let exp = g.scaled(mu0);
        let recon = reconstructed_provider(&exp);
        let coincidence = verify_coincidence(provider, &recon, n, COINCIDENCE_TOL).map_err(wrap)?;
        out.push(Level {
            n,
            exp,
            provider: recon,
            coincidence,
            nesting_dev,
            gauss_weight_dev,
            fraction: FractionCoefficients::from_recurrence(&rec, n - 1),
        });
        previous = Some(g);
    }
    debug_assert_eq!(out.len(), levels);
    debug_assert!(out.iter().all(|l| l.exp.nodes.len() == dim_total(d, l.n - 1)));
    Ok(ConvergentSequence { dim: d, mu0, levels: out })
}
