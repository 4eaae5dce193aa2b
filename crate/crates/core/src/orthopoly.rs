//! Monic and sign-orthonormal bases and their matrix three-term recurrences.
//!
//! Coefficient matrices are stored column-per-polynomial: the degree-`k`
//! vector `P_k` equals `coef[k]^T x^k`, where `x^k` is the graded monomial
//! vector of all `|alpha| <= k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{dim_homogeneous, graded_monomials, shift_matrix, GradedBasis, MultiIndex};
use crate::json::DenseMatrix;
use crate::linalg::{is_finite, max_abs, pinv, rank, solve, sym_eigen_sorted, to_complex, CVector};
use crate::moments::{is_definite, moment_matrix, shifted_moment_matrix, MomentProvider};

/// Anything that can evaluate a stacked polynomial basis from coefficients.
pub trait PolyBasis {
    fn graded(&self) -> &GradedBasis;
    fn coefficients(&self) -> &[DMatrix<f64>];

    fn dim(&self) -> usize {
        self.graded().dim()
    }

    /// Highest degree held by the basis.
    fn degree(&self) -> usize {
        self.coefficients().len() - 1
    }

    /// `(P_0(z), ..., P_n(z))`.
    fn evaluate(&self, z: &[Complex64]) -> Vec<CVector> {
        let mono = self.graded().monomials(z);
        eval_with(self.coefficients(), &mono)
    }

    /// `(d/dz_j P_0(z), ..., d/dz_j P_n(z))`.
    fn evaluate_dj(&self, z: &[Complex64], j: usize) -> Vec<CVector> {
        let mono = self.graded().monomials_dj(z, j);
        eval_with(self.coefficients(), &mono)
    }
}

fn eval_with(coef: &[DMatrix<f64>], mono: &[Complex64]) -> Vec<CVector> {
    coef.iter()
        .map(|c| {
            DVector::from_iterator(
                c.ncols(),
                (0..c.ncols()).map(|col| (0..c.nrows()).map(|r| mono[r] * c[(r, col)]).sum()),
            )
        })
        .collect()
}

/// Monic orthogonal basis: `P_k = x_0^k + lower`, orthogonal to `Pi_{k-1}`.
#[derive(Debug, Clone)]
pub struct MonicBasis {
    pub graded: GradedBasis,
    /// `coef[k]` has shape `r_k x r_k^0` with identity top block.
    pub coef: Vec<DMatrix<f64>>,
    /// Schur complements `H_k = L(P_k P_k^T)`.
    pub schur: Vec<DMatrix<f64>>,
    /// `M_n` used for the construction.
    pub moments: DMatrix<f64>,
}

impl PolyBasis for MonicBasis {
    fn graded(&self) -> &GradedBasis {
        &self.graded
    }
    fn coefficients(&self) -> &[DMatrix<f64>] {
        &self.coef
    }
}

/// Build the monic basis through degree `n`. Every `M_k`, `k <= n`, must be
/// definite at relative singular-value floor `tol_def`.
pub fn build_monic(provider: &MomentProvider, n: usize, tol_def: f64) -> Result<MonicBasis> {
    let mm = moment_matrix(provider, n)?;
    let graded = mm.basis.clone();
    let m = mm.full;
    let mut coef = Vec::with_capacity(n + 1);
    let mut schur = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let rk = graded.block_start(k + 1);
        if !is_definite(&m.view((0, 0), (rk, rk)).into_owned(), tol_def).0 {
            return Err(Error::SingularMomentMatrix { degree: k });
        }
        let lo = graded.block_start(k);
        let width = rk - lo;
        let lower = m.view((0, 0), (lo, lo)).into_owned();
        let cross = m.view((0, lo), (lo, width)).into_owned();
        let top = m.view((lo, lo), (width, width)).into_owned();
        let x = solve(&lower, &cross).ok_or(Error::SingularMomentMatrix { degree: k.saturating_sub(1) })?;
        let mut c = DMatrix::zeros(rk, width);
        c.view_mut((0, 0), (lo, width)).copy_from(&(-&x));
        c.view_mut((lo, 0), (width, width)).fill_with_identity();
        let h = &top - cross.transpose() * &x;
        coef.push(c);
        schur.push((&h + h.transpose()) * 0.5);
    }
    Ok(MonicBasis { graded, coef, schur, moments: m })
}

/// Sign-orthonormal basis: `L(P_k P_k^T) = S_k` with `S_k` diagonal `+-1`.
#[derive(Debug, Clone)]
pub struct SignOrthoBasis {
    pub graded: GradedBasis,
    pub coef: Vec<DMatrix<f64>>,
    /// Diagonal of `S_k`.
    pub signature: Vec<Vec<f64>>,
    /// Eigenvectors of `H_k` as rows, `H_k = Q^T diag(lambda) Q`.
    pub q: Vec<DMatrix<f64>>,
    pub lambda: Vec<Vec<f64>>,
    /// Leading coefficient `G_k = |Lambda|^{-1/2} Q`.
    pub lead: Vec<DMatrix<f64>>,
    pub moments: DMatrix<f64>,
}

impl PolyBasis for SignOrthoBasis {
    fn graded(&self) -> &GradedBasis {
        &self.graded
    }
    fn coefficients(&self) -> &[DMatrix<f64>] {
        &self.coef
    }
}

impl SignOrthoBasis {
    pub fn signature_matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.signature[k].clone()))
    }

    /// True when some `S_k` has a `-1` entry.
    pub fn has_negative_signature(&self) -> bool {
        self.signature.iter().flatten().any(|&s| s < 0.0)
    }

    /// Worst of `max_{j<k} |L(P_k P_j^T)|` and `max_k |L(P_k P_k^T) - S_k|`,
    /// relative to `|M_n|_max`.
    pub fn orthogonality_residual(&self) -> f64 {
        let g = &self.graded;
        let mut worst: f64 = 0.0;
        for k in 0..self.coef.len() {
            let rk = g.block_start(k + 1);
            for j in 0..=k {
                let rj = g.block_start(j + 1);
                let gram = self.coef[k].transpose() * self.moments.view((0, 0), (rk, rj)) * &self.coef[j];
                let target = if j == k { self.signature_matrix(k) } else { DMatrix::zeros(gram.nrows(), gram.ncols()) };
                worst = worst.max(max_abs(&(gram - target)));
            }
        }
        worst / max_abs(&self.moments).max(f64::MIN_POSITIVE)
    }
}

/// Diagonalize each Schur complement and rescale so that `L(P P^T) = S`.
pub fn sign_orthonormalize(monic: &MonicBasis, tol_def: f64) -> Result<SignOrthoBasis> {
    let mut out = SignOrthoBasis {
        graded: monic.graded.clone(),
        coef: Vec::new(),
        signature: Vec::new(),
        q: Vec::new(),
        lambda: Vec::new(),
        lead: Vec::new(),
        moments: monic.moments.clone(),
    };
    for (k, h) in monic.schur.iter().enumerate() {
        let (vals, q) = sym_eigen_sorted(h);
        let big = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let small = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if !(big > 0.0) || small < tol_def * big {
            return Err(Error::NearSingularSchur { degree: k, ratio: if big > 0.0 { small / big } else { 0.0 } });
        }
        let scale = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.abs().sqrt())));
        let lead = &scale * &q;
        out.coef.push(&monic.coef[k] * lead.transpose());
        out.signature.push(vals.iter().map(|v| v.signum()).collect());
        out.lead.push(lead);
        out.q.push(q);
        out.lambda.push(vals);
    }
    Ok(out)
}

/// Which normalization a set of recurrence matrices refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    SignOrthonormal,
    Monic,
}

/// `x_i S_k P_k = A_{k,i} P_{k+1} + B_{k,i} P_k + C_{k,i} P_{k-1}` for
/// `k = 0..=degree` and every coordinate `i` (zero-based), together with the
/// matrices `D`, `E`, `F` of the recursive evaluation
/// `P_{k+1} = sum_i D_{k,i}^T x_i S_k P_k - E_k P_k - F_k P_{k-1}`.
#[derive(Debug, Clone)]
pub struct RecurrenceData {
    pub flavor: Flavor,
    pub dim: usize,
    pub degree: usize,
    /// Constant value of `P_0`.
    pub p0: f64,
    /// Diagonal of `S_k` for `k = 0..=degree+1` (all ones for the monic flavor).
    pub signature: Vec<Vec<f64>>,
    pub a: Vec<Vec<DMatrix<f64>>>,
    pub b: Vec<Vec<DMatrix<f64>>>,
    pub c: Vec<Vec<DMatrix<f64>>>,
    pub d: Vec<Vec<DMatrix<f64>>>,
    pub e: Vec<DMatrix<f64>>,
    pub f: Vec<DMatrix<f64>>,
}

impl RecurrenceData {
    fn assemble(
        flavor: Flavor,
        dim: usize,
        p0: f64,
        signature: Vec<Vec<f64>>,
        a: Vec<Vec<DMatrix<f64>>>,
        b: Vec<Vec<DMatrix<f64>>>,
        c: Vec<Vec<DMatrix<f64>>>,
        tol: f64,
    ) -> Result<Self> {
        let degree = a.len() - 1;
        let mut dd = Vec::with_capacity(a.len());
        let mut e = Vec::with_capacity(a.len());
        let mut f = Vec::with_capacity(a.len());
        for k in 0..=degree {
            let r0 = dim_homogeneous(dim, k);
            let r1 = dim_homogeneous(dim, k + 1);
            for (i, ai) in a[k].iter().enumerate() {
                if rank(ai, tol) < r0 {
                    return Err(Error::RankDeficientA { degree: k, coordinate: i + 1 });
                }
            }
            let mut stacked = DMatrix::zeros(dim * r0, r1);
            for (i, ai) in a[k].iter().enumerate() {
                stacked.view_mut((i * r0, 0), (r0, r1)).copy_from(ai);
            }
            if rank(&stacked, tol) < r1 {
                return Err(Error::RankDeficientA { degree: k, coordinate: 0 });
            }
            let left = pinv(&stacked);
            let dk: Vec<DMatrix<f64>> =
                (0..dim).map(|i| left.view((0, i * r0), (r1, r0)).transpose()).collect();
            let mut ek = DMatrix::zeros(r1, r0);
            let mut fk = DMatrix::zeros(r1, c[k][0].ncols());
            for i in 0..dim {
                ek += dk[i].transpose() * &b[k][i];
                fk += dk[i].transpose() * &c[k][i];
            }
            dd.push(dk);
            e.push(ek);
            f.push(fk);
        }
        Ok(RecurrenceData { flavor, dim, degree, p0, signature, a, b, c, d: dd, e, f })
    }

    pub fn signature_matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.signature[k].clone()))
    }

    /// `(P_0(z), ..., P_{degree+1}(z))` from the recurrence matrices alone.
    pub fn evaluate_recursive(&self, z: &[Complex64]) -> Vec<CVector> {
        assert_eq!(z.len(), self.dim, "point dimension");
        let mut out: Vec<CVector> = vec![CVector::from_element(1, Complex64::new(self.p0, 0.0))];
        for k in 0..=self.degree {
            let sp: CVector = out[k].component_mul(&CVector::from_iterator(
                out[k].len(),
                self.signature[k].iter().map(|&s| Complex64::new(s, 0.0)),
            ));
            let mut next = -(to_complex(&self.e[k]) * &out[k]);
            for i in 0..self.dim {
                next += to_complex(&self.d[k][i].transpose()) * (&sp * z[i]);
            }
            if k > 0 {
                next -= to_complex(&self.f[k]) * &out[k - 1];
            }
            out.push(next);
        }
        out
    }

    /// Largest relative residual of the three-term relation at `z`, given
    /// stacked values through degree `degree+1`.
    pub fn three_term_residual(&self, values: &[CVector], z: &[Complex64]) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.degree {
            for i in 0..self.dim {
                let lhs: CVector = CVector::from_iterator(
                    values[k].len(),
                    values[k].iter().zip(&self.signature[k]).map(|(v, &s)| v * s * z[i]),
                );
                let mut rhs = to_complex(&self.a[k][i]) * &values[k + 1] + to_complex(&self.b[k][i]) * &values[k];
                if k > 0 {
                    rhs += to_complex(&self.c[k][i]) * &values[k - 1];
                }
                let scale = lhs.norm().max(rhs.norm()).max(1.0);
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        worst
    }

    /// Largest residual of `sum_i D_{k,i}^T A_{k,i} = I`.
    pub fn left_inverse_residual(&self) -> f64 {
        (0..=self.degree)
            .map(|k| {
                let mut s = -DMatrix::identity(self.a[k][0].ncols(), self.a[k][0].ncols());
                for i in 0..self.dim {
                    s += self.d[k][i].transpose() * &self.a[k][i];
                }
                max_abs(&s)
            })
            .fold(0.0, f64::max)
    }
}

/// Recurrence matrices of a sign-orthonormal basis through degree
/// `basis.degree() - 1`, via `A = S_k L(x_i P_k P_{k+1}^T) S_{k+1}` and
/// `B = S_k L(x_i P_k P_k^T) S_k`, with `C_{k,i} = A_{k-1,i}^T`.
pub fn recurrence_from_l(basis: &SignOrthoBasis, provider: &MomentProvider, tol: f64) -> Result<RecurrenceData> {
    let top = basis.degree();
    if top == 0 {
        return Err(Error::IncompleteRecurrence { have: 0, need: 1 });
    }
    let nrec = top - 1;
    let d = basis.dim();
    let g = &basis.graded;
    let mut a = vec![Vec::<DMatrix<f64>>::with_capacity(d); nrec + 1];
    let mut b = vec![Vec::<DMatrix<f64>>::with_capacity(d); nrec + 1];
    let mut c = vec![Vec::<DMatrix<f64>>::with_capacity(d); nrec + 1];
    for i in 0..d {
        let mi = shifted_moment_matrix(provider, nrec, nrec + 1, Some(&MultiIndex::unit(d, i)))?;
        for k in 0..=nrec {
            let rk = g.block_start(k + 1);
            let rk1 = g.block_start(k + 2);
            let sk = basis.signature_matrix(k);
            let sk1 = basis.signature_matrix(k + 1);
            let ak = &sk * basis.coef[k].transpose() * mi.view((0, 0), (rk, rk1)) * &basis.coef[k + 1] * &sk1;
            let bk = &sk * basis.coef[k].transpose() * mi.view((0, 0), (rk, rk)) * &basis.coef[k] * &sk;
            // exact B is symmetric; drop the rounding asymmetry of the triple product
            let bk = (&bk + bk.transpose()) * 0.5;
            let ck = if k == 0 { DMatrix::zeros(1, 0) } else { a[k - 1][i].transpose() };
            a[k].push(ak);
            b[k].push(bk);
            c[k].push(ck);
        }
    }
    let p0 = basis.coef[0][(0, 0)];
    RecurrenceData::assemble(Flavor::SignOrthonormal, d, p0, basis.signature.clone(), a, b, c, tol)
}

/// Recurrence matrices of the monic basis through degree `monic.degree() - 1`:
/// `A_{k,i} = L_{k,i}`, `C_{k,i} = H_k L_{k-1,i}^T H_{k-1}^{-1}`, and `B_{k,i}`
/// by comparing degree-`k` coefficients of `x_i P_k - L_{k,i} P_{k+1}`.
pub fn recurrence_monic(monic: &MonicBasis, tol: f64) -> Result<RecurrenceData> {
    let top = monic.degree();
    if top == 0 {
        return Err(Error::IncompleteRecurrence { have: 0, need: 1 });
    }
    let nrec = top - 1;
    let d = monic.dim();
    let g = &monic.graded;
    let mut a = vec![Vec::<DMatrix<f64>>::with_capacity(d); nrec + 1];
    let mut b = vec![Vec::with_capacity(d); nrec + 1];
    let mut c = vec![Vec::with_capacity(d); nrec + 1];
    let block = |coef: &DMatrix<f64>, j: usize| {
        let r = g.block(j);
        coef.rows(r.start, r.len()).into_owned()
    };
    for k in 0..=nrec {
        let r0 = dim_homogeneous(d, k);
        for i in 0..d {
            let lk = shift_matrix(d, k, i);
            let mut bt = -(block(&monic.coef[k + 1], k) * lk.transpose());
            let ck = if k == 0 {
                DMatrix::zeros(1, 0)
            } else {
                let lprev = shift_matrix(d, k - 1, i);
                bt += lprev.transpose() * block(&monic.coef[k], k - 1);
                let rhs = &lprev * &monic.schur[k];
                solve(&monic.schur[k - 1], &rhs).ok_or(Error::SingularSchur { degree: k - 1 })?.transpose()
            };
            debug_assert_eq!(bt.nrows(), r0);
            a[k].push(lk);
            b[k].push(bt.transpose());
            c[k].push(ck);
        }
    }
    let signature = (0..=top).map(|k| vec![1.0; dim_homogeneous(d, k)]).collect();
    RecurrenceData::assemble(Flavor::Monic, d, 1.0, signature, a, b, c, tol)
}

/// Full pipeline from moments to a sign-orthonormal basis through degree `n`.
pub fn sign_orthonormal_basis(provider: &MomentProvider, n: usize, tol_def: f64) -> Result<SignOrthoBasis> {
    sign_orthonormalize(&build_monic(provider, n, tol_def)?, tol_def)
}

/// Projection residual between the column spans of two `r_k x r_k^0`
/// coefficient matrices.
pub fn span_residual(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let px = x * pinv(x);
    let r = y - &px * y;
    max_abs(&r) / max_abs(y).max(f64::MIN_POSITIVE)
}

/// JSON form of [`RecurrenceData`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceJson {
    pub flavor: Flavor,
    pub d: usize,
    pub degree: usize,
    pub p0: f64,
    pub signatures: Vec<Vec<f64>>,
    pub blocks: Vec<RecurrenceBlock>,
}

/// Matrices for one degree `k` and one-based coordinate `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceBlock {
    pub k: usize,
    pub i: usize,
    #[serde(rename = "A")]
    pub a: DenseMatrix,
    #[serde(rename = "B")]
    pub b: DenseMatrix,
    #[serde(rename = "C")]
    pub c: DenseMatrix,
}

impl From<&RecurrenceData> for RecurrenceJson {
    fn from(r: &RecurrenceData) -> Self {
        let mut blocks = Vec::new();
        for k in 0..=r.degree {
            for i in 0..r.dim {
                blocks.push(RecurrenceBlock {
                    k,
                    i: i + 1,
                    a: (&r.a[k][i]).into(),
                    b: (&r.b[k][i]).into(),
                    c: (&r.c[k][i]).into(),
                });
            }
        }
        RecurrenceJson { flavor: r.flavor, d: r.dim, degree: r.degree, p0: r.p0, signatures: r.signature.clone(), blocks }
    }
}

impl RecurrenceJson {
    /// Validate shapes and rebuild the derived matrices.
    pub fn into_recurrence(self, tol: f64) -> Result<RecurrenceData> {
        let (d, n) = (self.d, self.degree);
        if d == 0 || d > 8 || n > 32 {
            return Err(Error::Parse(format!("unsupported dimension {d} or degree {n}")));
        }
        if !self.p0.is_finite() || self.p0 == 0.0 {
            return Err(Error::Parse("p0 must be finite and nonzero".into()));
        }
        if self.signatures.len() != n + 2 {
            return Err(Error::Parse(format!("expected {} signature blocks", n + 2)));
        }
        for (k, s) in self.signatures.iter().enumerate() {
            if s.len() != dim_homogeneous(d, k) || s.iter().any(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::Parse(format!("signature block {k} is malformed")));
            }
        }
        if self.blocks.len() != (n + 1) * d {
            return Err(Error::Parse(format!("expected {} blocks, found {}", (n + 1) * d, self.blocks.len())));
        }
        let mut a = vec![vec![DMatrix::zeros(0, 0); d]; n + 1];
        let mut b = a.clone();
        let mut c = a.clone();
        let mut seen = vec![vec![false; d]; n + 1];
        for blk in self.blocks {
            if blk.k > n || blk.i == 0 || blk.i > d {
                return Err(Error::Parse(format!("block index (k={}, i={}) out of range", blk.k, blk.i)));
            }
            let (k, i) = (blk.k, blk.i - 1);
            if std::mem::replace(&mut seen[k][i], true) {
                return Err(Error::Parse(format!("duplicate block (k={k}, i={})", i + 1)));
            }
            let r0 = dim_homogeneous(d, k);
            let r1 = dim_homogeneous(d, k + 1);
            let rm = if k == 0 { 0 } else { dim_homogeneous(d, k - 1) };
            let am = blk.a.to_matrix()?;
            let bm = blk.b.to_matrix()?;
            let cm = blk.c.to_matrix()?;
            if am.shape() != (r0, r1) || bm.shape() != (r0, r0) || cm.shape() != (r0, rm) {
                return Err(Error::Parse(format!("block (k={k}, i={}) has wrong shape", i + 1)));
            }
            a[k][i] = am;
            b[k][i] = bm;
            c[k][i] = cm;
        }
        if !a.iter().flatten().all(is_finite) {
            return Err(Error::Parse("non-finite entry".into()));
        }
        RecurrenceData::assemble(self.flavor, d, self.p0, self.signatures, a, b, c, tol)
    }
}

/// Coefficient matrix of `P_k` in monomials of degree `<= k`, regenerated
/// from the recurrence alone (Favard direction).
pub fn coefficients_from_recurrence(rec: &RecurrenceData) -> Vec<DMatrix<f64>> {
    let d = rec.dim;
    let g = graded_monomials(d, rec.degree + 1);
    let mut coef: Vec<DMatrix<f64>> = vec![DMatrix::from_element(1, 1, rec.p0)];
    for k in 0..=rec.degree {
        let rk1 = g.block_start(k + 2);
        let rk = g.block_start(k + 1);
        // x_i acting on a coefficient matrix over degree <= k
        let mut next = DMatrix::zeros(rk1, dim_homogeneous(d, k + 1));
        let sp = &coef[k] * rec.signature_matrix(k);
        for i in 0..d {
            let mut shifted = DMatrix::zeros(rk1, sp.ncols());
            for (row, alpha) in g.indices()[..rk].iter().enumerate() {
                let to = g.position(&alpha.bump(i)).expect("degree within range");
                shifted.row_mut(to).copy_from(&sp.row(row));
            }
            next += shifted * &rec.d[k][i];
        }
        let mut lower = DMatrix::zeros(rk1, next.ncols());
        let ek = &coef[k] * rec.e[k].transpose();
        lower.view_mut((0, 0), (rk, next.ncols())).copy_from(&ek);
        if k > 0 {
            let rkm = g.block_start(k);
            let fk = &coef[k - 1] * rec.f[k].transpose();
            let mut v = lower.view_mut((0, 0), (rkm, next.ncols()));
            v += fk;
        }
        coef.push(next - lower);
    }
    coef
}
