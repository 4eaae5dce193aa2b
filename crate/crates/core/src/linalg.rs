//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub(crate) type CMatrix = DMatrix<Complex64>;
pub(crate) type CVector = DVector<Complex64>;

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub(crate) fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub(crate) fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve `a x = b` by LU with partial pivoting. `None` if `a` is singular.
pub(crate) fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let mut x = lu.solve(b)?;
    // one step of iterative refinement
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Singular values, largest first.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Moore-Penrose pseudo-inverse.
pub(crate) fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    // Householder QR is exact for full-rank matrices where the SVD can lose
    // digits on clustered singular values; the SVD covers the rank-deficient case.
    if a.nrows() >= a.ncols() {
        if let Some(left) = full_rank_left_inverse(a) {
            return left;
        }
    } else if let Some(left) = full_rank_left_inverse(&a.transpose()) {
        return left.transpose();
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let eps = smax * 1e-13 * (a.nrows().max(a.ncols()) as f64);
    svd.pseudo_inverse(eps).expect("svd computed with both factors")
}

/// `R^{-1} Q^T` for a tall matrix whose triangular factor is well away from
/// singular; `None` otherwise.
fn full_rank_left_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.ncols() == 0 {
        return None;
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag = r.diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    if !(hi > 0.0 && lo > 1e-10 * hi) {
        return None;
    }
    r.solve_upper_triangular(&qr.q().transpose())
}

pub(crate) fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Eigen-decomposition `h = q^T diag(lambda) q` of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order and each row of `q` has its
/// first non-negligible entry positive.
pub(crate) fn sym_eigen_sorted(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut q = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (row, &k) in order.iter().enumerate() {
        values.push(eig.eigenvalues[k]);
        let col = eig.eigenvectors.column(k);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = col.iter().find(|v| v.abs() > 1e-8 * scale).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            q[(row, j)] = sign * col[j];
        }
    }
    (values, q)
}

/// Unit null vector of a square complex matrix via SVD, together with the
/// two smallest singular values (ascending).
pub(crate) fn null_vector(a: &CMatrix) -> (CVector, f64, f64) {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let k = order[0];
    let s0 = svd.singular_values[k];
    let s1 = order.get(1).map(|&j| svd.singular_values[j]).unwrap_or(f64::INFINITY);
    let v = DVector::from_iterator(n, (0..n).map(|j| v_t[(k, j)].conj()));
    (v, s0, s1)
}

/// Eigenvalues of a complex square matrix via the Schur form.
pub(crate) fn complex_eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    if a.nrows() == 1 {
        return vec![a[(0, 0)]];
    }
    let schur = nalgebra::linalg::Schur::new(a.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// `x^T y` for complex vectors without conjugation.
pub(crate) fn dot_t(x: &CVector, y: &CVector) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}
