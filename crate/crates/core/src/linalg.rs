//! Thin helpers over nalgebra for the small dense complex systems used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn det(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Solves `a x = b`; `None` when `a` is singular.
pub fn solve(a: &CMat, b: &CVec) -> Option<CVec> {
    a.clone().lu().solve(b)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = padded(m).svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Right null space: singular vectors whose singular value is below `rel_tol * sigma_max`.
/// Returns the basis vectors (possibly empty) and all singular values in ascending order.
pub fn null_space(m: &CMat, rel_tol: f64) -> (Vec<CVec>, Vec<f64>) {
    let sq = padded(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut basis = Vec::new();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    for &i in &idx {
        if svd.singular_values[i] <= rel_tol * smax.max(f64::MIN_POSITIVE) {
            let row = v_t.row(i);
            basis.push(CVec::from_iterator(row.len(), row.iter().map(|c| c.conj())));
        }
    }
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    (basis, sv)
}

// Wide matrices get zero rows appended so the SVD exposes the full right null space.
fn padded(m: &CMat) -> CMat {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut out = CMat::zeros(m.ncols(), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

pub fn mat2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, b, c, d])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
