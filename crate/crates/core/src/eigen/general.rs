//! Non-symmetric dense spectra through nalgebra's real Schur form.

use crate::C64;
use nalgebra::DMatrix;

/// All eigenvalues of a real row-major `n x n` matrix.
pub fn eigenvalues(a: &[f64], n: usize) -> Vec<C64> {
    let m = DMatrix::from_row_slice(n, n, a);
    m.complex_eigenvalues().iter().copied().collect()
}

/// Orthonormal basis (as columns) of the numerical null space of a real matrix,
/// from singular values below `tol * sigma_max`.
pub fn null_space(a: &[f64], n: usize, tol: f64) -> Vec<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * smax.max(1.0))
        .map(|(i, _)| vt.row(i).iter().copied().collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_eigenvalues() {
        let ev = eigenvalues(&[0.0, -1.0, 1.0, 0.0], 2);
        let mut im: Vec<f64> = ev.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-12 && (im[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let ns = null_space(&[1.0, 1.0, 1.0, 1.0], 2, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][0] + ns[0][1]).abs() < 1e-12);
    }
}
