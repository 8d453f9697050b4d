//! Spectral-gap constants and the resolvent bound for `S` on mean-zero kernels.

use super::{ops, PathCalculus, PathKernel};
use crate::eigen::norm::{matrix_of, singular_values};
use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DMatrix;
use serde::Serialize;

/// `beta'` from `1 - beta' = 2 / ((q+1)(1 - beta - sqrt((1-beta)^2 - 4q/(q+1)^2)))`.
/// Inside the Ramanujan window, where the root is imaginary, `1 - beta' = q^{-1/2}`.
pub fn beta_prime(beta: f64, q: usize) -> f64 {
    let qf = q as f64;
    let disc = (1.0 - beta).powi(2) - 4.0 * qf / (qf + 1.0).powi(2);
    if disc < 0.0 {
        return 1.0 - qf.powf(-0.5);
    }
    1.0 - 2.0 / ((qf + 1.0) * (1.0 - beta - disc.sqrt()))
}

/// `true` when `beta` falls in the Ramanujan window (complex root).
pub fn in_ramanujan_window(beta: f64, q: usize) -> bool {
    let qf = q as f64;
    (1.0 - beta).powi(2) < 4.0 * qf / (qf + 1.0).powi(2)
}

/// `C(k, beta) = k + 1/beta'^2`; infinite when `beta' = 0`.
pub fn constant_ck(k: usize, beta: f64, q: usize) -> f64 {
    let bp = beta_prime(beta, q);
    if bp <= 0.0 {
        return f64::INFINITY;
    }
    k as f64 + 1.0 / (bp * bp)
}

/// Orthonormal basis of the orthogonal complement of the constants in `C^d`
/// (Helmert contrasts), as a `d x (d-1)` matrix.
pub fn helmert_basis(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d.saturating_sub(1), |i, j| {
        let m = (j + 1) as f64;
        let s = (m * (m + 1.0)).sqrt();
        if i <= j {
            C64::new(1.0 / s, 0.0)
        } else if i == j + 1 {
            C64::new(-m / s, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InverseBound {
    pub k: usize,
    /// `||(I - S)^{-1}||` on `H^0_k`.
    pub resolvent_norm: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Dense matrix of `S` on `H_k` (unnormalised coordinates).
pub fn s_matrix(pc: &PathCalculus, k: usize) -> Result<DMatrix<C64>> {
    let d = pc.dim(k);
    let mut err = None;
    let m = matrix_of(
        |x| match ops::op_s(pc, &PathKernel { k, values: x.to_vec() }) {
            Ok(v) => v.values,
            Err(e) => {
                err = Some(e.to_string());
                vec![C64::new(0.0, 0.0); d]
            }
        },
        d,
    );
    match err {
        Some(e) => Err(Error::Numeric(e)),
        None => Ok(m),
    }
}

/// Computes `||(I - S)^{-1}||` on `H^0_k` by dense SVD and compares it with `C(k, beta)`.
pub fn verify_inverse_bound(pc: &PathCalculus, k: usize, beta: f64) -> Result<InverseBound> {
    if k == 0 {
        return Err(Error::param("k", "S acts on H_k for k >= 1"));
    }
    let s = s_matrix(pc, k)?;
    let d = s.nrows();
    let q = helmert_basis(d);
    let ims = DMatrix::<C64>::identity(d, d) - s;
    let b = q.adjoint() * ims * &q;
    let sv = singular_values(&b);
    let smin = sv.last().copied().unwrap_or(0.0);
    let resolvent_norm = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    let constant = constant_ck(k, beta, pc.q());
    Ok(InverseBound {
        k,
        resolvent_norm,
        beta,
        beta_prime: beta_prime(beta, pc.q()),
        constant,
        holds: resolvent_norm <= constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_prime_limits() {
        assert!(beta_prime(0.0, 2).abs() < 1e-15);
        let b = 0.01;
        let approx = b * 3.0;
        assert!((beta_prime(b, 2) - approx).abs() < 0.1 * approx);
        let ram = 1.0 - 2.0 * 2f64.sqrt() / 3.0;
        assert!((beta_prime(ram, 2) - (1.0 - 0.5f64.sqrt())).abs() < 1e-7);
        assert!((beta_prime(1.0 / 3.0, 2) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!(constant_ck(1, 0.0, 2).is_infinite());
    }

    #[test]
    fn helmert_is_orthonormal() {
        let q = helmert_basis(7);
        let g = q.adjoint() * &q;
        assert!((g - DMatrix::<C64>::identity(6, 6)).norm() < 1e-14);
        let ones = DMatrix::from_element(1, 7, C64::new(1.0, 0.0));
        assert!((ones * q).norm() < 1e-14);
    }
}
