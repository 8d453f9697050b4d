//! Operator norms of linear maps on finite-dimensional complex spaces.

use crate::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct PowerEstimate {
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn l2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Power iteration on `T* T`; stops after `max_iter` steps or when the relative
/// change of the estimate drops below `rtol`.
pub fn power_norm(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    adjoint: impl Fn(&[C64]) -> Vec<C64>,
    dim: usize,
    max_iter: usize,
    rtol: f64,
    seed: u64,
) -> PowerEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nx = l2(&x);
    x.iter_mut().for_each(|z| *z /= nx);
    let mut est = 0.0;
    for it in 1..=max_iter {
        let y = adjoint(&apply(&x));
        let ny = l2(&y);
        if ny == 0.0 {
            return PowerEstimate { norm: 0.0, iterations: it, converged: true };
        }
        let new = ny.sqrt();
        x = y.into_iter().map(|z| z / ny).collect();
        if it > 1 && (new - est).abs() <= rtol * new {
            return PowerEstimate { norm: new, iterations: it, converged: true };
        }
        est = new;
    }
    PowerEstimate { norm: est, iterations: max_iter, converged: false }
}

/// Default schedule: 200 iterations or 1e-10 relative change.
pub fn power_norm_default(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    adjoint: impl Fn(&[C64]) -> Vec<C64>,
    dim: usize,
) -> PowerEstimate {
    power_norm(apply, adjoint, dim, 200, 1e-10, 0x5eed)
}

/// Dense matrix of a linear map, one column per basis vector.
pub fn matrix_of(mut apply: impl FnMut(&[C64]) -> Vec<C64>, dim_in: usize) -> DMatrix<C64> {
    let mut cols = Vec::with_capacity(dim_in);
    let mut e = vec![C64::new(0.0, 0.0); dim_in];
    for i in 0..dim_in {
        e[i] = C64::new(1.0, 0.0);
        cols.push(apply(&e));
        e[i] = C64::new(0.0, 0.0);
    }
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, dim_in, |r, c| cols[c][r])
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_matches_dense() {
        let a = DMatrix::from_fn(6, 6, |i, j| C64::new((i as f64 - j as f64).sin(), (i * j) as f64 * 0.1));
        let dense = spectral_norm(&a);
        let ah = a.adjoint();
        let p = power_norm(
            |x| (&a * DMatrix::from_column_slice(6, 1, x)).iter().copied().collect(),
            |x| (&ah * DMatrix::from_column_slice(6, 1, x)).iter().copied().collect(),
            6,
            2000,
            1e-14,
            1,
        );
        assert!((p.norm - dense).abs() < 1e-8 * dense);
    }

    #[test]
    fn matrix_roundtrip() {
        let m = matrix_of(|x| vec![x[0] + x[1], x[1] * 2.0], 2);
        assert_eq!(m[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], C64::new(2.0, 0.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, 0.0));
    }
}
