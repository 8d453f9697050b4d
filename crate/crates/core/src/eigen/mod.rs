pub mod general;
pub mod matching;
pub mod norm;
pub mod symmetric;

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use symmetric::SymmetricEigen;

/// Orthonormal eigenbasis of a symmetric graph operator with its spectral gap.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub n: usize,
    /// Ascending.
    pub lambdas: Vec<f64>,
    /// Column-major, column `j` is `psi_j`.
    vectors: Vec<f64>,
    /// Value of the trivial eigenvalue (q+1 for A, 1 for A_p).
    pub top: f64,
    /// `1 - max_{j nontrivial} |lambda_j| / top`.
    pub beta: f64,
}

impl EigenSystem {
    /// Eigendecomposition of a dense symmetric `n x n` matrix whose largest
    /// eigenvalue `top` is simple with constant eigenvector.
    pub fn from_dense(a: &[f64], n: usize, top: f64) -> Result<Self> {
        let SymmetricEigen { values, mut vectors, .. } = SymmetricEigen::new(a, n)?;
        let last = &mut vectors[(n - 1) * n..];
        if last.iter().sum::<f64>() < 0.0 {
            last.iter_mut().for_each(|v| *v = -*v);
        }
        let beta = if n > 1 {
            let m = values[..n - 1].iter().fold(0.0f64, |m, l| m.max(l.abs()));
            1.0 - m / top
        } else {
            1.0
        };
        Ok(EigenSystem { n, lambdas: values, vectors, top, beta })
    }

    pub fn adjacency(g: &RegularGraph) -> Result<Self> {
        Self::from_dense(&g.adjacency_dense(), g.n(), g.degree() as f64)
    }

    pub fn psi(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Largest `|A psi_j - lambda_j psi_j|_inf` for an operator given by its action.
    pub fn max_residual(&self, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
        (0..self.n)
            .map(|j| {
                let psi = self.psi(j);
                apply(psi)
                    .iter()
                    .zip(psi)
                    .map(|(a, p)| (a - self.lambdas[j] * p).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|Psi^T Psi - I|`.
    pub fn gram_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let dot: f64 = self.psi(i).iter().zip(self.psi(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// Checks the stated invariants, returning the first violation.
    pub fn validate(&self, apply: impl Fn(&[f64]) -> Vec<f64>, tol: f64) -> Result<()> {
        let r = self.max_residual(apply);
        if r > tol {
            return Err(Error::Numeric(format!("eigen residual {r:e} exceeds {tol:e}")));
        }
        let gerr = self.gram_error();
        if gerr > tol {
            return Err(Error::Numeric(format!("eigenbasis not orthonormal ({gerr:e})")));
        }
        let top = self.lambdas[self.n - 1];
        if (top - self.top).abs() > tol {
            return Err(Error::Numeric(format!("top eigenvalue {top} differs from {}", self.top)));
        }
        let c = 1.0 / (self.n as f64).sqrt();
        let dev = self.psi(self.n - 1).iter().fold(0.0f64, |m, v| m.max((v - c).abs()));
        if dev > tol.sqrt() {
            return Err(Error::Numeric("top eigenvector is not constant".into()));
        }
        Ok(())
    }

    /// Indices of eigenvalues in the closed interval `[lo, hi]`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n).filter(|&j| self.lambdas[j] >= lo && self.lambdas[j] <= hi).collect()
    }
}

/// Eigenvalues only, for spectra too large to store eigenvectors comfortably.
pub fn adjacency_spectrum(g: &RegularGraph) -> Result<Vec<f64>> {
    Ok(SymmetricEigen::values_only(&g.adjacency_dense(), g.n())?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn petersen_spectrum() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let es = EigenSystem::adjacency(&g).unwrap();
        let want = [-2.0, -2.0, -2.0, -2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0];
        for (l, w) in es.lambdas.iter().zip(want) {
            assert!((l - w).abs() < 1e-12);
        }
        assert!((es.beta - 1.0 / 3.0).abs() < 1e-12);
        es.validate(|f| g.apply_adjacency(f), 1e-10).unwrap();
    }

    #[test]
    fn bipartite_has_zero_gap() {
        let g = build_named(NamedGraph::Heawood).unwrap();
        let es = EigenSystem::adjacency(&g).unwrap();
        assert!((es.lambdas[0] + 3.0).abs() < 1e-12);
        assert!(es.beta.abs() < 1e-12);
    }
}
