//! The non-backtracking operator `A#` on directed bonds and the lift of
//! adjacency eigenvectors to its eigenvectors.

use crate::eigen::general::{eigenvalues, null_space};
use crate::eigen::matching::{greedy_match, Pair};
use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::graph::{BondTable, RegularGraph};
use crate::kernel::{PathCalculus, PathKernel};
use crate::tree::decaying_root;
use crate::C64;
use nalgebra::DMatrix;
use serde::Serialize;

pub use crate::kernel::constants::beta_prime;

/// `A#(e, e') = 1` iff `o(e') = t(e)` and `e' != reverse(e)`.
#[derive(Clone, Debug)]
pub struct NbOperator {
    g: RegularGraph,
    bonds: BondTable,
}

pub fn build_nb(g: &RegularGraph) -> NbOperator {
    NbOperator { g: g.clone(), bonds: g.bonds() }
}

impl NbOperator {
    pub fn dim(&self) -> usize {
        self.bonds.len()
    }

    pub fn bonds(&self) -> &BondTable {
        &self.bonds
    }

    /// Successors of `e`: bonds leaving `t(e)` other than the reversal.
    pub fn successors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.g.degree();
        let t = self.bonds.target(e);
        let back = self.bonds.rev(e);
        (t * d..(t + 1) * d).filter(move |&b| b != back)
    }

    pub fn apply<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + num_traits::Zero,
    {
        (0..self.dim()).map(|e| self.successors(e).fold(T::zero(), |acc, b| acc + f[b])).collect()
    }

    /// `(A#)^* = iota A# iota` for a real matrix: the transpose.
    pub fn apply_adjoint<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + num_traits::Zero,
    {
        let mut out = vec![T::zero(); self.dim()];
        for e in 0..self.dim() {
            for b in self.successors(e) {
                out[b] = out[b] + f[e];
            }
        }
        out
    }

    /// `iota f(e) = f(reverse e)`.
    pub fn iota<T: Copy>(&self, f: &[T]) -> Vec<T> {
        (0..self.dim()).map(|e| f[self.bonds.rev(e)]).collect()
    }

    pub fn dense(&self) -> Vec<f64> {
        let m = self.dim();
        let mut a = vec![0.0; m * m];
        for e in 0..m {
            for b in self.successors(e) {
                a[e * m + b] = 1.0;
            }
        }
        a
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.dim()).map(|e| self.successors(e).count()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Trivial,
    Tempered,
    Untempered,
    PlusOne,
    MinusOne,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Trivial => "trivial",
            Family::Tempered => "tempered",
            Family::Untempered => "untempered",
            Family::PlusOne => "plus_one",
            Family::MinusOne => "minus_one",
        }
    }
}

/// Predicted spectrum of `A#` from the adjacency spectrum.
pub fn predicted_nb_spectrum(g: &RegularGraph, lambdas: &[f64]) -> Vec<(C64, Family)> {
    let q = g.q() as f64;
    let b = g.betti();
    let mut out = Vec::with_capacity(g.num_bonds());
    let top = lambdas.len() - 1;
    for (j, &l) in lambdas.iter().enumerate() {
        if j == top {
            out.push((C64::new(q, 0.0), Family::Trivial));
            out.push((C64::new(1.0, 0.0), Family::PlusOne));
        } else if (l + q + 1.0).abs() < 1e-8 {
            out.push((C64::new(-q, 0.0), Family::Untempered));
            out.push((C64::new(-1.0, 0.0), Family::MinusOne));
        } else {
            // Roots of mu^2 - lambda mu + q = 0.
            let disc = C64::new(l * l - 4.0 * q, 0.0).sqrt();
            let fam = if l.abs() <= 2.0 * q.sqrt() { Family::Tempered } else { Family::Untempered };
            out.push(((l + disc) / 2.0, fam));
            out.push(((l - disc) / 2.0, fam));
        }
    }
    for _ in 1..b {
        out.push((C64::new(1.0, 0.0), Family::PlusOne));
        out.push((C64::new(-1.0, 0.0), Family::MinusOne));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceRow {
    pub predicted_re: f64,
    pub predicted_im: f64,
    pub matched_re: f64,
    pub matched_im: f64,
    pub abs_error: f64,
    pub family: Family,
}

#[derive(Clone, Debug)]
pub struct CorrespondenceReport {
    pub rows: Vec<CorrespondenceRow>,
    pub max_error: f64,
    pub unmatched_predicted: usize,
    pub unmatched_computed: usize,
    /// Multiplicity of `q` among the computed eigenvalues (within 1e-6).
    pub q_multiplicity: usize,
    pub minus_q_present: bool,
    pub bipartite: bool,
    /// Sum of computed eigenvalues (the trace of `A#` is zero).
    pub trace: C64,
    /// `max_x |sum_{o(e)=x} f(e)|` over the computed `±1` eigenspaces, after
    /// discarding the one direction allowed by a bipartite `-1`.
    pub family_ii_residual: f64,
}

/// Compares the computed spectrum of `A#` with the prediction.
pub fn nb_spectrum_correspondence(g: &RegularGraph, eig: &EigenSystem, tol: f64) -> Result<CorrespondenceReport> {
    let nb = build_nb(g);
    let m = nb.dim();
    let a = nb.dense();
    let computed = eigenvalues(&a, m);
    let predicted = predicted_nb_spectrum(g, &eig.lambdas);
    let pv: Vec<C64> = predicted.iter().map(|p| p.0).collect();
    let matching = greedy_match(&pv, &computed, tol);
    let rows = matching
        .pairs
        .iter()
        .map(|&Pair { predicted: i, computed: j, distance }| CorrespondenceRow {
            predicted_re: pv[i].re,
            predicted_im: pv[i].im,
            matched_re: computed[j].re,
            matched_im: computed[j].im,
            abs_error: distance,
            family: predicted[i].1,
        })
        .collect();
    let q = g.q() as f64;
    let bipartite = g.is_bipartite();
    let q_multiplicity = computed.iter().filter(|z| (*z - q).norm() < 1e-6).count();
    let minus_q_present = computed.iter().any(|z| (*z + q).norm() < 1e-6);
    let trace = computed.iter().sum();

    let mut family_ii_residual: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let mut shifted = a.clone();
        for e in 0..m {
            shifted[e * m + e] -= sign;
        }
        let basis = null_space(&shifted, m, 1e-9);
        if basis.is_empty() {
            continue;
        }
        let fmap = DMatrix::from_fn(g.n(), basis.len(), |x, c| {
            let d = g.degree();
            (x * d..(x + 1) * d).map(|e| basis[c][e]).sum::<f64>()
        });
        let allowed = usize::from(bipartite && sign < 0.0);
        let mut sv: Vec<f64> = fmap.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        if let Some(&s) = sv.get(allowed) {
            family_ii_residual = family_ii_residual.max(s);
        }
    }

    if matching.unmatched_predicted.len() + matching.unmatched_computed.len() > 0 {
        if let Some(&i) = matching.unmatched_predicted.first() {
            let d = computed.iter().map(|z| (z - pv[i]).norm()).fold(f64::INFINITY, f64::min);
            return Err(Error::Unpaired { re: pv[i].re, im: pv[i].im, distance: d });
        }
    }
    Ok(CorrespondenceReport {
        max_error: matching.max_distance(),
        rows,
        unmatched_predicted: matching.unmatched_predicted.len(),
        unmatched_computed: matching.unmatched_computed.len(),
        q_multiplicity,
        minus_q_present,
        bipartite,
        trace,
        family_ii_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `eps = q^{-1/2-is}` with `sin(s ln q) >= 0`; the smaller root off the band.
    Plus,
    /// The other root.
    Minus,
}

/// Root of `q eps^2 - lambda eps + 1 = 0` selected by `branch`.
pub fn nb_eps(q: usize, lambda: f64, branch: Branch) -> C64 {
    let z = decaying_root(q, C64::new(lambda, 0.0));
    match branch {
        Branch::Plus => z,
        Branch::Minus => 1.0 / (q as f64 * z),
    }
}

#[derive(Clone, Debug)]
pub struct LiftedPair {
    pub f: Vec<C64>,
    pub f_star: Vec<C64>,
    pub eps: C64,
    /// Eigenvalue of `A#` on `f`, `1/eps`.
    pub mu: C64,
    pub lambda: f64,
    /// `|A# f - mu f|_inf`.
    pub residual: f64,
    pub residual_star: f64,
    /// `|q eps^2 - lambda eps + 1|`.
    pub root_residual: f64,
    /// Set at `lambda = ±2 sqrt(q)`, where `A#` has a Jordan block.
    pub jordan_warning: bool,
}

/// `f(e) = psi(t(e)) - eps psi(o(e))`, `f* = iota f`.
pub fn lift_eigenvector(nb: &NbOperator, psi: &[f64], lambda: f64, branch: Branch) -> LiftedPair {
    let q = nb.g.q();
    let eps = nb_eps(q, lambda, branch);
    let t = &nb.bonds;
    let f: Vec<C64> = (0..nb.dim()).map(|e| psi[t.target(e)] - eps * psi[t.origin(e)]).collect();
    let f_star = nb.iota(&f);
    let mu = 1.0 / eps;
    let af = nb.apply(&f);
    let residual = af.iter().zip(&f).map(|(a, b)| (a - mu * b).norm()).fold(0.0, f64::max);
    let afs = nb.apply_adjoint(&f_star);
    let residual_star = afs.iter().zip(&f_star).map(|(a, b)| (a - mu * b).norm()).fold(0.0, f64::max);
    let root_residual = (q as f64 * eps * eps - lambda * eps + 1.0).norm();
    let edge = 2.0 * (q as f64).sqrt();
    LiftedPair {
        f,
        f_star,
        eps,
        mu,
        lambda,
        residual,
        residual_star,
        root_residual,
        jordan_warning: (lambda.abs() - edge).abs() < 1e-8,
    }
}

/// `<u, v> = sum conj(u) v` on `l^2(B)`.
pub fn bond_inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `<u, K_B v>` with `K_B(b1, b2) = sum of K over paths with first bond b1 and last bond b2`.
pub fn kb_form(pc: &PathCalculus, k: &PathKernel, u: &[C64], v: &[C64]) -> Result<C64> {
    if k.k == 0 {
        return Err(Error::Dimension("K_B needs a kernel on paths of length >= 1".into()));
    }
    pc.check(k)?;
    let g = pc.graph();
    let s = pc.space(k.k)?;
    let shift = pc.q().pow((k.k - 1) as u32);
    let mut acc = C64::new(0.0, 0.0);
    for id in 0..s.len() {
        let p = s.path(id);
        let b1 = id / shift;
        let b2 = g.bond(p[k.k - 1] as usize, p[k.k] as usize).unwrap();
        acc += u[b1].conj() * k.values[id] * v[b2];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn row_sums_and_permutation() {
        let p = build_named(NamedGraph::Petersen).unwrap();
        assert!(build_nb(&p).row_sums().iter().all(|&r| r == 2));
        let c = build_named(NamedGraph::Cycle(6)).unwrap();
        let nb = build_nb(&c);
        let a = nb.dense();
        for e in 0..12 {
            assert_eq!((0..12).map(|b| a[e * 12 + b]).sum::<f64>(), 1.0);
            assert_eq!((0..12).map(|b| a[b * 12 + e]).sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn petersen_prediction_counts() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let eig = EigenSystem::adjacency(&g).unwrap();
        let pred = predicted_nb_spectrum(&g, &eig.lambdas);
        assert_eq!(pred.len(), 30);
        let ones = pred.iter().filter(|p| (p.0 - 1.0).norm() < 1e-9).count();
        let minus = pred.iter().filter(|p| (p.0 + 1.0).norm() < 1e-9).count();
        assert_eq!((ones, minus), (6, 5));
    }

    #[test]
    fn trivial_lift() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let nb = build_nb(&g);
        let psi = vec![1.0 / 10f64.sqrt(); 10];
        let l = lift_eigenvector(&nb, &psi, 3.0, Branch::Minus);
        assert!((l.eps - 1.0).norm() < 1e-12);
        assert!(l.f.iter().all(|z| z.norm() < 1e-12));
        let l = lift_eigenvector(&nb, &psi, 3.0, Branch::Plus);
        assert!((l.mu - 2.0).norm() < 1e-12 && l.residual < 1e-12);
    }
}
