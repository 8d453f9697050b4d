//! Folding path kernels down to operators on `l^2(V)`.

use super::{GradedKernel, PathCalculus, PathKernel};
use crate::error::Result;
use crate::graph::{sphere_sizes, GeometryProfile};
use crate::C64;
use std::collections::HashMap;

/// Sparse `n x n` operator `K_G(x, y) = sum of K over non-backtracking paths x -> y`.
#[derive(Clone, Debug)]
pub struct FoldedOperator {
    pub n: usize,
    /// Shell of origin when folded from a single `H_k`.
    pub source_k: Option<usize>,
    /// `(x, y, value)` sorted by `(x, y)`, without duplicates.
    pub entries: Vec<(u32, u32, C64)>,
}

impl FoldedOperator {
    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.n * self.n];
        for &(x, y, v) in &self.entries {
            m[x as usize * self.n + y as usize] += v;
        }
        m
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for &(x, y, v) in &self.entries {
            out[x as usize] += v * f[y as usize];
        }
        out
    }

    /// `<psi, K_G psi>` for a real vector.
    pub fn quadratic(&self, psi: &[f64]) -> C64 {
        self.entries.iter().map(|&(x, y, v)| v * (psi[x as usize] * psi[y as usize])).sum()
    }

    /// Normalised Hilbert–Schmidt norm squared, `(1/n) sum |K_G(x, y)|^2`.
    pub fn hsn_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>() / self.n as f64
    }

    pub fn row_sums(&self) -> Vec<C64> {
        let mut r = vec![C64::new(0.0, 0.0); self.n];
        for &(x, _, v) in &self.entries {
            r[x as usize] += v;
        }
        r
    }
}

fn collect(n: usize, source_k: Option<usize>, acc: HashMap<(u32, u32), C64>) -> FoldedOperator {
    let mut entries: Vec<(u32, u32, C64)> = acc.into_iter().map(|((x, y), v)| (x, y, v)).collect();
    entries.sort_by_key(|e| (e.0, e.1));
    FoldedOperator { n, source_k, entries }
}

fn add_shell(pc: &PathCalculus, k: &PathKernel, acc: &mut HashMap<(u32, u32), C64>) -> Result<()> {
    let s = pc.space(k.k)?;
    for id in 0..s.len() {
        *acc.entry((s.first(id) as u32, s.last(id) as u32)).or_insert(C64::new(0.0, 0.0)) += k.values[id];
    }
    Ok(())
}

pub fn fold_shell(pc: &PathCalculus, k: &PathKernel) -> Result<FoldedOperator> {
    pc.check(k)?;
    let mut acc = HashMap::new();
    add_shell(pc, k, &mut acc)?;
    Ok(collect(pc.n(), Some(k.k), acc))
}

pub fn fold_to_graph(pc: &PathCalculus, g: &GradedKernel) -> Result<FoldedOperator> {
    let mut acc = HashMap::new();
    for k in g.shells.values() {
        pc.check(k)?;
        add_shell(pc, k, &mut acc)?;
    }
    let src = if g.shells.len() == 1 { g.shells.keys().next().copied() } else { None };
    Ok(collect(pc.n(), src, acc))
}

/// `A K_G - K_G A` as a dense row-major matrix.
pub fn commutator_with_adjacency(pc: &PathCalculus, op: &FoldedOperator) -> Vec<C64> {
    let g = pc.graph();
    let n = pc.n();
    let k = op.to_dense();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for x in 0..n {
        for y in 0..n {
            let mut v = C64::new(0.0, 0.0);
            for &z in g.neighbors(x) {
                v += k[z * n + y];
            }
            for &z in g.neighbors(y) {
                v -= k[x * n + z];
            }
            out[x * n + y] = v;
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct NormComparison {
    pub hsn_sq: f64,
    pub h_norm_sq: f64,
    pub discrepancy: f64,
    /// `tau~(k)^2 ||K||_sup^2 #{rho <= k} / n`.
    pub bound: f64,
    /// Exact agreement is expected when `k < min rho`.
    pub exact_regime: bool,
}

/// Normalised Hilbert–Schmidt norm of the folded kernel against `||K||_H`.
pub fn hsn_compare(pc: &PathCalculus, k: &PathKernel, geo: &GeometryProfile) -> Result<NormComparison> {
    let op = fold_shell(pc, k)?;
    let hsn_sq = op.hsn_sq();
    let h_norm_sq = k.norm_sq(pc.n());
    let tt = sphere_sizes(pc.q(), k.k).1 as f64;
    let bound = tt * tt * k.sup().powi(2) * geo.bad_count(k.k) as f64 / pc.n() as f64;
    Ok(NormComparison {
        hsn_sq,
        h_norm_sq,
        discrepancy: (hsn_sq - h_norm_sq).abs(),
        bound,
        exact_regime: k.k < geo.min_rho(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, geometry_profile, NamedGraph};
    use crate::kernel::ops::indicator;

    #[test]
    fn folds_of_indicators() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 2).unwrap();
        let id = fold_shell(&pc, &indicator(&pc, 0)).unwrap().to_dense();
        let adj = fold_shell(&pc, &indicator(&pc, 1)).unwrap().to_dense();
        let a = g.adjacency_dense();
        for i in 0..100 {
            assert_eq!(id[i].re, if i % 11 == 0 { 1.0 } else { 0.0 });
            assert_eq!(adj[i].re, a[i]);
        }
        let two = fold_shell(&pc, &indicator(&pc, 2)).unwrap();
        assert!(two.row_sums().iter().all(|r| (r.re - 6.0).abs() < 1e-15));
    }

    #[test]
    fn heawood_norms_agree() {
        let g = build_named(NamedGraph::Heawood).unwrap();
        let pc = PathCalculus::new(&g, 1).unwrap();
        let geo = geometry_profile(&g);
        use rand::SeedableRng;
        let k = pc.random(1, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        let c = hsn_compare(&pc, &k, &geo).unwrap();
        assert!(c.exact_regime);
        assert!(c.discrepancy < 1e-12);
    }
}
