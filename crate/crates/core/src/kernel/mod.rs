//! Kernels on non-backtracking paths of a finite regular graph.
//!
//! `H_k` is realised as complex functions on `B_k`, the non-backtracking paths
//! `(x_0, ..., x_k)`, with inner product `<K, K'> = (1/n) sum conj(K) K'`.
//! Path ids follow the bond layout of [`RegularGraph`]: for `k >= 1` the id is
//! `b_1 q^{k-1} + c_2 q^{k-2} + ... + c_k`, where `b_1` is the first bond and
//! `c_j` is the position of `x_j` among the neighbours of `x_{j-1}` other than
//! `x_{j-2}`. For `k = 0` the id is the vertex.

pub mod constants;
pub mod flow;
pub mod fold;
pub mod ops;
pub mod selftest;

use crate::error::{Error, Result};
use crate::graph::{sphere_sizes, RegularGraph};
use crate::C64;
use rand::Rng;
use std::collections::BTreeMap;

/// Default cap on the total number of stored paths.
pub const PATH_BUDGET: usize = 1 << 25;

#[derive(Clone, Debug)]
pub struct PathSpace {
    k: usize,
    q: usize,
    n: usize,
    verts: Vec<u32>,
    /// Id in `B_{k-1}` of `(x_1, ..., x_k)`.
    drop_first: Vec<u32>,
}

impl PathSpace {
    fn vertices(g: &RegularGraph) -> Self {
        PathSpace {
            k: 0,
            q: g.q(),
            n: g.n(),
            verts: (0..g.n() as u32).collect(),
            drop_first: Vec::new(),
        }
    }

    fn extend(&self, g: &RegularGraph) -> Self {
        let k = self.k + 1;
        let q = self.q;
        let count = if self.k == 0 { g.num_bonds() } else { self.len() * q };
        let mut verts = Vec::with_capacity(count * (k + 1));
        let mut drop_first = Vec::with_capacity(count);
        for id in 0..self.len() {
            let p = self.path(id);
            let last = *p.last().unwrap() as usize;
            let prev = if self.k == 0 { usize::MAX } else { p[p.len() - 2] as usize };
            for &y in g.neighbors(last) {
                if y == prev {
                    continue;
                }
                verts.extend_from_slice(p);
                verts.push(y as u32);
                let tail = &verts[verts.len() - k..];
                drop_first.push(encode(g, tail) as u32);
            }
        }
        PathSpace { k, q, n: self.n, verts, drop_first }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.verts.len() / (self.k + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn path(&self, id: usize) -> &[u32] {
        &self.verts[id * (self.k + 1)..(id + 1) * (self.k + 1)]
    }

    pub fn first(&self, id: usize) -> usize {
        self.verts[id * (self.k + 1)] as usize
    }

    pub fn last(&self, id: usize) -> usize {
        self.verts[id * (self.k + 1) + self.k] as usize
    }

    /// Id in `B_{k-1}` of `(x_1, ..., x_k)`; `k >= 1`.
    pub fn drop_first(&self, id: usize) -> usize {
        self.drop_first[id] as usize
    }

    /// Id in `B_{k-1}` of `(x_0, ..., x_{k-1})`; `k >= 1`.
    pub fn drop_last(&self, id: usize) -> usize {
        if self.k == 1 {
            id / (self.q + 1)
        } else {
            id / self.q
        }
    }

    /// `tau(k)`: number of paths starting at a given vertex.
    pub fn tau(&self) -> usize {
        sphere_sizes(self.q, self.k).0
    }
}

/// Id of a non-backtracking vertex sequence of length `len - 1`.
pub fn encode(g: &RegularGraph, p: &[u32]) -> usize {
    let q = g.q();
    if p.len() == 1 {
        return p[0] as usize;
    }
    let mut id = g.bond(p[0] as usize, p[1] as usize).expect("consecutive path vertices are adjacent");
    for w in p.windows(3) {
        let nb = g.neighbors(w[1] as usize);
        let pos = nb.binary_search(&(w[2] as usize)).expect("adjacent");
        let back = nb.binary_search(&(w[0] as usize)).expect("adjacent");
        debug_assert_ne!(pos, back, "backtracking path");
        id = id * q + if pos > back { pos - 1 } else { pos };
    }
    id
}

/// A graph together with its path spaces `B_0, ..., B_max`.
#[derive(Clone, Debug)]
pub struct PathCalculus {
    g: RegularGraph,
    spaces: Vec<PathSpace>,
}

impl PathCalculus {
    pub fn new(g: &RegularGraph, max_k: usize) -> Result<Self> {
        Self::with_budget(g, max_k, PATH_BUDGET)
    }

    pub fn with_budget(g: &RegularGraph, max_k: usize, budget: usize) -> Result<Self> {
        let total: usize = (0..=max_k).map(|k| space_size(g, k)).sum();
        if total > budget {
            return Err(Error::MemoryBudget { paths: total, budget });
        }
        let mut spaces = vec![PathSpace::vertices(g)];
        for k in 1..=max_k {
            let next = spaces[k - 1].extend(g);
            spaces.push(next);
        }
        Ok(PathCalculus { g: g.clone(), spaces })
    }

    pub fn graph(&self) -> &RegularGraph {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn q(&self) -> usize {
        self.g.q()
    }

    pub fn max_k(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn space(&self, k: usize) -> Result<&PathSpace> {
        self.spaces.get(k).ok_or_else(|| {
            Error::Dimension(format!("path space B_{k} not built (max {})", self.max_k()))
        })
    }

    pub fn dim(&self, k: usize) -> usize {
        space_size(&self.g, k)
    }

    pub fn zero(&self, k: usize) -> PathKernel {
        PathKernel::zeros(k, self.dim(k))
    }

    pub fn constant(&self, k: usize, c: C64) -> PathKernel {
        PathKernel { k, values: vec![c; self.dim(k)] }
    }

    /// Independent entries with real and imaginary parts uniform in `[-1, 1]`.
    pub fn random(&self, k: usize, rng: &mut impl Rng) -> PathKernel {
        let values = (0..self.dim(k))
            .map(|_| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        PathKernel { k, values }
    }

    /// Real random kernel.
    pub fn random_real(&self, k: usize, rng: &mut impl Rng) -> PathKernel {
        let values = (0..self.dim(k)).map(|_| C64::new(rng.gen_range(-1.0..=1.0), 0.0)).collect();
        PathKernel { k, values }
    }

    /// Kernel on `B_k` given by a function of the vertex sequence.
    pub fn from_fn(&self, k: usize, f: impl Fn(&[u32]) -> C64) -> Result<PathKernel> {
        let s = self.space(k)?;
        Ok(PathKernel { k, values: (0..s.len()).map(|id| f(s.path(id))).collect() })
    }

    pub fn check(&self, k: &PathKernel) -> Result<()> {
        let d = self.dim(k.k);
        if k.values.len() != d {
            return Err(Error::Dimension(format!(
                "kernel on B_{} has {} values, expected {d}",
                k.k,
                k.values.len()
            )));
        }
        Ok(())
    }
}

/// `|B_k| = n (q+1) q^{k-1}` for `k >= 1`, `n` for `k = 0`.
pub fn space_size(g: &RegularGraph, k: usize) -> usize {
    g.n() * sphere_sizes(g.q(), k).0
}

/// Element of `H_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathKernel {
    pub k: usize,
    pub values: Vec<C64>,
}

impl PathKernel {
    pub fn zeros(k: usize, len: usize) -> Self {
        PathKernel { k, values: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(1/n) sum conj(self) other`.
    pub fn inner(&self, other: &PathKernel, n: usize) -> C64 {
        assert_eq!(self.k, other.k, "inner product across shells");
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() / n as f64
    }

    pub fn norm_sq(&self, n: usize) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64
    }

    pub fn norm(&self, n: usize) -> f64 {
        self.norm_sq(n).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `<K> = sum K / (n tau(k))`, the average over all paths.
    pub fn mean(&self) -> C64 {
        if self.values.is_empty() {
            return C64::new(0.0, 0.0);
        }
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    /// Projection onto `H^0_k`.
    pub fn centered(&self) -> PathKernel {
        let m = self.mean();
        PathKernel { k: self.k, values: self.values.iter().map(|v| v - m).collect() }
    }

    pub fn scale(&self, c: C64) -> PathKernel {
        PathKernel { k: self.k, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &PathKernel) -> PathKernel {
        assert_eq!(self.k, other.k);
        PathKernel { k: self.k, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &PathKernel) -> PathKernel {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &PathKernel) -> f64 {
        assert_eq!(self.k, other.k);
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> PathKernel {
        PathKernel { k: self.k, values: self.values.iter().map(|v| v.conj()).collect() }
    }
}

/// Element of `H_{<=D}` as a direct sum of shells; missing shells are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradedKernel {
    pub shells: BTreeMap<usize, PathKernel>,
}

impl GradedKernel {
    pub fn new() -> Self {
        GradedKernel::default()
    }

    pub fn single(k: PathKernel) -> Self {
        let mut g = GradedKernel::new();
        g.shells.insert(k.k, k);
        g
    }

    /// Adds a shell component, accumulating if present.
    pub fn accumulate(&mut self, k: PathKernel) {
        match self.shells.get_mut(&k.k) {
            Some(existing) => {
                for (a, b) in existing.values.iter_mut().zip(&k.values) {
                    *a += b;
                }
            }
            None => {
                self.shells.insert(k.k, k);
            }
        }
    }

    pub fn shell(&self, k: usize) -> Option<&PathKernel> {
        self.shells.get(&k)
    }

    pub fn max_shell(&self) -> Option<usize> {
        self.shells.keys().next_back().copied()
    }

    pub fn norm_sq(&self, n: usize) -> f64 {
        self.shells.values().map(|k| k.norm_sq(n)).sum()
    }

    pub fn norm(&self, n: usize) -> f64 {
        self.norm_sq(n).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.shells.values().map(|k| k.sup()).fold(0.0, f64::max)
    }

    pub fn inner(&self, other: &GradedKernel, n: usize) -> C64 {
        self.shells
            .iter()
            .filter_map(|(k, a)| other.shells.get(k).map(|b| a.inner(b, n)))
            .sum()
    }

    pub fn scale(&self, c: C64) -> GradedKernel {
        GradedKernel { shells: self.shells.iter().map(|(k, v)| (*k, v.scale(c))).collect() }
    }

    pub fn add(&self, other: &GradedKernel) -> GradedKernel {
        let mut out = self.clone();
        for k in other.shells.values() {
            out.accumulate(k.clone());
        }
        out
    }

    pub fn sub(&self, other: &GradedKernel) -> GradedKernel {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn petersen_counts() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 3).unwrap();
        assert_eq!(pc.space(0).unwrap().len(), 10);
        assert_eq!(pc.space(1).unwrap().len(), 30);
        assert_eq!(pc.space(2).unwrap().len(), 60);
        assert_eq!(pc.space(3).unwrap().len(), 120);
    }

    #[test]
    fn ids_roundtrip() {
        let g = build_named(NamedGraph::Heawood).unwrap();
        let pc = PathCalculus::new(&g, 4).unwrap();
        for k in 0..=4 {
            let s = pc.space(k).unwrap();
            for id in 0..s.len() {
                let p = s.path(id);
                assert_eq!(encode(&g, p), id);
                assert!(p.windows(3).all(|w| w[0] != w[2]));
                if k >= 1 {
                    let prev = pc.space(k - 1).unwrap();
                    assert_eq!(prev.path(s.drop_last(id)), &p[..k]);
                    assert_eq!(prev.path(s.drop_first(id)), &p[1..]);
                }
            }
        }
    }

    #[test]
    fn budget_enforced() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        assert!(matches!(PathCalculus::with_budget(&g, 5, 100), Err(Error::MemoryBudget { .. })));
    }
}
