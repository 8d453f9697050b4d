//! Finite connected (q+1)-regular graphs and their directed bonds.
//!
//! Bonds are indexed so that the outgoing bonds of `x` are contiguous:
//! bond `x*(q+1) + i` goes from `x` to the `i`-th smallest neighbour of `x`.

mod geometry;
mod named;
mod random;

pub use geometry::{geometry_profile, sphere_sizes, GeometryProfile};
pub use named::{build_named, NamedGraph};
pub use random::{random_labelled_regular, random_regular, GenerationStats};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    q: usize,
    adj: Vec<usize>,
}

impl RegularGraph {
    /// Builds a graph from an undirected edge list, checking regularity, simplicity
    /// and connectivity.
    pub fn from_edges(n: usize, q: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "graph must have at least one vertex"));
        }
        let d = q + 1;
        let mut lists = vec![Vec::with_capacity(d); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param("edges", format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::param("edges", format!("self-loop at {u}")));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        let mut adj = Vec::with_capacity(n * d);
        for (x, mut l) in lists.into_iter().enumerate() {
            l.sort_unstable();
            if l.len() != d {
                return Err(Error::param(
                    "edges",
                    format!("vertex {x} has degree {} (expected {d})", l.len()),
                ));
            }
            if l.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::param("edges", format!("multi-edge at vertex {x}")));
            }
            adj.extend(l);
        }
        let g = RegularGraph { n, q, adj };
        if !g.is_connected() {
            return Err(Error::param("edges", "graph is not connected"));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.q + 1
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        let d = self.q + 1;
        &self.adj[x * d..(x + 1) * d]
    }

    pub fn num_bonds(&self) -> usize {
        self.n * (self.q + 1)
    }

    pub fn num_edges(&self) -> usize {
        self.num_bonds() / 2
    }

    /// First Betti number `|E| - |V| + 1`.
    pub fn betti(&self) -> usize {
        self.num_edges() + 1 - self.n
    }

    pub fn origin(&self, b: usize) -> usize {
        b / (self.q + 1)
    }

    pub fn target(&self, b: usize) -> usize {
        self.adj[b]
    }

    /// Bond from `x` to `y`, if they are adjacent.
    pub fn bond(&self, x: usize, y: usize) -> Option<usize> {
        self.neighbors(x).binary_search(&y).ok().map(|i| x * (self.q + 1) + i)
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.neighbors(x).binary_search(&y).is_ok()
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for x in 0..self.n {
            for &y in self.neighbors(x) {
                if x < y {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.n
    }

    /// Breadth-first distances from `x`.
    pub fn distances_from(&self, x: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Two-colourability test.
    pub fn is_bipartite(&self) -> bool {
        let dist = self.distances_from(0);
        self.edges().iter().all(|&(u, v)| dist[u] % 2 != dist[v] % 2)
    }

    /// Dense adjacency matrix, row-major.
    pub fn adjacency_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for x in 0..self.n {
            for &y in self.neighbors(x) {
                a[x * self.n + y] = 1.0;
            }
        }
        a
    }

    /// Applies the adjacency operator to a vector.
    pub fn apply_adjacency<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + num_traits::Zero,
    {
        (0..self.n)
            .map(|x| self.neighbors(x).iter().fold(T::zero(), |acc, &y| acc + f[y]))
            .collect()
    }

    pub fn bonds(&self) -> BondTable {
        BondTable::new(self, None).expect("unlabelled bond table is always valid")
    }
}

/// Directed bonds of a graph with the reversal involution and optional labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondTable {
    q: usize,
    origin: Vec<usize>,
    target: Vec<usize>,
    rev: Vec<usize>,
    /// Labels `0..=q` internally; shown as `1..=q+1` in files.
    labels: Option<Vec<u8>>,
}

impl BondTable {
    pub fn new(g: &RegularGraph, labels: Option<Vec<u8>>) -> Result<Self> {
        let m = g.num_bonds();
        let origin: Vec<usize> = (0..m).map(|b| g.origin(b)).collect();
        let target: Vec<usize> = (0..m).map(|b| g.target(b)).collect();
        let rev: Vec<usize> = (0..m)
            .map(|b| g.bond(target[b], origin[b]).expect("adjacency is symmetric"))
            .collect();
        let t = BondTable { q: g.q(), origin, target, rev, labels };
        if let Some(l) = &t.labels {
            if l.len() != m {
                return Err(Error::param("labels", format!("expected {m} bond labels, got {}", l.len())));
            }
            t.check_labelling()?;
        }
        Ok(t)
    }

    fn check_labelling(&self) -> Result<()> {
        let l = self.labels.as_ref().ok_or(Error::Unlabelled)?;
        let d = self.q + 1;
        for b in 0..l.len() {
            if l[b] as usize >= d {
                return Err(Error::param("labels", format!("label {} out of range", l[b] as usize + 1)));
            }
            if l[b] != l[self.rev[b]] {
                return Err(Error::param("labels", format!("bond {b} and its reversal carry different labels")));
            }
        }
        for x in 0..self.origin.len() / d {
            let mut seen = vec![false; d];
            for &c in &l[x * d..(x + 1) * d] {
                if std::mem::replace(&mut seen[c as usize], true) {
                    return Err(Error::param("labels", format!("label {} repeated at vertex {x}", c + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn origin(&self, b: usize) -> usize {
        self.origin[b]
    }

    pub fn target(&self, b: usize) -> usize {
        self.target[b]
    }

    pub fn rev(&self, b: usize) -> usize {
        self.rev[b]
    }

    pub fn rev_all(&self) -> &[usize] {
        &self.rev
    }

    pub fn is_labelled(&self) -> bool {
        self.labels.is_some()
    }

    /// Label of a bond in `0..=q`.
    pub fn label(&self, b: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[b] as usize)
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Outgoing bond at `x` carrying label `c`.
    pub fn bond_with_label(&self, x: usize, c: usize) -> Option<usize> {
        let l = self.labels.as_ref()?;
        let d = self.q + 1;
        (x * d..(x + 1) * d).find(|&b| l[b] as usize == c)
    }
}

/// Serialized form: vertices 0-indexed, labels `1..=q+1` aligned with `edges`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphFile {
    pub n: usize,
    pub q: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl GraphFile {
    pub fn from_graph(g: &RegularGraph, bonds: Option<&BondTable>) -> Self {
        let edges = g.edges();
        let labels = bonds.and_then(|t| {
            t.labels().map(|_| {
                edges
                    .iter()
                    .map(|&(u, v)| t.label(g.bond(u, v).unwrap()).unwrap() + 1)
                    .collect()
            })
        });
        GraphFile { n: g.n(), q: g.q(), edges: edges.iter().map(|&(u, v)| [u, v]).collect(), labels }
    }

    pub fn into_graph(self) -> Result<(RegularGraph, BondTable)> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = RegularGraph::from_edges(self.n, self.q, &edges)?;
        let labels = match self.labels {
            None => None,
            Some(ls) => {
                if ls.len() != edges.len() {
                    return Err(Error::param("labels", "one label per edge required"));
                }
                let mut bl = vec![0u8; g.num_bonds()];
                for (&(u, v), &c) in edges.iter().zip(&ls) {
                    if c == 0 || c > g.degree() {
                        return Err(Error::param("labels", format!("label {c} outside 1..={}", g.degree())));
                    }
                    bl[g.bond(u, v).unwrap()] = (c - 1) as u8;
                    bl[g.bond(v, u).unwrap()] = (c - 1) as u8;
                }
                Some(bl)
            }
        };
        let t = BondTable::new(&g, labels)?;
        Ok((g, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_layout_and_reversal() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let t = g.bonds();
        assert_eq!(t.len(), 30);
        for b in 0..t.len() {
            assert_eq!(t.rev(t.rev(b)), b);
            assert_ne!(t.rev(b), b);
            assert_eq!(t.origin(t.rev(b)), t.target(b));
            assert_eq!(g.bond(t.origin(b), t.target(b)), Some(b));
        }
    }

    #[test]
    fn rejects_irregular() {
        let err = RegularGraph::from_edges(4, 1, &[(0, 1), (1, 2), (2, 3)]).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn file_roundtrip_with_labels() {
        let (g, t) = random_labelled_regular(20, 2, 5).unwrap();
        let f = GraphFile::from_graph(&g, Some(&t));
        let s = serde_json::to_string(&f).unwrap();
        let (g2, t2) = serde_json::from_str::<GraphFile>(&s).unwrap().into_graph().unwrap();
        assert_eq!(g, g2);
        assert_eq!(t, t2);
    }

    #[test]
    fn bipartite_detection() {
        assert!(build_named(NamedGraph::Heawood).unwrap().is_bipartite());
        assert!(!build_named(NamedGraph::Petersen).unwrap().is_bipartite());
    }
}
