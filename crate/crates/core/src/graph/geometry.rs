use super::RegularGraph;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryProfile {
    /// `None` only for acyclic graphs, which a finite regular graph never is.
    pub girth: Option<usize>,
    pub rho: Vec<usize>,
}

impl GeometryProfile {
    /// `#{x : rho(x) <= r}`.
    pub fn bad_count(&self, r: usize) -> usize {
        self.rho.iter().filter(|&&p| p <= r).count()
    }

    pub fn min_rho(&self) -> usize {
        self.rho.iter().copied().min().unwrap_or(0)
    }
}

pub fn geometry_profile(g: &RegularGraph) -> GeometryProfile {
    let n = g.n();
    let mut girth: Option<usize> = None;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut touched = Vec::with_capacity(n);
    for s in 0..n {
        for &x in &touched {
            dist[x] = usize::MAX;
            parent[x] = usize::MAX;
        }
        touched.clear();
        dist[s] = 0;
        touched.push(s);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if let Some(gr) = girth {
                if 2 * dist[u] >= gr {
                    break;
                }
            }
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    touched.push(v);
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = dist[u] + dist[v] + 1;
                    if girth.is_none_or(|gr| len < gr) {
                        girth = Some(len);
                    }
                }
            }
        }
    }
    let rho = (0..n).map(|x| injectivity_radius(g, x)).collect();
    GeometryProfile { girth, rho }
}

/// Largest `r` such that the subgraph induced on the ball `B(x, r)` is acyclic.
pub fn injectivity_radius(g: &RegularGraph, x: usize) -> usize {
    let n = g.n();
    let mut dist = vec![usize::MAX; n];
    dist[x] = 0;
    let mut layer = vec![x];
    let (mut verts, mut edges) = (1usize, 0usize);
    let mut r = 0;
    loop {
        let mut next = Vec::new();
        for &u in &layer {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = r + 1;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return r;
        }
        // Edges gained by adding layer r+1: those into layers r and r+1.
        let mut inner = 0;
        for &v in &next {
            for &w in g.neighbors(v) {
                if dist[w] == r {
                    edges += 1;
                } else if dist[w] == r + 1 {
                    inner += 1;
                }
            }
        }
        edges += inner / 2;
        verts += next.len();
        if edges + 1 != verts {
            return r;
        }
        layer = next;
        r += 1;
    }
}

/// Sphere and ball sizes in the (q+1)-regular tree: `(tau(r), tau_tilde(r))`.
pub fn sphere_sizes(q: usize, r: usize) -> (usize, usize) {
    if r == 0 {
        return (1, 1);
    }
    let tau = (q + 1) * q.pow((r - 1) as u32);
    let ball = 1 + (1..=r).map(|k| (q + 1) * q.pow((k - 1) as u32)).sum::<usize>();
    (tau, ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn named_profiles() {
        let p = geometry_profile(&build_named(NamedGraph::Petersen).unwrap());
        assert_eq!(p.girth, Some(5));
        assert!(p.rho.iter().all(|&r| r == 1));
        let k4 = geometry_profile(&build_named(NamedGraph::Complete(4)).unwrap());
        assert_eq!(k4.girth, Some(3));
        assert!(k4.rho.iter().all(|&r| r == 0));
        let h = geometry_profile(&build_named(NamedGraph::Heawood).unwrap());
        assert_eq!(h.girth, Some(6));
        assert!(h.rho.iter().all(|&r| r == 2));
        let c = geometry_profile(&build_named(NamedGraph::Cycle(6)).unwrap());
        assert_eq!(c.girth, Some(6));
        assert!(c.rho.iter().all(|&r| r == 2));
    }

    #[test]
    fn sphere_values() {
        assert_eq!(sphere_sizes(2, 0), (1, 1));
        assert_eq!(sphere_sizes(2, 1), (3, 4));
        assert_eq!(sphere_sizes(2, 2), (6, 10));
        assert_eq!(sphere_sizes(2, 3), (12, 22));
    }
}
