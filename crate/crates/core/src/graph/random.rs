use super::{BondTable, RegularGraph};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Total draws, including the accepted one.
    pub attempts: usize,
    pub rejected_non_simple: usize,
    pub rejected_disconnected: usize,
}

/// Configuration-model sample of a simple connected `degree`-regular graph.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<RegularGraph> {
    random_regular_with_stats(n, degree, seed).map(|(g, _)| g)
}

pub fn random_regular_with_stats(
    n: usize,
    degree: usize,
    seed: u64,
) -> Result<(RegularGraph, GenerationStats)> {
    if degree < 2 {
        return Err(Error::param("degree", format!("degree {degree} must be at least 2")));
    }
    if n <= degree {
        return Err(Error::param("n", format!("n = {n} must exceed the degree {degree}")));
    }
    if !(n * degree).is_multiple_of(2) {
        return Err(Error::param("n", format!("n*degree = {} must be even", n * degree)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|x| std::iter::repeat_n(x, degree)).collect();
    let mut stats = GenerationStats::default();
    let mut seen = HashSet::with_capacity(n * degree);
    while stats.attempts < MAX_ATTEMPTS {
        stats.attempts += 1;
        stubs.shuffle(&mut rng);
        seen.clear();
        let simple = stubs.chunks_exact(2).all(|p| {
            let (u, v) = (p[0].min(p[1]), p[0].max(p[1]));
            u != v && seen.insert((u, v))
        });
        if !simple {
            stats.rejected_non_simple += 1;
            continue;
        }
        let edges: Vec<_> = seen.iter().copied().collect();
        match RegularGraph::from_edges(n, degree - 1, &edges) {
            Ok(g) => return Ok((g, stats)),
            Err(_) => stats.rejected_disconnected += 1,
        }
    }
    Err(Error::RejectionBudget {
        attempts: stats.attempts,
        detail: format!(
            "{} non-simple, {} disconnected",
            stats.rejected_non_simple, stats.rejected_disconnected
        ),
    })
}

/// Union of `q+1` random perfect matchings; matching `j` carries label `j`.
pub fn random_labelled_regular(n: usize, q: usize, seed: u64) -> Result<(RegularGraph, BondTable)> {
    random_labelled_regular_with_stats(n, q, seed).map(|(g, t, _)| (g, t))
}

pub fn random_labelled_regular_with_stats(
    n: usize,
    q: usize,
    seed: u64,
) -> Result<(RegularGraph, BondTable, GenerationStats)> {
    if q < 1 {
        return Err(Error::param("q", "q must be at least 1"));
    }
    if !n.is_multiple_of(2) || n <= q + 1 {
        return Err(Error::param("n", format!("n = {n} must be even and exceed q+1 = {}", q + 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = GenerationStats::default();
    let mut perm: Vec<usize> = (0..n).collect();
    'draw: while stats.attempts < MAX_ATTEMPTS {
        let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * (q + 1) / 2);
        let mut labelled = Vec::with_capacity(n * (q + 1) / 2);
        for j in 0..=q {
            loop {
                stats.attempts += 1;
                if stats.attempts > MAX_ATTEMPTS {
                    break 'draw;
                }
                perm.shuffle(&mut rng);
                let m: Vec<(usize, usize)> = perm
                    .chunks_exact(2)
                    .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
                    .collect();
                if m.iter().any(|e| edges.contains(e)) {
                    stats.rejected_non_simple += 1;
                    continue;
                }
                for &e in &m {
                    edges.insert(e);
                    labelled.push((e, j as u8));
                }
                break;
            }
        }
        let list: Vec<_> = labelled.iter().map(|&(e, _)| e).collect();
        let g = match RegularGraph::from_edges(n, q, &list) {
            Ok(g) => g,
            Err(_) => {
                stats.rejected_disconnected += 1;
                continue;
            }
        };
        let mut labels = vec![0u8; g.num_bonds()];
        for &((u, v), c) in &labelled {
            labels[g.bond(u, v).unwrap()] = c;
            labels[g.bond(v, u).unwrap()] = c;
        }
        let t = BondTable::new(&g, Some(labels))?;
        return Ok((g, t, stats));
    }
    Err(Error::RejectionBudget {
        attempts: stats.attempts.min(MAX_ATTEMPTS),
        detail: format!(
            "{} clashing matchings, {} disconnected",
            stats.rejected_non_simple, stats.rejected_disconnected
        ),
    })
}
