//! Labelled-tree objects: truncated resolvents, harmonic cylinders, Green pairings.

use super::{check_word, GreenState, TransitionWeights};
use crate::error::{Error, Result};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Resolvent of `A_p` on the labelled tree truncated at `depth`, evaluated at
/// `(o, word)` by Schur complements along the branches.
pub fn truncated_tree_green(weights: &TransitionWeights, gamma: C64, depth: usize, word: &[usize]) -> Result<C64> {
    let leaf = vec![1.0 / gamma; weights.p().len()];
    truncated_tree_green_closed(weights, gamma, depth, word, &leaf)
}

/// As [`truncated_tree_green`], with the branch roots at the boundary sphere closed by `leaf`
/// instead of being isolated vertices. Passing `zeta_j / p_j` from a solved state gives the
/// infinite-tree values at any depth.
pub fn truncated_tree_green_closed(
    weights: &TransitionWeights,
    gamma: C64,
    depth: usize,
    word: &[usize],
    leaf: &[C64],
) -> Result<C64> {
    let p = weights.p();
    check_word(word, p.len())?;
    if word.len() > depth {
        return Err(Error::param("depth", "word longer than the truncation depth"));
    }
    if leaf.len() != p.len() {
        return Err(Error::Dimension("one leaf value per label".into()));
    }
    // h[d][j]: root Green function of a depth-d branch whose root lacks label j
    let mut h = vec![leaf.to_vec()];
    for d in 1..depth {
        let prev = &h[d - 1];
        let total: C64 = p.iter().zip(prev).map(|(pk, hk)| pk * pk * hk).sum();
        let row = (0..p.len()).map(|j| 1.0 / (gamma - (total - p[j] * p[j] * prev[j]))).collect();
        h.push(row);
    }
    let g00 = if depth == 0 {
        1.0 / gamma
    } else {
        1.0 / (gamma - p.iter().zip(&h[depth - 1]).map(|(pk, hk)| pk * pk * hk).sum::<C64>())
    };
    Ok(word
        .iter()
        .enumerate()
        .fold(g00, |acc, (t, &i)| acc * p[i] * h[depth - 1 - t][i]))
}

/// Reduced words of length exactly `len` over `labels` letters, in lexicographic order.
pub fn reduced_words(labels: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * labels);
        for w in &out {
            for c in 0..labels {
                if w.last() != Some(&c) {
                    let mut v: Vec<usize> = w.clone();
                    v.push(c);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderMeasure {
    pub lambda: f64,
    /// Prefix (0-based labels) and its harmonic measure, for every depth up to the requested one.
    pub weights: Vec<(Vec<usize>, f64)>,
    /// `|sum of depth-1 weights - 1|`.
    pub normalisation_error: f64,
    /// Largest `|sum of children - parent|`.
    pub consistency_error: f64,
}

fn cylinder_weight(abs2: &[f64], word: &[usize]) -> f64 {
    let (last, head) = word.split_last().expect("non-empty word");
    head.iter().map(|&i| abs2[i]).product::<f64>() * abs2[*last] / (1.0 + abs2[*last])
}

/// `nu_lambda([i_1..i_M]) = |zeta(i_1)|^2 ... |zeta(i_{M-1})|^2 |zeta(i_M)|^2 / (1 + |zeta(i_M)|^2)`.
pub fn harmonic_cylinders(state: &GreenState, depth: usize) -> Result<CylinderMeasure> {
    if !(state.density() > 1e-8) {
        return Err(Error::param("lambda", "spectral density vanishes; no harmonic measure"));
    }
    if depth == 0 {
        return Err(Error::param("depth", "must be >= 1"));
    }
    let labels = state.zeta.len();
    let abs2: Vec<f64> = state.zeta.iter().map(|z| z.norm_sqr()).collect();
    let mut weights = Vec::new();
    let mut consistency: f64 = 0.0;
    for d in 1..=depth {
        for w in reduced_words(labels, d) {
            let v = cylinder_weight(&abs2, &w);
            if d < depth {
                let children: f64 = (0..labels)
                    .filter(|&c| c != *w.last().unwrap())
                    .map(|c| {
                        let mut x = w.clone();
                        x.push(c);
                        cylinder_weight(&abs2, &x)
                    })
                    .sum();
                consistency = consistency.max((children - v).abs());
            }
            weights.push((w, v));
        }
    }
    let norm: f64 = weights.iter().filter(|(w, _)| w.len() == 1).map(|x| x.1).sum();
    Ok(CylinderMeasure {
        lambda: state.gamma.re,
        weights,
        normalisation_error: (norm - 1.0).abs(),
        consistency_error: consistency,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub lambda: f64,
    pub m: usize,
    /// `sum_y T(o, y) Im g(y)` split by `|y|` (index = distance).
    pub shell_pairings: Vec<C64>,
    /// `sum_y |T(o, y)|` split by `|y|`.
    pub shell_mass: Vec<f64>,
    /// `|sum over all shells|`.
    pub residual: f64,
    /// Residual divided by `sum_y |T(o, y) Im g(y)|`.
    pub relative: f64,
}

/// Tree kernel on the non-backtracking paths leaving the root, keyed by label sequence.
/// Every directed edge of the labelled tree is a translate of some `(o, o c)`, so these
/// paths cover a fundamental domain for the first bond.
pub type TreeKernel = BTreeMap<Vec<usize>, C64>;

/// Seeded random kernel on the paths of length `m` leaving the root.
pub fn random_tree_kernel(labels: usize, m: usize, seed: u64) -> TreeKernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    reduced_words(labels, m)
        .into_iter()
        .map(|k| (k, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect()
}

/// Builds `T = (iota U)^* 1_{D'} K_B U`, with `U phi(e) = (p/zeta)(phi(t(e)) - zeta phi(o(e)))`
/// at `lambda + i0` and `D'` the bonds leaving the root, and pairs it with `Im g(x^{-1} y)`.
pub fn green_orthogonality(
    weights: &TransitionWeights,
    state: &GreenState,
    m: usize,
    kernel: &TreeKernel,
) -> Result<OrthogonalityReport> {
    if m == 0 {
        return Err(Error::param("m", "needs K in H_m with m >= 1"));
    }
    if !(state.density() > 1e-8) {
        return Err(Error::param("lambda", "spectral density vanishes"));
    }
    let p = weights.p();
    let z = &state.zeta;
    // T(x, y) keyed by (x, y) as reduced words
    let mut t: BTreeMap<(Vec<usize>, Vec<usize>), C64> = BTreeMap::new();
    for (labels, &k) in kernel {
        if labels.len() != m {
            return Err(Error::Dimension("kernel path length differs from m".into()));
        }
        check_word(labels, p.len())?;
        let (l1, lm) = (labels[0], labels[m - 1]);
        let xs = [(Vec::new(), p[l1] / z[l1].conj()), (vec![l1], C64::new(-p[l1], 0.0))];
        let ys = [(labels.clone(), p[lm] / z[lm]), (labels[..m - 1].to_vec(), C64::new(-p[lm], 0.0))];
        for (x, cx) in &xs {
            for (y, cy) in &ys {
                *t.entry((x.clone(), y.clone())).or_insert(C64::new(0.0, 0.0)) += cx * k * cy;
            }
        }
    }
    let mut shell_pairings = vec![C64::new(0.0, 0.0); m + 1];
    let mut shell_mass = vec![0.0; m + 1];
    let mut abs_total = 0.0;
    for ((x, y), v) in &t {
        let d = x.iter().fold(y.clone(), |acc, &c| {
            let mut w = vec![c];
            w.extend(acc);
            if w.len() >= 2 && w[0] == w[1] {
                w.drain(..2);
            }
            w
        });
        let img = state.kernel(&d)?.im;
        shell_pairings[d.len()] += v * img;
        shell_mass[d.len()] += v.norm();
        abs_total += (v * img).norm();
    }
    let residual = shell_pairings.iter().sum::<C64>().norm();
    Ok(OrthogonalityReport {
        lambda: state.gamma.re,
        m,
        shell_pairings,
        shell_mass,
        residual,
        relative: if abs_total > 0.0 { residual / abs_total } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anis::{solve_green, solve_green_boundary};

    #[test]
    fn word_counts() {
        assert_eq!(reduced_words(3, 0).len(), 1);
        assert_eq!(reduced_words(3, 3).len(), 12);
    }

    #[test]
    fn truncated_tree_converges() {
        let w = TransitionWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let g = C64::new(0.2, 0.5);
        let s = solve_green(&w, g).unwrap();
        for word in [vec![], vec![1], vec![0, 2], vec![2, 1, 0]] {
            let t = truncated_tree_green(&w, g, 40, &word).unwrap();
            assert!((t - s.kernel(&word).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn isotropic_cylinders_are_uniform() {
        let w = TransitionWeights::isotropic(2);
        let b = solve_green_boundary(&w, 0.2).unwrap();
        let c = harmonic_cylinders(&b.state, 3).unwrap();
        for (word, v) in &c.weights {
            let tau = 3.0 * 2f64.powi(word.len() as i32 - 1);
            assert!((v - 1.0 / tau).abs() < 1e-10);
        }
        assert!(c.consistency_error < 1e-12 && c.normalisation_error < 1e-10);
    }

    #[test]
    fn zero_kernel_pairs_to_zero() {
        let w = TransitionWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let b = solve_green_boundary(&w, 0.1).unwrap();
        let k: TreeKernel = reduced_words(3, 1).into_iter().map(|x| (x, C64::new(0.0, 0.0))).collect();
        let r = green_orthogonality(&w, &b.state, 1, &k).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.shell_mass.iter().all(|&x| x == 0.0));
    }
}
