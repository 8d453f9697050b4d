use crate::C64;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Pair {
    pub predicted: usize,
    pub computed: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Matching {
    /// Sorted by predicted index.
    pub pairs: Vec<Pair>,
    pub unmatched_predicted: Vec<usize>,
    pub unmatched_computed: Vec<usize>,
}

impl Matching {
    pub fn max_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.unmatched_predicted.is_empty() && self.unmatched_computed.is_empty()
    }
}

/// Greedy bipartite pairing: repeatedly joins the closest unmatched pair whose
/// distance is at most `tol`.
pub fn greedy_match(predicted: &[C64], computed: &[C64], tol: f64) -> Matching {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in predicted.iter().enumerate() {
        for (j, b) in computed.iter().enumerate() {
            let d = (a - b).norm();
            if d <= tol {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_c = vec![false; computed.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in cand {
        if !used_p[i] && !used_c[j] {
            used_p[i] = true;
            used_c[j] = true;
            pairs.push(Pair { predicted: i, computed: j, distance: d });
        }
    }
    pairs.sort_by_key(|p| p.predicted);
    Matching {
        pairs,
        unmatched_predicted: (0..predicted.len()).filter(|&i| !used_p[i]).collect(),
        unmatched_computed: (0..computed.len()).filter(|&j| !used_c[j]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_closest_first() {
        let p = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let c = [C64::new(1.0 + 1e-9, 0.0), C64::new(1e-9, 0.0)];
        let m = greedy_match(&p, &c, 1e-6);
        assert!(m.is_complete());
        assert_eq!(m.pairs[0].computed, 1);
        assert!(m.max_distance() < 2e-9);
    }

    #[test]
    fn reports_leftovers() {
        let m = greedy_match(&[C64::new(0.0, 0.0)], &[C64::new(1.0, 0.0)], 1e-6);
        assert_eq!(m.unmatched_predicted, vec![0]);
        assert_eq!(m.unmatched_computed, vec![0]);
    }
}
