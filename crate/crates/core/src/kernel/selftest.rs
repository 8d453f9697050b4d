//! Residuals of the operator identities on a given graph.

use super::fold::{commutator_with_adjacency, fold_to_graph};
use super::ops::{nabla, nabla_star, op_l, op_l_factored, op_m, op_m_star, graded_max_diff, op_s, op_s_star};
use super::{GradedKernel, PathCalculus};
use crate::error::{Error, Result};
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Highest shell exercised; needs `max_k >= SELFTEST_K + 2`.
pub const SELFTEST_K: usize = 3;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SelftestReport {
    /// `max |M M* K - K|` over `k = 1..=3`.
    pub mm_star: f64,
    /// `max |M M* K - ((q+1)/q) K|` on `H_0`.
    pub mm_star_h0: f64,
    /// `max |nabla* K + M nabla K|`.
    pub nabla_star: f64,
    /// `max |L K - (I - M) nabla K|`.
    pub l_factored: f64,
    /// `max |fold(L K) - [A, fold K]|`.
    pub fold_commutator: f64,
    /// Largest defect of `<nabla a, b> = <a, nabla* b>` and `<S a, b> = <a, S* b>`.
    pub adjoints: f64,
}

impl SelftestReport {
    pub fn max(&self) -> f64 {
        [self.mm_star, self.mm_star_h0, self.nabla_star, self.l_factored, self.fold_commutator, self.adjoints]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn m(pc: &PathCalculus, x: &super::PathKernel) -> Result<super::PathKernel> {
    op_m(pc, x)?.ok_or_else(|| Error::Dimension("M needs a shell >= 2".into()))
}

/// Runs every identity on seeded random kernels.
pub fn operators_selftest(pc: &PathCalculus, seed: u64) -> Result<SelftestReport> {
    if pc.max_k() < SELFTEST_K + 2 {
        return Err(Error::param("max_k", format!("selftest needs paths up to length {}", SELFTEST_K + 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pc.n();
    let q = pc.q() as f64;
    let mut r = SelftestReport {
        mm_star: 0.0,
        mm_star_h0: 0.0,
        nabla_star: 0.0,
        l_factored: 0.0,
        fold_commutator: 0.0,
        adjoints: 0.0,
    };
    for k in 0..=SELFTEST_K {
        let x = pc.random(k, &mut rng);
        let back = m(pc, &op_m_star(pc, &x)?)?;
        if k == 0 {
            r.mm_star_h0 = back.max_diff(&x.scale(C64::new((q + 1.0) / q, 0.0)));
        } else {
            r.mm_star = r.mm_star.max(back.max_diff(&x));
            r.nabla_star = r.nabla_star.max(nabla_star(pc, &x)?.max_diff(&m(pc, &nabla(pc, &x)?)?.scale(C64::new(-1.0, 0.0))));
            let b = pc.random(k + 1, &mut rng);
            let c = pc.random(k, &mut rng);
            r.adjoints = r
                .adjoints
                .max((nabla(pc, &x)?.inner(&b, n) - x.inner(&nabla_star(pc, &b)?, n)).norm())
                .max((op_s(pc, &x)?.inner(&c, n) - x.inner(&op_s_star(pc, &c)?, n)).norm());
        }
        if k < SELFTEST_K {
            let g = GradedKernel::single(x.clone());
            let l = op_l(pc, &g)?;
            r.l_factored = r.l_factored.max(graded_max_diff(&l, &op_l_factored(pc, &g)?));
            let lhs = fold_to_graph(pc, &l)?.to_dense();
            let rhs = commutator_with_adjacency(pc, &fold_to_graph(pc, &g)?);
            let d = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            r.fold_commutator = r.fold_commutator.max(d);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn identities_hold_on_petersen() {
        let pc = PathCalculus::new(&build_named(NamedGraph::Petersen).unwrap(), 5).unwrap();
        let r = operators_selftest(&pc, 1).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn shallow_calculus_is_rejected() {
        let pc = PathCalculus::new(&build_named(NamedGraph::Petersen).unwrap(), 2).unwrap();
        assert!(operators_selftest(&pc, 1).is_err());
    }
}
