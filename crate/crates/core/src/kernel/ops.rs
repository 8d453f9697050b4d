//! The operator calculus on `H = ⊕ H_k`.
//!
//! With `omega = (x_0, ..., x_k)`:
//! `sigma K(omega) = K(x_1..x_k)`, `rho K(omega) = K(x_0..x_{k-1})`, `nabla = sigma - rho`,
//! `M K(eta) = (1/q) sum_{mil(omega) = eta} K(omega)`, `M* K(omega) = K(mil omega)/q`,
//! `S K(omega) = (1/q) sum_{omega' ~> omega} K(omega')` with `omega' = (x', x_0, ..., x_{k-1})`.

use super::{GradedKernel, PathCalculus, PathKernel};
use crate::error::{Error, Result};
use crate::C64;

/// `sigma: H_k -> H_{k+1}`.
pub fn shift_left(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    let s = pc.space(k.k + 1)?;
    Ok(PathKernel { k: k.k + 1, values: (0..s.len()).map(|id| k.values[s.drop_first(id)]).collect() })
}

/// `rho: H_k -> H_{k+1}`.
pub fn shift_right(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    let s = pc.space(k.k + 1)?;
    Ok(PathKernel { k: k.k + 1, values: (0..s.len()).map(|id| k.values[s.drop_last(id)]).collect() })
}

/// `nabla: H_k -> H_{k+1}`.
pub fn nabla(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    let s = pc.space(k.k + 1)?;
    let values = (0..s.len()).map(|id| k.values[s.drop_first(id)] - k.values[s.drop_last(id)]).collect();
    Ok(PathKernel { k: k.k + 1, values })
}

/// Adjoint of `nabla` computed directly: `H_k -> H_{k-1}`,
/// `nabla* K(eta) = sum_x K(x, eta) - sum_y K(eta, y)`.
pub fn nabla_star(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    if k.k == 0 {
        return Err(Error::Dimension("nabla* is not defined on H_0".into()));
    }
    let s = pc.space(k.k)?;
    let mut out = pc.zero(k.k - 1);
    for id in 0..s.len() {
        out.values[s.drop_first(id)] += k.values[id];
        out.values[s.drop_last(id)] -= k.values[id];
    }
    Ok(out)
}

/// `M: H_k -> H_{k-2}`; zero for `k < 2`.
pub fn op_m(pc: &PathCalculus, k: &PathKernel) -> Result<Option<PathKernel>> {
    pc.check(k)?;
    if k.k < 2 {
        return Ok(None);
    }
    let s = pc.space(k.k)?;
    let s1 = pc.space(k.k - 1)?;
    let qi = 1.0 / pc.q() as f64;
    let mut out = pc.zero(k.k - 2);
    for id in 0..s.len() {
        out.values[s1.drop_first(s.drop_last(id))] += k.values[id] * qi;
    }
    Ok(Some(out))
}

/// `M*: H_k -> H_{k+2}`.
pub fn op_m_star(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    let s = pc.space(k.k + 2)?;
    let s1 = pc.space(k.k + 1)?;
    let qi = 1.0 / pc.q() as f64;
    Ok(PathKernel {
        k: k.k + 2,
        values: (0..s.len()).map(|id| k.values[s1.drop_first(s.drop_last(id))] * qi).collect(),
    })
}

/// Transfer operator `S: H_k -> H_k`, `k >= 1`.
pub fn op_s(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    if k.k == 0 {
        return Err(Error::Dimension("S acts on H_k for k >= 1".into()));
    }
    let big = pc.space(k.k + 1)?;
    let qi = 1.0 / pc.q() as f64;
    let mut out = pc.zero(k.k);
    for id in 0..big.len() {
        out.values[big.drop_first(id)] += k.values[big.drop_last(id)] * qi;
    }
    Ok(out)
}

/// Adjoint `S*: H_k -> H_k`.
pub fn op_s_star(pc: &PathCalculus, k: &PathKernel) -> Result<PathKernel> {
    pc.check(k)?;
    if k.k == 0 {
        return Err(Error::Dimension("S* acts on H_k for k >= 1".into()));
    }
    let big = pc.space(k.k + 1)?;
    let qi = 1.0 / pc.q() as f64;
    let mut out = pc.zero(k.k);
    for id in 0..big.len() {
        out.values[big.drop_last(id)] += k.values[big.drop_first(id)] * qi;
    }
    Ok(out)
}

/// `j_{l,k}`: copies the value of the first `l+1` vertices, `H_l -> H_k`.
pub fn embed(pc: &PathCalculus, k: &PathKernel, to: usize) -> Result<PathKernel> {
    if to < k.k {
        return Err(Error::Dimension(format!("cannot embed H_{} into H_{to}", k.k)));
    }
    let mut cur = k.clone();
    while cur.k < to {
        cur = shift_right(pc, &cur)?;
    }
    Ok(cur)
}

/// `L = nabla + nabla*` applied shell by shell.
pub fn op_l(pc: &PathCalculus, g: &GradedKernel) -> Result<GradedKernel> {
    let mut out = GradedKernel::new();
    for k in g.shells.values() {
        out.accumulate(nabla(pc, k)?);
        if k.k >= 1 {
            out.accumulate(nabla_star(pc, k)?);
        }
    }
    Ok(out)
}

/// `L` compressed to `H_{<=cap}`: components landing above `cap` are dropped.
pub fn op_l_capped(pc: &PathCalculus, g: &GradedKernel, cap: usize) -> Result<GradedKernel> {
    let mut out = GradedKernel::new();
    for k in g.shells.values() {
        if k.k < cap {
            out.accumulate(nabla(pc, k)?);
        }
        if k.k >= 1 {
            out.accumulate(nabla_star(pc, k)?);
        }
    }
    Ok(out)
}

/// `(I - M) nabla`, the factored form of `L`.
pub fn op_l_factored(pc: &PathCalculus, g: &GradedKernel) -> Result<GradedKernel> {
    let mut out = GradedKernel::new();
    for k in g.shells.values() {
        let d = nabla(pc, k)?;
        if let Some(md) = op_m(pc, &d)? {
            out.accumulate(md.scale(C64::new(-1.0, 0.0)));
        }
        out.accumulate(d);
    }
    Ok(out)
}

/// `Sigma^n = (1/n)(I + M* + ... + M*^{n-1})` on a single shell.
pub fn sigma_n(pc: &PathCalculus, k: &PathKernel, n: usize) -> Result<GradedKernel> {
    if n == 0 {
        return Err(Error::param("n", "Sigma^n needs n >= 1"));
    }
    let w = C64::new(1.0 / n as f64, 0.0);
    let mut out = GradedKernel::new();
    let mut cur = k.clone();
    for j in 0..n {
        if j > 0 {
            cur = op_m_star(pc, &cur)?;
        }
        out.accumulate(cur.scale(w));
    }
    Ok(out)
}

/// Kernel of `A^m` seen in `H`: the indicator of `B_m` (constant 1 on every path).
pub fn indicator(pc: &PathCalculus, m: usize) -> PathKernel {
    pc.constant(m, C64::new(1.0, 0.0))
}

/// Largest entrywise difference over all shells.
pub fn graded_max_diff(a: &GradedKernel, b: &GradedKernel) -> f64 {
    let d = a.sub(b);
    d.shells.values().map(|k| k.values.iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> PathCalculus {
        PathCalculus::new(&build_named(NamedGraph::Petersen).unwrap(), 6).unwrap()
    }

    #[test]
    fn mm_star_identity() {
        let pc = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..=3 {
            let x = pc.random(k, &mut rng);
            let y = op_m(&pc, &op_m_star(&pc, &x).unwrap()).unwrap().unwrap();
            let c = if k == 0 { 1.5 } else { 1.0 };
            assert!(y.max_diff(&x.scale(C64::new(c, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn nabla_star_is_minus_m_nabla() {
        let pc = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 1..=4 {
            let x = pc.random(k, &mut rng);
            let direct = nabla_star(&pc, &x).unwrap();
            let via = op_m(&pc, &nabla(&pc, &x).unwrap()).unwrap().unwrap().scale(C64::new(-1.0, 0.0));
            assert!(direct.max_diff(&via) < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn adjoint_pairs() {
        let pc = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = pc.n();
        for k in 1..=3 {
            let a = pc.random(k, &mut rng);
            let b = pc.random(k + 1, &mut rng);
            let lhs = nabla(&pc, &a).unwrap().inner(&b, n);
            let rhs = a.inner(&nabla_star(&pc, &b).unwrap(), n);
            assert!((lhs - rhs).norm() < 1e-12);
            let c = pc.random(k, &mut rng);
            let lhs = op_s(&pc, &a).unwrap().inner(&c, n);
            let rhs = a.inner(&op_s_star(&pc, &c).unwrap(), n);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn sigma_one_is_identity() {
        let pc = setup();
        let x = pc.random(2, &mut ChaCha8Rng::seed_from_u64(4));
        let s = sigma_n(&pc, &x, 1).unwrap();
        assert_eq!(s.shell(2).unwrap(), &x);
    }
}
