//! Time averages `(1/T) ∫_0^T e^{itL} K dt`.

use super::constants::constant_ck;
use super::{ops, GradedKernel, PathCalculus, PathKernel};
use crate::eigen::symmetric::SymmetricEigen;
use crate::error::{Error, Result};
use crate::C64;
use serde::Serialize;

/// Upper bound for `||L||`: `||sigma||, ||rho|| <= sqrt(q+1)`, so `||L|| <= 2||nabla|| <= 4 sqrt(q+1)`.
pub fn l_norm_bound(q: usize) -> f64 {
    4.0 * ((q + 1) as f64).sqrt()
}

/// Taylor order `M = ceil(5 ||L|| T)`.
pub fn taylor_order(q: usize, t: f64) -> usize {
    (5.0 * l_norm_bound(q) * t).ceil() as usize
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub output: GradedKernel,
    pub norm_in: f64,
    pub norm_out: f64,
    /// Bound on the neglected Taylor tail (zero for the spectral method).
    pub truncation_bound: f64,
}

/// `sum_{j <= M} (iT)^j L^j K / (j+1)!`, the exact time integral of the
/// degree-`M` Taylor polynomial of `e^{itL}`.
pub fn flow_average_taylor(
    pc: &PathCalculus,
    k: &GradedKernel,
    t: f64,
    m_taylor: usize,
    shell_cap: usize,
) -> Result<FlowResult> {
    let top = k.max_shell().unwrap_or(0);
    if top + m_taylor > shell_cap {
        return Err(Error::param(
            "shell_cap",
            format!("support reaches shell {} but the cap is {shell_cap}", top + m_taylor),
        ));
    }
    if shell_cap + 1 > pc.max_k() {
        return Err(Error::param(
            "shell_cap",
            format!("path spaces built only up to {} (need {})", pc.max_k(), shell_cap + 1),
        ));
    }
    let n = pc.n();
    let mut out = GradedKernel::new();
    let mut term = k.clone();
    let mut coef = C64::new(1.0, 0.0);
    for j in 0..=m_taylor {
        if j > 0 {
            term = ops::op_l(pc, &term)?;
            coef *= C64::new(0.0, t) / (j + 1) as f64;
        }
        out = out.add(&term.scale(coef));
    }
    let x = l_norm_bound(pc.q()) * t;
    let mut tail = k.norm(n);
    for j in 1..=m_taylor + 1 {
        tail *= x / (j + 1) as f64;
    }
    Ok(FlowResult { norm_in: k.norm(n), norm_out: out.norm(n), output: out, truncation_bound: tail })
}

/// Shell offsets of `H_{<=cap}` in a flat index.
fn offsets(pc: &PathCalculus, cap: usize) -> Vec<usize> {
    let mut off = vec![0];
    for k in 0..=cap {
        off.push(off[k] + pc.dim(k));
    }
    off
}

/// Upper-triangle entries `(row, col, value)` of `L` compressed to `H_{<=cap}`.
fn l_entries(pc: &PathCalculus, cap: usize, off: &[usize]) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for k in 1..=cap {
        let s = pc.space(k)?;
        for id in 0..s.len() {
            let r = off[k] + id;
            out.push((off[k - 1] + s.drop_first(id), r, 1.0));
            out.push((off[k - 1] + s.drop_last(id), r, -1.0));
        }
    }
    Ok(out)
}

/// Dense real symmetric matrix of `L` compressed to `H_{<=cap}`.
pub fn l_matrix(pc: &PathCalculus, cap: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    let off = offsets(pc, cap);
    let dim = off[cap + 1];
    let mut l = vec![0.0; dim * dim];
    for (c, r, v) in l_entries(pc, cap, &off)? {
        l[r * dim + c] += v;
        l[c * dim + r] += v;
    }
    Ok((l, off))
}

fn flatten(pc: &PathCalculus, k: &GradedKernel, off: &[usize], cap: usize) -> Result<Vec<C64>> {
    if k.max_shell().unwrap_or(0) > cap {
        return Err(Error::param("shell_cap", "kernel support exceeds the cap"));
    }
    let mut x = vec![C64::new(0.0, 0.0); off[cap + 1]];
    for kk in k.shells.values() {
        pc.check(kk)?;
        x[off[kk.k]..off[kk.k + 1]].copy_from_slice(&kk.values);
    }
    Ok(x)
}

fn unflatten(y: &[C64], off: &[usize], cap: usize) -> GradedKernel {
    let mut out = GradedKernel::new();
    for kk in 0..=cap {
        let vals = y[off[kk]..off[kk + 1]].to_vec();
        if vals.iter().any(|z| z.norm() > 0.0) {
            out.accumulate(PathKernel { k: kk, values: vals });
        }
    }
    out
}

/// `(e^{iT mu} - 1)/(iT mu)`.
fn average_factor(t: f64, mu: f64) -> C64 {
    if (t * mu).abs() < 1e-12 {
        C64::new(1.0, 0.0)
    } else {
        (C64::new(0.0, t * mu).exp() - 1.0) / C64::new(0.0, t * mu)
    }
}

/// Exact time average for `L` compressed to `H_{<=cap}` through its eigendecomposition:
/// each eigencomponent is multiplied by `(e^{iT mu} - 1)/(iT mu)`.
pub fn flow_average_spectral(pc: &PathCalculus, k: &GradedKernel, t: f64, cap: usize) -> Result<FlowResult> {
    Ok(flow_average_spectral_times(pc, k, &[t], cap)?.remove(0))
}

/// [`flow_average_spectral`] for several `T`, sharing one eigendecomposition.
pub fn flow_average_spectral_times(pc: &PathCalculus, k: &GradedKernel, times: &[f64], cap: usize) -> Result<Vec<FlowResult>> {
    let (l, off) = l_matrix(pc, cap)?;
    let x = flatten(pc, k, &off, cap)?;
    let dim = off[cap + 1];
    let eig = nalgebra::DMatrix::from_vec(dim, dim, l).symmetric_eigen();
    let coeffs: Vec<C64> = (0..dim).map(|j| eig.eigenvectors.column(j).iter().zip(&x).map(|(a, b)| b * a).sum()).collect();
    let n = pc.n();
    Ok(times
        .iter()
        .map(|&t| {
            let mut y = vec![C64::new(0.0, 0.0); dim];
            for (j, c) in coeffs.iter().enumerate() {
                let cf = c * average_factor(t, eig.eigenvalues[j]);
                for (yi, a) in y.iter_mut().zip(eig.eigenvectors.column(j).iter()) {
                    *yi += cf * a;
                }
            }
            let out = unflatten(&y, &off, cap);
            FlowResult { norm_in: k.norm(n), norm_out: out.norm(n), output: out, truncation_bound: 0.0 }
        })
        .collect())
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Same quantity as [`flow_average_spectral_times`], computed in the Krylov space of
/// `K` under the sparse compressed `L` (Lanczos with full reorthogonalisation).
/// Iterates until the last Krylov coefficient of every average is below `tol ||K||`
/// or the space becomes invariant; `truncation_bound` holds that final coefficient.
pub fn flow_average_krylov(pc: &PathCalculus, k: &GradedKernel, times: &[f64], cap: usize, tol: f64) -> Result<Vec<FlowResult>> {
    let off = offsets(pc, cap);
    let entries = l_entries(pc, cap, &off)?;
    let x = flatten(pc, k, &off, cap)?;
    let dim = off[cap + 1];
    let n = pc.n();
    let x_norm = inner(&x, &x).re.sqrt();
    if x_norm == 0.0 {
        return Ok(times
            .iter()
            .map(|_| FlowResult { output: GradedKernel::new(), norm_in: 0.0, norm_out: 0.0, truncation_bound: 0.0 })
            .collect());
    }
    let apply = |v: &[C64]| {
        let mut y = vec![C64::new(0.0, 0.0); dim];
        for &(c, r, val) in &entries {
            y[r] += v[c] * val;
            y[c] += v[r] * val;
        }
        y
    };
    let mut basis: Vec<Vec<C64>> = vec![x.iter().map(|z| z / x_norm).collect()];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    loop {
        let m = basis.len();
        let mut w = apply(&basis[m - 1]);
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let h = inner(v, &w);
                if i == m - 1 && alpha.len() < m {
                    alpha.push(h.re);
                } else if i == m - 1 {
                    alpha[m - 1] += h.re;
                }
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= h * b);
            }
        }
        let b = inner(&w, &w).re.sqrt();
        let invariant = b < 1e-12 || m == dim;
        if !invariant && !m.is_multiple_of(10) {
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
            continue;
        }
        // Krylov coefficients c_t = f_t(T_m) e_1.
        let mut tri = vec![0.0; m * m];
        for i in 0..m {
            tri[i * m + i] = alpha[i];
            if i + 1 < m {
                tri[i * m + i + 1] = beta[i];
                tri[(i + 1) * m + i] = beta[i];
            }
        }
        let te = SymmetricEigen::new(&tri, m)?;
        let coeffs: Vec<Vec<C64>> = times
            .iter()
            .map(|&t| {
                (0..m)
                    .map(|i| (0..m).map(|j| te.vector(j)[i] * te.vector(j)[0] * average_factor(t, te.values[j])).sum::<C64>() * x_norm)
                    .collect()
            })
            .collect();
        let tail = coeffs.iter().map(|c| c[m - 1].norm() * b.max(1.0)).fold(0.0, f64::max);
        if invariant || tail < tol * x_norm {
            return Ok(coeffs
                .iter()
                .map(|c| {
                    let mut y = vec![C64::new(0.0, 0.0); dim];
                    for (ci, v) in c.iter().zip(&basis) {
                        y.iter_mut().zip(v).for_each(|(a, b)| *a += ci * b);
                    }
                    let out = unflatten(&y, &off, cap);
                    let tb = if invariant { 0.0 } else { tail };
                    FlowResult { norm_in: k.norm(n), norm_out: out.norm(n), output: out, truncation_bound: tb }
                })
                .collect());
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowBound {
    pub t: f64,
    pub norm_out: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `(C(m, beta)^{1/2} + 16) ||K|| / T^{1/7}`.
pub fn flow_bound(m: usize, beta: f64, q: usize, t: f64, norm_k: f64) -> f64 {
    (constant_ck(m, beta, q).sqrt() + 16.0) * norm_k / t.powf(1.0 / 7.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};
    use rand::SeedableRng;

    #[test]
    fn small_time_methods_agree() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 14).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let k = GradedKernel::single(pc.random(1, &mut rng).centered());
        let t = 0.05;
        let a = flow_average_taylor(&pc, &k, t, 12, 13).unwrap();
        let b = flow_average_spectral(&pc, &k, t, 5).unwrap();
        // Compression only affects terms of order T^4 and beyond for K in H_1.
        assert!(ops::graded_max_diff(&a.output, &b.output) < 1e-6);
        assert!(a.truncation_bound < 1e-8);
    }

    #[test]
    fn krylov_matches_spectral() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let k = GradedKernel::single(pc.random(1, &mut rng).centered());
        let times = [0.5, 10.0, 40.0];
        let a = flow_average_spectral_times(&pc, &k, &times, 4).unwrap();
        let b = flow_average_krylov(&pc, &k, &times, 4, 1e-13).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(ops::graded_max_diff(&x.output, &y.output) < 1e-10);
            assert!((x.norm_out - y.norm_out).abs() < 1e-10);
        }
    }

    #[test]
    fn null_space_is_fixed() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 4).unwrap();
        let mut k = GradedKernel::new();
        k.accumulate(ops::indicator(&pc, 0));
        k.accumulate(ops::indicator(&pc, 1));
        let r = flow_average_spectral(&pc, &k, 7.0, 3).unwrap();
        assert!(ops::graded_max_diff(&r.output, &k) < 1e-10);
    }

    #[test]
    fn cap_overflow_is_reported() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 4).unwrap();
        let k = GradedKernel::single(ops::indicator(&pc, 1));
        assert!(flow_average_taylor(&pc, &k, 1.0, 10, 5).is_err());
    }
}
