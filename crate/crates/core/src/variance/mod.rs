//! Quantum variances: plain, spherically centred, non-backtracking, plus decay experiments.

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::graph::{geometry_profile, random_regular, sphere_sizes, GeometryProfile, RegularGraph};
use crate::kernel::constants::constant_ck;
use crate::kernel::fold::{fold_shell, fold_to_graph, FoldedOperator};
use crate::kernel::{ops, GradedKernel, PathCalculus, PathKernel};
use crate::nb::{build_nb, kb_form, lift_eigenvector, Branch};
use crate::tree::{km_density, spherical_phi_table};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    None,
    Spherical,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VarianceRow {
    pub lambda: f64,
    pub diag: C64,
    pub center: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub var: f64,
    /// `||K_G - centre||^2_HSN`, an upper bound for `var`.
    pub hsn_sq: f64,
    pub interval: Option<(f64, f64)>,
}

impl VarianceReport {
    fn assemble(rows: Vec<VarianceRow>, norm: f64, hsn_sq: f64, interval: Option<(f64, f64)>) -> Self {
        let var = rows.iter().map(|r| (r.diag - r.center).norm_sqr()).sum::<f64>() / norm;
        VarianceReport { rows, var, hsn_sq, interval }
    }
}

/// `<psi_j, K_G psi_j>` for every `j`.
pub fn diagonals(eig: &EigenSystem, op: &FoldedOperator) -> Vec<C64> {
    (0..eig.len()).into_par_iter().map(|j| op.quadratic(eig.psi(j))).collect()
}

/// `<K>_lambda = sum_omega K(omega) Phi_lambda(|omega|) / n`.
pub fn spherical_center(pc: &PathCalculus, k: &GradedKernel, lambda: f64) -> C64 {
    let top = k.max_shell().unwrap_or(0);
    let phi = spherical_phi_table(pc.q(), lambda, top);
    let n = pc.n() as f64;
    k.shells.values().map(|s| s.values.iter().sum::<C64>() * (phi[s.k] / n)).sum()
}

/// Removes the per-shell mean; its fold is `K_G` minus the spherical centre as an operator.
pub fn shell_centered(k: &GradedKernel) -> GradedKernel {
    let mut out = GradedKernel::new();
    for s in k.shells.values() {
        out.accumulate(s.centered());
    }
    out
}

pub fn quantum_variance(
    pc: &PathCalculus,
    eig: &EigenSystem,
    k: &GradedKernel,
    centering: Centering,
) -> Result<VarianceReport> {
    let op = fold_to_graph(pc, k)?;
    let diag = diagonals(eig, &op);
    let rows = diag
        .into_iter()
        .zip(&eig.lambdas)
        .map(|(d, &lambda)| VarianceRow {
            lambda,
            diag: d,
            center: match centering {
                Centering::None => C64::new(0.0, 0.0),
                Centering::Spherical => spherical_center(pc, k, lambda),
            },
        })
        .collect();
    let hsn_sq = match centering {
        Centering::None => op.hsn_sq(),
        Centering::Spherical => fold_to_graph(pc, &shell_centered(k))?.hsn_sq(),
    };
    Ok(VarianceReport::assemble(rows, eig.len() as f64, hsn_sq, None))
}

/// Indices of the tempered eigenvalues `|lambda| < 2 sqrt(q)`, optionally inside `[lo, hi]`.
pub fn tempered_indices(eig: &EigenSystem, q: usize, interval: Option<(f64, f64)>) -> Vec<usize> {
    let edge = 2.0 * (q as f64).sqrt();
    (0..eig.len())
        .filter(|&j| {
            let l = eig.lambdas[j];
            l.abs() < edge - 1e-9 && interval.is_none_or(|(lo, hi)| l >= lo && l <= hi)
        })
        .collect()
}

/// `(1/n) sum_j |<f*_j, K_B f_j>|^2` over tempered `j`; with an interval the
/// normalisation is `N(I)`.
pub fn nb_variance(
    pc: &PathCalculus,
    eig: &EigenSystem,
    k: &GradedKernel,
    interval: Option<(f64, f64)>,
) -> Result<VarianceReport> {
    if k.shells.contains_key(&0) {
        return Err(Error::Dimension("K_B needs kernels on paths of length >= 1".into()));
    }
    let js = tempered_indices(eig, pc.q(), interval);
    if interval.is_some() && js.is_empty() {
        return Err(Error::param("interval", "contains no tempered eigenvalue"));
    }
    let nb = build_nb(pc.graph());
    let rows = js
        .par_iter()
        .map(|&j| {
            let lp = lift_eigenvector(&nb, eig.psi(j), eig.lambdas[j], Branch::Plus);
            let mut d = C64::new(0.0, 0.0);
            for s in k.shells.values() {
                d += kb_form(pc, s, &lp.f_star, &lp.f)?;
            }
            Ok(VarianceRow { lambda: eig.lambdas[j], diag: d, center: C64::new(0.0, 0.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = if interval.is_some() { js.len() } else { eig.len() } as f64;
    let hsn_sq = fold_to_graph(pc, k)?.hsn_sq();
    Ok(VarianceReport::assemble(rows, norm, hsn_sq, interval))
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    /// `|<f*, K'_B f> - conj(eps) <psi, ((q+1) - A)a psi>|` maximised over tempered `j`.
    pub residual_i: f64,
    /// `|<f*, K_B f> - <psi, ((1-S)K)_G psi> - eps <psi, (nabla* K)_G psi>|`.
    pub residual_ii: f64,
    pub tempered: usize,
}

/// `K'(x, y) = a(x)` on `H_1`.
pub fn origin_kernel(pc: &PathCalculus, a: &[f64]) -> Result<PathKernel> {
    let s = pc.space(1)?;
    Ok(PathKernel { k: 1, values: (0..s.len()).map(|id| C64::new(a[s.first(id)], 0.0)).collect() })
}

/// Evaluates both sides of the isotropic transfer identities on every tempered eigenvector.
pub fn isotropic_transfer_identities(
    pc: &PathCalculus,
    eig: &EigenSystem,
    a: &[f64],
    k: &PathKernel,
) -> Result<IdentityReport> {
    if k.k == 0 {
        return Err(Error::param("k", "identity (ii) needs K in H_m with m >= 1"));
    }
    let g = pc.graph();
    let q1 = (pc.q() + 1) as f64;
    let aa = g.apply_adjacency(a);
    let w: Vec<f64> = a.iter().zip(&aa).map(|(x, y)| q1 * x - y).collect();
    let kp = origin_kernel(pc, a)?;
    let one_minus_s = k.sub(&ops::op_s(pc, k)?);
    let f1 = fold_shell(pc, &one_minus_s)?;
    let f2 = fold_shell(pc, &ops::nabla_star(pc, k)?)?;
    let nb = build_nb(g);
    let js = tempered_indices(eig, pc.q(), None);
    let res = js
        .par_iter()
        .map(|&j| {
            let psi = eig.psi(j);
            let lp = lift_eigenvector(&nb, psi, eig.lambdas[j], Branch::Plus);
            let lhs1 = kb_form(pc, &kp, &lp.f_star, &lp.f)?;
            let rhs1 = lp.eps.conj() * w.iter().zip(psi).map(|(x, p)| x * p * p).sum::<f64>();
            let lhs2 = kb_form(pc, k, &lp.f_star, &lp.f)?;
            let rhs2 = f1.quadratic(psi) + lp.eps * f2.quadratic(psi);
            Ok(((lhs1 - rhs1).norm(), (lhs2 - rhs2).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport {
        residual_i: res.iter().map(|r| r.0).fold(0.0, f64::max),
        residual_ii: res.iter().map(|r| r.1).fold(0.0, f64::max),
        tempered: js.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingReport {
    pub n: usize,
    pub var_nabla_star: f64,
    pub rhs_nabla: f64,
    pub holds_nabla: bool,
    pub var: f64,
    /// Right side of the closing estimate; infinite when `beta' = 0`.
    pub rhs_final: f64,
    pub holds_final: bool,
}

/// `tau~(r)^2 #{rho <= r} / |V|`.
fn bad_term(q: usize, geo: &GeometryProfile, r: usize) -> f64 {
    let tt = sphere_sizes(q, r).1 as f64;
    tt * tt * geo.bad_count(r) as f64 / geo.rho.len() as f64
}

/// Evaluates both sides of the `Var(nabla* K)` bound and of the closing estimate
/// with the printed constants, for `K` in `H^0_m` and smoothing length `n`.
pub fn variance_smoothing_check(
    pc: &PathCalculus,
    eig: &EigenSystem,
    geo: &GeometryProfile,
    k: &PathKernel,
    n: usize,
) -> Result<SmoothingReport> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let m = k.k;
    let q = pc.q();
    let qf = q as f64;
    let nf = n as f64;
    let norm_sq = k.norm_sq(pc.n());
    let sup_sq = k.sup().powi(2);
    let ns = GradedKernel::single(ops::nabla_star(pc, k)?);
    let var_nabla_star = quantum_variance(pc, eig, &ns, Centering::None)?.var;
    let pw = qf.powi(n as i32);
    let rhs_nabla = 4.0 * (qf + 1.0) / nf * norm_sq
        + 8.0 * (qf + 1.0) * pw * sup_sq * bad_term(q, geo, m + 2 * n + 1);
    let var = quantum_variance(pc, eig, &GradedKernel::single(k.clone()), Centering::None)?.var;
    let c = constant_ck(m, eig.beta, q);
    let rhs_final = 2.0 * c * c * (4.0 * qf + 5.0) / nf * norm_sq
        + 2.0 * sup_sq * (8.0 * nf * (qf + 1.0) * pw * bad_term(q, geo, m + 2 * n + 2) + bad_term(q, geo, m));
    let slack = 1e-12 * (1.0 + rhs_nabla.abs());
    Ok(SmoothingReport {
        n,
        var_nabla_star,
        rhs_nabla,
        holds_nabla: var_nabla_star <= rhs_nabla + slack,
        var,
        rhs_final,
        holds_final: var <= rhs_final,
    })
}

/// Sup distance between the empirical eigenvalue CDF and the Kesten–McKay CDF,
/// checked on both sides of every jump.
pub fn km_cdf_distance(lambdas: &[f64], q: usize) -> f64 {
    let mut l = lambdas.to_vec();
    l.sort_by(f64::total_cmp);
    let km = km_density(q);
    let n = l.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in l.iter().enumerate() {
        let f = km.cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
    }
    d
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Observables used by the decay experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Seeded mean-zero vertex function with sup 1.
    Diagonal,
    Identity,
    /// `psi_2^2` minus its mean, rescaled to sup 1.
    PsiSquared,
    /// Seeded real kernel on `H_2`.
    RandomH2,
    /// Seeded mean-zero real kernel on `H_1`.
    RandomH1,
    /// The indicator of `H_1`, i.e. the adjacency matrix.
    Adjacency,
}

impl std::str::FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "diagonal" => Observable::Diagonal,
            "identity" => Observable::Identity,
            "psi-squared" => Observable::PsiSquared,
            "random-h2" => Observable::RandomH2,
            "random-h1" => Observable::RandomH1,
            "adjacency" => Observable::Adjacency,
            _ => return Err(Error::param("observable", format!("unknown observable {s:?}"))),
        })
    }
}

/// Rescales a mean-zero vertex function to sup norm 1.
pub fn normalise_mean_zero(a: &mut [f64]) {
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter_mut().for_each(|x| *x -= mean);
    let s = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if s > 0.0 {
        a.iter_mut().for_each(|x| *x /= s);
    }
}

pub fn vertex_kernel(a: &[f64]) -> PathKernel {
    PathKernel { k: 0, values: a.iter().map(|&x| C64::new(x, 0.0)).collect() }
}

/// Builds the observable for one family member; the needed path spaces must exist in `pc`.
pub fn build_observable(pc: &PathCalculus, eig: &EigenSystem, obs: Observable, seed: u64) -> Result<GradedKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pc.n();
    Ok(GradedKernel::single(match obs {
        Observable::Identity => ops::indicator(pc, 0),
        Observable::Adjacency => ops::indicator(pc, 1),
        Observable::Diagonal => {
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalise_mean_zero(&mut a);
            vertex_kernel(&a)
        }
        Observable::PsiSquared => {
            let j = eig.len().saturating_sub(2);
            let mut a: Vec<f64> = eig.psi(j).iter().map(|p| p * p).collect();
            normalise_mean_zero(&mut a);
            vertex_kernel(&a)
        }
        Observable::RandomH2 => pc.random_real(2, &mut rng),
        Observable::RandomH1 => {
            let k = pc.random_real(1, &mut rng).centered();
            let s = k.sup();
            k.scale(C64::new(1.0 / s, 0.0))
        }
    }))
}

/// One graph of a family with its spectral and geometric data.
pub struct FamilyMember {
    pub seed: u64,
    pub graph: RegularGraph,
    pub eig: EigenSystem,
    pub geo: GeometryProfile,
}

/// Random `(q+1)`-regular graphs for every `(n, seed)`, built in parallel and
/// returned in input order.
pub fn build_family(ns: &[usize], seeds: &[u64], q: usize) -> Result<Vec<FamilyMember>> {
    let jobs: Vec<(usize, u64)> = ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let graph = random_regular(n, q + 1, seed)?;
            let eig = EigenSystem::adjacency(&graph)?;
            let geo = geometry_profile(&graph);
            Ok(FamilyMember { seed, graph, eig, geo })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub seed: u64,
    pub girth: Option<usize>,
    pub beta: f64,
    pub var: f64,
    pub hsn_sq: f64,
    /// `sup|K|^2 #{rho <= R} / n` at `R` = half the girth.
    pub bad_term: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// `(n, median var)` in increasing `n`.
    pub medians: Vec<(usize, f64)>,
    pub slope: f64,
    pub strictly_decreasing: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn decay_table(rows: Vec<DecayRow>) -> Result<DecayTable> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::param("ns", "a decay table needs at least 3 graph sizes"));
    }
    let medians: Vec<(usize, f64)> = ns
        .iter()
        .map(|&n| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.var).collect();
            (n, median(&mut v))
        })
        .collect();
    let strictly_decreasing = medians.windows(2).all(|w| w[1].1 < w[0].1);
    let positive = medians.iter().all(|m| m.1 > 0.0);
    let slope = if positive {
        let xs: Vec<f64> = medians.iter().map(|m| m.0 as f64).collect();
        let ys: Vec<f64> = medians.iter().map(|m| m.1).collect();
        loglog_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(DecayTable { rows, medians, slope, strictly_decreasing })
}

/// Variance of the seeded observable on every family member.
pub fn decay_experiment(
    family: &[FamilyMember],
    obs: Observable,
    centering: Centering,
    obs_seed: u64,
) -> Result<DecayTable> {
    let max_k = match obs {
        Observable::RandomH2 => 2,
        Observable::RandomH1 | Observable::Adjacency => 1,
        _ => 0,
    };
    let rows = family
        .iter()
        .map(|m| {
            let pc = PathCalculus::new(&m.graph, max_k)?;
            let k = build_observable(&pc, &m.eig, obs, obs_seed ^ m.seed)?;
            let rep = quantum_variance(&pc, &m.eig, &k, centering)?;
            let r = m.geo.girth.map_or(0, |g| g / 2);
            let n = m.graph.n();
            Ok(DecayRow {
                n,
                seed: m.seed,
                girth: m.geo.girth,
                beta: m.eig.beta,
                var: rep.var,
                hsn_sq: rep.hsn_sq,
                bad_term: k.sup().powi(2) * m.geo.bad_count(r) as f64 / n as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    decay_table(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_named, NamedGraph};

    #[test]
    fn identity_and_adjacency_have_zero_variance() {
        let g = build_named(NamedGraph::Petersen).unwrap();
        let pc = PathCalculus::new(&g, 1).unwrap();
        let eig = EigenSystem::adjacency(&g).unwrap();
        for m in [0, 1] {
            let k = GradedKernel::single(ops::indicator(&pc, m));
            let r = quantum_variance(&pc, &eig, &k, Centering::Spherical).unwrap();
            assert!(r.var < 1e-20, "m = {m}: {}", r.var);
        }
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.75)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.75).abs() < 1e-12);
    }

    #[test]
    fn decay_table_needs_three_sizes() {
        let row = |n| DecayRow { n, seed: 0, girth: None, beta: 0.0, var: 1.0, hsn_sq: 1.0, bad_term: 0.0 };
        assert!(decay_table(vec![row(10), row(20)]).is_err());
        assert!(decay_table(vec![row(10), row(20), row(40)]).is_ok());
    }
}
