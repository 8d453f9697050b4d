//! `A_p` on labelled finite graphs: eigenbases, lifts, centring, transfer operators, variances.

use super::{solve_green_boundary, BoundaryGreen, GreenState, TransitionWeights};
use crate::eigen::norm::{power_norm, spectral_norm};
use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::graph::{random_labelled_regular, BondTable, GeometryProfile, RegularGraph};
use crate::kernel::{encode, GradedKernel, PathCalculus, PathKernel};
use crate::nb::kb_form;
use crate::variance::{decay_table, diagonals, normalise_mean_zero, vertex_kernel, DecayRow, DecayTable, VarianceReport, VarianceRow};
use crate::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// `A_p` with its eigenbasis.
#[derive(Clone, Debug)]
pub struct ApSystem {
    pub n: usize,
    /// Row-major symmetric stochastic matrix.
    pub matrix: Vec<f64>,
    pub eig: EigenSystem,
}

fn label_of(bonds: &BondTable, b: usize) -> Result<usize> {
    bonds.label(b).ok_or(Error::Unlabelled)
}

fn check_compatible(g: &RegularGraph, bonds: &BondTable, w: &TransitionWeights) -> Result<()> {
    if !bonds.is_labelled() {
        return Err(Error::Unlabelled);
    }
    if w.q() != g.q() {
        return Err(Error::param("p", format!("{} weights for degree {}", w.p().len(), g.degree())));
    }
    Ok(())
}

/// `A_p f(x) = sum_{y ~ x} p(c(x, y)) f(y)` as a dense matrix, with its eigensolve.
pub fn build_ap(g: &RegularGraph, bonds: &BondTable, w: &TransitionWeights) -> Result<ApSystem> {
    check_compatible(g, bonds, w)?;
    let n = g.n();
    let mut m = vec![0.0; n * n];
    for b in 0..bonds.len() {
        m[bonds.origin(b) * n + bonds.target(b)] += w.p()[label_of(bonds, b)?];
    }
    let eig = EigenSystem::from_dense(&m, n, 1.0)?;
    Ok(ApSystem { n, matrix: m, eig })
}

impl ApSystem {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n).map(|x| self.matrix[x * self.n..(x + 1) * self.n].iter().zip(f).map(|(a, b)| a * b).sum()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct AnisLift {
    /// `f(e) = psi(t(e)) - zeta(c(e)) psi(o(e))`.
    pub f: Vec<C64>,
    /// `g(e) = p(e)/zeta(e) f(e)`.
    pub g: Vec<C64>,
    /// `|B_p f - (p/zeta) f|_inf`.
    pub residual: f64,
}

/// `B_p f(e) = sum_{o(e') = t(e), e' != reverse(e)} p(e') f(e')`.
pub fn apply_bp(bonds: &BondTable, w: &TransitionWeights, f: &[C64]) -> Result<Vec<C64>> {
    let q1 = bonds.q() + 1;
    (0..bonds.len())
        .map(|e| {
            let y = bonds.target(e);
            let rev = bonds.rev(e);
            let mut s = C64::new(0.0, 0.0);
            for e2 in y * q1..(y + 1) * q1 {
                if e2 != rev {
                    s += w.p()[label_of(bonds, e2)?] * f[e2];
                }
            }
            Ok(s)
        })
        .collect()
}

fn lift_with(bonds: &BondTable, w: &TransitionWeights, psi: &[f64], zeta: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let mut f = Vec::with_capacity(bonds.len());
    let mut g = Vec::with_capacity(bonds.len());
    for e in 0..bonds.len() {
        let c = label_of(bonds, e)?;
        let fe = psi[bonds.target(e)] - zeta[c] * psi[bonds.origin(e)];
        f.push(fe);
        g.push(w.p()[c] / zeta[c] * fe);
    }
    Ok((f, g))
}

pub fn lift_anis(bonds: &BondTable, w: &TransitionWeights, psi: &[f64], state: &GreenState) -> Result<AnisLift> {
    if state.zeta.iter().any(|z| z.norm() < 1e-12) {
        return Err(Error::Numeric("zeta vanishes; lift undefined".into()));
    }
    let (f, g) = lift_with(bonds, w, psi, &state.zeta)?;
    let bf = apply_bp(bonds, w, &f)?;
    let mut residual: f64 = 0.0;
    for e in 0..bonds.len() {
        let c = label_of(bonds, e)?;
        residual = residual.max((bf[e] - w.p()[c] / state.zeta[c] * f[e]).norm());
    }
    Ok(AnisLift { f, g, residual })
}

/// Label word of every path in `H_k`.
pub fn path_words(pc: &PathCalculus, bonds: &BondTable, k: usize) -> Result<Vec<Vec<u8>>> {
    let g = pc.graph();
    let s = pc.space(k)?;
    (0..s.len())
        .map(|id| {
            let p = s.path(id);
            p.windows(2)
                .map(|e| {
                    let b = g.bond(e[0] as usize, e[1] as usize).expect("path edge");
                    Ok(label_of(bonds, b)? as u8)
                })
                .collect()
        })
        .collect()
}

/// `Im G(x, y) / Im G(x, x)` for the label word of a path.
pub fn green_ratio_word(state: &GreenState, word: &[u8]) -> f64 {
    let d = state.diagonal().im;
    let v = word.iter().fold(C64::new(1.0, 0.0), |a, &c| a * state.zeta[c as usize]) * state.diagonal();
    v.im / d
}

#[derive(Clone, Debug, Serialize)]
pub struct AnisCenter {
    pub value: C64,
    /// Fraction of vertices with `rho(x) < D`, where several lifts compete.
    pub ambiguous_fraction: f64,
}

/// `<K>_{lambda,p} = (1/n) sum_omega K(omega) Im G(omega) / Im G(o, o)`, summing over
/// all non-backtracking paths.
pub fn k_lambda_p(
    pc: &PathCalculus,
    bonds: &BondTable,
    k: &GradedKernel,
    state: &GreenState,
    geo: Option<&GeometryProfile>,
) -> Result<AnisCenter> {
    let mut v = C64::new(0.0, 0.0);
    for s in k.shells.values() {
        pc.check(s)?;
        let words = path_words(pc, bonds, s.k)?;
        for (val, w) in s.values.iter().zip(&words) {
            v += val * green_ratio_word(state, w);
        }
    }
    let d = k.max_shell().unwrap_or(0);
    let ambiguous_fraction = geo.map_or(0.0, |g| {
        g.rho.iter().filter(|&&r| r < d).count() as f64 / g.rho.len() as f64
    });
    Ok(AnisCenter { value: v / pc.n() as f64, ambiguous_fraction })
}

/// Weighted transfer operator on `H_m` at a boundary state.
#[derive(Clone, Debug)]
pub struct WeightedTransfer {
    pub m: usize,
    pub twisted: bool,
    pub matrix: DMatrix<C64>,
    /// Invariant weights `prod |zeta|^2 / ((1 + |zeta_first|^2)(1 + |zeta_last|^2))`.
    pub weight: Vec<f64>,
}

/// `S_{E0} K(omega) = sum_{omega' ~> omega} (1 + |zeta(omega_0 omega_1)|^2)/(1 + |zeta(omega'_0 omega'_1)|^2)
/// |zeta(omega'_0 omega'_1)|^2 K(omega')`, optionally twisted by `u(omega'_0 omega'_1)`.
pub fn weighted_transfer(
    pc: &PathCalculus,
    bonds: &BondTable,
    state: &GreenState,
    m: usize,
    with_u: bool,
) -> Result<WeightedTransfer> {
    if m == 0 {
        return Err(Error::param("m", "transfer operators act on H_m with m >= 1"));
    }
    let g = pc.graph();
    let s = pc.space(m)?;
    let words = path_words(pc, bonds, m)?;
    let a2: Vec<f64> = state.zeta.iter().map(|z| z.norm_sqr()).collect();
    let u = state.u();
    let d = s.len();
    let mut mat = DMatrix::<C64>::zeros(d, d);
    let mut buf = vec![0u32; m + 1];
    for id in 0..d {
        let p = s.path(id);
        let c0 = words[id][0] as usize;
        for &x in g.neighbors(p[0] as usize) {
            if x == p[1] as usize {
                continue;
            }
            buf[0] = x as u32;
            buf[1..].copy_from_slice(&p[..m]);
            let prev = encode(g, &buf);
            let c = words[prev][0] as usize;
            let mut v = C64::new((1.0 + a2[c0]) / (1.0 + a2[c]) * a2[c], 0.0);
            if with_u {
                v *= u[c];
            }
            mat[(id, prev)] += v;
        }
    }
    let weight = words
        .iter()
        .map(|w| {
            let f = w[0] as usize;
            let l = w[m - 1] as usize;
            w.iter().map(|&c| a2[c as usize]).product::<f64>() / ((1.0 + a2[f]) * (1.0 + a2[l]))
        })
        .collect();
    Ok(WeightedTransfer { m, twisted: with_u, matrix: mat, weight })
}

impl WeightedTransfer {
    pub fn row_sums(&self) -> Vec<C64> {
        (0..self.matrix.nrows()).map(|i| self.matrix.row(i).iter().sum()).collect()
    }

    /// `|<S K, 1>_mu - <K, 1>_mu|` maximised over basis vectors `K`, i.e. stochasticity of `S*`.
    pub fn adjoint_defect(&self) -> f64 {
        let d = self.matrix.nrows();
        (0..d)
            .map(|j| {
                let col: C64 = (0..d).map(|i| self.matrix[(i, j)] * self.weight[i]).sum();
                (col - self.weight[j]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn conjugated(&self, t: &DMatrix<C64>) -> DMatrix<C64> {
        let d = t.nrows();
        DMatrix::from_fn(d, d, |i, j| t[(i, j)] * (self.weight[i] / self.weight[j]).sqrt())
    }

    /// `||S^k||` in the weighted space, by dense SVD.
    pub fn power_norm(&self, k: usize) -> f64 {
        spectral_norm(&self.conjugated(&self.matrix.pow(k as u32)))
    }

    /// Same quantity by power iteration (cross-check).
    pub fn power_norm_iterative(&self, k: usize) -> f64 {
        let t = self.conjugated(&self.matrix.pow(k as u32));
        let ta = t.adjoint();
        let mv = |m: &DMatrix<C64>, x: &[C64]| -> Vec<C64> {
            (m * nalgebra::DVector::from_column_slice(x)).iter().copied().collect()
        };
        power_norm(|x| mv(&t, x), |x| mv(&ta, x), t.nrows(), 20_000, 1e-14, 0x5eed).norm
    }

    /// `||S^k||` restricted to the `mu`-orthogonal complement of the constants (logged only).
    pub fn mean_zero_norm(&self, k: usize) -> f64 {
        let d = self.matrix.nrows();
        let total: f64 = self.weight.iter().sum();
        let r: Vec<f64> = self.weight.iter().map(|w| (w / total).sqrt()).collect();
        let proj = DMatrix::from_fn(d, d, |i, j| {
            C64::new(if i == j { 1.0 } else { 0.0 } - r[i] * r[j], 0.0)
        });
        let t = self.conjugated(&self.matrix.pow(k as u32));
        spectral_norm(&(&proj * t * &proj))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferDecayRow {
    pub e0: f64,
    pub m: usize,
    pub norm_s: f64,
    pub norm_su_power: f64,
    pub norm_su_power_iterative: f64,
    pub delta: f64,
    pub row_sum_error: f64,
    pub adjoint_defect: f64,
    pub mean_zero_norm: f64,
    pub u_spread: f64,
}

/// Measures `||S_{E0}||` and `||(S^u_{E0})^{m+1}||` on a labelled graph.
pub fn transfer_decay(
    g: &RegularGraph,
    bonds: &BondTable,
    w: &TransitionWeights,
    e0: f64,
    m: usize,
) -> Result<TransferDecayRow> {
    check_compatible(g, bonds, w)?;
    let b = solve_green_boundary(w, e0)?;
    if !b.density_positive() {
        return Err(Error::param("e0", "spectral density vanishes at this energy"));
    }
    let pc = PathCalculus::new(g, m)?;
    let s = weighted_transfer(&pc, bonds, &b.state, m, false)?;
    let su = weighted_transfer(&pc, bonds, &b.state, m, true)?;
    let norm_su_power = su.power_norm(m + 1);
    let u = b.state.u();
    let u_spread = u.iter().map(|x| (x - u[0]).norm()).fold(0.0, f64::max);
    Ok(TransferDecayRow {
        e0,
        m,
        norm_s: s.power_norm(1),
        norm_su_power,
        norm_su_power_iterative: su.power_norm_iterative(m + 1),
        delta: 1.0 - norm_su_power,
        row_sum_error: s.row_sums().iter().map(|r| (r - 1.0).norm()).fold(0.0, f64::max),
        adjoint_defect: s.adjoint_defect(),
        mean_zero_norm: s.mean_zero_norm(m + 1),
        u_spread,
    })
}

/// Boundary Green states for every eigenvalue, in index order.
pub fn boundary_states(w: &TransitionWeights, lambdas: &[f64]) -> Vec<Option<BoundaryGreen>> {
    lambdas.par_iter().map(|&l| solve_green_boundary(w, l).ok()).collect()
}

/// Quantum variance in the `A_p` eigenbasis with `<K>_{lambda,p}` centring.
/// Only eigenvalues where the tree density is positive enter the sum; the
/// normalisation stays `1/n`.
pub fn anis_quantum_variance(
    pc: &PathCalculus,
    bonds: &BondTable,
    w: &TransitionWeights,
    ap: &ApSystem,
    k: &GradedKernel,
) -> Result<VarianceReport> {
    let op = crate::kernel::fold::fold_to_graph(pc, k)?;
    let diag = diagonals(&ap.eig, &op);
    let states = boundary_states(w, &ap.eig.lambdas);
    let mut rows = Vec::new();
    for (j, st) in states.iter().enumerate() {
        let Some(b) = st else { continue };
        if !b.density_positive() {
            continue;
        }
        let c = k_lambda_p(pc, bonds, k, &b.state, None)?;
        rows.push(VarianceRow { lambda: ap.eig.lambdas[j], diag: diag[j], center: c.value });
    }
    let var = rows.iter().map(|r| (r.diag - r.center).norm_sqr()).sum::<f64>() / ap.n as f64;
    Ok(VarianceReport { rows, var, hsn_sq: op.hsn_sq(), interval: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnisObservable {
    /// Seeded mean-zero vertex function with sup 1.
    Diagonal,
    /// Seeded real kernel on `H_1`.
    H1,
    Identity,
}

/// One labelled graph of a family with its `A_p` eigenbasis.
pub struct AnisMember {
    pub seed: u64,
    pub graph: RegularGraph,
    pub bonds: BondTable,
    pub ap: ApSystem,
}

pub fn build_anis_family(ns: &[usize], seeds: &[u64], w: &TransitionWeights) -> Result<Vec<AnisMember>> {
    let jobs: Vec<(usize, u64)> = ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let (graph, bonds) = random_labelled_regular(n, w.q(), seed)?;
            let ap = build_ap(&graph, &bonds, w)?;
            Ok(AnisMember { seed, graph, bonds, ap })
        })
        .collect()
}

pub fn anis_observable(pc: &PathCalculus, obs: AnisObservable, seed: u64) -> GradedKernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GradedKernel::single(match obs {
        AnisObservable::Identity => crate::kernel::ops::indicator(pc, 0),
        AnisObservable::Diagonal => {
            let mut a: Vec<f64> = (0..pc.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalise_mean_zero(&mut a);
            vertex_kernel(&a)
        }
        AnisObservable::H1 => pc.random_real(1, &mut rng),
    })
}

pub fn anis_variance_experiment(
    family: &[AnisMember],
    w: &TransitionWeights,
    obs: AnisObservable,
    obs_seed: u64,
) -> Result<DecayTable> {
    let rows = family
        .iter()
        .map(|m| {
            let pc = PathCalculus::new(&m.graph, 1)?;
            let k = anis_observable(&pc, obs, obs_seed ^ m.seed);
            let rep = anis_quantum_variance(&pc, &m.bonds, w, &m.ap, &k)?;
            Ok(DecayRow {
                n: m.graph.n(),
                seed: m.seed,
                girth: None,
                beta: m.ap.eig.beta,
                var: rep.var,
                hsn_sq: rep.hsn_sq,
                bad_term: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    decay_table(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct M0Report {
    /// Against `2i sum |psi|^2 [(A^p_lambda - W^p_lambda) a]`.
    pub residual: f64,
    /// Against the printed `2 sum |psi|^2 [(A_lambda - W_lambda) a]` (diagnostic).
    pub printed_residual: f64,
    /// `max_x |sum_y Im zeta(x, y) - W_lambda|`.
    pub w_spread: f64,
    pub count: usize,
}

/// Evaluates `<iota g, K_B g> - <iota g~, K_B g~>` with `K_lambda(x, y) = a(x)|zeta(x, y)|^2 / p(x, y)`
/// for every eigenvalue with positive density.
pub fn m0_identity_check(
    pc: &PathCalculus,
    bonds: &BondTable,
    w: &TransitionWeights,
    ap: &ApSystem,
    a: &[f64],
) -> Result<M0Report> {
    let g = pc.graph();
    let s1 = pc.space(1)?;
    let words = path_words(pc, bonds, 1)?;
    let states = boundary_states(w, &ap.eig.lambdas);
    let rev = bonds.rev_all();
    let mut out = M0Report { residual: 0.0, printed_residual: 0.0, w_spread: 0.0, count: 0 };
    for (j, st) in states.iter().enumerate() {
        let Some(b) = st else { continue };
        if !b.density_positive() || j == ap.n - 1 {
            continue;
        }
        let z = &b.state.zeta;
        let zt: Vec<C64> = z.iter().map(|x| x.conj()).collect();
        let psi = ap.eig.psi(j);
        let kl = PathKernel {
            k: 1,
            values: (0..s1.len())
                .map(|id| {
                    let c = words[id][0] as usize;
                    C64::new(a[s1.first(id)] * z[c].norm_sqr() / w.p()[c], 0.0)
                })
                .collect(),
        };
        // path ids of H_1 coincide with bond ids
        let (_, gj) = lift_with(bonds, w, psi, z)?;
        let (_, gt) = lift_with(bonds, w, psi, &zt)?;
        let iota = |v: &[C64]| -> Vec<C64> { rev.iter().map(|&r| v[r]).collect() };
        let lhs = kb_form(pc, &kl, &iota(&gj), &gj)? - kb_form(pc, &kl, &iota(&gt), &gt)?;
        let wp: f64 = w.p().iter().zip(z).map(|(p, x)| p * x.im).sum();
        let wl: f64 = z.iter().map(|x| x.im).sum();
        let mut rhs = 0.0;
        let mut printed = 0.0;
        for x in 0..g.n() {
            let (mut ap_a, mut al_a, mut wx) = (0.0, 0.0, 0.0);
            for &y in g.neighbors(x) {
                let c = label_of(bonds, g.bond(x, y).unwrap())?;
                ap_a += w.p()[c] * z[c].im * a[y];
                al_a += z[c].im * a[y];
                wx += z[c].im;
            }
            out.w_spread = out.w_spread.max((wx - wl).abs());
            rhs += psi[x] * psi[x] * (ap_a - wp * a[x]);
            printed += psi[x] * psi[x] * (al_a - wl * a[x]);
        }
        out.residual = out.residual.max((lhs - C64::new(0.0, 2.0 * rhs)).norm());
        out.printed_residual = out.printed_residual.max((lhs - C64::new(2.0 * printed, 0.0)).norm());
        out.count += 1;
    }
    Ok(out)
}
