//! Anisotropic homogeneous walks `A_p` and their tree Green functions.

pub mod graph;
pub mod tree;

use crate::error::{Error, Result};
use crate::tree::{extrapolate_to_zero, DEFAULT_EPS};
use crate::C64;
use serde::{Deserialize, Serialize};

pub use graph::*;
pub use tree::*;

/// Transition probabilities `p_1..p_{q+1}`, one per edge label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionWeights {
    p: Vec<f64>,
}

impl TransitionWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::param("p", "need at least two labels"));
        }
        if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::param("p", "all weights must be positive"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::param("p", format!("weights sum to {s}, not 1")));
        }
        Ok(TransitionWeights { p })
    }

    pub fn isotropic(q: usize) -> Self {
        TransitionWeights { p: vec![1.0 / (q + 1) as f64; q + 1] }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> usize {
        self.p.len() - 1
    }

    pub fn is_isotropic(&self) -> bool {
        self.p.iter().all(|&x| (x - self.p[0]).abs() < 1e-15)
    }
}

/// Solution `(zeta, w)` of the Green system at `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenState {
    pub gamma: C64,
    pub zeta: Vec<C64>,
    pub w: C64,
    /// `|gamma - sum p zeta - 2w|` followed by `|p_j (1/zeta_j - zeta_j) - 2w|`.
    pub residuals: Vec<f64>,
    pub branch_ok: bool,
}

#[derive(Serialize, Deserialize)]
struct GreenJson {
    gamma: [f64; 2],
    zeta: Vec<[f64; 2]>,
    w: [f64; 2],
    residual: f64,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

impl GreenState {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `(gamma - A_p)^{-1}(o, o) = 1/(2w)`.
    pub fn diagonal(&self) -> C64 {
        1.0 / (2.0 * self.w)
    }

    /// `(gamma - A_p)^{-1}(o, a_{i_1}...a_{i_M}) = zeta(i_1)...zeta(i_M)/(2w)` for a reduced word.
    pub fn kernel(&self, word: &[usize]) -> Result<C64> {
        check_word(word, self.zeta.len())?;
        Ok(self.word_product(word) / (2.0 * self.w))
    }

    pub(crate) fn word_product(&self, word: &[usize]) -> C64 {
        word.iter().fold(C64::new(1.0, 0.0), |acc, &i| acc * self.zeta[i])
    }

    /// `-(1/pi) Im(1/(2w))`.
    pub fn density(&self) -> f64 {
        -self.diagonal().im / std::f64::consts::PI
    }

    /// `u = zeta / conj(zeta)` per label.
    pub fn u(&self) -> Vec<C64> {
        self.zeta.iter().map(|z| z / z.conj()).collect()
    }

    /// `sum_j |zeta_j|^2 / (1 + |zeta_j|^2)`, equal to 1 where the density is positive.
    pub fn kolmogorov_sum(&self) -> f64 {
        self.zeta.iter().map(|z| z.norm_sqr() / (1.0 + z.norm_sqr())).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GreenJson {
            gamma: pair(self.gamma),
            zeta: self.zeta.iter().map(|&z| pair(z)).collect(),
            w: pair(self.w),
            residual: self.max_residual(),
        })?)
    }

    /// Rebuilds a state from JSON; residuals are recomputed against `p`.
    pub fn from_json(s: &str, p: &TransitionWeights) -> Result<Self> {
        let j: GreenJson = serde_json::from_str(s)?;
        if j.zeta.len() != p.p.len() {
            return Err(Error::Dimension("zeta length does not match p".into()));
        }
        let c = |a: [f64; 2]| C64::new(a[0], a[1]);
        Ok(make_state(p.p(), c(j.gamma), j.zeta.into_iter().map(c).collect(), c(j.w)))
    }
}

pub(crate) fn check_word(word: &[usize], labels: usize) -> Result<()> {
    if word.iter().any(|&i| i >= labels) {
        return Err(Error::param("word", "label out of range"));
    }
    if word.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("word", "not reduced (repeated label)"));
    }
    Ok(())
}

fn residuals(p: &[f64], gamma: C64, zeta: &[C64], w: C64) -> Vec<f64> {
    let mut r = Vec::with_capacity(p.len() + 1);
    let s: C64 = p.iter().zip(zeta).map(|(pj, z)| pj * z).sum();
    r.push((gamma - s - 2.0 * w).norm());
    for (pj, z) in p.iter().zip(zeta) {
        r.push((pj * (1.0 / z - z) - 2.0 * w).norm());
    }
    r
}

fn branch_holds(gamma: C64, zeta: &[C64], slack: f64) -> bool {
    if gamma.im > 0.0 {
        zeta.iter().all(|z| z.im < slack)
    } else if gamma.im < 0.0 {
        zeta.iter().all(|z| z.im > -slack)
    } else {
        true
    }
}

fn make_state(p: &[f64], gamma: C64, zeta: Vec<C64>, w: C64) -> GreenState {
    let residuals = residuals(p, gamma, &zeta, w);
    let branch_ok = branch_holds(gamma, &zeta, 0.0);
    GreenState { gamma, zeta, w, residuals, branch_ok }
}

/// Newton iteration on the joint system, eliminating the `zeta` updates.
fn newton(p: &[f64], gamma: C64, zeta: &mut [C64], w: &mut C64) -> bool {
    for _ in 0..80 {
        let s: C64 = p.iter().zip(zeta.iter()).map(|(pj, z)| pj * z).sum();
        let r0 = s + 2.0 * *w - gamma;
        let mut num = -r0;
        let mut den = C64::new(2.0, 0.0);
        let mut alpha = Vec::with_capacity(p.len());
        let mut beta = Vec::with_capacity(p.len());
        for (pj, z) in p.iter().zip(zeta.iter()) {
            let rj = pj * (1.0 / z - z) - 2.0 * *w;
            let dj = pj * (1.0 + 1.0 / (z * z));
            let (a, b) = (rj / dj, 2.0 / dj);
            num -= pj * a;
            den -= pj * b;
            alpha.push(a);
            beta.push(b);
        }
        if den.norm() < 1e-300 || !den.is_finite() {
            return false;
        }
        let dw = num / den;
        let mut step = dw.norm();
        *w += dw;
        for ((z, a), b) in zeta.iter_mut().zip(&alpha).zip(&beta) {
            let dz = a - b * dw;
            step = step.max(dz.norm());
            *z += dz;
        }
        if !w.is_finite() || zeta.iter().any(|z| !z.is_finite()) {
            return false;
        }
        let scale = 1.0 + w.norm();
        if step < 1e-15 * scale {
            return residuals(p, gamma, zeta, *w).iter().all(|&r| r < 1e-11 * scale);
        }
    }
    residuals(p, gamma, zeta, *w).iter().all(|&r| r < 1e-11 * (1.0 + w.norm()))
}

const HOMOTOPY_START: f64 = 4.0;
const HOMOTOPY_RATIO: f64 = 0.7;

/// Continues a solution at `from` (same real part) down to `Im gamma = target > 0`.
fn march(p: &[f64], re: f64, from: f64, target: f64, zeta: &mut [C64], w: &mut C64) -> Result<()> {
    let mut t = from;
    while t > target {
        t = (t * HOMOTOPY_RATIO).max(target);
        let gamma = C64::new(re, t);
        if !newton(p, gamma, zeta, w) {
            return Err(Error::Numeric(format!("homotopy diverged at gamma = {gamma}")));
        }
        if !branch_holds(gamma, zeta, 0.0) {
            return Err(Error::Numeric(format!("branch certificate failed at gamma = {gamma}")));
        }
    }
    Ok(())
}

fn start(p: &[f64], re: f64, im: f64) -> Result<(Vec<C64>, C64)> {
    let gamma = C64::new(re, im);
    let mut zeta: Vec<C64> = p.iter().map(|pj| pj / gamma).collect();
    let s: C64 = p.iter().zip(&zeta).map(|(pj, z)| pj * z).sum();
    let mut w = (gamma - s) / 2.0;
    if !newton(p, gamma, &mut zeta, &mut w) || !branch_holds(gamma, &zeta, 0.0) {
        return Err(Error::Numeric(format!("no starting solution at gamma = {gamma}")));
    }
    Ok((zeta, w))
}

/// Solves the Green system at a non-real `gamma` by homotopy in `Im gamma`.
pub fn solve_green(weights: &TransitionWeights, gamma: C64) -> Result<GreenState> {
    if gamma.im == 0.0 || !gamma.is_finite() {
        return Err(Error::param("gamma", "must be finite with Im gamma != 0 (use solve_green_boundary)"));
    }
    if gamma.im < 0.0 {
        let s = solve_green(weights, gamma.conj())?;
        return Ok(make_state(
            weights.p(),
            gamma,
            s.zeta.iter().map(|z| z.conj()).collect(),
            s.w.conj(),
        ));
    }
    let p = weights.p();
    let top = HOMOTOPY_START.max(gamma.im);
    let (mut zeta, mut w) = start(p, gamma.re, top)?;
    march(p, gamma.re, top, gamma.im, &mut zeta, &mut w)?;
    Ok(make_state(p, gamma, zeta, w))
}

/// Boundary value at `lambda + i0`.
#[derive(Clone, Debug)]
pub struct BoundaryGreen {
    pub state: GreenState,
    /// Largest change between the extrapolant and the smallest-`eps` sample.
    pub correction: f64,
    /// Newton polish on the real axis succeeded.
    pub polished: bool,
}

impl BoundaryGreen {
    pub fn density_positive(&self) -> bool {
        self.state.density() > 1e-8
    }
}

/// `lambda + i0` values: samples at `eps` in {1e-4, 1e-5, 1e-6}, polynomial
/// extrapolation to 0, then a Newton polish at `gamma = lambda`.
pub fn solve_green_boundary(weights: &TransitionWeights, lambda: f64) -> Result<BoundaryGreen> {
    if !lambda.is_finite() {
        return Err(Error::param("lambda", "must be finite"));
    }
    let p = weights.p();
    let (mut zeta, mut w) = start(p, lambda, HOMOTOPY_START)?;
    let mut from = HOMOTOPY_START;
    let mut samples: Vec<Vec<C64>> = vec![Vec::new(); p.len() + 1];
    for &eps in DEFAULT_EPS.iter() {
        march(p, lambda, from, eps, &mut zeta, &mut w)?;
        from = eps;
        for (j, z) in zeta.iter().enumerate() {
            samples[j].push(*z);
        }
        samples[p.len()].push(w);
    }
    let mut ex: Vec<C64> = Vec::with_capacity(p.len() + 1);
    let mut correction: f64 = 0.0;
    for s in &samples {
        let e = extrapolate_to_zero(&DEFAULT_EPS, s);
        correction = correction.max(e.correction);
        ex.push(e.value);
    }
    let w_ex = ex.pop().unwrap();
    let gamma = C64::new(lambda, 0.0);
    let mut zp = ex.clone();
    let mut wp = w_ex;
    let polished = newton(p, gamma, &mut zp, &mut wp)
        && zp.iter().zip(&ex).all(|(a, b)| (a - b).norm() < 1e-4 * (1.0 + b.norm()))
        && zp.iter().all(|z| z.im <= 1e-12);
    let (zeta, w) = if polished { (zp, wp) } else { (ex, w_ex) };
    let mut state = make_state(p, gamma, zeta, w);
    state.branch_ok = branch_holds(C64::new(lambda, 1.0), &state.zeta, 1e-9);
    Ok(BoundaryGreen { state, correction, polished })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DensityPoint {
    pub lambda: f64,
    pub density: f64,
    pub in_support: bool,
    /// Extrapolation did not settle (flagged, not fatal).
    pub flagged: bool,
}

/// `m_p(lambda) = -(1/pi) Im(1/(2 w_{lambda+i0}))` on a grid.
pub fn anis_density(weights: &TransitionWeights, grid: &[f64]) -> Vec<DensityPoint> {
    use rayon::prelude::*;
    grid.par_iter()
        .map(|&lambda| match solve_green_boundary(weights, lambda) {
            Ok(b) => {
                let d = b.state.density().max(0.0);
                DensityPoint { lambda, density: d, in_support: d > 1e-8, flagged: b.correction > 1e-4 }
            }
            Err(_) => DensityPoint { lambda, density: f64::NAN, in_support: false, flagged: true },
        })
        .collect()
}

/// Density value with non-finite results mapped to zero; for quadrature.
pub fn density_at(weights: &TransitionWeights, lambda: f64) -> f64 {
    solve_green_boundary(weights, lambda).map_or(0.0, |b| b.state.density().max(0.0))
}

/// `int m_p` over `[-1, 1]` by adaptive Gauss–Legendre; returns `(integral, converged)`.
pub fn density_mass(weights: &TransitionWeights, tol: f64) -> (f64, bool) {
    crate::quad::integrate_adaptive(&|x| density_at(weights, x), -1.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::green_tree;

    fn skewed() -> TransitionWeights {
        TransitionWeights::new(vec![0.5, 0.3, 0.2]).unwrap()
    }

    #[test]
    fn weights_validation() {
        assert!(TransitionWeights::new(vec![0.5, 0.6]).is_err());
        assert!(TransitionWeights::new(vec![1.0, 0.0]).is_err());
        assert!(TransitionWeights::isotropic(2).is_isotropic());
    }

    #[test]
    fn isotropic_matches_tree() {
        let gamma = C64::new(0.3, 0.01);
        let s = solve_green(&TransitionWeights::isotropic(2), gamma).unwrap();
        let g = 3.0 * green_tree(2, 3.0 * gamma, 0).unwrap();
        assert!((s.diagonal() - g).norm() < 1e-8);
    }

    #[test]
    fn skewed_residuals_and_branch() {
        let s = solve_green(&skewed(), C64::new(0.2, 0.05)).unwrap();
        assert!(s.max_residual() < 1e-10);
        assert!(s.zeta.iter().all(|z| z.im < 0.0));
        let t = solve_green(&skewed(), C64::new(0.2, -0.05)).unwrap();
        assert!(t.zeta.iter().all(|z| z.im > 0.0));
    }

    #[test]
    fn equal_weights_give_equal_zeta() {
        let w = TransitionWeights::new(vec![0.4, 0.4, 0.2]).unwrap();
        for g in [C64::new(0.1, 0.2), C64::new(-0.7, 0.001), C64::new(0.5, 3.0)] {
            let s = solve_green(&w, g).unwrap();
            assert!((s.zeta[0] - s.zeta[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_rejects_non_reduced_words() {
        let s = solve_green(&skewed(), C64::new(0.2, 0.05)).unwrap();
        assert!(s.kernel(&[0, 0]).is_err());
        assert!(s.kernel(&[3]).is_err());
        assert_eq!(s.kernel(&[]).unwrap(), s.diagonal());
    }

    #[test]
    fn json_roundtrip() {
        let s = solve_green(&skewed(), C64::new(0.2, 0.05)).unwrap();
        let t = GreenState::from_json(&s.to_json().unwrap(), &skewed()).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn boundary_kolmogorov() {
        let b = solve_green_boundary(&skewed(), 0.1).unwrap();
        assert!(b.polished && b.density_positive());
        assert!(b.state.max_residual() < 1e-12);
        assert!((b.state.kolmogorov_sum() - 1.0).abs() < 1e-8);
    }
}
