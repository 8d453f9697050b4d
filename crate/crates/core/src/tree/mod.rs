//! Harmonic analysis on the (q+1)-regular tree.

mod ball;

pub use ball::{tree_trace_check, TraceReport, TreeBall};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::C64;
use num_complex::Complex;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParameter {
    pub q: usize,
    pub lambda: f64,
    /// `lambda = q^{1/2+is} + q^{1/2-is}`; real on the tempered window.
    pub s: C64,
    /// `q^{-alpha}` is the decaying Green root at `lambda + i0`, `Re alpha >= 1/2`.
    pub alpha: C64,
}

impl SpectralParameter {
    /// `q^{1/2+is} + q^{1/2-is}` re-evaluated from `s`.
    pub fn lambda_of_s(&self) -> C64 {
        let lq = (self.q as f64).ln();
        let i = C64::i();
        ((0.5 + i * self.s) * lq).exp() + ((0.5 - i * self.s) * lq).exp()
    }

    pub fn is_tempered(&self) -> bool {
        self.lambda.abs() <= 2.0 * (self.q as f64).sqrt()
    }
}

/// Root of `q z^2 - gamma z + 1 = 0` of smaller modulus. On the tempered
/// segment both roots have modulus `q^{-1/2}` and the one with `Im z <= 0`,
/// the limit from the upper half plane, is returned.
pub fn decaying_root(q: usize, gamma: C64) -> C64 {
    let qf = q as f64;
    let disc = (gamma * gamma - 4.0 * qf).sqrt();
    let z1 = (gamma - disc) / (2.0 * qf);
    let z2 = (gamma + disc) / (2.0 * qf);
    let (m1, m2) = (z1.norm(), z2.norm());
    if (m1 - m2).abs() > 1e-14 * (m1 + m2) {
        if m1 < m2 {
            z1
        } else {
            z2
        }
    } else if z1.im <= z2.im {
        z1
    } else {
        z2
    }
}

pub fn spectral_param(q: usize, lambda: f64) -> SpectralParameter {
    assert!(q >= 2, "spectral parametrisation needs q >= 2");
    let z = decaying_root(q, C64::new(lambda, 0.0));
    let alpha = -z.ln() / (q as f64).ln();
    let s = -C64::i() * (alpha - 0.5);
    SpectralParameter { q, lambda, s, alpha }
}

/// Spherical function by the three-term recurrence
/// `lambda Phi(d) = q Phi(d+1) + Phi(d-1)`, `Phi(0) = 1`, `Phi(1) = lambda/(q+1)`.
pub fn spherical_phi<T: Real>(q: usize, lambda: T, d: usize) -> T {
    spherical_phi_table(q, lambda, d)[d]
}

pub fn spherical_phi_table<T: Real>(q: usize, lambda: T, dmax: usize) -> Vec<T> {
    let qf = T::from_usize_lossy(q);
    let mut out = Vec::with_capacity(dmax + 1);
    out.push(T::one());
    if dmax >= 1 {
        out.push(lambda / (qf + T::one()));
    }
    for d in 1..dmax {
        let next = (lambda * out[d] - out[d - 1]) / qf;
        out.push(next);
    }
    out
}

/// Closed form `q^{-d/2} (2 cos(d th)/(q+1) + (q-1)/(q+1) sin((d+1) th)/sin th)`
/// with `lambda = 2 sqrt(q) cos th`; singular at `lambda = ±2 sqrt(q)`.
pub fn spherical_phi_closed(q: usize, lambda: f64, d: usize) -> f64 {
    let qf = q as f64;
    let th = C64::new(lambda / (2.0 * qf.sqrt()), 0.0).acos();
    let df = d as f64;
    let v = (2.0 * (th * df).cos() / (qf + 1.0)
        + (qf - 1.0) / (qf + 1.0) * (th * (df + 1.0)).sin() / th.sin())
        * qf.powf(-df / 2.0);
    v.re
}

/// Isotropic tree Green function `(gamma - A)^{-1}(o, x)` at distance `d`,
/// `g = z^d / (1/z - z)` with `z` the decaying root. On the real axis this is the
/// `+i0` boundary value.
pub fn green_tree(q: usize, gamma: C64, d: usize) -> Result<C64> {
    let z = decaying_root(q, gamma);
    let denom = 1.0 / z - z;
    if denom.norm() < 1e-12 {
        return Err(Error::Numeric(format!(
            "tree Green function blows up at gamma = {gamma} (band edge)"
        )));
    }
    Ok(z.powu(d as u32) / denom)
}

/// `g_{lambda ± i0}(d)`; the `-i0` value is the complex conjugate.
pub fn green_tree_boundary(q: usize, lambda: f64, d: usize, upper: bool) -> Result<C64> {
    let g = green_tree(q, C64::new(lambda, 0.0), d)?;
    Ok(if upper { g } else { g.conj() })
}

#[derive(Clone, Copy, Debug)]
pub struct Extrapolated {
    pub value: C64,
    /// Difference between the extrapolant and the smallest-`eps` sample.
    pub correction: f64,
}

/// Polynomial (Lagrange) extrapolation to `eps = 0` of samples `f(eps_i)`.
pub fn extrapolate_to_zero(eps: &[f64], vals: &[C64]) -> Extrapolated {
    let mut value = C64::new(0.0, 0.0);
    for i in 0..eps.len() {
        let mut w = 1.0;
        for j in 0..eps.len() {
            if i != j {
                w *= eps[j] / (eps[j] - eps[i]);
            }
        }
        value += vals[i] * w;
    }
    let imin = (0..eps.len()).min_by(|&a, &b| eps[a].total_cmp(&eps[b])).unwrap_or(0);
    Extrapolated { value, correction: (value - vals[imin]).norm() }
}

pub const DEFAULT_EPS: [f64; 3] = [1e-4, 1e-5, 1e-6];

/// `g_{lambda+i0}(d)` obtained only from off-axis evaluations.
pub fn green_tree_extrapolated(q: usize, lambda: f64, d: usize, eps: &[f64]) -> Result<Extrapolated> {
    let vals = eps
        .iter()
        .map(|&e| green_tree(q, C64::new(lambda, e), d))
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate_to_zero(eps, &vals))
}

/// `Im g_{lambda+i0}(d) / Im g_{lambda+i0}(0)` via extrapolation.
pub fn green_ratio(q: usize, lambda: f64, d: usize) -> Result<f64> {
    let num = green_tree_extrapolated(q, lambda, d, &DEFAULT_EPS)?.value.im;
    let den = green_tree_extrapolated(q, lambda, 0, &DEFAULT_EPS)?.value.im;
    if den.abs() < 1e-300 {
        return Err(Error::Numeric(format!("lambda = {lambda} is outside the spectrum")));
    }
    Ok(num / den)
}

/// Plancherel (Kesten–McKay) density of the tree, `m = -(1/pi) Im g_{lambda+i0}(o)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlancherelDensity {
    pub q: usize,
}

pub fn km_density(q: usize) -> PlancherelDensity {
    PlancherelDensity { q }
}

impl PlancherelDensity {
    pub fn edge(&self) -> f64 {
        2.0 * (self.q as f64).sqrt()
    }

    pub fn eval<T: Real>(&self, lambda: T) -> T {
        let qf = T::from_usize_lossy(self.q);
        let two = T::lit(2.0);
        let r2 = T::lit(4.0) * qf - lambda * lambda;
        if r2 <= T::zero() {
            return T::zero();
        }
        // z = (lambda - i sqrt(4q - lambda^2)) / 2q on the band.
        let z = Complex::new(lambda, -r2.sqrt()) / (two * qf);
        let g0 = Complex::new(T::one(), T::zero()) / (z.inv() - z);
        -g0.im / T::PI()
    }

    /// `∫ lambda^k m(lambda) dlambda` over the band.
    pub fn moment(&self, k: i32) -> f64 {
        crate::quad::integrate_tempered(self.q as f64, |l| l.powi(k) * self.eval(l), 40, 8)
    }

    /// `∫_{-2√q}^{x} m`.
    pub fn cdf(&self, x: f64) -> f64 {
        let e = self.edge();
        if x <= -e {
            return 0.0;
        }
        if x >= e {
            return 1.0;
        }
        // theta runs from pi (lambda = -e) down to acos(x/e).
        let t0 = (x / e).acos();
        crate::quad::integrate(|t| self.eval(e * t.cos()) * e * t.sin(), t0, std::f64::consts::PI, 40, 4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametrisation_examples() {
        let p = spectral_param(2, 2.0 * 2f64.sqrt());
        assert!(p.s.norm() < 1e-7);
        let p = spectral_param(2, 0.0);
        assert!((p.s.re * 2f64.ln() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let p = spectral_param(2, 3.0);
        assert!(p.s.re.abs() < 1e-12 && p.s.im.abs() > 0.0);
        assert!((p.lambda_of_s() - C64::new(3.0, 0.0)).norm() < 1e-12);
        assert!(p.alpha.re >= 0.5);
    }

    #[test]
    fn phi_values() {
        assert_eq!(spherical_phi(2, 0.7f64, 0), 1.0);
        assert!((spherical_phi(3, 1.2f64, 1) - 0.3).abs() < 1e-15);
        assert!((spherical_phi(2, 0.0f64, 2) + 0.5).abs() < 1e-15);
        assert!((spherical_phi(2, 0.0f32, 2) + 0.5).abs() < 1e-6);
        assert!((spherical_phi_closed(2, 1.0, 3) - spherical_phi(2, 1.0, 3)).abs() < 1e-12);
    }

    #[test]
    fn density_at_zero() {
        let m = km_density(2).eval(0.0f64);
        assert!((m - 2f64.sqrt() / (3.0 * std::f64::consts::PI)).abs() < 1e-14);
        assert_eq!(km_density(2).eval(3.0f64), 0.0);
    }

    #[test]
    fn green_large_gamma() {
        let g = green_tree(2, C64::new(10.0, 0.0), 0).unwrap();
        assert!((g.re - (0.1 + 3e-3)).abs() < 5e-4);
        assert!((g.re - 0.1).abs() < 0.035 * 0.1);
        assert!(green_tree(1, C64::new(2.0, 0.0), 0).is_err());
    }
}
