//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Fixed rule on `[a, b]` split into `panels` equal pieces.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, order: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        total += x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + 0.5 * h * xi)).sum::<f64>() * 0.5 * h;
    }
    total
}

/// Adaptive bisection comparing the 20- and 40-point rules on each panel.
/// Returns the estimate and whether every panel met the tolerance.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, bool) {
    let lo = gauss_legendre(20);
    let hi = gauss_legendre(40);
    let rule = |r: &(Vec<f64>, Vec<f64>), a: f64, b: f64| {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        r.0.iter().zip(&r.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    };
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, 0usize)];
    let (mut total, mut ok) = (0.0, true);
    while let Some((a, b, depth)) = stack.pop() {
        let coarse = rule(&lo, a, b);
        let fine = rule(&hi, a, b);
        let err = (fine - coarse).abs();
        if err <= tol * (b - a).abs() / width || err <= 1e-6 * tol || depth >= 40 {
            ok &= depth < 40;
            total += fine;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    (total, ok)
}

/// `∫_{-2√q}^{2√q} f(λ) dλ` through `λ = 2√q cos θ`, which removes the
/// square-root behaviour of tree spectral densities at the band edges.
pub fn integrate_tempered(q: f64, f: impl Fn(f64) -> f64, order: usize, panels: usize) -> f64 {
    let r = 2.0 * q.sqrt();
    integrate(|t| f(r * t.cos()) * r * t.sin(), 0.0, PI, order, panels)
}
