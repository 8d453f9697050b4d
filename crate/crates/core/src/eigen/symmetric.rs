//! Dense symmetric eigensolver: Householder tridiagonalisation followed by the
//! implicit QL algorithm (a port of the EISPACK tred2/tql2 pair).

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub n: usize,
    /// Ascending.
    pub values: Vec<T>,
    /// Column-major: column `j` is the unit eigenvector for `values[j]`.
    /// Empty when only eigenvalues were requested.
    pub vectors: Vec<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// `a` is an `n x n` symmetric matrix; only symmetry of the input is assumed,
    /// so row- and column-major layouts coincide.
    pub fn new(a: &[T], n: usize) -> Result<Self> {
        Self::solve(a, n, true)
    }

    pub fn values_only(a: &[T], n: usize) -> Result<Self> {
        Self::solve(a, n, false)
    }

    fn solve(a: &[T], n: usize, want_vectors: bool) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, a.len())));
        }
        if n == 0 {
            return Ok(SymmetricEigen { n, values: vec![], vectors: vec![] });
        }
        let mut v = a.to_vec();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(&mut v, &mut d, &mut e, n, want_vectors);
        tql2(&mut v, &mut d, &mut e, n, want_vectors)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values: Vec<T> = order.iter().map(|&i| d[i]).collect();
        let vectors = if want_vectors {
            let mut out = Vec::with_capacity(n * n);
            for &i in &order {
                out.extend_from_slice(&v[i * n..(i + 1) * n]);
            }
            out
        } else {
            Vec::new()
        };
        Ok(SymmetricEigen { n, values, vectors })
    }

    pub fn vector(&self, j: usize) -> &[T] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

// Storage is column-major: v[j*n + k] is entry (k, j).
fn tred2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize, accumulate: bool) {
    let at = |k: usize, j: usize| j * n + k;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                let col = &v[j * n..j * n + i];
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    if !accumulate {
        for j in 0..n {
            d[j] = v[at(j, j)];
        }
        e[0] = T::zero();
        return;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[at(k, j)] -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize, vectors: bool) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Numeric(format!("QL iteration did not converge at index {l}")));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let ci = &mut lo[i * n..];
                        let ci1 = &mut hi[..n];
                        for k in 0..n {
                            let hk = ci1[k];
                            ci1[k] = s * ci[k] + c * hk;
                            ci[k] = c * ci[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &[f64], n: usize, ev: &SymmetricEigen<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let x = ev.vector(j);
            for r in 0..n {
                let ax: f64 = (0..n).map(|c| a[r * n + c] * x[c]).sum();
                worst = worst.max((ax - ev.values[j] * x[r]).abs());
            }
        }
        worst
    }

    #[test]
    fn small_known_spectrum() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let ev = SymmetricEigen::new(&a, 3).unwrap();
        let s2 = 2f64.sqrt();
        let want = [2.0 - s2, 2.0, 2.0 + s2];
        for (v, w) in ev.values.iter().zip(want) {
            assert!((v - w).abs() < 1e-13);
        }
        assert!(residual(&a, 3, &ev) < 1e-13);
    }

    #[test]
    fn values_only_matches() {
        let n = 30;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = ((i * 7 + j * 13) % 11) as f64 - 5.0;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let full = SymmetricEigen::new(&a, n).unwrap();
        let vals = SymmetricEigen::values_only(&a, n).unwrap();
        for (x, y) in full.values.iter().zip(&vals.values) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(residual(&a, n, &full) < 1e-11);
    }

    #[test]
    fn single_precision() {
        let a = [4.0f32, 1.0, 1.0, 3.0];
        let ev = SymmetricEigen::new(&a, 2).unwrap();
        let disc = (1.0f32 + 4.0).sqrt();
        assert!((ev.values[0] - (7.0 - disc) / 2.0).abs() < 1e-5);
        assert!((ev.values[1] - (7.0 + disc) / 2.0).abs() < 1e-5);
    }
}
