use super::{km_density, spectral_param};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::C64;

/// Ball of radius `radius` around the root of the (q+1)-regular tree.
/// Vertex 0 is the root; each vertex stores its word of child indices.
#[derive(Clone, Debug)]
pub struct TreeBall {
    pub q: usize,
    pub radius: usize,
    pub words: Vec<Vec<u8>>,
    pub parent: Vec<usize>,
}

impl TreeBall {
    pub fn new(q: usize, radius: usize) -> Self {
        let mut words = vec![Vec::new()];
        let mut parent = vec![usize::MAX];
        let mut layer = vec![0usize];
        for r in 0..radius {
            let mut next = Vec::new();
            for &v in &layer {
                let kids = if r == 0 { q + 1 } else { q };
                for c in 0..kids {
                    let mut w = words[v].clone();
                    w.push(c as u8);
                    words.push(w);
                    parent.push(v);
                    next.push(words.len() - 1);
                }
            }
            layer = next;
        }
        TreeBall { q, radius, words, parent }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn depth(&self, v: usize) -> usize {
        self.words[v].len()
    }

    /// Tree distance between two ball vertices.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (wa, wb) = (&self.words[a], &self.words[b]);
        let common = wa.iter().zip(wb).take_while(|(x, y)| x == y).count();
        wa.len() + wb.len() - 2 * common
    }

    /// Dense kernel `K(x, y) = f(d(x, y))` restricted to the ball, row-major.
    pub fn radial_kernel(&self, f: impl Fn(usize) -> C64) -> Vec<C64> {
        let n = self.len();
        let mut k = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                k[a * n + b] = f(self.distance(a, b));
            }
        }
        k
    }

    /// `A^2` of the whole tree restricted to pairs inside the ball.
    pub fn adjacency_squared(&self) -> Vec<C64> {
        self.radial_kernel(|d| match d {
            0 => C64::new((self.q + 1) as f64, 0.0),
            2 => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceReport {
    pub trace: C64,
    pub spectral: C64,
    pub abs_error: f64,
    pub cylinders: usize,
}

/// Compares `sum_x K(x, x)` with
/// `∫ m(lambda) ∫ <P_{lambda,omega}, K P_{lambda,omega}> dnu(omega) dlambda`,
/// where `P_{lambda,omega}(x) = q^{(1/2+is) h_omega(x)}` and the boundary
/// integral runs over the depth-`radius` cylinders, each of mass `1/tau(radius)`.
pub fn tree_trace_check(ball: &TreeBall, kernel: &[C64], order: usize) -> Result<TraceReport> {
    let n = ball.len();
    if kernel.len() != n * n {
        return Err(Error::Dimension(format!("kernel has {} entries, ball needs {}", kernel.len(), n * n)));
    }
    let q = ball.q;
    let qf = q as f64;
    let r = ball.radius;
    let trace: C64 = (0..n).map(|x| kernel[x * n + x]).sum();

    // Cylinders of depth r: the words of the ball's outer sphere (or the root if r = 0).
    let cyl: Vec<&Vec<u8>> = ball.words.iter().filter(|w| w.len() == r).collect();
    let mass = 1.0 / cyl.len() as f64;
    // Horocycle index h(x) = 2 |common prefix| - |x|; constant on depth-r cylinders.
    let h: Vec<Vec<i64>> = cyl
        .iter()
        .map(|c| {
            ball.words
                .iter()
                .map(|w| {
                    let j = w.iter().zip(c.iter()).take_while(|(a, b)| a == b).count();
                    2 * j as i64 - w.len() as i64
                })
                .collect()
        })
        .collect();

    let dens = km_density(q);
    let e = dens.edge();
    let (tn, tw) = gauss_legendre(order);
    let mut spectral = C64::new(0.0, 0.0);
    for (t, w) in tn.iter().zip(&tw) {
        let th = 0.5 * std::f64::consts::PI * (t + 1.0);
        let lambda = e * th.cos();
        let jac = 0.5 * std::f64::consts::PI * e * th.sin();
        let s = spectral_param(q, lambda).s.re;
        let mut inner = C64::new(0.0, 0.0);
        for hc in &h {
            let p: Vec<C64> = hc
                .iter()
                .map(|&hx| C64::from_polar(qf.powf(0.5 * hx as f64), s * qf.ln() * hx as f64))
                .collect();
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..n {
                let mut row = C64::new(0.0, 0.0);
                for y in 0..n {
                    row += kernel[x * n + y] * p[y];
                }
                acc += p[x].conj() * row;
            }
            inner += acc * mass;
        }
        spectral += inner * (w * jac * dens.eval(lambda));
    }
    Ok(TraceReport { trace, spectral, abs_error: (trace - spectral).norm(), cylinders: cyl.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes_and_distance() {
        let b = TreeBall::new(2, 3);
        assert_eq!(b.len(), 22);
        assert_eq!(b.distance(0, 21), 3);
        let leaf_a = b.words.iter().position(|w| w == &vec![0, 0, 0]).unwrap();
        let leaf_b = b.words.iter().position(|w| w == &vec![1, 0, 0]).unwrap();
        assert_eq!(b.distance(leaf_a, leaf_b), 6);
    }

    #[test]
    fn identity_trace() {
        let b = TreeBall::new(2, 2);
        let id = b.radial_kernel(|d| if d == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let rep = tree_trace_check(&b, &id, 48).unwrap();
        assert!((rep.trace.re - 10.0).abs() < 1e-12);
        assert!(rep.abs_error < 1e-6, "{rep:?}");
    }
}
