//! Gauss-Legendre rules and their tensor products on boxes.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.read().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(GaussLegendre::compute(n));
    cache.write().unwrap().entry(n).or_insert(rule).clone()
}

/// Tensor-product nodes and weights over the box `[lo, hi]`.
pub fn box_rule(lo: &[f64], hi: &[f64], n: usize) -> Vec<(Vec<f64>, f64)> {
    let gl = gauss_legendre(n);
    let axes: Vec<Vec<(f64, f64)>> = lo.iter().zip(hi).map(|(&a, &b)| gl.on(a, b).collect()).collect();
    let mut out = vec![(Vec::with_capacity(lo.len()), 1.0)];
    for axis in &axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (p, w) in &out {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                next.push((q, w * wx));
            }
        }
        out = next;
    }
    out
}

pub fn integrate_box(lo: &[f64], hi: &[f64], n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    box_rule(lo, hi, n).iter().map(|(p, w)| w * f(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for n in [1, 2, 5, 24, 64, 128] {
            let gl = gauss_legendre(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let v = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - exact).abs() < 1e-13, "n={n}");
            let even = (deg - 1) as i32;
            let v = gl.integrate(0.0, 2.0, |x| x.powi(even));
            assert!((v / (2f64.powi(even + 1) / (even as f64 + 1.0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nodes_sorted_and_interior() {
        let gl = gauss_legendre(33);
        assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(gl.nodes.iter().all(|x| x.abs() < 1.0));
        assert_eq!(gl.nodes[16], 0.0);
    }

    #[test]
    fn box_integral() {
        let v = integrate_box(&[0.0, -1.0], &[1.0, 2.0], 4, |p| p[0] * p[0] * p[1]);
        assert!((v - 0.5).abs() < 1e-14);
    }
}
