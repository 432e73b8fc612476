//! The standard mollifier, its derivatives, and discrete convolution.
//!
//! Convolutions use product rules on the kernel's ball: Gauss-Legendre in
//! the radius, a periodic trapezoid in angle. (Tensor rules on the bounding
//! box resolve the kernel itself but not its higher derivatives, whose mass
//! piles up near the sphere where box lines cut short chords.) Value rules are normalized
//! by their discrete mass; derivative rules are rescaled so that each pure
//! moment `sum W_a(u) (-u)^a / a!` is exactly one, which makes polynomials
//! of matching degree exact and removes an O(1) bias from derivative
//! estimates. Derivative sums are taken against `f(p - w) - f(p)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jet::{self, Jet};
use crate::quadrature::{box_rule, gauss_legendre};

pub const MAX_DERIVATIVE: usize = jet::MAX_ORDER;

// Below this exponent exp() underflows; treat the kernel as zero there.
const EXP_FLOOR: f64 = -700.0;

/// Normalizing constant of the unit mollifier in dimension `n`.
pub fn mollifier_constant(n: usize) -> f64 {
    static C: OnceLock<[f64; 3]> = OnceLock::new();
    assert!((1..=3).contains(&n), "dimension must be 1..=3");
    C.get_or_init(|| {
        // radial integral of exp(1/(r^2-1)) r^(n-1), smooth and flat at r = 1
        let gl = gauss_legendre(400);
        let radial = |k: i32| {
            gl.integrate(0.0, 1.0, |r| {
                let t = 1.0 / (r * r - 1.0);
                if t < EXP_FLOOR {
                    0.0
                } else {
                    t.exp() * r.powi(k)
                }
            })
        };
        [
            1.0 / (2.0 * radial(0)),
            1.0 / (2.0 * PI * radial(1)),
            1.0 / (4.0 * PI * radial(2)),
        ]
    })[n - 1]
}

// f^(k)(s) for f(s) = exp(1/(s-1)), s < 1.
fn profile_derivatives(s: f64) -> [f64; MAX_DERIVATIVE + 1] {
    if s >= 1.0 {
        return [0.0; MAX_DERIVATIVE + 1];
    }
    let t = 1.0 / (s - 1.0);
    if t < EXP_FLOOR {
        return [0.0; MAX_DERIVATIVE + 1];
    }
    let e = t.exp();
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    [
        e,
        -e * t2,
        e * (t4 + 2.0 * t3),
        -e * t4 * (t2 + 6.0 * t + 6.0),
        e * t4 * t * (t3 + 12.0 * t2 + 36.0 * t + 24.0),
    ]
}

/// `eta_r(x) = r^-n C exp(1/(|x/r|^2 - 1))` on the open ball of radius r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub dim: usize,
    pub radius: f64,
}

impl Mollifier {
    pub fn new(dim: usize, radius: f64) -> Result<Mollifier> {
        if !(1..=3).contains(&dim) {
            return Err(Error::OutOfRange(format!("kernel dimension {dim}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange(format!("kernel radius {radius}")));
        }
        Ok(Mollifier { dim, radius })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.radius;
        let s = x.iter().map(|v| (v / r) * (v / r)).sum::<f64>();
        mollifier_constant(self.dim) * profile_derivatives(s)[0] / r.powi(self.dim as i32)
    }

    /// All derivatives up to `order` at `x`, as a Taylor jet.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        if order > MAX_DERIVATIVE {
            return Err(Error::OrderCap {
                requested: order,
                max: MAX_DERIVATIVE,
            });
        }
        let r = self.radius;
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        let vars = Jet::variables(&u, order);
        let mut s = Jet::zero(self.dim, order);
        for v in &vars {
            s += *v * *v;
        }
        let d = profile_derivatives(s.value());
        let unit = s.compose(&d).scale(mollifier_constant(self.dim));
        // chain rule for x/r: coefficients of degree k pick up r^-k
        let mut out = unit.scale(r.powi(-(self.dim as i32)));
        let t = jet::table(self.dim, order);
        for (c, deg) in out.coeffs_mut().iter_mut().zip(&t.degree) {
            *c *= r.powi(-(*deg as i32));
        }
        Ok(out)
    }

    pub fn derivative(&self, alpha: &[usize], x: &[f64]) -> Result<f64> {
        let k: usize = alpha.iter().sum();
        Ok(self.jet(x, k)?.derivative(alpha))
    }
}

/// Gauss-Legendre nodes per axis for derivative order 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadOrders(pub [usize; MAX_DERIVATIVE + 1]);

impl QuadOrders {
    pub fn default_for(dim: usize) -> QuadOrders {
        match dim {
            1 => QuadOrders([48, 64, 96, 128, 160]),
            2 => QuadOrders([24, 48, 64, 96, 128]),
            _ => QuadOrders([24, 32, 40, 48, 56]),
        }
    }

    /// Scale the default ladder so that the value rule uses `base` nodes.
    pub fn with_base(dim: usize, base: usize) -> QuadOrders {
        let d = QuadOrders::default_for(dim).0;
        let mut o = [0; MAX_DERIVATIVE + 1];
        for k in 0..=MAX_DERIVATIVE {
            o[k] = ((d[k] * base) as f64 / d[0] as f64).round().max(2.0) as usize;
        }
        QuadOrders(o)
    }
}

/// Unit-radius kernel weights for all multi-indices of one derivative order.
#[derive(Debug)]
pub struct KernelTable {
    pub dim: usize,
    pub order: usize,
    pub alphas: Vec<Vec<usize>>,
    pub nodes: Vec<[f64; 3]>,
    // weights[a][j] multiplies f(p - r u_j) (- f(p) when order > 0)
    pub weights: Vec<Vec<f64>>,
}

impl KernelTable {
    fn build(dim: usize, order: usize, n: usize) -> KernelTable {
        let unit = Mollifier { dim, radius: 1.0 };
        let all = jet::monomials(dim, order);
        let of_degree =
            |d: usize| -> Vec<usize> { (0..all.len()).filter(|&i| all[i].iter().sum::<usize>() == d).collect() };
        let top = of_degree(order);
        let alphas: Vec<Vec<usize>> = top.iter().map(|&i| all[i].clone()).collect();
        let mut nodes = Vec::new();
        // raw[m][j] = w_j D^m eta(u_j) for every monomial m up to `order`
        let mut raw = vec![Vec::new(); all.len()];
        for (p, w) in ball_rule(dim, n) {
            let j = unit.jet(&p, order).expect("order within cap");
            let mut node = [0.0; 3];
            node[..dim].copy_from_slice(&p);
            nodes.push(node);
            for (m, alpha) in all.iter().enumerate() {
                raw[m].push(w * j.coeffs()[m] * jet::multi_factorial(alpha));
            }
        }
        let moment = |wts: &[f64], beta: &[usize]| -> f64 {
            nodes
                .iter()
                .zip(wts)
                .map(|(u, w)| {
                    w * beta
                        .iter()
                        .enumerate()
                        .map(|(i, &e)| (-u[i]).powi(e as i32))
                        .product::<f64>()
                })
                .sum::<f64>()
                / jet::multi_factorial(beta)
        };
        let mut weights: Vec<Vec<f64>> = top.iter().map(|&i| raw[i].clone()).collect();
        // Moments two orders down are multiplied by r^-2 in use; remove
        // them exactly with the lower-order kernel weights on the same nodes.
        // (One order down and four down vanish by symmetry or subtraction.)
        if order >= 3 {
            let low = of_degree(order - 2);
            let k = low.len();
            let p = DMatrix::from_fn(k, k, |g, b| moment(&raw[low[b]], &all[low[g]]));
            let lu = p.lu();
            for w in weights.iter_mut() {
                let m = DVector::from_fn(k, |g, _| moment(w, &all[low[g]]));
                let c = lu.solve(&m).expect("moment matrix is near identity");
                for (b, &li) in low.iter().enumerate() {
                    for (wj, rj) in w.iter_mut().zip(&raw[li]) {
                        *wj -= c[b] * rj;
                    }
                }
            }
        }
        for (w, alpha) in weights.iter_mut().zip(&alphas) {
            let m = moment(w, alpha);
            for v in w.iter_mut() {
                *v /= m;
            }
        }
        KernelTable {
            dim,
            order,
            alphas,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product rule on the open unit ball: Gauss-Legendre in the radius (and
/// in the polar cosine in 3D) times a periodic trapezoid in azimuth. `n`
/// counts nodes across a diameter, so the radius gets `n / 2`.
pub fn ball_rule(dim: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    let tau = 2.0 * PI;
    match dim {
        1 => gauss_legendre(n).on(-1.0, 1.0).map(|(x, w)| (vec![x], w)).collect(),
        2 => {
            let radial = gauss_legendre((n / 2).max(1));
            let m = 2 * n.div_ceil(2);
            let mut out = Vec::with_capacity(m * radial.len());
            for (r, wr) in radial.on(0.0, 1.0) {
                for k in 0..m {
                    let t = tau * (k as f64 + 0.5) / m as f64;
                    out.push((vec![r * t.cos(), r * t.sin()], wr * r * tau / m as f64));
                }
            }
            out
        }
        _ => {
            let radial = gauss_legendre((n / 2).max(1));
            let polar = gauss_legendre((n / 2).max(1));
            let m = 2 * n.div_ceil(2);
            let mut out = Vec::with_capacity(m * radial.len() * polar.len());
            for (r, wr) in radial.on(0.0, 1.0) {
                for (c, wc) in polar.on(-1.0, 1.0) {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..m {
                        let t = tau * (k as f64 + 0.5) / m as f64;
                        out.push((
                            vec![r * s * t.cos(), r * s * t.sin(), r * c],
                            wr * wc * r * r * tau / m as f64,
                        ));
                    }
                }
            }
            out
        }
    }
}

pub fn kernel_table(dim: usize, order: usize, n: usize) -> Arc<KernelTable> {
    type Cache = RwLock<HashMap<(usize, usize, usize), Arc<KernelTable>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (dim, order, n);
    if let Some(t) = cache.read().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(KernelTable::build(dim, order, n));
    cache.write().unwrap().entry(key).or_insert(t).clone()
}

/// Values that convolution sums can accumulate: plain numbers or jets.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>> Linear for T {}

impl Mollifier {
    /// Taylor coefficients (graded monomial order, dimension `dim`, up to
    /// `order`) of `eta_r * f` at `p`.
    pub fn convolve_taylor<T: Linear>(
        &self,
        p: &[f64],
        order: usize,
        quad: &QuadOrders,
        f: impl Fn(&[f64]) -> T,
    ) -> Result<Vec<T>> {
        if order > MAX_DERIVATIVE {
            return Err(Error::OrderCap {
                requested: order,
                max: MAX_DERIVATIVE,
            });
        }
        if p.len() != self.dim {
            return Err(Error::Invalid(format!(
                "point of dimension {} for a {}-dimensional kernel",
                p.len(),
                self.dim
            )));
        }
        let dim = self.dim;
        let r = self.radius;
        let center = f(p);
        let mut out = Vec::with_capacity(jet::num_terms(dim, order));
        let mut buf = [0.0; 3];
        for k in 0..=order {
            let table = kernel_table(dim, k, quad.0[k]);
            let mut acc: Vec<Option<T>> = vec![None; table.alphas.len()];
            for (j, u) in table.nodes.iter().enumerate() {
                for i in 0..dim {
                    buf[i] = p[i] - r * u[i];
                }
                let v = f(&buf[..dim]);
                let v = if k == 0 { v } else { v - center };
                for (a, slot) in acc.iter_mut().enumerate() {
                    let term = v * table.weights[a][j];
                    *slot = Some(match *slot {
                        Some(s) => s + term,
                        None => term,
                    });
                }
            }
            let scale = r.powi(-(k as i32));
            for (a, alpha) in table.alphas.iter().enumerate() {
                let sum = acc[a].unwrap_or(center * 0.0);
                let sum = if k == 0 {
                    let mass: f64 = table.weights[0].iter().sum();
                    sum * (1.0 / mass)
                } else {
                    sum * scale
                };
                out.push(sum * (1.0 / jet::multi_factorial(alpha)));
            }
        }
        Ok(out)
    }

    pub fn convolve(&self, p: &[f64], quad: &QuadOrders, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        Ok(self.convolve_taylor(p, 0, quad, f)?[0])
    }

    /// `D^alpha (eta_r * f)(p)`.
    pub fn convolve_derivative(
        &self,
        alpha: &[usize],
        p: &[f64],
        quad: &QuadOrders,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<f64> {
        let k: usize = alpha.iter().sum();
        if k > MAX_DERIVATIVE {
            return Err(Error::OrderCap {
                requested: k,
                max: MAX_DERIVATIVE,
            });
        }
        if k == 0 {
            return self.convolve(p, quad, f);
        }
        let table = kernel_table(self.dim, k, quad.0[k]);
        let a = table
            .alphas
            .iter()
            .position(|b| b.as_slice() == alpha)
            .ok_or_else(|| Error::Invalid(format!("multi-index {alpha:?}")))?;
        let center = f(p);
        let mut buf = [0.0; 3];
        let mut sum = 0.0;
        for (j, u) in table.nodes.iter().enumerate() {
            for i in 0..self.dim {
                buf[i] = p[i] - self.radius * u[i];
            }
            sum += table.weights[a][j] * (f(&buf[..self.dim]) - center);
        }
        Ok(sum * self.radius.powi(-(k as i32)))
    }

    /// Convolve in one slot of a two-slot function, the other held fixed.
    /// With a `domain` box for the convolved slot, the point must sit
    /// farther than the radius from its boundary.
    pub fn convolve_partial(
        &self,
        slot: Slot,
        x: &[f64],
        y: &[f64],
        domain: Option<&BoxDomain>,
        quad: &QuadOrders,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<f64> {
        let alpha = vec![0; self.dim];
        self.convolve_partial_derivative(slot, &alpha, x, y, domain, quad, f)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn convolve_partial_derivative(
        &self,
        slot: Slot,
        alpha: &[usize],
        x: &[f64],
        y: &[f64],
        domain: Option<&BoxDomain>,
        quad: &QuadOrders,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<f64> {
        let p = match slot {
            Slot::X => x,
            Slot::Y => y,
        };
        if let Some(d) = domain {
            d.check_margin(p, self.radius)?;
        }
        match slot {
            Slot::X => self.convolve_derivative(alpha, x, quad, |z| f(z, y)),
            Slot::Y => self.convolve_derivative(alpha, y, quad, |w| f(x, w)),
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<BoxDomain> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Invalid(format!("box {lo:?} .. {hi:?}")));
        }
        Ok(BoxDomain { lo, hi })
    }

    /// Distance from `p` to the complement; negative outside.
    pub fn inner_distance(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&a, &b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.inner_distance(p) > 0.0
    }

    pub fn check_margin(&self, p: &[f64], radius: f64) -> Result<()> {
        let d = self.inner_distance(p);
        if d > radius {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "point {p:?} lies {d:.3e} from the domain boundary, kernel radius {radius:.3e}"
            )))
        }
    }
}

/// `(1 - blend) eta_inner + blend eta_outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendedKernel {
    pub inner: Mollifier,
    pub outer: Mollifier,
    pub blend: f64,
}

impl BlendedKernel {
    pub fn new(inner: Mollifier, outer: Mollifier, blend: f64) -> Result<BlendedKernel> {
        if inner.dim != outer.dim {
            return Err(Error::Invalid("blended kernels of different dimension".into()));
        }
        if !(blend > 0.0 && blend < 1.0) {
            return Err(Error::OutOfRange(format!("blend weight {blend}")));
        }
        Ok(BlendedKernel { inner, outer, blend })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (1.0 - self.blend) * self.inner.value(x) + self.blend * self.outer.value(x)
    }

    pub fn convolve_taylor<T: Linear>(
        &self,
        p: &[f64],
        order: usize,
        quad: &QuadOrders,
        f: impl Fn(&[f64]) -> T,
    ) -> Result<Vec<T>> {
        let a = self.inner.convolve_taylor(p, order, quad, &f)?;
        let b = self.outer.convolve_taylor(p, order, quad, &f)?;
        Ok(a.into_iter()
            .zip(b)
            .map(|(a, b)| a * (1.0 - self.blend) + b * self.blend)
            .collect())
    }

    pub fn convolve(&self, p: &[f64], quad: &QuadOrders, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        Ok((1.0 - self.blend) * self.inner.convolve(p, quad, &f)? + self.blend * self.outer.convolve(p, quad, &f)?)
    }

    pub fn convolve_derivative(
        &self,
        alpha: &[usize],
        p: &[f64],
        quad: &QuadOrders,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<f64> {
        Ok((1.0 - self.blend) * self.inner.convolve_derivative(alpha, p, quad, &f)?
            + self.blend * self.outer.convolve_derivative(alpha, p, quad, &f)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
}

/// Integral of a kernel-weighted function over the ball by the value rule,
/// without mass normalization; used to check the normalization itself.
pub fn raw_integral(k: &Mollifier, n: usize) -> f64 {
    let r = k.radius;
    let lo = vec![-r; k.dim];
    let hi = vec![r; k.dim];
    box_rule(&lo, &hi, n).iter().map(|(p, w)| w * k.value(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_reference() {
        // independent high-precision radial integrals
        assert!((mollifier_constant(1) - 2.2522836210435817).abs() < 1e-13);
        assert!((mollifier_constant(2) - 2.1435657757922493).abs() < 1e-13);
    }

    #[test]
    fn support_and_underflow() {
        let k = Mollifier::new(2, 0.5).unwrap();
        assert_eq!(k.value(&[0.5, 0.0]), 0.0);
        assert_eq!(k.value(&[0.4999999999, 0.0]), 0.0);
        let j = k.jet(&[0.49999999, 0.0], 4).unwrap();
        assert!(j.coeffs().iter().all(|c| c.is_finite()));
        assert!(Mollifier::new(2, 0.0).is_err());
        assert!(matches!(k.jet(&[0.0, 0.0], 5), Err(Error::OrderCap { .. })));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = Mollifier::new(2, 0.8).unwrap();
        let p = [0.2, -0.3];
        let h = 1e-5;
        let fd = (k.value(&[p[0] + h, p[1]]) - k.value(&[p[0] - h, p[1]])) / (2.0 * h);
        let d = k.derivative(&[1, 0], &p).unwrap();
        assert!((fd - d).abs() < 1e-8 * d.abs().max(1.0));
        let fd2 = (k.derivative(&[1, 0], &[p[0], p[1] + h]).unwrap()
            - k.derivative(&[1, 0], &[p[0], p[1] - h]).unwrap())
            / (2.0 * h);
        assert!((fd2 - k.derivative(&[1, 1], &p).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn quadratic_second_derivative() {
        let k = Mollifier::new(1, 0.3).unwrap();
        let q = QuadOrders::default_for(1);
        let d = k.convolve_derivative(&[2], &[0.7], &q, |z| z[0] * z[0]).unwrap();
        assert!((d - 2.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn affine_functions_reproduced() {
        let k = Mollifier::new(2, 0.25).unwrap();
        let q = QuadOrders::default_for(2);
        let f = |z: &[f64]| 3.0 - 2.0 * z[0] + 0.5 * z[1];
        let c = k.convolve_taylor(&[0.1, 0.4], 2, &q, f).unwrap();
        assert!((c[0] - f(&[0.1, 0.4])).abs() < 1e-13);
        assert!((c[1] + 2.0).abs() < 1e-12);
        assert!((c[2] - 0.5).abs() < 1e-12);
        assert!(c[3..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn higher_moments_accurate() {
        let q = QuadOrders::default_for(2);
        let k = Mollifier::new(2, 1.0).unwrap();
        // quartic x^4/24 has fourth derivative 1 in x
        let d = k
            .convolve_derivative(&[4, 0], &[0.0, 0.0], &q, |z| z[0].powi(4) / 24.0)
            .unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        let d = k
            .convolve_derivative(&[2, 2], &[0.0, 0.0], &q, |z| z[0].powi(2) * z[1].powi(2) / 4.0)
            .unwrap();
        assert!((d - 1.0).abs() < 1e-5, "{d}");
    }
}
