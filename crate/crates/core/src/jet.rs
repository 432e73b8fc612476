//! Truncated multivariate Taylor polynomials.
//!
//! A `Jet` stores Taylor coefficients `c_m` in at most three variables up to
//! total degree four, so that `D^m f(p) = m! * c_m`. Arithmetic truncates
//! at the jet's order; elementary functions compose through their
//! univariate derivatives.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

pub const MAX_DIM: usize = 3;
pub const MAX_ORDER: usize = 4;
pub const MAX_TERMS: usize = 35;

pub(crate) struct Table {
    pub exps: Vec<[u8; MAX_DIM]>,
    pub degree: Vec<u8>,
    // (i, j, k): monomial i * monomial j = monomial k, degree(k) <= order
    pub products: Vec<(u8, u8, u8)>,
    lookup: Vec<i16>,
}

fn code(e: &[u8; MAX_DIM]) -> usize {
    e[0] as usize + 5 * e[1] as usize + 25 * e[2] as usize
}

impl Table {
    fn build(dim: usize, order: usize) -> Table {
        let mut exps = Vec::new();
        for deg in 0..=order {
            // graded, then reverse-lexicographic within a degree
            let mut level = Vec::new();
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    let c = deg - a - b;
                    let e = [a as u8, b as u8, c as u8];
                    let fits = match dim {
                        1 => b == 0 && c == 0,
                        2 => c == 0,
                        _ => true,
                    };
                    if fits {
                        level.push(e);
                    }
                }
            }
            exps.extend(level);
        }
        let mut lookup = vec![-1i16; 125];
        for (i, e) in exps.iter().enumerate() {
            lookup[code(e)] = i as i16;
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if (degree[i] + degree[j]) as usize <= order {
                    let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    products.push((i as u8, j as u8, lookup[code(&s)] as u8));
                }
            }
        }
        Table {
            exps,
            degree,
            products,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn index(&self, e: &[u8; MAX_DIM]) -> Option<usize> {
        if e.iter().any(|&v| v > 4) {
            return None;
        }
        let i = self.lookup[code(e)];
        (i >= 0).then_some(i as usize)
    }
}

pub(crate) fn table(dim: usize, order: usize) -> &'static Table {
    static TABLES: OnceLock<Vec<Table>> = OnceLock::new();
    let all = TABLES.get_or_init(|| {
        let mut v = Vec::new();
        for d in 1..=MAX_DIM {
            for o in 0..=MAX_ORDER {
                v.push(Table::build(d, o));
            }
        }
        v
    });
    assert!(
        (1..=MAX_DIM).contains(&dim) && order <= MAX_ORDER,
        "jet shape out of range"
    );
    &all[(dim - 1) * (MAX_ORDER + 1) + order]
}

pub fn num_terms(dim: usize, order: usize) -> usize {
    table(dim, order).len()
}

/// Exponent vectors of the given jet shape, graded order.
pub fn monomials(dim: usize, order: usize) -> Vec<Vec<usize>> {
    table(dim, order)
        .exps
        .iter()
        .map(|e| e[..dim].iter().map(|&v| v as usize).collect())
        .collect()
}

/// Index of the monomial with exponents `alpha` in a jet of the given shape.
pub fn monomial_index(dim: usize, order: usize, alpha: &[usize]) -> Option<usize> {
    let mut e = [0u8; MAX_DIM];
    for (k, &a) in alpha.iter().enumerate().take(dim) {
        e[k] = a.min(5) as u8;
    }
    if alpha.iter().skip(dim).any(|&a| a != 0) {
        return None;
    }
    table(dim, order).index(&e)
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    dim: u8,
    order: u8,
    c: [f64; MAX_TERMS],
}

impl Jet {
    pub fn zero(dim: usize, order: usize) -> Jet {
        let _ = table(dim, order);
        Jet {
            dim: dim as u8,
            order: order as u8,
            c: [0.0; MAX_TERMS],
        }
    }

    pub fn constant(dim: usize, order: usize, v: f64) -> Jet {
        let mut j = Jet::zero(dim, order);
        j.c[0] = v;
        j
    }

    /// The coordinate function `p_i + d_i`.
    pub fn variable(dim: usize, order: usize, i: usize, v: f64) -> Jet {
        let mut j = Jet::constant(dim, order, v);
        if order >= 1 {
            j.c[1 + i] = 1.0;
        }
        j
    }

    pub fn variables(p: &[f64], order: usize) -> Vec<Jet> {
        (0..p.len()).map(|i| Jet::variable(p.len(), order, i, p[i])).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn len(&self) -> usize {
        table(self.dim(), self.order()).len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len()]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.c[..n]
    }

    pub fn coef(&self, alpha: &[usize]) -> f64 {
        monomial_index(self.dim(), self.order(), alpha).map_or(0.0, |i| self.c[i])
    }

    pub fn set_coef(&mut self, alpha: &[usize], v: f64) {
        let i = monomial_index(self.dim(), self.order(), alpha).expect("monomial beyond jet order");
        self.c[i] = v;
    }

    /// `D^alpha` at the expansion point.
    pub fn derivative(&self, alpha: &[usize]) -> f64 {
        self.coef(alpha) * multi_factorial(alpha)
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| if self.order >= 1 { self.c[1 + i] } else { 0.0 })
            .collect()
    }

    /// Second derivatives at the expansion point.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut a = vec![0; n];
                a[i] += 1;
                a[j] += 1;
                h[i][j] = self.derivative(&a);
            }
        }
        h
    }

    /// Evaluate the Taylor polynomial at displacement `d`.
    pub fn eval(&self, d: &[f64]) -> f64 {
        let t = table(self.dim(), self.order());
        t.exps
            .iter()
            .zip(self.coeffs())
            .map(|(e, &c)| {
                c * e[..self.dim()]
                    .iter()
                    .zip(d)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let mut out = Jet::zero(self.dim(), order);
        let n = out.len();
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }

    /// Lift to a higher order with zero top coefficients.
    pub fn extend(&self, order: usize) -> Jet {
        assert!(order >= self.order());
        let mut out = Jet::zero(self.dim(), order);
        let n = self.len();
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }

    /// Partial derivative in variable `i`; the result has one order less.
    pub fn partial(&self, i: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let dim = self.dim();
        let src = table(dim, self.order());
        let dst = table(dim, self.order() - 1);
        let mut out = Jet::zero(dim, self.order() - 1);
        for (k, e) in dst.exps.iter().enumerate() {
            let mut up = *e;
            up[i] += 1;
            let s = src.index(&up).expect("monomial");
            out.c[k] = self.c[s] * up[i] as f64;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        for v in out.coeffs_mut() {
            *v *= s;
        }
        out
    }

    /// Compose a univariate function given its derivatives `f^(k)(a0)`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Jet::constant(self.dim(), order, derivs[0]);
        let mut pw = Jet::constant(self.dim(), order, 1.0);
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            pw = pw * h;
            out += pw.scale(d / factorial(k));
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let mut d = [0.0; MAX_ORDER + 1];
        let mut v = 1.0 / a;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = v;
            v *= -((k + 1) as f64) / a;
        }
        self.compose(&d)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.c[0];
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coef * a.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.c[0];
        let mut d = [a.ln(), 0.0, 0.0, 0.0, 0.0];
        let mut v = 1.0 / a;
        for (k, dk) in d.iter_mut().enumerate().skip(1) {
            *dk = v;
            v *= -(k as f64) / a;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n >= 0 {
            let mut out = Jet::constant(self.dim(), self.order(), 1.0);
            for _ in 0..n {
                out = out * *self;
            }
            out
        } else {
            self.powi(-n).recip()
        }
    }

    /// Substitute jets `inner` (in any variables, common shape) for the
    /// displacement variables of `self`: `sum_m c_m prod_i (inner_i - inner_i(0))^m_i`.
    pub fn compose_multi(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.dim());
        let (dim, order) = (inner[0].dim(), inner[0].order());
        let t = table(self.dim(), self.order());
        let one = Jet::constant(dim, order, 1.0);
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(inner.len());
        for h in inner {
            let mut h = *h;
            h.c[0] = 0.0;
            let mut p = vec![one];
            for k in 1..=self.order() {
                let next = p[k - 1] * h;
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = Jet::zero(dim, order);
        for (e, &c) in t.exps.iter().zip(self.coeffs()) {
            if c == 0.0 {
                continue;
            }
            let mut term = one.scale(c);
            for (i, p) in powers.iter().enumerate() {
                if e[i] > 0 {
                    term = term * p[e[i] as usize];
                }
            }
            out += term;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self += o;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        debug_assert_eq!((self.dim, self.order), (o.dim, o.order));
        let n = self.len();
        for k in 0..n {
            self.c[k] += o.c[k];
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        self -= o;
        self
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        debug_assert_eq!((self.dim, self.order), (o.dim, o.order));
        let n = self.len();
        for k in 0..n {
            self.c[k] -= o.c[k];
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        debug_assert_eq!((self.dim, self.order), (o.dim, o.order));
        let t = table(self.dim(), self.order());
        let mut out = Jet::zero(self.dim(), self.order());
        for &(i, j, k) in &t.products {
            out.c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        out
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, o: Jet) {
        *self = *self * o;
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, v: f64) -> Jet {
        self.c[0] -= v;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(v)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, v: f64) -> Jet {
        self.scale(1.0 / v)
    }
}

/// Numbers that metric formulas can be written against once and evaluated
/// either as plain values or as jets.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn val(&self) -> f64;
    fn recip(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn val(&self) -> f64 {
        *self
    }
    fn recip(self) -> f64 {
        1.0 / self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
}

impl Scalar for Jet {
    fn val(&self) -> f64 {
        self.value()
    }
    fn recip(self) -> Jet {
        Jet::recip(&self)
    }
    fn sqrt(self) -> Jet {
        Jet::sqrt(&self)
    }
    fn exp(self) -> Jet {
        Jet::exp(&self)
    }
    fn sin(self) -> Jet {
        Jet::sin(&self)
    }
    fn cos(self) -> Jet {
        Jet::cos(&self)
    }
    fn powi(self, n: i32) -> Jet {
        Jet::powi(&self, n)
    }
}

/// Inverse of a small symmetric matrix of jets via the adjugate.
pub fn invert_jet_matrix(m: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    let n = m.len();
    let z = Jet::zero(m[0][0].dim(), m[0][0].order());
    let det;
    let mut adj = vec![vec![z; n]; n];
    match n {
        1 => {
            det = m[0][0];
            adj[0][0] = Jet::constant(z.dim(), z.order(), 1.0);
        }
        2 => {
            det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            adj[0][0] = m[1][1];
            adj[1][1] = m[0][0];
            adj[0][1] = -m[0][1];
            adj[1][0] = -m[1][0];
        }
        3 => {
            let c = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
            };
            for i in 0..3 {
                for j in 0..3 {
                    adj[j][i] = c(i, j);
                }
            }
            det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
        }
        _ => return None,
    }
    if !(det.value().abs() > 0.0) || !det.value().is_finite() {
        return None;
    }
    let inv = det.recip();
    Some(
        adj.into_iter()
            .map(|row| row.into_iter().map(|a| a * inv).collect())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts() {
        assert_eq!(num_terms(1, 4), 5);
        assert_eq!(num_terms(2, 4), 15);
        assert_eq!(num_terms(3, 4), 35);
        assert_eq!(num_terms(2, 2), 6);
    }

    #[test]
    fn product_matches_polynomial() {
        let x = Jet::variable(2, 4, 0, 0.3);
        let y = Jet::variable(2, 4, 1, -0.7);
        let f = (x * x * y + y * 2.0) * (x - 1.0);
        let exact = |a: f64, b: f64| (a * a * b + 2.0 * b) * (a - 1.0);
        let d = [0.01, -0.02];
        assert!((f.eval(&d) - exact(0.31, -0.72)).abs() < 1e-14);
        // mixed partial d^2/dxdy of (x^3 y - x^2 y + 2xy - 2y)
        let fxy = 3.0 * 0.09 - 2.0 * 0.3 + 2.0;
        assert!((f.derivative(&[1, 1]) - fxy).abs() < 1e-13);
    }

    #[test]
    fn elementary_functions() {
        let x = Jet::variable(1, 4, 0, 0.4);
        let e = x.exp();
        for k in 0..=4 {
            assert!((e.derivative(&[k]) - 0.4f64.exp()).abs() < 1e-13);
        }
        let r = x.recip();
        assert!((r.derivative(&[3]) + 6.0 / 0.4f64.powi(4)).abs() < 1e-9);
        let s = x.sqrt();
        assert!((s.derivative(&[2]) + 0.25 * 0.4f64.powf(-1.5)).abs() < 1e-12);
        let sc = x.sin() * x.sin() + x.cos() * x.cos();
        assert!((sc.value() - 1.0).abs() < 1e-15);
        assert!(sc.coeffs()[1..].iter().all(|c| c.abs() < 1e-14));
        let l = x.ln();
        assert!((l.derivative(&[4]) + 6.0 / 0.4f64.powi(4)).abs() < 1e-9);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::variable(2, 3, 0, 1.0);
        let y = Jet::variable(2, 3, 1, 2.0);
        let f = x * x * y;
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 4.0).abs() < 1e-15);
        assert!((fx.derivative(&[1, 1]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn multivariate_composition() {
        // outer: u^2 + u v about (0,0); inner: u = sin t, v = t^2 over one variable
        let mut outer = Jet::zero(2, 4);
        outer.set_coef(&[2, 0], 1.0);
        outer.set_coef(&[1, 1], 1.0);
        let t = Jet::variable(1, 4, 0, 0.0);
        let out = outer.compose_multi(&[t.sin(), t * t]);
        // sin^2 t + t^2 sin t = t^2 - t^4/3 + t^3 + O(t^5)
        assert!((out.coef(&[2]) - 1.0).abs() < 1e-15);
        assert!((out.coef(&[3]) - 1.0).abs() < 1e-15);
        assert!((out.coef(&[4]) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_inverse() {
        let x = Jet::variable(2, 2, 0, 0.5);
        let y = Jet::variable(2, 2, 1, 0.1);
        let m = vec![vec![x + 1.0, y], vec![y, x * x + 2.0]];
        let inv = invert_jet_matrix(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Jet::zero(2, 2);
                for k in 0..2 {
                    s += m[i][k] * inv[k][j];
                }
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((s.value() - id).abs() < 1e-14);
                assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
            }
        }
    }
}
