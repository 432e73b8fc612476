//! Finsler fields on a chart and their derivative jets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{self, Jet, Scalar};
use crate::kernel::BoxDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    /// Continuous only.
    C0,
    /// Smooth in y away from the zero section, continuous in x.
    VerticalSmooth,
    Smooth,
}

/// Taylor jet in x whose coefficients are Taylor jets in y.
///
/// `coeffs[m]` is the coefficient of the x-monomial `m` (graded order of
/// the jet tables), so `D_x^a D_y^b f = a! b! coeffs[a].coef(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XJets {
    pub x_dim: usize,
    pub x_order: usize,
    pub coeffs: Vec<Jet>,
}

impl XJets {
    pub fn zero(x_dim: usize, x_order: usize, y_dim: usize, y_order: usize) -> XJets {
        XJets {
            x_dim,
            x_order,
            coeffs: vec![Jet::zero(y_dim, y_order); jet::num_terms(x_dim, x_order)],
        }
    }

    /// An x-independent y-jet.
    pub fn constant(x_dim: usize, x_order: usize, y: Jet) -> XJets {
        let mut out = XJets::zero(x_dim, x_order, y.dim(), y.order());
        out.coeffs[0] = y;
        out
    }

    pub fn value(&self) -> &Jet {
        &self.coeffs[0]
    }

    pub fn x_coef(&self, alpha: &[usize]) -> Option<&Jet> {
        jet::monomial_index(self.x_dim, self.x_order, alpha).map(|i| &self.coeffs[i])
    }

    /// `D_x^alpha` as a y-jet.
    pub fn x_derivative(&self, alpha: &[usize]) -> Option<Jet> {
        self.x_coef(alpha).map(|j| j.scale(jet::multi_factorial(alpha)))
    }

    /// Product with a scalar x-jet of the same x shape.
    pub fn mul_x_jet(&self, phi: &Jet) -> XJets {
        let t = jet::table(self.x_dim, self.x_order);
        let z = self.coeffs[0].scale(0.0);
        let mut coeffs = vec![z; self.coeffs.len()];
        for &(i, j, k) in &t.products {
            let c = phi.coeffs()[i as usize];
            if c != 0.0 {
                coeffs[k as usize] += self.coeffs[j as usize].scale(c);
            }
        }
        XJets {
            x_dim: self.x_dim,
            x_order: self.x_order,
            coeffs,
        }
    }

    pub fn add_assign(&mut self, o: &XJets) {
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a += *b;
        }
    }
}

/// A Finsler-type function F(x, y) on a chart.
pub trait FinslerField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
    fn smoothness(&self) -> Smoothness;
    fn x_independent(&self) -> bool {
        false
    }
    /// Analytic derivatives of F^2 at (x, y): an x-jet of order `x_order`
    /// whose coefficients are y-jets of order `y_order`. `None` when the
    /// field has no such derivatives (or not to that x order).
    fn f2_jets(&self, _x: &[f64], _y: &[f64], _x_order: usize, _y_order: usize) -> Option<XJets> {
        None
    }
}

/// Positive-definite metric coefficients written once over `Scalar`.
pub trait MetricFormula: Send + Sync {
    fn dim(&self) -> usize;
    fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>>;
}

/// Object-safe view of a Riemannian metric with analytic x-jets.
pub trait Metric: Send + Sync {
    fn dim(&self) -> usize;
    fn g_val(&self, x: &[f64]) -> Vec<Vec<f64>>;
    /// Metric entries as x-jets of order `order` at `x`.
    fn g_jet(&self, x: &[f64], order: usize) -> Vec<Vec<Jet>>;
}

impl<T: MetricFormula> Metric for T {
    fn dim(&self) -> usize {
        MetricFormula::dim(self)
    }
    fn g_val(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.g(x)
    }
    fn g_jet(&self, x: &[f64], order: usize) -> Vec<Vec<Jet>> {
        self.g(&Jet::variables(x, order))
    }
}

/// Quadratic form `y^i y^j` as a y-jet.
fn yy_jets(y: &[f64], y_order: usize) -> Vec<Vec<Jet>> {
    let vars = Jet::variables(y, y_order.max(2));
    let n = y.len();
    let mut out = vec![vec![Jet::zero(n, y_order); n]; n];
    for i in 0..n {
        for j in 0..n {
            let p = vars[i] * vars[j];
            out[i][j] = if y_order >= 2 { p } else { p.truncate(y_order) };
        }
    }
    out
}

/// F^2 = g_ij(x) y^i y^j.
pub struct RiemannianField {
    pub metric: Arc<dyn Metric>,
    pub x_independent: bool,
}

impl RiemannianField {
    pub fn new(metric: Arc<dyn Metric>) -> RiemannianField {
        RiemannianField {
            metric,
            x_independent: false,
        }
    }

    pub fn constant(metric: Arc<dyn Metric>) -> RiemannianField {
        RiemannianField {
            metric,
            x_independent: true,
        }
    }
}

pub fn quadratic_form(g: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += g[i][j] * a[i] * b[j];
        }
    }
    s
}

impl FinslerField for RiemannianField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        quadratic_form(&self.metric.g_val(x), y, y).max(0.0).sqrt()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn x_independent(&self) -> bool {
        self.x_independent
    }

    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Option<XJets> {
        let n = self.dim();
        let g = self.metric.g_jet(x, x_order);
        let yy = yy_jets(y, y_order);
        let mut out = XJets::zero(n, x_order, n, y_order);
        for (m, slot) in out.coeffs.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let c = g[i][j].coeffs()[m];
                    if c != 0.0 {
                        *slot += yy[i][j].scale(c);
                    }
                }
            }
        }
        Some(out)
    }
}

/// An x-independent norm given by a formula over `Scalar`.
pub trait NormFormula: Send + Sync {
    fn dim(&self) -> usize;
    fn smooth(&self) -> bool;
    fn norm<S: Scalar>(&self, y: &[S]) -> S;
    fn value(&self, y: &[f64]) -> f64 {
        self.norm(y)
    }
}

/// Minkowski-type field F(x, y) = N(y).
pub struct ConstantNorm<N: NormFormula>(pub N);

impl<N: NormFormula> FinslerField for ConstantNorm<N> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, _x: &[f64], y: &[f64]) -> f64 {
        self.0.value(y)
    }

    fn smoothness(&self) -> Smoothness {
        if self.0.smooth() {
            Smoothness::Smooth
        } else {
            Smoothness::C0
        }
    }

    fn x_independent(&self) -> bool {
        true
    }

    fn f2_jets(&self, _x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Option<XJets> {
        if !self.0.smooth() || y.iter().all(|&v| v == 0.0) {
            return None;
        }
        let f = self.0.norm(&Jet::variables(y, y_order));
        Some(XJets::constant(y.len(), x_order, f * f))
    }
}

/// Wrap a closure as a (possibly x-dependent) continuous field.
pub struct FnField<F: Fn(&[f64], &[f64]) -> f64 + Send + Sync> {
    pub dim: usize,
    pub f: F,
    pub smoothness: Smoothness,
    pub x_independent: bool,
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Send + Sync> FinslerField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.f)(x, y)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
    fn x_independent(&self) -> bool {
        self.x_independent
    }
}

/// Source of F^2 derivative jets, analytic or smoothed.
pub trait DerivativeSource: Send + Sync {
    fn dim(&self) -> usize;
    fn f2(&self, x: &[f64], y: &[f64]) -> Result<f64>;
    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Result<XJets>;
    /// Typical length of the chart, used to size finite-difference steps.
    fn length_scale(&self) -> f64 {
        1.0
    }
}

/// Analytic derivatives of a field that provides them.
pub struct Analytic {
    pub field: Arc<dyn FinslerField>,
    pub scale: f64,
}

impl Analytic {
    pub fn new(field: Arc<dyn FinslerField>) -> Analytic {
        Analytic { field, scale: 1.0 }
    }
}

impl DerivativeSource for Analytic {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn f2(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let f = self.field.eval(x, y);
        Ok(f * f)
    }
    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Result<XJets> {
        self.field
            .f2_jets(x, y, x_order, y_order)
            .ok_or_else(|| Error::OracleMissing("analytic derivatives of this field".into()))
    }
    fn length_scale(&self) -> f64 {
        self.scale
    }
}

/// A field restricted to a chart box.
#[derive(Clone)]
pub struct ChartField {
    pub field: Arc<dyn FinslerField>,
    pub domain: BoxDomain,
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly;
    impl MetricFormula for Poly {
        fn dim(&self) -> usize {
            2
        }
        fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
            let a = x[0] * x[0] * 0.2 + 1.0;
            let b = x[0] * x[1] * 0.1;
            let c = x[1] * x[1] * 0.3 + 1.0;
            vec![vec![a, b], vec![b, c]]
        }
    }

    #[test]
    fn riemannian_jets_match_values() {
        let f = RiemannianField::new(Arc::new(Poly));
        let (x, y) = ([0.3, -0.4], [0.8, 0.5]);
        let j = f.f2_jets(&x, &y, 2, 4).unwrap();
        let v = f.eval(&x, &y);
        assert!((j.value().value() - v * v).abs() < 1e-14);
        // d/dx0 of F^2 = 0.4 x0 y0^2 + 0.2 x1 y0 y1
        let d = 0.4 * 0.3 * 0.64 + 0.2 * (-0.4) * 0.4;
        assert!((j.x_derivative(&[1, 0]).unwrap().value() - d).abs() < 1e-14);
        // d2/dy0dy1 = 2 g01
        let h = j.value().derivative(&[1, 1]);
        assert!((h - 2.0 * 0.1 * 0.3 * -0.4).abs() < 1e-14);
        assert_eq!(j.value().coef(&[3, 0]), 0.0);
    }

    #[test]
    fn x_jet_product() {
        let x = Jet::variable(1, 2, 0, 0.0);
        let y = Jet::variable(1, 2, 0, 2.0);
        let a = XJets {
            x_dim: 1,
            x_order: 2,
            coeffs: vec![y, y * y, Jet::zero(1, 2)],
        };
        let phi = (x + 1.0) * (x + 1.0);
        let p = a.mul_x_jet(&phi);
        // (y + y^2 t)(1 + 2t + t^2) => t^2 coefficient y + 2 y^2
        assert!((p.coeffs[2].value() - (2.0 + 8.0)).abs() < 1e-14);
    }
}
