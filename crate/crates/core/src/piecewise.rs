//! Riemannian metrics glued along x^n = 0 with a jump in the normal
//! derivative, their mollifications, and the curvature that concentrates on
//! the interface as the mollifier shrinks.
//!
//! Convolutions are split at quadrature level: in kernel coordinates
//! `z = x - eps u` the upper metric applies where `u_n <= x^n / eps`.
//! Derivatives of `g_eps` are convolutions of one-sided derivatives, except
//! the second normal derivative, which also picks up the interface integral
//! of the kernel against the jump `dg+/dx^n - dg-/dx^n`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::field::Metric;
use crate::geometry::{flag_formula, metric_curvature, metric_curvature_from_jets, Mat};
use crate::jet::Jet;
use crate::kernel::mollifier_constant;
use crate::norm::classify;
use crate::quadrature::gauss_legendre;

/// Nested Gauss-Legendre nodes per axis for the split convolutions.
pub const DEFAULT_CONV_NODES: usize = 64;

#[derive(Clone)]
pub struct PiecewiseMetric {
    pub plus: Arc<dyn Metric>,
    pub minus: Arc<dyn Metric>,
    pub conv_nodes: usize,
}

impl std::fmt::Debug for PiecewiseMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PiecewiseMetric(dim {})", self.dim())
    }
}

/// Unit-kernel profile `C exp(1/(|u|^2 - 1))`.
fn unit_kernel(dim: usize, u: &[f64]) -> f64 {
    let s: f64 = u.iter().map(|v| v * v).sum();
    if s >= 1.0 {
        return 0.0;
    }
    let t = 1.0 / (s - 1.0);
    if t < -700.0 {
        0.0
    } else {
        mollifier_constant(dim) * t.exp()
    }
}

/// Visit nested Gauss-Legendre nodes of the ball `|u|^2 < r2` in `dim`
/// coordinates, the last coordinate outermost.
fn nested_ball(dim: usize, r2: f64, n: usize, prefix: &mut Vec<f64>, w: f64, visit: &mut dyn FnMut(&[f64], f64)) {
    if dim == 0 {
        visit(prefix, w);
        return;
    }
    let h = r2.max(0.0).sqrt();
    if h == 0.0 {
        return;
    }
    let gl = gauss_legendre(n);
    for (v, wv) in gl.on(-h, h) {
        prefix.insert(0, v);
        nested_ball(dim - 1, r2 - v * v, n, prefix, w * wv, visit);
        prefix.remove(0);
    }
}

/// Nodes of the unit ball in `dim` coordinates with the last coordinate
/// split at `t`; the flag is true on the part `u_n <= t`.
fn split_ball(dim: usize, t: f64, n: usize, visit: &mut dyn FnMut(&[f64], f64, bool)) {
    let gl = gauss_legendre(n);
    let mut pieces = Vec::new();
    if t > -1.0 {
        pieces.push((-1.0, t.min(1.0), true));
    }
    if t < 1.0 {
        pieces.push((t.max(-1.0), 1.0, false));
    }
    for (a, b, lower) in pieces {
        for (un, wn) in gl.on(a, b) {
            let mut prefix = vec![un];
            nested_ball(dim - 1, 1.0 - un * un, n, &mut prefix, wn, &mut |u, w| {
                visit(u, w, lower)
            });
        }
    }
}

/// Smoothed metric entries at a point as x-jets of order 2; `boundary`
/// holds the interface contribution to the second normal derivative, which
/// is already included in `jets`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMetric {
    pub jets: Vec<Vec<Jet>>,
    pub boundary: Mat,
}

impl SmoothedMetric {
    pub fn value(&self) -> Mat {
        self.jets
            .iter()
            .map(|r| r.iter().map(|j| j.value()).collect())
            .collect()
    }

    /// `D^alpha (g_eps)_ij`, `|alpha| <= 2`.
    pub fn derivative(&self, alpha: &[usize]) -> Mat {
        self.jets
            .iter()
            .map(|r| r.iter().map(|j| j.derivative(alpha)).collect())
            .collect()
    }
}

impl PiecewiseMetric {
    /// Checks continuity across the interface and positivity on samples.
    pub fn new(plus: Arc<dyn Metric>, minus: Arc<dyn Metric>) -> Result<PiecewiseMetric> {
        let n = plus.dim();
        if minus.dim() != n || !(2..=3).contains(&n) {
            return Err(Error::Invalid("piecewise metric dimension".into()));
        }
        let p = PiecewiseMetric {
            plus,
            minus,
            conv_nodes: DEFAULT_CONV_NODES,
        };
        for k in 0..=8 {
            let s = -1.0 + 0.25 * k as f64;
            let mut x = vec![s; n];
            x[n - 1] = 0.0;
            let (gp, gm) = (p.plus.g_val(&x), p.minus.g_val(&x));
            for i in 0..n {
                for j in 0..n {
                    if (gp[i][j] - gm[i][j]).abs() > 1e-12 {
                        return Err(Error::Invalid(format!("metric discontinuous at {x:?}")));
                    }
                }
            }
            for h in [-0.5, 0.5] {
                x[n - 1] = h;
                let (min_eig, _, _) = classify(&p.side(&x).g_val(&x));
                if !(min_eig > 0.0) {
                    return Err(Error::Singular(format!("metric at {x:?}")));
                }
            }
        }
        Ok(p)
    }

    pub fn from_entry(e: &CatalogEntry) -> Result<PiecewiseMetric> {
        let (plus, minus) = e
            .sides
            .clone()
            .ok_or_else(|| Error::Invalid(format!("{} is not piecewise", e.name)))?;
        PiecewiseMetric::new(plus, minus)
    }

    pub fn with_conv_nodes(mut self, n: usize) -> PiecewiseMetric {
        self.conv_nodes = n.max(4);
        self
    }

    pub fn dim(&self) -> usize {
        self.plus.dim()
    }

    fn side(&self, x: &[f64]) -> &dyn Metric {
        if x[x.len() - 1] >= 0.0 {
            &*self.plus
        } else {
            &*self.minus
        }
    }

    /// The glued metric itself.
    pub fn g(&self, x: &[f64]) -> Mat {
        self.side(x).g_val(x)
    }

    /// Normal-derivative jump `dg+_ij/dx^n - dg-_ij/dx^n` at `x` on the interface.
    pub fn jump(&self, x: &[f64]) -> Mat {
        let n = self.dim();
        let mut e = vec![0; n];
        e[n - 1] = 1;
        let (jp, jm) = (self.plus.g_jet(x, 1), self.minus.g_jet(x, 1));
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| jp[i][j].derivative(&e) - jm[i][j].derivative(&e))
                    .collect()
            })
            .collect()
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange(format!("epsilon {eps}")));
        }
        Ok(())
    }

    /// Interface integral `int eta_eps(x' - z', x^n) jump(z') dz'`.
    pub fn boundary_term(&self, eps: f64, x: &[f64]) -> Result<Mat> {
        Self::check_eps(eps)?;
        let n = self.dim();
        let t = x[n - 1] / eps;
        let mut out = vec![vec![0.0; n]; n];
        if t.abs() >= 1.0 {
            return Ok(out);
        }
        let mut prefix = Vec::new();
        nested_ball(n - 1, 1.0 - t * t, self.conv_nodes, &mut prefix, 1.0, &mut |u, w| {
            let mut full = u.to_vec();
            full.push(t);
            let k = w * unit_kernel(n, &full);
            let mut z: Vec<f64> = x.iter().zip(&full).map(|(a, b)| a - eps * b).collect();
            z[n - 1] = 0.0;
            let q = self.jump(&z);
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += k * q[i][j];
                }
            }
        });
        let s = eps.powi(-1);
        Ok(out
            .into_iter()
            .map(|r| r.into_iter().map(|v| v * s).collect())
            .collect())
    }

    /// `g_eps` with first and second derivatives at `x`.
    pub fn smoothed(&self, eps: f64, x: &[f64]) -> Result<SmoothedMetric> {
        Self::check_eps(eps)?;
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Invalid("point dimension".into()));
        }
        let mut acc: Vec<Vec<Jet>> = vec![vec![Jet::zero(n, 2); n]; n];
        split_ball(n, x[n - 1] / eps, self.conv_nodes, &mut |u, w, upper| {
            let k = w * unit_kernel(n, u);
            if k == 0.0 {
                return;
            }
            let z: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - eps * b).collect();
            let g = if upper { &self.plus } else { &self.minus }.g_jet(&z, 2);
            for i in 0..n {
                for j in 0..n {
                    acc[i][j] += g[i][j] * k;
                }
            }
        });
        let boundary = self.boundary_term(eps, x)?;
        let mut nn = vec![0; n];
        nn[n - 1] = 2;
        for i in 0..n {
            for j in 0..n {
                let c = acc[i][j].coef(&nn);
                acc[i][j].set_coef(&nn, c + 0.5 * boundary[i][j]);
            }
        }
        Ok(SmoothedMetric { jets: acc, boundary })
    }

    /// Values only; cheaper than [`PiecewiseMetric::smoothed`].
    pub fn g_eps(&self, eps: f64, x: &[f64]) -> Result<Mat> {
        Self::check_eps(eps)?;
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Invalid("point dimension".into()));
        }
        let mut acc = vec![vec![0.0; n]; n];
        split_ball(n, x[n - 1] / eps, self.conv_nodes, &mut |u, w, upper| {
            let k = w * unit_kernel(n, u);
            if k == 0.0 {
                return;
            }
            let z: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - eps * b).collect();
            let g = if upper { &self.plus } else { &self.minus }.g_val(&z);
            for i in 0..n {
                for j in 0..n {
                    acc[i][j] += k * g[i][j];
                }
            }
        });
        Ok(acc)
    }

    /// `D^alpha g_eps` for `|alpha| <= 2`.
    pub fn g_eps_derivative(&self, eps: f64, x: &[f64], alpha: &[usize]) -> Result<Mat> {
        let k: usize = alpha.iter().sum();
        if k > 2 {
            return Err(Error::OrderCap { requested: k, max: 2 });
        }
        Ok(self.smoothed(eps, x)?.derivative(alpha))
    }

    /// Gaussian curvature of `g_eps`.
    pub fn sectional_curvature_2d(&self, eps: f64, x: &[f64]) -> Result<f64> {
        self.require_plane()?;
        let s = self.smoothed(eps, x)?;
        let m = metric_curvature_from_jets(&s.jets)?;
        flag_formula(&m.r_low, &m.g, &[1.0, 0.0], &[0.0, 1.0])
    }

    /// Gaussian curvature of the one-sided metric containing `x`.
    pub fn side_curvature(&self, x: &[f64]) -> Result<f64> {
        self.require_plane()?;
        let m = metric_curvature(self.side(x), x)?;
        flag_formula(&m.r_low, &m.g, &[1.0, 0.0], &[0.0, 1.0])
    }

    fn require_plane(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::Invalid("two-dimensional metric required".into()));
        }
        Ok(())
    }

    /// Jump of the normal derivative of `g_11` at `(x1, 0)`.
    pub fn gap_q(&self, x1: f64) -> Result<f64> {
        self.require_plane()?;
        Ok(self.jump(&[x1, 0.0])[0][0])
    }

    /// Geodesic curvatures of the interface seen from each side, with the
    /// unit normals pointing into that side.
    pub fn geodesic_curvatures(&self, x1: f64) -> Result<(f64, f64)> {
        self.require_plane()?;
        let x = [x1, 0.0];
        let one_sided = |m: &dyn Metric| -> f64 {
            let j = m.g_jet(&x, 1);
            let g = [[j[0][0].value(), j[0][1].value()], [j[1][0].value(), j[1][1].value()]];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let (g21, g22) = (-g[1][0] / det, g[0][0] / det);
            det.sqrt() / (2.0 * g[0][0].powf(1.5))
                * (g21 * j[0][0].derivative(&[1, 0]) + 2.0 * g22 * j[0][1].derivative(&[1, 0])
                    - g22 * j[0][0].derivative(&[0, 1]))
        };
        Ok((one_sided(&*self.plus), -one_sided(&*self.minus)))
    }

    /// `-q / (2 sqrt(g11 det g))` at `(x1, 0)`: the value of `k_g+ + k_g-`.
    pub fn geodesic_sum_identity(&self, x1: f64) -> Result<f64> {
        let g = self.g(&[x1, 0.0]);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        Ok(-self.gap_q(x1)? / (2.0 * (g[0][0] * det).sqrt()))
    }

    /// Limit of the concentrated curvature on `[a, b] x {0}`:
    /// `-int q / (2 sqrt(g11 det g)) ds` with `ds = sqrt(g11) dx1`.
    pub fn interface_target(&self, a: f64, b: f64, nodes: usize) -> Result<f64> {
        let mut s = 0.0;
        for (x1, w) in gauss_legendre(nodes).on(a, b) {
            let g = self.g(&[x1, 0.0]);
            s += w * self.geodesic_sum_identity(x1)? * g[0][0].sqrt();
        }
        Ok(s)
    }

    /// `int int K sqrt(det g)` of the one-sided metrics over `[a,b] x [-delta, delta]`.
    pub fn smooth_part(&self, a: f64, b: f64, delta: f64, quad: &StripQuad) -> Result<f64> {
        let mut s = 0.0;
        let g1 = gauss_legendre(quad.n1);
        let g2 = gauss_legendre(quad.n_side);
        for (lo, hi, m) in [(0.0, delta, &self.plus), (-delta, 0.0, &self.minus)] {
            for (x1, w1) in g1.on(a, b) {
                for (x2, w2) in g2.on(lo, hi) {
                    let x = [x1, x2];
                    let c = metric_curvature(&**m, &x)?;
                    let k = flag_formula(&c.r_low, &c.g, &[1.0, 0.0], &[0.0, 1.0])?;
                    let det = c.g[0][0] * c.g[1][1] - c.g[0][1] * c.g[1][0];
                    s += w1 * w2 * k * det.sqrt();
                }
            }
        }
        Ok(s)
    }

    /// Total curvature of `g_eps` on the strip minus the one-sided smooth
    /// contribution.
    pub fn interface_total_curvature(
        &self,
        eps: f64,
        a: f64,
        b: f64,
        delta: f64,
        quad: &StripQuad,
    ) -> Result<StripTotal> {
        self.require_plane()?;
        Self::check_eps(eps)?;
        if !(delta > eps) {
            return Err(Error::OutOfRange(format!(
                "strip half-width {delta} must exceed epsilon {eps}"
            )));
        }
        if !(b > a) {
            return Err(Error::OutOfRange(format!("segment [{a}, {b}]")));
        }
        let mut nodes = Vec::new();
        let g1 = gauss_legendre(quad.n1);
        for (lo, hi, m) in [
            (-delta, -eps, quad.n_outer),
            (-eps, eps, quad.n_inner),
            (eps, delta, quad.n_outer),
        ] {
            for (x2, w2) in gauss_legendre(m).on(lo, hi) {
                for (x1, w1) in g1.on(a, b) {
                    nodes.push((x1, x2, w1 * w2));
                }
            }
        }
        let me = self.clone().with_conv_nodes(quad.conv);
        let parts: Vec<f64> = nodes
            .par_iter()
            .map(|&(x1, x2, w)| -> Result<f64> {
                let s = me.smoothed(eps, &[x1, x2])?;
                let m = metric_curvature_from_jets(&s.jets)?;
                let k = flag_formula(&m.r_low, &m.g, &[1.0, 0.0], &[0.0, 1.0])?;
                let det = m.g[0][0] * m.g[1][1] - m.g[0][1] * m.g[1][0];
                Ok(w * k * det.sqrt())
            })
            .collect::<Result<_>>()?;
        let raw: f64 = parts.iter().sum();
        let smooth = self.smooth_part(a, b, delta, quad)?;
        let target = self.interface_target(a, b, quad.n1)?;
        Ok(StripTotal {
            epsilon: eps,
            raw,
            smooth,
            value: raw - smooth,
            peak: me.interface_peak(eps, a, b, quad)?,
            target,
        })
    }

    /// The part of the strip total carried by the interface term of the
    /// second normal derivative alone:
    /// `-int_I q(z1) int eta_eps(x1 - z1, x2) / (2 sqrt(det g_eps(x))) dx dz1`.
    pub fn interface_peak(&self, eps: f64, a: f64, b: f64, quad: &StripQuad) -> Result<f64> {
        self.require_plane()?;
        Self::check_eps(eps)?;
        let mut ball = Vec::new();
        nested_ball(2, 1.0, quad.n_peak, &mut Vec::new(), 1.0, &mut |u, w| {
            ball.push((u[0], u[1], w * unit_kernel(2, u)));
        });
        let outer: Vec<(f64, f64)> = gauss_legendre(quad.n1).on(a, b).collect();
        let parts: Vec<f64> = outer
            .par_iter()
            .map(|&(z1, w1)| -> Result<f64> {
                let q = self.gap_q(z1)?;
                if q == 0.0 {
                    return Ok(0.0);
                }
                let mut avg = 0.0;
                for &(u1, u2, k) in &ball {
                    let g = self.g_eps(eps, &[z1 + eps * u1, eps * u2])?;
                    avg += k / (2.0 * (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt());
                }
                Ok(-w1 * q * avg)
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum())
    }
}

/// Gauss-Legendre node counts for the strip integral: `n1` along the
/// interface; across it `n_outer` on each of `[-delta, -eps]`, `[eps, delta]`
/// and `n_inner` on `[-eps, eps]`; `n_side` per half for the smooth part;
/// `conv` per axis inside each mollification; `n_peak` per axis for the
/// kernel average in [`PiecewiseMetric::interface_peak`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripQuad {
    pub n1: usize,
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_side: usize,
    pub conv: usize,
    pub n_peak: usize,
}

impl Default for StripQuad {
    fn default() -> StripQuad {
        StripQuad {
            n1: 64,
            n_outer: 32,
            n_inner: 64,
            n_side: 64,
            conv: 48,
            n_peak: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripTotal {
    pub epsilon: f64,
    /// Integral of `K_eps dA_eps` over the strip.
    pub raw: f64,
    /// The one-sided smooth contribution that is subtracted.
    pub smooth: f64,
    /// Concentrated contribution `raw - smooth`.
    pub value: f64,
    /// Interface-term share of the strip total; converges to `target`.
    pub peak: f64,
    /// Its limit as `eps -> 0`.
    pub target: f64,
}

fn relative(v: f64, target: f64) -> f64 {
    let d = (v - target).abs();
    if target == 0.0 {
        d
    } else {
        d / target.abs()
    }
}

impl StripTotal {
    /// Relative error of the concentrated contribution; absolute when the target is 0.
    pub fn rel_error(&self) -> f64 {
        relative(self.value, self.target)
    }

    pub fn peak_rel_error(&self) -> f64 {
        relative(self.peak, self.target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{lookup, Identity, StripSide, JUMP_SLOPE};
    use crate::fd;
    use crate::field::MetricFormula;
    use crate::jet::Scalar;

    fn jump() -> PiecewiseMetric {
        PiecewiseMetric::from_entry(lookup("piecewise_linear_jump").unwrap()).unwrap()
    }

    struct SineJump;
    impl MetricFormula for SineJump {
        fn dim(&self) -> usize {
            2
        }
        fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
            let z = x[0] * 0.0;
            vec![vec![x[0].sin() * x[1] + 1.0, z], vec![z, z + 1.0]]
        }
    }

    // g11 = 1 + 0.3 x1 x2 + 0.2 x2^2 on both sides
    struct Smooth;
    impl MetricFormula for Smooth {
        fn dim(&self) -> usize {
            2
        }
        fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
            let z = x[0] * 0.0;
            let g11 = x[0] * x[1] * 0.3 + x[1] * x[1] * 0.2 + 1.0;
            vec![vec![g11, x[0] * 0.1], vec![x[0] * 0.1, z + 1.0]]
        }
    }

    #[test]
    fn constant_and_smooth_metrics() {
        let flat = PiecewiseMetric::new(Arc::new(Identity(2)), Arc::new(Identity(2))).unwrap();
        for x in [[0.0, 0.0], [0.3, -0.01], [1.0, 0.4]] {
            let s = flat.smoothed(0.05, &x).unwrap();
            let g = s.value();
            assert!((g[0][0] - 1.0).abs() < 1e-10 && g[0][1].abs() < 1e-12);
            assert!(flat.sectional_curvature_2d(0.05, &x).unwrap().abs() < 1e-8);
        }
        let m = Arc::new(Smooth);
        let p = PiecewiseMetric::new(m.clone(), m.clone()).unwrap();
        let x = [0.2, 0.01];
        let s = p.smoothed(0.05, &x).unwrap();
        assert!(s.boundary.iter().flatten().all(|v| v.abs() < 1e-9));
        // second moment of the 2D kernel: int u2^2 eta = m2, so the x2^2 term gains 0.2 m2 eps^2
        let m2 = crate::quadrature::integrate_box(&[-1.0, -1.0], &[1.0, 1.0], 200, |u| unit_kernel(2, u) * u[1] * u[1]);
        let g = s.value();
        let exact = 1.0 + 0.3 * x[0] * x[1] + 0.2 * (x[1] * x[1] + m2 * 0.0025);
        assert!((g[0][0] - exact).abs() < 1e-9, "{} {exact}", g[0][0]);
        assert!((s.derivative(&[0, 2])[0][0] - 0.4).abs() < 1e-9);
        assert!((s.derivative(&[1, 1])[0][0] - 0.3).abs() < 1e-9);
        let e = lookup("piecewise_quadratic_jump").unwrap();
        let q = PiecewiseMetric::from_entry(e).unwrap();
        assert_eq!(q.gap_q(0.3).unwrap(), 0.0);
    }

    #[test]
    fn rejects_discontinuous_metric() {
        let plus: Arc<dyn Metric> = Arc::new(StripSide { c: 0.4, power: 0 });
        assert!(PiecewiseMetric::new(plus, Arc::new(Identity(2))).is_err());
    }

    #[test]
    fn far_from_interface_is_one_sided() {
        let p = jump();
        let eps = 0.05;
        let x = [0.1, 0.08];
        let whole = PiecewiseMetric::new(p.plus.clone(), p.plus.clone()).unwrap();
        let (a, b) = (p.smoothed(eps, &x).unwrap(), whole.smoothed(eps, &x).unwrap());
        for al in [[0, 0], [1, 0], [0, 1], [0, 2], [1, 1]] {
            assert!((a.derivative(&al)[0][0] - b.derivative(&al)[0][0]).abs() < 1e-10);
        }
        // linear g11 is reproduced exactly; the curvature is the one-sided value
        let k = p.sectional_curvature_2d(eps, &x).unwrap();
        let e = 1.0 + JUMP_SLOPE * x[1];
        assert!((k - JUMP_SLOPE * JUMP_SLOPE / (4.0 * e * e)).abs() < 1e-10, "{k}");
        assert!((p.side_curvature(&x).unwrap() - k).abs() < 1e-10);
    }

    #[test]
    fn derivative_formulas_match_differences() {
        let p = jump();
        let eps = 0.1;
        let h = 2e-3;
        for x in [[0.0, 0.03], [0.2, -0.05], [0.1, 0.0]] {
            let s = p.smoothed(eps, &x).unwrap();
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                let f = |y: &[f64]| p.g_eps(eps, y).unwrap()[i][j];
                for al in [[1, 0], [0, 1], [1, 1], [2, 0]] {
                    let fdv = fd::partial(&f, &x, &al, h).unwrap();
                    assert!((fdv - s.derivative(&al)[i][j]).abs() < 1e-5, "{x:?} {al:?}");
                }
                let fdv = fd::partial(&f, &x, &[0, 2], h).unwrap();
                let interior = s.derivative(&[0, 2])[i][j] - s.boundary[i][j];
                assert!(
                    (fdv - interior - s.boundary[i][j]).abs() < 1e-4,
                    "{x:?} {fdv} {interior}"
                );
            }
            assert!(s.boundary[0][0] > 1.0);
        }
    }

    #[test]
    fn boundary_term_slice_and_growth() {
        let p = jump();
        // c times the kernel slice through the origin, checked against a dense 1D rule
        for eps in [0.1, 0.01] {
            let b = p.boundary_term(eps, &[0.0, 0.0]).unwrap()[0][0];
            let slice = gauss_legendre(400).integrate(-1.0, 1.0, |u| unit_kernel(2, &[u, 0.0]));
            assert!((b - JUMP_SLOPE * slice / eps).abs() < 1e-10 * b, "{b}");
        }
        let k1 = p.sectional_curvature_2d(0.01, &[0.0, 0.0]).unwrap();
        let k2 = p.sectional_curvature_2d(0.005, &[0.0, 0.0]).unwrap();
        assert!(k1 < -5.0 && k2 < 1.9 * k1, "{k1} {k2}");
    }

    #[test]
    fn gap_and_geodesic_curvatures() {
        let p = jump();
        assert_eq!(p.gap_q(0.2).unwrap(), JUMP_SLOPE);
        let (kp, km) = p.geodesic_curvatures(0.2).unwrap();
        assert!((kp + km + JUMP_SLOPE / 2.0).abs() < 1e-15);
        assert!((kp + km - p.geodesic_sum_identity(0.2).unwrap()).abs() < 1e-15);
        let s = PiecewiseMetric::new(Arc::new(SineJump), Arc::new(Identity(2))).unwrap();
        for x1 in [-0.7, 0.1, 1.3] {
            assert!((s.gap_q(x1).unwrap() - f64::sin(x1)).abs() < 1e-15);
            let (kp, km) = s.geodesic_curvatures(x1).unwrap();
            assert!((kp + km - s.geodesic_sum_identity(x1).unwrap()).abs() < 1e-12);
        }
        let flat = PiecewiseMetric::new(Arc::new(Identity(2)), Arc::new(Identity(2))).unwrap();
        assert_eq!(flat.geodesic_curvatures(0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn smooth_part_closed_form() {
        let p = jump();
        let delta = 0.2;
        let s = p.smooth_part(0.0, 1.0, delta, &StripQuad::default()).unwrap();
        let c = JUMP_SLOPE;
        let closed = 0.5 * c * (1.0 - (1.0 + c * delta).powf(-0.5));
        assert!((s - closed).abs() < 1e-13, "{s} {closed}");
        assert!((p.interface_target(0.0, 1.0, 16).unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn strip_rejects_narrow_width() {
        let p = jump();
        assert!(p
            .interface_total_curvature(0.1, 0.0, 1.0, 0.1, &StripQuad::default())
            .is_err());
    }

    #[test]
    fn strip_total_near_target() {
        let p = jump();
        let q = StripQuad {
            n1: 4,
            n_outer: 16,
            n_inner: 32,
            n_side: 16,
            conv: 24,
            n_peak: 12,
        };
        let t = p.interface_total_curvature(0.01, 0.0, 1.0, 0.1, &q).unwrap();
        assert!(t.rel_error() < 0.05, "{t:?}");
        let coarse = p.interface_total_curvature(0.02, 0.0, 1.0, 0.1, &q).unwrap();
        assert!(
            t.peak_rel_error() < coarse.peak_rel_error() && t.peak_rel_error() < 0.05,
            "{t:?} {coarse:?}"
        );
    }
}
