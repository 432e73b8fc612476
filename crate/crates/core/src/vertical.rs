//! Vertical smoothing: convolve F along each tangent space with a blended
//! kernel, then rebuild a homogeneous norm from the level set `S = r_U`.
//!
//! With `S = zeta * F` and `phi(x, theta)` the radius where `S` reaches
//! `r_U` along `theta`, the smoothed norm is `G(x, y) = |y| r_U / phi`.
//! Derivatives of G in y come from the implicit equation
//! `S(mu(y) y) = r_U`, `G = r_U / mu`, solved order by order on Taylor
//! jets whose input is the exact Taylor expansion of S (kernel-derivative
//! convolutions, or averaged input jets when those exist).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{FinslerField, Smoothness};
use crate::jet::{self, Jet};
use crate::kernel::{BlendedKernel, Mollifier, QuadOrders};
use crate::norm::{circle_directions, euclid, min_eigenvalue, sphere_samples, NormBounds};

const BRACKET_WIDTH: f64 = 1e-4;
const ROOT_RESIDUAL: f64 = 1e-10;

/// The weight `u(eps)` given to the wide kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blend {
    /// `u(eps) = slope * eps`
    Linear(f64),
    /// `u(eps) = coef * eps^exponent`
    Power { coef: f64, exponent: f64 },
}

impl Default for Blend {
    fn default() -> Blend {
        Blend::Linear(1.0)
    }
}

impl Blend {
    pub fn u(&self, eps: f64) -> f64 {
        match *self {
            Blend::Linear(a) => a * eps,
            Blend::Power { coef, exponent } => coef * eps.powf(exponent),
        }
    }

    /// `sup { eps : u(eps) < v }`.
    pub fn inverse(&self, v: f64) -> f64 {
        match *self {
            Blend::Linear(a) => v / a,
            Blend::Power { coef, exponent } => (v / coef).powf(1.0 / exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Blend::Linear(a) => a > 0.0 && a.is_finite(),
            Blend::Power { coef, exponent } => coef > 0.0 && exponent > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("blend function {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalConfig {
    pub dim: usize,
    pub bounds: NormBounds,
    pub blend: Blend,
    pub tau: f64,
    pub quad: QuadOrders,
}

impl VerticalConfig {
    pub fn new(dim: usize, bounds: NormBounds, blend: Blend, quad: QuadOrders) -> Result<VerticalConfig> {
        blend.validate()?;
        let cap = bounds.r_min / (16.0 * dim as f64 * bounds.r_max);
        let tau = 0.9 * cap.min(blend.inverse(cap)).min(1.0);
        Ok(VerticalConfig {
            dim,
            bounds,
            blend,
            tau,
            quad,
        })
    }

    /// `r_u / (16 n r_U)`, the bound on `u(eps)`.
    pub fn blend_cap(&self) -> f64 {
        self.bounds.r_min / (16.0 * self.dim as f64 * self.bounds.r_max)
    }

    /// Radius of the wide kernel, `2 r_U / r_u`.
    pub fn outer_radius(&self) -> f64 {
        2.0 * self.bounds.r_max / self.bounds.r_min
    }
}

pub struct VerticalSmoothed {
    pub base: Arc<dyn FinslerField>,
    pub config: VerticalConfig,
    pub epsilon: f64,
    pub kernel: BlendedKernel,
    cache: RwLock<HashMap<Vec<u64>, f64>>,
}

/// Samples of the vertical region check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionReport {
    pub min_hessian_eigenvalue: f64,
    pub min_radial_derivative: f64,
    pub radial_derivative_floor: f64,
    pub max_on_inner_sphere: f64,
    pub min_on_outer_sphere: f64,
    pub level: f64,
    pub samples: usize,
}

impl RegionReport {
    pub fn holds(&self) -> bool {
        self.min_hessian_eigenvalue > 0.0
            && self.min_radial_derivative >= self.radial_derivative_floor
            && self.max_on_inner_sphere < self.level
            && self.min_on_outer_sphere > self.level
    }
}

/// First derivatives of G in y: exact implicit-function formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGradient {
    /// `G_r = r_U / phi`.
    pub radial: f64,
    /// Gradient of G in Cartesian y.
    pub gradient: Vec<f64>,
}

impl VerticalSmoothed {
    pub fn new(base: Arc<dyn FinslerField>, config: VerticalConfig, epsilon: f64) -> Result<VerticalSmoothed> {
        if base.dim() != config.dim {
            return Err(Error::Invalid("field and config dimensions differ".into()));
        }
        if !(epsilon > 0.0 && epsilon < config.tau) {
            return Err(Error::OutOfRange(format!(
                "epsilon {epsilon:e} outside (0, tau = {:e})",
                config.tau
            )));
        }
        let inner = Mollifier::new(config.dim, epsilon)?;
        let outer = Mollifier::new(config.dim, config.outer_radius())?;
        let kernel = BlendedKernel::new(inner, outer, config.blend.u(epsilon))?;
        Ok(VerticalSmoothed {
            base,
            config,
            epsilon,
            kernel,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn level(&self) -> f64 {
        self.config.bounds.r_max
    }

    /// `(zeta * F)(x, y)`.
    pub fn smoothed(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.kernel.convolve(y, &self.config.quad, |w| self.base.eval(x, w))
    }

    /// Taylor jet in y of the smoothed value at `y`. When the input has
    /// analytic y-jets, its jets are averaged with the value kernel instead:
    /// kernel-derivative weights grow like `radius^-order` and amplify
    /// rounding in `f(p - r u) - f(p)` once the radius gets small.
    pub fn smoothed_taylor(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
        if order > 0 && self.base.smoothness() != Smoothness::C0 && self.base.f2_jets(x, y, 0, order).is_some() {
            let quad = QuadOrders([self.config.quad.0[order]; jet::MAX_ORDER + 1]);
            let zero = Jet::zero(self.dim(), order);
            let c = self.kernel.convolve_taylor(y, 0, &quad, |w| {
                self.base.f2_jets(x, w, 0, order).map_or(zero, |j| j.value().sqrt())
            })?;
            return Ok(c[0]);
        }
        let c = self
            .kernel
            .convolve_taylor(y, order, &self.config.quad, |w| self.base.eval(x, w))?;
        let mut j = Jet::zero(self.dim(), order);
        j.coeffs_mut().copy_from_slice(&c);
        Ok(j)
    }

    pub fn radial_derivative(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let j = self.smoothed_taylor(x, y, 1)?;
        let ny = euclid(y);
        Ok(j.gradient().iter().zip(y).map(|(g, v)| g * v / ny).sum())
    }

    fn key(x: &[f64], theta: &[f64]) -> Vec<u64> {
        x.iter().chain(theta).map(|v| v.to_bits()).collect()
    }

    /// The radius in `(1/2, 2 r_U / r_u)` where the smoothed value along
    /// `theta` equals `r_U`.
    pub fn radial_solve(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let nt = euclid(theta);
        if !(nt > 0.0) {
            return Err(Error::Invalid("zero direction".into()));
        }
        let theta: Vec<f64> = theta.iter().map(|v| v / nt).collect();
        // x-independent fields share one radius per direction
        let key = if self.base.x_independent() {
            Self::key(&[], &theta)
        } else {
            Self::key(x, &theta)
        };
        if let Some(&r) = self.cache.read().unwrap().get(&key) {
            return Ok(r);
        }
        let r = self.solve_uncached(x, &theta)?;
        self.cache.write().unwrap().entry(key).or_insert(r);
        Ok(r)
    }

    fn solve_uncached(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let level = self.level();
        let at = |r: f64| -> Result<f64> {
            let y: Vec<f64> = theta.iter().map(|t| r * t).collect();
            Ok(self.smoothed(x, &y)? - level)
        };
        let (mut lo, mut hi) = (0.5, self.config.outer_radius());
        let (flo, fhi) = (at(lo)?, at(hi)?);
        if !(flo < 0.0 && fhi > 0.0) {
            return Err(Error::Constants(format!(
                "no sign change on ({lo}, {hi}) along {theta:?}: {flo:e}, {fhi:e}"
            )));
        }
        while hi - lo > BRACKET_WIDTH {
            let mid = 0.5 * (lo + hi);
            if at(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut r = 0.5 * (lo + hi);
        let mut res = at(r)?;
        for _ in 0..60 {
            if res.abs() <= ROOT_RESIDUAL {
                return Ok(r);
            }
            if res < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let y: Vec<f64> = theta.iter().map(|t| r * t).collect();
            let d = self.radial_derivative(x, &y)?;
            let mut next = r - res / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == r {
                break;
            }
            r = next;
            res = at(r)?;
        }
        if res.abs() <= ROOT_RESIDUAL * 10.0 || hi - lo < 1e-14 {
            Ok(r)
        } else {
            Err(Error::Constants(format!("radial solve stalled at residual {res:e}")))
        }
    }

    /// `G(x, y) = |y| r_U / phi(x, y/|y|)`.
    pub fn g_eps(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ny = euclid(y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        let phi = self.radial_solve(x, y)?;
        Ok(ny * self.level() / phi)
    }

    /// Taylor jet of `G^2` in y at `y`, to `order` (at most 4).
    pub fn g_eps_sq_jet(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
        let g = self.g_eps_jet(x, y, order)?;
        Ok(g * g)
    }

    /// Taylor jet of G in y at `y`.
    pub fn g_eps_jet(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
        let ny = euclid(y);
        if ny == 0.0 {
            return Err(Error::Invalid("derivatives of G at y = 0".into()));
        }
        if order > jet::MAX_ORDER {
            return Err(Error::OrderCap {
                requested: order,
                max: jet::MAX_ORDER,
            });
        }
        let phi = self.radial_solve(x, y)?;
        let mu0 = phi / ny;
        let p0: Vec<f64> = y.iter().map(|v| mu0 * v).collect();
        let mut s = self.smoothed_taylor(x, &p0, order)?;
        // p0 is the root by construction; keep quadrature noise out of it
        s.coeffs_mut()[0] = self.level();
        Ok(implicit_norm_jet(&s, y, mu0, self.level()))
    }

    /// `D^alpha_y (G^2)` from the Taylor jet.
    pub fn g_eps_y_derivative(&self, x: &[f64], y: &[f64], alpha: &[usize]) -> Result<f64> {
        let k: usize = alpha.iter().sum();
        Ok(self.g_eps_sq_jet(x, y, k)?.derivative(alpha))
    }

    /// The same derivative by central differences of `G^2` with step
    /// `max(1e-3, 1e-2 |y|)` and one Richardson level.
    pub fn g_eps_y_derivative_fd(&self, x: &[f64], y: &[f64], alpha: &[usize]) -> Result<f64> {
        let h = (1e-2 * euclid(y)).max(1e-3);
        if euclid(y) <= 4.0 * h {
            return Err(Error::StepUnderflow(format!(
                "stencil of width {h:e} reaches y = 0 from {y:?}"
            )));
        }
        let f = |w: &[f64]| {
            let g = self.g_eps(x, w).unwrap_or(f64::NAN);
            g * g
        };
        fd::partial_richardson(&f, y, alpha, h)
    }

    /// First derivatives of G from the implicit-function formulas.
    pub fn exact_gradient(&self, x: &[f64], y: &[f64]) -> Result<ExactGradient> {
        let r = euclid(y);
        if r == 0.0 {
            return Err(Error::Invalid("gradient of G at y = 0".into()));
        }
        let theta: Vec<f64> = y.iter().map(|v| v / r).collect();
        let phi = self.radial_solve(x, &theta)?;
        let p: Vec<f64> = theta.iter().map(|t| phi * t).collect();
        let grad_s = self.smoothed_taylor(x, &p, 1)?.gradient();
        let s_r: f64 = grad_s.iter().zip(&theta).map(|(g, t)| g * t).sum();
        let level = self.level();
        // d phi / dy = -phi (I - theta theta^T) grad S / (r S_r)
        let gradient = (0..self.dim())
            .map(|i| {
                let tangential = grad_s[i] - s_r * theta[i];
                let dphi = -phi * tangential / (r * s_r);
                level / phi * theta[i] - r * level / (phi * phi) * dphi
            })
            .collect();
        Ok(ExactGradient {
            radial: level / phi,
            gradient,
        })
    }

    /// Check the structural bounds on the region `1/2 <= |y| <= 2 r_U / r_u`.
    pub fn verify_region(&self, x: &[f64], radial_samples: usize) -> Result<RegionReport> {
        let n = self.dim();
        let dirs = if n == 2 {
            circle_directions(32)
        } else {
            sphere_samples(n)
        };
        let outer = self.config.outer_radius();
        let mut rep = RegionReport {
            min_hessian_eigenvalue: f64::INFINITY,
            min_radial_derivative: f64::INFINITY,
            radial_derivative_floor: 7.0 * self.config.bounds.r_min / 128.0,
            max_on_inner_sphere: f64::NEG_INFINITY,
            min_on_outer_sphere: f64::INFINITY,
            level: self.level(),
            samples: 0,
        };
        for d in &dirs {
            for k in 0..=radial_samples + 1 {
                let r = 0.5 + (outer - 0.5) * k as f64 / (radial_samples + 1) as f64;
                let y: Vec<f64> = d.iter().map(|v| r * v).collect();
                let j = self.smoothed_taylor(x, &y, 2)?;
                let radial: f64 = j.gradient().iter().zip(d).map(|(g, t)| g * t).sum();
                rep.min_radial_derivative = rep.min_radial_derivative.min(radial);
                if k == 0 {
                    rep.max_on_inner_sphere = rep.max_on_inner_sphere.max(j.value());
                } else if k == radial_samples + 1 {
                    rep.min_on_outer_sphere = rep.min_on_outer_sphere.min(j.value());
                } else {
                    rep.min_hessian_eigenvalue = rep.min_hessian_eigenvalue.min(min_eigenvalue(&j.hessian()));
                }
                rep.samples += 1;
            }
        }
        Ok(rep)
    }

    pub fn cached_radii(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.cache.read().unwrap().values().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Given the Taylor jet `s` of a function S at `p0 = mu0 y` with
/// `S(p0) = level`, the jet in y of `level / mu(y)` where `S(mu(y) y) = level`.
pub fn implicit_norm_jet(s: &Jet, y: &[f64], mu0: f64, level: f64) -> Jet {
    let (n, order) = (s.dim(), s.order());
    let slope: f64 = s.gradient().iter().zip(y).map(|(g, v)| g * v).sum();
    let vars = Jet::variables(y, order);
    let mut mu = Jet::constant(n, order, mu0);
    // each pass fixes one more order of the expansion
    for _ in 0..=order {
        let p: Vec<Jet> = vars.iter().map(|v| *v * mu).collect();
        let res = s.compose_multi(&p) - level;
        mu -= res.scale(1.0 / slope);
    }
    mu.recip().scale(level)
}

/// G as a field in its own right.
impl FinslerField for VerticalSmoothed {
    fn dim(&self) -> usize {
        self.config.dim
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.g_eps(x, y).unwrap_or(f64::NAN)
    }
    fn smoothness(&self) -> crate::field::Smoothness {
        crate::field::Smoothness::VerticalSmooth
    }
    fn x_independent(&self) -> bool {
        self.base.x_independent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{hexagon_norm, max_norm};
    use crate::field::{FnField, Smoothness};
    use crate::norm::sphere_extrema;

    fn field(f: fn(&[f64]) -> f64) -> Arc<dyn FinslerField> {
        Arc::new(FnField {
            dim: 2,
            f: move |_x: &[f64], y: &[f64]| f(y),
            smoothness: Smoothness::C0,
            x_independent: true,
        })
    }

    fn smoothed(f: fn(&[f64]) -> f64, frac: f64) -> VerticalSmoothed {
        let b = sphere_extrema(2, &f).unwrap();
        let c = VerticalConfig::new(2, b, Blend::default(), QuadOrders::default_for(2)).unwrap();
        VerticalSmoothed::new(field(f), c, frac * c.tau).unwrap()
    }

    #[test]
    fn implicit_jet_recovers_homogeneous_input() {
        // S homogeneous of degree one: the rebuilt norm is S itself
        let s_of = |p: &[Jet]| (p[0] * p[0] + p[1] * p[1]).sqrt() + p[0] * 0.3;
        let y = [0.6, -0.9];
        let level = 1.7;
        let f = s_of(&Jet::variables(&y, 4)).value();
        let mu0 = level / f;
        let p0 = [mu0 * y[0], mu0 * y[1]];
        let s = s_of(&Jet::variables(&p0, 4));
        let g = implicit_norm_jet(&s, &y, mu0, level);
        let exact = s_of(&Jet::variables(&y, 4));
        for (a, b) in g.coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn tau_respects_cap() {
        let v = smoothed(max_norm, 0.5);
        let cap = v.config.blend_cap();
        assert!(v.config.tau < cap && v.config.blend.u(v.config.tau) < cap);
        assert!((v.config.outer_radius() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(VerticalSmoothed::new(v.base.clone(), v.config, v.config.tau).is_err());
    }

    #[test]
    fn euclidean_radius_is_symmetric() {
        let v = smoothed(euclid, 0.5);
        let a = v.radial_solve(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let b = v.radial_solve(&[0.3, 0.1], &[0.6, 0.8]).unwrap();
        // tensor rules are not rotation invariant; the residue is quadrature error
        assert!((a - b).abs() < 1e-5);
        let c = v.radial_solve(&[0.3, 0.1], &[1.0, 0.0]).unwrap();
        assert_eq!(a, c);
        assert!(a > 0.5 && a < v.config.outer_radius());
        let s0 = v.smoothed(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let s1 = v.smoothed(&[0.7, 0.0], &[0.0, 0.0]).unwrap();
        assert!(s0 > 0.0 && s0 == s1);
        let big = v.smoothed(&[0.0, 0.0], &[30.0, 40.0]).unwrap();
        assert!(big >= 50.0);
    }

    #[test]
    fn homogeneity_and_growth() {
        let v = smoothed(max_norm, 0.5);
        let x = [0.0, 0.0];
        let y = [0.3, -0.7];
        let g = v.g_eps(&x, &y).unwrap();
        for mu in [0.25, 3.0, 1e3] {
            let ys = [mu * y[0], mu * y[1]];
            assert!((v.g_eps(&x, &ys).unwrap() - mu * g).abs() <= 1e-15 * mu * g * 4.0);
        }
        assert_eq!(v.g_eps(&x, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(g <= 2.0 * v.level() * euclid(&y));
    }

    #[test]
    fn jets_agree_with_exact_first_order_and_fd() {
        let v = smoothed(hexagon_norm, 0.5);
        let x = [0.0, 0.0];
        let y = [0.8, 0.35];
        let j = v.g_eps_jet(&x, &y, 4).unwrap();
        let e = v.exact_gradient(&x, &y).unwrap();
        for i in 0..2 {
            assert!((j.gradient()[i] - e.gradient[i]).abs() < 1e-9);
        }
        let radial: f64 = j.gradient().iter().zip(&y).map(|(g, t)| g * t).sum::<f64>() / euclid(&y);
        assert!((radial - e.radial).abs() < 1e-9);
    }

    fn randers_smoothed(base: usize) -> VerticalSmoothed {
        let randers: fn(&[f64]) -> f64 = |y| euclid(y) + 0.3 * y[0];
        let b = sphere_extrema(2, &randers).unwrap();
        let c = VerticalConfig::new(2, b, Blend::default(), QuadOrders::with_base(2, base)).unwrap();
        VerticalSmoothed::new(field(randers), c, 0.5 * c.tau).unwrap()
    }

    // The wide kernel always covers the cone point of F at the origin, so
    // values carry a quadrature residue that second differences amplify to
    // ~1e-4; the jets themselves settle to ~1e-7 as the rule is refined.
    #[test]
    fn jets_agree_with_fd_on_smooth_input() {
        let x = [0.0, 0.0];
        let y = [0.6, -0.9];
        let coarse = randers_smoothed(24);
        let fine = randers_smoothed(96);
        for alpha in [[2, 0], [1, 1], [0, 2], [2, 1], [3, 1], [0, 4]] {
            let a = coarse.g_eps_y_derivative(&x, &y, &alpha).unwrap();
            let b = fine.g_eps_y_derivative(&x, &y, &alpha).unwrap();
            assert!((a - b).abs() < 1e-5 * (1.0 + b.abs()), "{alpha:?}: {a} vs {b}");
        }
        for alpha in [[2, 0], [1, 1], [0, 2]] {
            let a = coarse.g_eps_y_derivative(&x, &y, &alpha).unwrap();
            let b = coarse.g_eps_y_derivative_fd(&x, &y, &alpha).unwrap();
            assert!((a - b).abs() < 1e-4 * (1.0 + a.abs()), "{alpha:?}: {a} vs {b}");
        }
        // higher orders: the jet is consistent with differences of its own lower orders
        let h = 1e-3;
        let d2 = |y0: f64| coarse.g_eps_y_derivative(&x, &[y0, y[1]], &[1, 1]).unwrap();
        let fd = (d2(y[0] - 2.0 * h) - 8.0 * d2(y[0] - h) + 8.0 * d2(y[0] + h) - d2(y[0] + 2.0 * h)) / (12.0 * h);
        let d3 = coarse.g_eps_y_derivative(&x, &y, &[2, 1]).unwrap();
        assert!((fd - d3).abs() < 1e-3 * (1.0 + d3.abs()), "{fd} vs {d3}");
    }

    #[test]
    fn region_bounds_hold() {
        let v = smoothed(max_norm, 0.5);
        let r = v.verify_region(&[0.0, 0.0], 4).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
