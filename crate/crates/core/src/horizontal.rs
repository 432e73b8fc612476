//! Horizontal smoothing: convolve `G^2` in x on every chart and glue the
//! charts with a partition of unity.
//!
//! Each chart uses the kernel radius `psi = eps * delta` with
//! `delta = min(tau, margin)`; when the input already has y-derivatives the
//! vertical stage is skipped and `delta` is the margin alone.

use std::cell::RefCell;
use std::sync::Arc;

use crate::catalog::Chart;
use crate::error::{Error, Result};
use crate::field::{DerivativeSource, FinslerField, Smoothness, XJets};
use crate::jet::{self, Jet};
use crate::kernel::{Mollifier, QuadOrders, MAX_DERIVATIVE};
use crate::norm::{classify, compute_chart_bounds, Definiteness};
use crate::vertical::{Blend, VerticalConfig, VerticalSmoothed};

/// `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`: 0 for t <= 0, 1 for t >= 1.
fn smooth_step(t: Jet) -> Jet {
    let v = t.value();
    if v <= 0.0 {
        return Jet::zero(t.dim(), t.order());
    }
    if v >= 1.0 {
        return Jet::constant(t.dim(), t.order(), 1.0);
    }
    let a = (-t.recip()).exp();
    let b = (-(-(t - 1.0)).recip()).exp();
    a / (a + b)
}

/// Bump-based partition of unity over box charts.
#[derive(Debug, Clone)]
pub struct Partition {
    charts: Vec<Chart>,
}

impl Partition {
    /// Charts are kept in a canonical order so that sums do not depend on
    /// how the caller enumerated them.
    pub fn new(mut charts: Vec<Chart>) -> Result<Partition> {
        let Some(first) = charts.first() else {
            return Err(Error::Invalid("no charts".into()));
        };
        let dim = first.domain.lo.len();
        for c in &charts {
            if c.domain.lo.len() != dim {
                return Err(Error::Invalid("charts of different dimensions".into()));
            }
            if !(c.margin > 0.0) {
                return Err(Error::OutOfRange(format!("chart margin {}", c.margin)));
            }
            if c.domain
                .lo
                .iter()
                .zip(&c.domain.hi)
                .any(|(l, h)| h - l <= 2.0 * c.margin)
            {
                return Err(Error::OutOfRange(format!(
                    "margin {} empties chart {:?}",
                    c.margin, c.domain
                )));
            }
        }
        let key = |c: &Chart| -> Vec<u64> {
            let mut k: Vec<u64> = c.domain.lo.iter().chain(&c.domain.hi).map(|v| v.to_bits()).collect();
            k.push(c.margin.to_bits());
            k
        };
        charts.sort_by_key(key);
        Ok(Partition { charts })
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn dim(&self) -> usize {
        self.charts[0].domain.lo.len()
    }

    fn bump(&self, k: usize, x: &[f64], order: usize) -> Jet {
        let c = &self.charts[k];
        let n = x.len();
        let mut b = Jet::constant(n, order, 1.0);
        for i in 0..n {
            let (lo, hi) = (c.domain.lo[i] + c.margin, c.domain.hi[i] - c.margin);
            let ramp = c.margin.min(0.5 * (hi - lo));
            let v = Jet::variable(n, order, i, x[i]);
            b *= smooth_step((v - lo) * (1.0 / ramp)) * smooth_step(-(v - hi) * (1.0 / ramp));
            if b.value() == 0.0 {
                break;
            }
        }
        b
    }

    /// Nonzero weights at `x` as x-jets of order `order`.
    pub fn weight_jets(&self, x: &[f64], order: usize) -> Result<Vec<(usize, Jet)>> {
        let raw: Vec<(usize, Jet)> = (0..self.charts.len())
            .map(|k| (k, self.bump(k, x, order)))
            .filter(|(_, b)| b.value() > 0.0)
            .collect();
        match raw.len() {
            0 => Err(Error::Uncovered(format!("{x:?}"))),
            1 => Ok(vec![(raw[0].0, Jet::constant(x.len(), order, 1.0))]),
            _ => {
                let mut total = Jet::zero(x.len(), order);
                for (_, b) in &raw {
                    total += *b;
                }
                let inv = total.recip();
                Ok(raw.into_iter().map(|(k, b)| (k, b * inv)).collect())
            }
        }
    }

    pub fn weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        Ok(self
            .weight_jets(x, 0)?
            .into_iter()
            .map(|(k, j)| (k, j.value()))
            .collect())
    }
}

/// Whether to run the vertical stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerticalMode {
    /// Only for fields without analytic y-derivatives.
    #[default]
    Auto,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingOptions {
    pub mode: VerticalMode,
    pub blend: Blend,
    pub vertical_quad: QuadOrders,
    pub horizontal_quad: QuadOrders,
}

impl SmoothingOptions {
    pub fn for_dim(dim: usize) -> SmoothingOptions {
        SmoothingOptions {
            mode: VerticalMode::Auto,
            blend: Blend::default(),
            vertical_quad: QuadOrders::default_for(dim),
            horizontal_quad: QuadOrders::default_for(dim),
        }
    }
}

#[derive(Debug, Clone)]
struct PlannedChart {
    vertical: Option<VerticalConfig>,
    delta: f64,
}

/// Everything about a smoothing that does not depend on epsilon: chart
/// bounds, tau and delta per chart.
#[derive(Clone)]
pub struct SmoothingPlan {
    field: Arc<dyn FinslerField>,
    partition: Arc<Partition>,
    planned: Vec<PlannedChart>,
    options: SmoothingOptions,
}

fn has_y_jets(field: &dyn FinslerField, at: &[f64]) -> bool {
    let mut y = vec![0.0; at.len()];
    y[0] = 1.0;
    field.f2_jets(at, &y, 0, 2).is_some()
}

impl SmoothingPlan {
    pub fn new(field: Arc<dyn FinslerField>, charts: Vec<Chart>, options: SmoothingOptions) -> Result<SmoothingPlan> {
        let partition = Partition::new(charts)?;
        let dim = field.dim();
        if partition.dim() != dim {
            return Err(Error::Invalid("chart and field dimensions differ".into()));
        }
        let mut planned = Vec::new();
        for c in partition.charts() {
            let center: Vec<f64> = c
                .domain
                .lo
                .iter()
                .zip(&c.domain.hi)
                .map(|(l, h)| 0.5 * (l + h))
                .collect();
            let vertical = match options.mode {
                VerticalMode::Always => true,
                VerticalMode::Auto => field.smoothness() == Smoothness::C0 || !has_y_jets(field.as_ref(), &center),
            };
            planned.push(if vertical {
                let bounds = compute_chart_bounds(field.as_ref(), &c.domain)?;
                let cfg = VerticalConfig::new(dim, bounds, options.blend, options.vertical_quad)?;
                PlannedChart {
                    delta: cfg.tau.min(c.margin),
                    vertical: Some(cfg),
                }
            } else {
                PlannedChart {
                    vertical: None,
                    delta: c.margin,
                }
            });
        }
        Ok(SmoothingPlan {
            field,
            partition: Arc::new(partition),
            planned,
            options,
        })
    }

    pub fn field(&self) -> &Arc<dyn FinslerField> {
        &self.field
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn options(&self) -> &SmoothingOptions {
        &self.options
    }

    /// `delta` of each chart (canonical order).
    pub fn deltas(&self) -> Vec<f64> {
        self.planned.iter().map(|p| p.delta).collect()
    }

    pub fn vertical_configs(&self) -> Vec<Option<VerticalConfig>> {
        self.planned.iter().map(|p| p.vertical).collect()
    }

    /// The smoothing `F_eps` for `eps` in (0, 1).
    pub fn at(&self, eps: f64) -> Result<SmoothedStructure> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::OutOfRange(format!("epsilon {eps} outside (0, 1)")));
        }
        let dim = self.field.dim();
        let mut charts = Vec::new();
        for p in &self.planned {
            let psi = eps * p.delta;
            let stage = match p.vertical {
                Some(cfg) => Stage::Vertical(VerticalSmoothed::new(self.field.clone(), cfg, psi)?),
                None => Stage::Direct,
            };
            charts.push(ChartSmoothing {
                psi,
                kernel: Mollifier::new(dim, psi)?,
                stage,
            });
        }
        Ok(SmoothedStructure {
            plan: self.clone(),
            epsilon: eps,
            charts,
        })
    }
}

enum Stage {
    Direct,
    Vertical(VerticalSmoothed),
}

struct ChartSmoothing {
    psi: f64,
    kernel: Mollifier,
    stage: Stage,
}

/// The assembled structure `F_eps^2 = sum_l phi_l F_{eps,l}^2`.
pub struct SmoothedStructure {
    plan: SmoothingPlan,
    pub epsilon: f64,
    charts: Vec<ChartSmoothing>,
}

/// `g_ij = (1/2) D_i D_j F^2` with its smallest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub g: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

impl SmoothedStructure {
    pub fn dim(&self) -> usize {
        self.plan.field.dim()
    }

    pub fn plan(&self) -> &SmoothingPlan {
        &self.plan
    }

    /// Horizontal kernel radius of each chart.
    pub fn radii(&self) -> Vec<f64> {
        self.charts.iter().map(|c| c.psi).collect()
    }

    /// The vertically smoothed field of chart `k`, if that stage runs.
    pub fn vertical(&self, k: usize) -> Option<&VerticalSmoothed> {
        match &self.charts[k].stage {
            Stage::Vertical(v) => Some(v),
            Stage::Direct => None,
        }
    }

    fn g2_jet(&self, c: &ChartSmoothing, z: &[f64], y: &[f64], y_order: usize) -> Result<Jet> {
        let n = self.dim();
        match &c.stage {
            Stage::Vertical(v) if y_order == 0 => {
                let g = v.g_eps(z, y)?;
                Ok(Jet::constant(n, 0, g * g))
            }
            Stage::Vertical(v) => v.g_eps_sq_jet(z, y, y_order),
            Stage::Direct if y_order == 0 => {
                let f = self.plan.field.eval(z, y);
                Ok(Jet::constant(n, 0, f * f))
            }
            Stage::Direct => self
                .plan
                .field
                .f2_jets(z, y, 0, y_order)
                .map(|j| j.coeffs[0])
                .ok_or_else(|| Error::OracleMissing("y-derivatives of the input field".into())),
        }
    }

    /// `F_{eps,l}^2` on chart `k` as an x-jet of y-jets.
    pub fn chart_jets(&self, k: usize, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Result<XJets> {
        let n = self.dim();
        if x.len() != n || y.len() != n {
            return Err(Error::Invalid("point dimension".into()));
        }
        if x_order > MAX_DERIVATIVE || y_order > jet::MAX_ORDER {
            return Err(Error::OrderCap {
                requested: x_order.max(y_order),
                max: MAX_DERIVATIVE,
            });
        }
        let c = self.charts.get(k).ok_or_else(|| Error::Invalid(format!("chart {k}")))?;
        self.plan.partition.charts[k].domain.check_margin(x, c.psi)?;
        if self.plan.field.x_independent() {
            return Ok(XJets::constant(n, x_order, self.g2_jet(c, x, y, y_order)?));
        }
        let failure = RefCell::new(None);
        let coeffs = c
            .kernel
            .convolve_taylor(x, x_order, &self.plan.options.horizontal_quad, |z| {
                self.g2_jet(c, z, y, y_order).unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    Jet::zero(n, y_order)
                })
            })?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(XJets {
            x_dim: n,
            x_order,
            coeffs,
        })
    }

    pub fn f_eps_lambda_sq(&self, k: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.chart_jets(k, x, y, 0, 0)?.value().value())
    }

    /// `F_eps^2` and its derivatives as an x-jet of y-jets.
    pub fn f_eps_sq_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Result<XJets> {
        let n = self.dim();
        let mut acc = XJets::zero(n, x_order, n, y_order);
        for (k, phi) in self.plan.partition.weight_jets(x, x_order)? {
            acc.add_assign(&self.chart_jets(k, x, y, x_order, y_order)?.mul_x_jet(&phi));
        }
        Ok(acc)
    }

    pub fn f_eps_sq(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.f_eps_sq_jets(x, y, 0, 0)?.value().value())
    }

    pub fn f_eps(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.f_eps_sq(x, y)?.max(0.0).sqrt())
    }

    /// `D_x^ax D_y^ay F_eps^2` with `|ax| + |ay| <= 4`.
    pub fn f_eps_sq_derivative(&self, x: &[f64], y: &[f64], ax: &[usize], ay: &[usize]) -> Result<f64> {
        let (kx, ky) = (ax.iter().sum::<usize>(), ay.iter().sum::<usize>());
        if kx + ky > MAX_DERIVATIVE {
            return Err(Error::OrderCap {
                requested: kx + ky,
                max: MAX_DERIVATIVE,
            });
        }
        let j = self.f_eps_sq_jets(x, y, kx, ky)?;
        let c = j
            .x_derivative(ax)
            .ok_or_else(|| Error::Invalid(format!("multi-index {ax:?}")))?;
        Ok(c.derivative(ay))
    }

    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
        fundamental_tensor(self, x, y)
    }
}

/// `g_ij = (1/2) D_i D_j F^2` of any derivative source. A tensor that is
/// not positive definite is an error carrying its eigenvalue and trace.
pub fn fundamental_tensor(src: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
    let h = src.f2_jets(x, y, 0, 2)?.value().hessian();
    let n = y.len();
    let g: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.25 * (h[i][j] + h[j][i])).collect())
        .collect();
    let (min_eigenvalue, trace, verdict) = classify(&g);
    if verdict != Definiteness::PositiveDefinite {
        return Err(Error::Singular(format!(
            "fundamental tensor at x = {x:?}, y = {y:?}: min eigenvalue {min_eigenvalue:e}, trace {trace:e}"
        )));
    }
    Ok(FundamentalTensor {
        g,
        min_eigenvalue,
        trace,
    })
}

impl DerivativeSource for SmoothedStructure {
    fn dim(&self) -> usize {
        SmoothedStructure::dim(self)
    }
    fn f2(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.f_eps_sq(x, y)
    }
    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Result<XJets> {
        self.f_eps_sq_jets(x, y, x_order, y_order)
    }
    fn length_scale(&self) -> f64 {
        self.plan
            .partition
            .charts
            .iter()
            .flat_map(|c| c.domain.lo.iter().zip(&c.domain.hi).map(|(l, h)| h - l))
            .fold(f64::INFINITY, f64::min)
    }
}

impl FinslerField for SmoothedStructure {
    fn dim(&self) -> usize {
        SmoothedStructure::dim(self)
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.f_eps(x, y).unwrap_or(f64::NAN)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
    fn x_independent(&self) -> bool {
        self.plan.field.x_independent()
    }
    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Option<XJets> {
        self.f_eps_sq_jets(x, y, x_order, y_order).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{lookup, Identity};
    use crate::field::{MetricFormula, RiemannianField};
    use crate::jet::Scalar;
    use crate::kernel::BoxDomain;

    fn chart(lo: f64, hi: f64, margin: f64) -> Chart {
        Chart {
            domain: BoxDomain::new(vec![lo, lo], vec![hi, hi]).unwrap(),
            margin,
        }
    }

    fn plan(name: &str, charts: Vec<Chart>) -> SmoothingPlan {
        let e = lookup(name).unwrap();
        SmoothingPlan::new(e.field.clone(), charts, SmoothingOptions::for_dim(e.dim())).unwrap()
    }

    struct Tilted;
    impl MetricFormula for Tilted {
        fn dim(&self) -> usize {
            2
        }
        fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
            let a = x[0] + 1.0;
            let z = x[0] * 0.0;
            vec![vec![a, z], vec![z, a]]
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let p = Partition::new(vec![
            chart(-1.0, 0.5, 0.2),
            chart(-0.5, 1.0, 0.2),
            chart(-1.0, 1.0, 0.3),
        ])
        .unwrap();
        let q = Partition::new(vec![
            chart(-1.0, 1.0, 0.3),
            chart(-0.5, 1.0, 0.2),
            chart(-1.0, 0.5, 0.2),
        ])
        .unwrap();
        for i in 0..15 {
            for j in 0..15 {
                let x = [-0.65 + 0.09 * i as f64, -0.65 + 0.09 * j as f64];
                let w = p.weight_jets(&x, 2).unwrap();
                let mut s = Jet::zero(2, 2);
                for (k, phi) in &w {
                    assert!(phi.value() >= 0.0);
                    let c = &p.charts()[*k];
                    assert!(c.domain.inner_distance(&x) > c.margin);
                    s += *phi;
                }
                assert!((s.value() - 1.0).abs() < 1e-9);
                assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-9));
                assert_eq!(w, q.weight_jets(&x, 2).unwrap());
            }
        }
        let single = Partition::new(vec![chart(-1.0, 1.0, 0.25)]).unwrap();
        let w = single.weight_jets(&[0.74, 0.0], 3).unwrap();
        assert_eq!(w, vec![(0, Jet::constant(2, 3, 1.0))]);
        assert!(matches!(single.weights(&[0.76, 0.0]), Err(Error::Uncovered(_))));
    }

    #[test]
    fn x_independent_and_zero_section() {
        let s = plan("max_norm_2d", vec![chart(-1.0, 1.0, 0.25)]).at(0.5).unwrap();
        let y = [0.3, -0.8];
        let g = s.vertical(0).unwrap().g_eps(&[0.0, 0.0], &y).unwrap();
        assert!((s.f_eps_lambda_sq(0, &[0.2, 0.1], &y).unwrap() - g * g).abs() < 1e-8);
        assert_eq!(s.f_eps_sq(&[0.2, 0.1], &[0.0, 0.0]).unwrap(), 0.0);
        for ax in [[1, 0], [0, 2], [1, 1]] {
            assert!(s.f_eps_sq_derivative(&[0.1, 0.0], &y, &ax, &[1, 0]).unwrap().abs() < 1e-7);
        }
        assert!(matches!(
            s.f_eps_sq_derivative(&[0.1, 0.0], &y, &[2, 1], &[1, 1]),
            Err(Error::OrderCap { .. })
        ));
    }

    #[test]
    fn affine_in_x_is_reproduced() {
        let field: Arc<dyn FinslerField> = Arc::new(RiemannianField::new(Arc::new(Tilted)));
        let s = SmoothingPlan::new(field, vec![chart(-1.0, 1.0, 0.25)], SmoothingOptions::for_dim(2))
            .unwrap()
            .at(0.8)
            .unwrap();
        let (x, y) = ([0.3, -0.2], [0.7, 0.4]);
        let exact = 1.3 * (0.49 + 0.16);
        assert!((s.f_eps_lambda_sq(0, &x, &y).unwrap() - exact).abs() < 1e-8);
        let d = s.f_eps_sq_derivative(&x, &y, &[1, 0], &[0, 0]).unwrap();
        assert!((d - 0.65).abs() < 1e-8);
    }

    #[test]
    fn overlapping_charts_agree_with_one() {
        let one = plan("riemannian_smooth_poly", vec![chart(-1.0, 1.0, 0.25)])
            .at(0.5)
            .unwrap();
        let two = plan(
            "riemannian_smooth_poly",
            vec![
                Chart {
                    domain: BoxDomain::new(vec![-1.0, -1.0], vec![0.6, 1.0]).unwrap(),
                    margin: 0.25,
                },
                Chart {
                    domain: BoxDomain::new(vec![-0.6, -1.0], vec![1.0, 1.0]).unwrap(),
                    margin: 0.25,
                },
            ],
        )
        .at(0.5)
        .unwrap();
        let y = [0.6, -0.3];
        for x in [[0.0, 0.1], [0.2, -0.3], [-0.25, 0.4]] {
            assert!(two.plan().partition().weights(&x).unwrap().len() == 2);
            let (a, b) = (one.f_eps_sq(&x, &y).unwrap(), two.f_eps_sq(&x, &y).unwrap());
            assert!((a - b).abs() < 1e-7, "{a} {b}");
        }
    }

    #[test]
    fn fundamental_tensor_examples() {
        let e = plan("euclidean", vec![chart(-1.0, 1.0, 0.25)]).at(0.5).unwrap();
        let t = e.fundamental_tensor(&[0.1, 0.2], &[0.3, 0.9]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((t.g[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-5);
            }
        }
        let p = plan("riemannian_smooth_poly", vec![chart(-1.0, 1.0, 0.25)])
            .at(0.5)
            .unwrap();
        let x = [0.2, -0.1];
        let g0 = p.fundamental_tensor(&x, &[1.0, 0.0]).unwrap().g;
        for y in [[0.3, 0.7], [-2.0, 0.1]] {
            let g = p.fundamental_tensor(&x, &y).unwrap().g;
            for mu in [0.5, 2.0] {
                let gm = p.fundamental_tensor(&x, &[mu * y[0], mu * y[1]]).unwrap().g;
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((g[i][j] - g0[i][j]).abs() < 1e-6);
                        assert!((gm[i][j] - g[i][j]).abs() < 1e-5);
                    }
                }
            }
        }
        let r = plan("randers_2d", vec![chart(-1.0, 1.0, 0.25)]).at(0.5).unwrap();
        assert!(r.fundamental_tensor(&x, &[0.4, 0.2]).unwrap().min_eigenvalue > 0.0);
    }

    #[test]
    fn derivative_error_shrinks_with_eps() {
        let p = plan("riemannian_smooth_poly", vec![chart(-1.0, 1.0, 0.25)]);
        let exact = |x: &[f64]| 0.3 * x[0] * x[0];
        let mut last = f64::INFINITY;
        for eps in [0.8, 0.4, 0.2, 0.1] {
            let s = p.at(eps).unwrap();
            let mut err = 0.0f64;
            for x in [[0.3, 0.2], [-0.4, 0.1], [0.0, -0.5]] {
                let d = 0.5 * s.f_eps_sq_derivative(&x, &[0.0, 1.0], &[1, 0], &[0, 2]).unwrap();
                err = err.max((d - exact(&x)).abs());
            }
            assert!(err < last, "{eps}: {err} >= {last}");
            last = err;
        }
    }

    #[test]
    fn identity_metric_is_fixed() {
        let field: Arc<dyn FinslerField> = Arc::new(RiemannianField::new(Arc::new(Identity(2))));
        let s = SmoothingPlan::new(field, vec![chart(-1.0, 1.0, 0.25)], SmoothingOptions::for_dim(2))
            .unwrap()
            .at(0.9)
            .unwrap();
        let v = s.f_eps_sq(&[0.1, 0.3], &[0.6, 0.8]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
