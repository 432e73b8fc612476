//! Built-in structures.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::field::{
    ConstantNorm, FinslerField, FnField, Metric, MetricFormula, NormFormula, RiemannianField, Smoothness,
};
use crate::jet::Scalar;
use crate::kernel::BoxDomain;
use crate::norm::{self, check_minkowski, check_norm_axioms, Definiteness};

/// What the limit structure is known to be, for error oracles.
#[derive(Clone)]
pub enum Oracle {
    /// Only F itself.
    None,
    /// x-independent smooth norm: g from analytic y-jets, connection and curvature zero.
    Minkowski,
    /// Riemannian metric with analytic x-derivatives.
    Riemannian(Arc<dyn Metric>),
}

/// A chart box and the distance kept from its boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub domain: BoxDomain,
    pub margin: f64,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub field: Arc<dyn FinslerField>,
    pub smoothness: Smoothness,
    pub charts: Vec<Chart>,
    /// Region sampled by sweeps.
    pub compact: BoxDomain,
    pub oracle: Oracle,
    /// One-sided metrics across x^n = 0, for piecewise entries.
    pub sides: Option<(Arc<dyn Metric>, Arc<dyn Metric>)>,
    /// Outcome of the norm predicates run when the catalog was built.
    pub class_check: std::result::Result<(), String>,
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn metric(&self) -> Option<&Arc<dyn Metric>> {
        match &self.oracle {
            Oracle::Riemannian(m) => Some(m),
            _ => None,
        }
    }
}

pub struct Identity(pub usize);
impl MetricFormula for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let z = x[0] * 0.0;
        (0..self.0)
            .map(|i| (0..self.0).map(|j| if i == j { z + 1.0 } else { z }).collect())
            .collect()
    }
}

/// `(dx^2 + dy^2) / y^2` on the upper half-plane.
pub struct Poincare;
impl MetricFormula for Poincare {
    fn dim(&self) -> usize {
        2
    }
    fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let l = (x[1] * x[1]).recip();
        let z = x[0] * 0.0;
        vec![vec![l, z], vec![z, l]]
    }
}

/// Polynomial metric with nonzero third derivatives.
pub struct PolyMetric;
impl MetricFormula for PolyMetric {
    fn dim(&self) -> usize {
        2
    }
    fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let (a, b) = (x[0], x[1]);
        let g11 = a * a * 0.2 + b * b * b * 0.1 + 1.0;
        let g12 = a * b * 0.1;
        let g22 = a * a * a * 0.1 + b * b * 0.2 + 1.0;
        vec![vec![g11, g12], vec![g12, g22]]
    }
}

/// `g11 = 1 + c (x^2)^p`, `g12 = 0`, `g22 = 1`: one side of a piecewise metric.
pub struct StripSide {
    pub c: f64,
    pub power: i32,
}
impl MetricFormula for StripSide {
    fn dim(&self) -> usize {
        2
    }
    fn g<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let z = x[0] * 0.0;
        let g11 = if self.c == 0.0 {
            z + 1.0
        } else {
            x[1].powi(self.power) * self.c + 1.0
        };
        vec![vec![g11, z], vec![z, z + 1.0]]
    }
}

/// A metric equal to `plus` for x^n >= 0 and `minus` below.
pub struct Glued {
    pub plus: Arc<dyn Metric>,
    pub minus: Arc<dyn Metric>,
}

impl Metric for Glued {
    fn dim(&self) -> usize {
        self.plus.dim()
    }
    fn g_val(&self, x: &[f64]) -> Vec<Vec<f64>> {
        if x[x.len() - 1] >= 0.0 {
            self.plus.g_val(x)
        } else {
            self.minus.g_val(x)
        }
    }
    // one-sided jets; callers avoid the interface for x-derivatives
    fn g_jet(&self, x: &[f64], order: usize) -> Vec<Vec<crate::jet::Jet>> {
        if x[x.len() - 1] >= 0.0 {
            self.plus.g_jet(x, order)
        } else {
            self.minus.g_jet(x, order)
        }
    }
}

/// F^2 = g(x)(y, y) for a metric that is only continuous across x^n = 0.
pub struct GluedField {
    inner: RiemannianField,
}

impl FinslerField for GluedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.inner.eval(x, y)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::VerticalSmooth
    }
    fn f2_jets(&self, x: &[f64], y: &[f64], x_order: usize, y_order: usize) -> Option<crate::field::XJets> {
        if x_order > 0 {
            return None;
        }
        self.inner.f2_jets(x, y, 0, y_order)
    }
}

pub const RANDERS_DRIFT: f64 = 0.3;
pub const JUMP_SLOPE: f64 = 0.4;

pub struct Randers {
    pub b: f64,
}
impl NormFormula for Randers {
    fn dim(&self) -> usize {
        2
    }
    fn smooth(&self) -> bool {
        true
    }
    fn norm<S: Scalar>(&self, y: &[S]) -> S {
        (y[0] * y[0] + y[1] * y[1]).sqrt() + y[0] * self.b
    }
}

pub struct Euclid(pub usize);
impl NormFormula for Euclid {
    fn dim(&self) -> usize {
        self.0
    }
    fn smooth(&self) -> bool {
        true
    }
    fn norm<S: Scalar>(&self, y: &[S]) -> S {
        let mut s = y[0] * y[0];
        for v in &y[1..] {
            s = s + *v * *v;
        }
        s.sqrt()
    }
}

pub fn max_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Regular hexagon with unit circumradius and a vertex on the first axis.
pub fn hexagon_norm(y: &[f64]) -> f64 {
    let c = (std::f64::consts::PI / 6.0).cos();
    (0..6)
        .map(|k| {
            let t = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
            (t.cos() * y[0] + t.sin() * y[1]) / c
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn square(h: f64) -> BoxDomain {
    BoxDomain::new(vec![-h, -h], vec![h, h]).expect("box")
}

fn plane_entry(
    name: &'static str,
    summary: &'static str,
    field: Arc<dyn FinslerField>,
    oracle: Oracle,
) -> CatalogEntry {
    CatalogEntry {
        name,
        summary,
        smoothness: field.smoothness(),
        field,
        charts: vec![Chart {
            domain: square(1.0),
            margin: 0.25,
        }],
        compact: square(0.5),
        oracle,
        sides: None,
        class_check: Ok(()),
    }
}

fn piecewise_entry(name: &'static str, summary: &'static str, power: i32) -> CatalogEntry {
    let plus: Arc<dyn Metric> = Arc::new(StripSide { c: JUMP_SLOPE, power });
    let minus: Arc<dyn Metric> = Arc::new(StripSide { c: 0.0, power });
    let glued = Arc::new(Glued {
        plus: plus.clone(),
        minus: minus.clone(),
    });
    let field = Arc::new(GluedField {
        inner: RiemannianField::new(glued),
    });
    let mut e = plane_entry(name, summary, field, Oracle::None);
    e.sides = Some((plus, minus));
    e
}

fn build() -> Vec<CatalogEntry> {
    let mut v = vec![
        plane_entry(
            "euclidean",
            "Euclidean plane",
            Arc::new(RiemannianField::constant(Arc::new(Identity(2)))),
            Oracle::Riemannian(Arc::new(Identity(2))),
        ),
        plane_entry(
            "max_norm_2d",
            "maximum norm on every tangent plane",
            Arc::new(FnField {
                dim: 2,
                f: |_x: &[f64], y: &[f64]| max_norm(y),
                smoothness: Smoothness::C0,
                x_independent: true,
            }),
            Oracle::None,
        ),
        plane_entry(
            "polytope_norm_2d",
            "regular hexagon norm, unit circumradius",
            Arc::new(FnField {
                dim: 2,
                f: |_x: &[f64], y: &[f64]| hexagon_norm(y),
                smoothness: Smoothness::C0,
                x_independent: true,
            }),
            Oracle::None,
        ),
        plane_entry(
            "randers_2d",
            "Randers norm |y| + 0.3 y^1 with constant drift",
            Arc::new(ConstantNorm(Randers { b: RANDERS_DRIFT })),
            Oracle::Minkowski,
        ),
    ];
    let mut p = plane_entry(
        "poincare_half_plane",
        "hyperbolic metric (dx^2 + dy^2)/y^2, curvature -1",
        Arc::new(RiemannianField::new(Arc::new(Poincare))),
        Oracle::Riemannian(Arc::new(Poincare)),
    );
    p.charts = vec![Chart {
        domain: BoxDomain::new(vec![-0.5, 0.6], vec![0.5, 1.4]).expect("box"),
        margin: 0.1,
    }];
    p.compact = BoxDomain::new(vec![-0.2, 0.8], vec![0.2, 1.2]).expect("box");
    v.push(p);
    v.push(plane_entry(
        "riemannian_smooth_poly",
        "polynomial Riemannian metric with cubic terms",
        Arc::new(RiemannianField::new(Arc::new(PolyMetric))),
        Oracle::Riemannian(Arc::new(PolyMetric)),
    ));
    v.push(piecewise_entry(
        "piecewise_linear_jump",
        "g11 = 1 + 0.4 max(x^2, 0): normal-derivative jump across x^2 = 0",
        1,
    ));
    v.push(piecewise_entry(
        "piecewise_quadratic_jump",
        "g11 = 1 + 0.4 max(x^2, 0)^2: C1 across x^2 = 0, no jump",
        2,
    ));
    let mut e3 = plane_entry(
        "euclidean_3d",
        "Euclidean space",
        Arc::new(RiemannianField::constant(Arc::new(Identity(3)))),
        Oracle::Riemannian(Arc::new(Identity(3))),
    );
    e3.charts = vec![Chart {
        domain: BoxDomain::new(vec![-1.0; 3], vec![1.0; 3]).expect("box"),
        margin: 0.25,
    }];
    e3.compact = BoxDomain::new(vec![-0.5; 3], vec![0.5; 3]).expect("box");
    v.push(e3);
    for e in v.iter_mut() {
        e.class_check = check_class(e).map_err(|err| err.to_string());
    }
    v
}

/// Run the norm predicates matching the declared class.
pub fn check_class(e: &CatalogEntry) -> Result<()> {
    let n = e.dim();
    let dirs = norm::sphere_samples(n);
    let step = (dirs.len() / 48).max(1);
    let dirs: Vec<Vec<f64>> = dirs.into_iter().step_by(step).collect();
    let scaled: Vec<Vec<f64>> = dirs
        .iter()
        .enumerate()
        .map(|(k, d)| d.iter().map(|v| v * (0.3 + 0.1 * (k % 7) as f64)).collect())
        .collect();
    let points = norm::box_grid(&e.compact, 3);
    let mut degenerate_seen = false;
    for x in &points {
        let f = |y: &[f64]| e.field.eval(x, y);
        check_norm_axioms(&f, n, &scaled)?;
        for y in &dirs {
            let v = check_minkowski(&f, y, 1e-4)?;
            match (e.smoothness, v.verdict) {
                (Smoothness::C0, Definiteness::PositiveDefinite) => {}
                (Smoothness::C0, _) => degenerate_seen = true,
                (_, Definiteness::PositiveDefinite) => {}
                (_, d) => {
                    return Err(Error::NotANorm(format!(
                        "{}: Hessian {d:?} at x = {x:?}, y = {y:?}",
                        e.name
                    )))
                }
            }
        }
    }
    if e.smoothness == Smoothness::C0 && !degenerate_seen {
        return Err(Error::NotANorm(format!(
            "{} is declared C0 but every sampled Hessian is positive definite",
            e.name
        )));
    }
    Ok(())
}

pub fn catalog() -> &'static [CatalogEntry] {
    static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

pub fn lookup(name: &str) -> Result<&'static CatalogEntry> {
    catalog()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Invalid(format!("unknown structure '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::sphere_extrema;

    #[test]
    fn all_entries_verified() {
        for e in catalog() {
            assert!(e.class_check.is_ok(), "{}: {:?}", e.name, e.class_check);
        }
        assert!(catalog().len() >= 8);
    }

    #[test]
    fn hexagon_constants() {
        let b = sphere_extrema(2, &hexagon_norm).unwrap();
        assert!((b.r_max - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((b.r_min - 1.0).abs() < 1e-12);
        assert!((hexagon_norm(&[1.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn max_norm_fails_minkowski_on_axes() {
        let v = check_minkowski(&max_norm, &[1.0, 0.0], 1e-4).unwrap();
        assert_ne!(v.verdict, Definiteness::PositiveDefinite);
    }

    #[test]
    fn glued_field_continuous() {
        let e = lookup("piecewise_linear_jump").unwrap();
        let a = e.field.eval(&[0.1, 1e-12], &[1.0, 0.0]);
        let b = e.field.eval(&[0.1, -1e-12], &[1.0, 0.0]);
        assert!((a - b).abs() < 1e-12);
        assert!((e.field.eval(&[0.0, 0.5], &[1.0, 0.0]) - 1.2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unknown_name() {
        assert!(lookup("nope").is_err());
    }
}
