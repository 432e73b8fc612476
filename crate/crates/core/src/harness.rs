//! Epsilon sweeps against analytic references, the interface experiment,
//! and their CSV output.
//!
//! Configuration is TOML with unknown keys rejected. Sweep points are
//! evaluated in parallel and collected in order, so output depends only on
//! the configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Deserialize;

use crate::catalog::{lookup, CatalogEntry, Oracle};
use crate::error::{Error, Result};
use crate::field::{Analytic, DerivativeSource};
use crate::geometry::{covariant_derivative, curvature, flag_formula, ConnectionKind, GeometryEval, TangentVector};
use crate::horizontal::{SmoothingOptions, SmoothingPlan, VerticalMode};
use crate::kernel::QuadOrders;
use crate::norm::{box_grid, circle_directions, euclid, sphere_samples};
use crate::piecewise::{PiecewiseMetric, StripQuad, StripTotal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
pub enum Quantity {
    F,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "dg")]
    Dg,
    Gamma,
    R,
    K,
    #[serde(rename = "nabla")]
    Nabla,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::F,
        Quantity::G,
        Quantity::Dg,
        Quantity::Gamma,
        Quantity::R,
        Quantity::K,
        Quantity::Nabla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::F => "F",
            Quantity::G => "g",
            Quantity::Dg => "dg",
            Quantity::Gamma => "Gamma",
            Quantity::R => "R",
            Quantity::K => "K",
            Quantity::Nabla => "nabla",
        }
    }

    fn needs_oracle(self) -> bool {
        self != Quantity::F
    }

    fn on_flags(self) -> bool {
        matches!(self, Quantity::R | Quantity::K)
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Quantity> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown quantity {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSetting {
    #[default]
    Auto,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionSetting {
    #[default]
    Chern,
    Cartan,
    Hashiguchi,
    Berwald,
}

impl From<ConnectionSetting> for ConnectionKind {
    fn from(c: ConnectionSetting) -> ConnectionKind {
        match c {
            ConnectionSetting::Chern => ConnectionKind::Chern,
            ConnectionSetting::Cartan => ConnectionKind::Cartan,
            ConnectionSetting::Hashiguchi => ConnectionKind::Hashiguchi,
            ConnectionSetting::Berwald => ConnectionKind::Berwald,
        }
    }
}

/// Sample grid over the entry's compact set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Base points per axis.
    pub points: usize,
    /// Unit directions y per base point.
    pub directions: usize,
    /// Flagpoles per base point for R and K.
    pub flags: usize,
}

impl Default for GridSpec {
    fn default() -> GridSpec {
        GridSpec {
            points: 3,
            directions: 32,
            flags: 16,
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    /// `points,directions[,flags]`.
    fn from_str(s: &str) -> Result<GridSpec> {
        let v: Vec<usize> = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("grid {s}: {e}")))
            })
            .collect::<Result<_>>()?;
        let mut g = GridSpec::default();
        match v.as_slice() {
            [p, d] => {
                g.points = *p;
                g.directions = *d;
            }
            [p, d, f] => {
                g = GridSpec {
                    points: *p,
                    directions: *d,
                    flags: *f,
                }
            }
            _ => return Err(Error::Config(format!("grid {s}: expected points,directions[,flags]"))),
        }
        Ok(g)
    }
}

fn default_eps0() -> f64 {
    0.5
}
fn default_count() -> usize {
    8
}
fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::F]
}
fn default_floor() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub structure: String,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Quantity>,
    /// Explicit epsilon list; otherwise `eps0 * 2^-k` for `k < count`.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub vertical: ModeSetting,
    #[serde(default)]
    pub connection: ConnectionSetting,
    /// Base Gauss-Legendre order for all kernels.
    #[serde(default)]
    pub quad_order: Option<usize>,
    /// Trailing epsilons over which errors must decrease; all by default.
    #[serde(default)]
    pub window: Option<usize>,
    /// Errors at or below this count as converged in the decrease check.
    #[serde(default = "default_floor")]
    pub noise_floor: f64,
    /// Required final error per quantity name.
    #[serde(default)]
    pub final_bounds: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(structure: &str, quantities: &[Quantity]) -> SweepConfig {
        SweepConfig {
            structure: structure.to_string(),
            quantities: quantities.to_vec(),
            epsilons: None,
            eps0: default_eps0(),
            count: default_count(),
            grid: GridSpec::default(),
            vertical: ModeSetting::Auto,
            connection: ConnectionSetting::Chern,
            quad_order: None,
            window: None,
            noise_floor: default_floor(),
            final_bounds: Default::default(),
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<SweepConfig> {
        let c: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.epsilon_list()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<SweepConfig> {
        SweepConfig::from_toml(&fs::read_to_string(path)?)
    }

    pub fn epsilon_list(&self) -> Result<Vec<f64>> {
        let v = match &self.epsilons {
            Some(v) => v.clone(),
            None => (0..self.count).map(|k| self.eps0 * 0.5f64.powi(k as i32)).collect(),
        };
        check_decreasing(&v, 1.0)?;
        Ok(v)
    }
}

fn check_decreasing(v: &[f64], upper: f64) -> Result<()> {
    for (i, e) in v.iter().enumerate() {
        if !(*e > 0.0 && *e < upper) {
            return Err(Error::Config(format!("epsilon {e} outside (0, {upper})")));
        }
        if i > 0 && !(v[i - 1] > *e) {
            return Err(Error::Config("epsilon list must be strictly decreasing".into()));
        }
    }
    Ok(())
}

/// Pass when every step in the trailing `window` decreases strictly, or
/// lands at or below `floor`.
pub fn decreasing(errors: &[f64], window: usize, floor: f64) -> bool {
    let start = errors.len().saturating_sub(window.max(1));
    errors[start..].windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantitySeries {
    pub quantity: Quantity,
    /// Sup error per epsilon, in config order.
    pub errors: Vec<f64>,
    pub decreasing: bool,
    pub final_bound: Option<f64>,
}

impl QuantitySeries {
    pub fn final_ok(&self) -> bool {
        match (self.final_bound, self.errors.last()) {
            (Some(b), Some(e)) => *e < b,
            _ => true,
        }
    }

    pub fn passed(&self) -> bool {
        self.decreasing && self.final_ok()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub structure: String,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub flag_samples: usize,
    pub series: Vec<QuantitySeries>,
    /// Wall time per epsilon; never written to CSV.
    pub runtime: Vec<Duration>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.series.iter().all(QuantitySeries::passed)
    }

    pub fn series(&self, q: Quantity) -> Option<&QuantitySeries> {
        self.series.iter().find(|s| s.quantity == q)
    }
}

pub fn smoothing_options(dim: usize, mode: ModeSetting, quad_order: Option<usize>) -> SmoothingOptions {
    let mut o = SmoothingOptions::for_dim(dim);
    o.mode = match mode {
        ModeSetting::Auto => VerticalMode::Auto,
        ModeSetting::Always => VerticalMode::Always,
    };
    if let Some(b) = quad_order {
        o.vertical_quad = QuadOrders::with_base(dim, b);
        o.horizontal_quad = QuadOrders::with_base(dim, b);
    }
    o
}

/// Base points times unit directions.
pub fn sample_grid(entry: &CatalogEntry, points: usize, directions: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dirs = unit_directions(entry.dim(), directions);
    let mut out = Vec::new();
    for x in box_grid(&entry.compact, points) {
        for y in &dirs {
            out.push((x.clone(), y.clone()));
        }
    }
    out
}

fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => circle_directions(count),
        _ => {
            let s = sphere_samples(dim);
            let step = (s.len() / count.max(1)).max(1);
            s.into_iter().step_by(step).take(count).collect()
        }
    }
}

/// A unit vector transverse to `y`.
fn transverse(y: &[f64]) -> Vec<f64> {
    if y.len() == 2 {
        return vec![-y[1], y[0]];
    }
    let k = (0..y.len())
        .min_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
        .unwrap_or(0);
    let mut z = vec![0.0; y.len()];
    z[k] = 1.0;
    let d: f64 = z.iter().zip(y).map(|(a, b)| a * b).sum();
    let z: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - d * b).collect();
    let n = euclid(&z);
    z.iter().map(|v| v / n).collect()
}

/// Section and direction used for the covariant-derivative error.
fn test_section(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| 1.0 + x[k] * y[(k + 1) % n] + 0.5 * x[(k + 1) % n] - 0.25 * y[k] * y[k])
        .collect()
}

fn test_vector(y: &[f64]) -> TangentVector {
    TangentVector {
        xh: y.to_vec(),
        xv: transverse(y).iter().map(|v| 0.5 * v).collect(),
    }
}

fn max_diff(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

fn flat3(t: &[Vec<Vec<f64>>]) -> Vec<f64> {
    t.iter().flatten().flatten().copied().collect()
}

/// Errors of the non-flag quantities at one sample, indexed like `qs`.
fn sample_errors(
    s: &dyn DerivativeSource,
    f_eps: &dyn Fn(&[f64], &[f64]) -> Result<f64>,
    entry: &CatalogEntry,
    oracle: Option<&Analytic>,
    qs: &[Quantity],
    conn: ConnectionKind,
    x: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    let geo = if qs
        .iter()
        .any(|q| matches!(q, Quantity::G | Quantity::Dg | Quantity::Gamma))
    {
        let o = oracle.ok_or_else(|| Error::OracleMissing(entry.name.into()))?;
        Some((
            GeometryEval::connection_only(s, x, y)?,
            GeometryEval::connection_only(o, x, y)?,
        ))
    } else {
        None
    };
    let mut out = Vec::new();
    for q in qs {
        let e = match q {
            Quantity::F => (f_eps(x, y)? - entry.field.eval(x, y)).abs(),
            Quantity::G => {
                let (a, b) = geo.as_ref().expect("geometry");
                max_diff(a.g.iter().flatten().copied(), b.g.iter().flatten().copied())
            }
            Quantity::Dg => {
                let (a, b) = geo.as_ref().expect("geometry");
                max_diff(flat3(&a.dg), flat3(&b.dg)).max(2.0 * max_diff(flat3(&a.c), flat3(&b.c)))
            }
            Quantity::Gamma => {
                let (a, b) = geo.as_ref().expect("geometry");
                max_diff(flat3(&a.chern), flat3(&b.chern))
            }
            Quantity::Nabla => {
                let o = oracle.ok_or_else(|| Error::OracleMissing(entry.name.into()))?;
                let v = test_vector(y);
                let a = covariant_derivative(s, x, y, &v, &test_section, conn)?;
                let b = covariant_derivative(o, x, y, &v, &test_section, conn)?;
                let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
                // measured in the fundamental tensor of the limit structure
                GeometryEval::connection_only(o, x, y)?.inner(&d, &d).max(0.0).sqrt()
            }
            Quantity::R | Quantity::K => 0.0,
        };
        out.push(e);
    }
    Ok(out)
}

/// `(R error, K error)` at one flag.
fn flag_errors(s: &dyn DerivativeSource, o: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let z = transverse(y);
    let k_of = |src: &dyn DerivativeSource| -> Result<(Vec<f64>, f64)> {
        let c = curvature(src, x, y, None)?;
        let g = &c.geometry.g;
        let ip = |u: &[f64], v: &[f64]| -> f64 {
            let n = u.len();
            (0..n).map(|i| (0..n).map(|j| g[i][j] * u[i] * v[j]).sum::<f64>()).sum()
        };
        let a = ip(y, &z) / ip(y, y);
        let zo: Vec<f64> = z.iter().zip(y).map(|(p, q)| p - a * q).collect();
        let k = flag_formula(&c.r_low, g, y, &zo)?;
        Ok((c.r_low.iter().flatten().flatten().flatten().copied().collect(), k))
    };
    let (ra, ka) = k_of(s)?;
    let (rb, kb) = k_of(o)?;
    Ok((max_diff(ra, rb), (ka - kb).abs()))
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<ConvergenceReport> {
    let entry = lookup(&cfg.structure)?;
    let eps = cfg.epsilon_list()?;
    let mut qs = cfg.quantities.clone();
    qs.sort();
    qs.dedup();
    if qs.is_empty() {
        return Err(Error::Config("no quantities requested".into()));
    }
    let oracle = match entry.oracle {
        Oracle::None => None,
        _ => Some(Analytic::new(entry.field.clone())),
    };
    if let Some(q) = qs.iter().find(|q| q.needs_oracle()) {
        if oracle.is_none() {
            return Err(Error::OracleMissing(format!("{} for {}", q.name(), entry.name)));
        }
    }
    for name in cfg.final_bounds.keys() {
        Quantity::from_str(name)?;
    }
    let plan = SmoothingPlan::new(
        entry.field.clone(),
        entry.charts.clone(),
        smoothing_options(entry.dim(), cfg.vertical, cfg.quad_order),
    )?;
    let samples = sample_grid(entry, cfg.grid.points, cfg.grid.directions);
    let flags = if qs.iter().any(|q| q.on_flags()) {
        sample_grid(entry, cfg.grid.points, cfg.grid.flags)
    } else {
        Vec::new()
    };
    let plain: Vec<Quantity> = qs.iter().copied().filter(|q| !q.on_flags()).collect();
    let conn: ConnectionKind = cfg.connection.into();
    let mut table = vec![vec![0.0; eps.len()]; qs.len()];
    let mut runtime = Vec::new();
    for (ei, &e) in eps.iter().enumerate() {
        let t0 = Instant::now();
        let s = plan.at(e)?;
        let f_eps = |x: &[f64], y: &[f64]| s.f_eps(x, y);
        let rows: Vec<Vec<f64>> = if plain.is_empty() {
            Vec::new()
        } else {
            samples
                .par_iter()
                .map(|(x, y)| sample_errors(&s, &f_eps, entry, oracle.as_ref(), &plain, conn, x, y))
                .collect::<Result<_>>()?
        };
        let flag_rows: Vec<(f64, f64)> = match &oracle {
            Some(o) if !flags.is_empty() => flags
                .par_iter()
                .map(|(x, y)| flag_errors(&s, o, x, y))
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        for (qi, q) in qs.iter().enumerate() {
            table[qi][ei] = match q {
                Quantity::R => flag_rows.iter().fold(0.0f64, |m, r| m.max(r.0)),
                Quantity::K => flag_rows.iter().fold(0.0f64, |m, r| m.max(r.1)),
                _ => {
                    let pi = plain.iter().position(|p| p == q).expect("plain quantity");
                    rows.iter().fold(0.0f64, |m, r| m.max(r[pi]))
                }
            };
        }
        runtime.push(t0.elapsed());
    }
    let window = cfg.window.unwrap_or(eps.len());
    let series = qs
        .iter()
        .zip(table)
        .map(|(q, errors)| QuantitySeries {
            quantity: *q,
            decreasing: decreasing(&errors, window, cfg.noise_floor),
            final_bound: cfg.final_bounds.get(q.name()).copied(),
            errors,
        })
        .collect();
    Ok(ConvergenceReport {
        structure: entry.name.to_string(),
        epsilons: eps,
        samples: samples.len(),
        flag_samples: flags.len(),
        series,
        runtime,
    })
}

fn default_eps_max() -> f64 {
    0.05
}
fn default_segment() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_identity_points() -> usize {
    17
}

/// Points of the plotted curvature field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldGrid {
    pub along: usize,
    pub across: usize,
}

impl Default for FieldGrid {
    fn default() -> FieldGrid {
        FieldGrid { along: 5, across: 41 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripQuadSetting {
    pub n1: usize,
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_side: usize,
    pub conv: usize,
    pub n_peak: usize,
}

impl From<StripQuadSetting> for StripQuad {
    fn from(s: StripQuadSetting) -> StripQuad {
        StripQuad {
            n1: s.n1,
            n_outer: s.n_outer,
            n_inner: s.n_inner,
            n_side: s.n_side,
            conv: s.conv,
            n_peak: s.n_peak,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseConfig {
    pub structure: String,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_segment")]
    pub segment: [f64; 2],
    /// Strip half-width; `4 eps_max` by default.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub quad: Option<StripQuadSetting>,
    #[serde(default)]
    pub field: FieldGrid,
    #[serde(default = "default_identity_points")]
    pub identity_points: usize,
    #[serde(default = "default_floor")]
    pub noise_floor: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl PiecewiseConfig {
    pub fn new(structure: &str) -> PiecewiseConfig {
        PiecewiseConfig {
            structure: structure.to_string(),
            epsilons: None,
            eps_max: default_eps_max(),
            count: default_count(),
            segment: default_segment(),
            delta: None,
            quad: None,
            field: FieldGrid::default(),
            identity_points: default_identity_points(),
            noise_floor: default_floor(),
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<PiecewiseConfig> {
        let c: PiecewiseConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.epsilon_list()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<PiecewiseConfig> {
        PiecewiseConfig::from_toml(&fs::read_to_string(path)?)
    }

    pub fn epsilon_list(&self) -> Result<Vec<f64>> {
        let v = match &self.epsilons {
            Some(v) => v.clone(),
            None => (0..self.count).map(|k| self.eps_max * 0.5f64.powi(k as i32)).collect(),
        };
        check_decreasing(&v, f64::INFINITY)?;
        Ok(v)
    }

    fn delta(&self, eps: &[f64]) -> f64 {
        self.delta.unwrap_or(4.0 * eps.first().copied().unwrap_or(self.eps_max))
    }
}

/// One point of the plotted curvature field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub epsilon: f64,
    pub x1: f64,
    pub x2: f64,
    pub k_eps: f64,
    /// One-sided curvature of the unsmoothed metric.
    pub k_side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseReport {
    pub structure: String,
    pub delta: f64,
    pub strips: Vec<StripTotal>,
    /// `(x1, k_g+, k_g-, q, residual of the sum identity)`.
    pub identity: Vec<[f64; 5]>,
    pub field: Vec<FieldPoint>,
    pub noise_floor: f64,
}

impl PiecewiseReport {
    pub fn identity_residual(&self) -> f64 {
        self.identity.iter().fold(0.0, |m, r| m.max(r[4].abs()))
    }

    /// Largest `|K_eps - K|` at field points farther than `eps` from the interface.
    pub fn off_interface_error(&self) -> f64 {
        self.field
            .iter()
            .filter(|p| p.x2.abs() > p.epsilon)
            .fold(0.0, |m, p| m.max((p.k_eps - p.k_side).abs()))
    }

    pub fn final_rel_error(&self) -> f64 {
        self.strips.last().map_or(f64::NAN, StripTotal::rel_error)
    }

    pub fn value_errors(&self) -> Vec<f64> {
        self.strips.iter().map(|s| (s.value - s.target).abs()).collect()
    }

    pub fn peak_errors(&self) -> Vec<f64> {
        self.strips.iter().map(|s| (s.peak - s.target).abs()).collect()
    }

    /// Relative tolerance 5% at the smallest epsilon, both error series
    /// decreasing, identity at rounding level, one-sided curvature matched.
    pub fn verdicts(&self) -> Vec<(&'static str, bool)> {
        let all = self.strips.len();
        vec![
            (
                "final_rel_error",
                self.final_rel_error() < 0.05
                    || self
                        .strips
                        .last()
                        .is_some_and(|s| s.target == 0.0 && s.rel_error() < 2e-3),
            ),
            (
                "strip_decreasing",
                decreasing(&self.value_errors(), all, self.noise_floor),
            ),
            (
                "peak_decreasing",
                decreasing(&self.peak_errors(), all, self.noise_floor),
            ),
            ("identity", self.identity_residual() < 1e-12),
            ("off_interface", self.off_interface_error() < 1e-4),
        ]
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|v| v.1)
    }
}

pub fn run_piecewise(cfg: &PiecewiseConfig) -> Result<PiecewiseReport> {
    let entry = lookup(&cfg.structure)?;
    let p = PiecewiseMetric::from_entry(entry)?;
    if p.dim() != 2 {
        return Err(Error::Invalid("interface experiment needs a planar entry".into()));
    }
    let eps = cfg.epsilon_list()?;
    let delta = cfg.delta(&eps);
    let quad: StripQuad = cfg.quad.map(Into::into).unwrap_or_default();
    let [a, b] = cfg.segment;
    let strips = eps
        .iter()
        .map(|&e| p.interface_total_curvature(e, a, b, delta, &quad))
        .collect::<Result<Vec<_>>>()?;
    let mut identity = Vec::new();
    let m = cfg.identity_points.max(1);
    for i in 0..m {
        let x1 = if m == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (m - 1) as f64
        };
        let (kp, km) = p.geodesic_curvatures(x1)?;
        let q = p.gap_q(x1)?;
        identity.push([x1, kp, km, q, kp + km - p.geodesic_sum_identity(x1)?]);
    }
    let mut pts = Vec::new();
    let fg = cfg.field;
    for &e in &eps {
        for i in 0..fg.along {
            let x1 = if fg.along == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (fg.along - 1) as f64
            };
            for j in 0..fg.across {
                let x2 = if fg.across == 1 {
                    0.0
                } else {
                    -delta + 2.0 * delta * j as f64 / (fg.across - 1) as f64
                };
                pts.push((e, x1, x2));
            }
        }
    }
    let field = pts
        .par_iter()
        .map(|&(e, x1, x2)| -> Result<FieldPoint> {
            Ok(FieldPoint {
                epsilon: e,
                x1,
                x2,
                k_eps: p.sectional_curvature_2d(e, &[x1, x2])?,
                k_side: p.side_curvature(&[x1, x2])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PiecewiseReport {
        structure: entry.name.to_string(),
        delta,
        strips,
        identity,
        field,
        noise_floor: cfg.noise_floor,
    })
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `epsilon,sup_error` rows, epsilon decreasing.
pub fn series_csv(epsilons: &[f64], errors: &[f64]) -> String {
    let mut s = String::from("epsilon,sup_error\n");
    for (e, v) in epsilons.iter().zip(errors) {
        let _ = writeln!(s, "{},{}", num(*e), num(*v));
    }
    s
}

/// One file per quantity, named `<structure>_<quantity>.csv`.
pub fn emit_sweep(report: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for s in &report.series {
        let p = dir.join(format!("{}_{}.csv", report.structure, s.quantity.name()));
        write_atomic(&p, &series_csv(&report.epsilons, &s.errors))?;
        out.push(p);
    }
    Ok(out)
}

fn strip_csv(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut s = String::from("epsilon,strip_value,target,rel_error\n");
    for (e, v, t, r) in rows {
        let _ = writeln!(s, "{},{},{},{}", num(*e), num(*v), num(*t), num(*r));
    }
    s
}

/// Strip totals, the interface-term share, the identity check and the
/// curvature field, one file each.
pub fn emit_piecewise(report: &PiecewiseReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let name = &report.structure;
    let strip: Vec<_> = report
        .strips
        .iter()
        .map(|s| (s.epsilon, s.value, s.target, s.rel_error()))
        .collect();
    let peak: Vec<_> = report
        .strips
        .iter()
        .map(|s| (s.epsilon, s.peak, s.target, s.peak_rel_error()))
        .collect();
    let mut ident = String::from("x1,k_plus,k_minus,q,residual\n");
    for r in &report.identity {
        let _ = writeln!(ident, "{}", r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    }
    let mut field = String::from("epsilon,x1,x2,k_eps,k_side\n");
    for p in &report.field {
        let _ = writeln!(
            field,
            "{},{},{},{},{}",
            num(p.epsilon),
            num(p.x1),
            num(p.x2),
            num(p.k_eps),
            num(p.k_side)
        );
    }
    let files = [
        (format!("{name}_strip.csv"), strip_csv(&strip)),
        (format!("{name}_peak.csv"), strip_csv(&peak)),
        (format!("{name}_identity.csv"), ident),
        (format!("{name}_kfield.csv"), field),
    ];
    let mut out = Vec::new();
    for (f, body) in files {
        let p = dir.join(f);
        write_atomic(&p, &body)?;
        out.push(p);
    }
    Ok(out)
}

/// A named pass/fail line of the quick invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Fast invariants over every module; the acceptance suite runs the full sizes.
pub fn verify_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        out.push(Check { name, passed, detail });
    };
    push(
        "kernel_mass",
        (|| {
            let mut worst: f64 = 0.0;
            for dim in 1..=2 {
                for r in [0.1, 0.5, 2.0] {
                    let k = crate::kernel::Mollifier::new(dim, r)?;
                    let q = QuadOrders::default_for(dim);
                    worst = worst.max((k.convolve(&vec![0.0; dim], &q, |_| 1.0)? - 1.0).abs());
                }
            }
            Ok((worst < 1e-6, format!("max |mass - 1| = {worst:.3e}")))
        })(),
    );
    push(
        "catalog_classes",
        (|| {
            let bad: Vec<&str> = crate::catalog::catalog()
                .iter()
                .filter(|e| e.class_check.is_err())
                .map(|e| e.name)
                .collect();
            Ok((bad.is_empty(), format!("failing entries: {bad:?}")))
        })(),
    );
    push(
        "riemannian_reduction",
        (|| {
            let e = lookup("riemannian_smooth_poly")?;
            let src = Analytic::new(e.field.clone());
            let m = e.metric().ok_or_else(|| Error::OracleMissing(e.name.into()))?;
            let mut worst_c: f64 = 0.0;
            let mut worst_g: f64 = 0.0;
            for (x, y) in sample_grid(e, 3, 8) {
                let geo = GeometryEval::connection_only(&src, &x, &y)?;
                let lc = crate::geometry::metric_curvature(m.as_ref(), &x)?;
                worst_c = worst_c.max(flat3(&geo.c).iter().fold(0.0, |a, v| a.max(v.abs())));
                worst_g = worst_g.max(max_diff(flat3(&geo.chern), flat3(&lc.christoffel)));
            }
            Ok((
                worst_c < 1e-8 && worst_g < 1e-5,
                format!("|C| = {worst_c:.2e}, |Gamma - LC| = {worst_g:.2e}"),
            ))
        })(),
    );
    push(
        "minkowski_flatness",
        (|| {
            let e = lookup("randers_2d")?;
            let plan = SmoothingPlan::new(
                e.field.clone(),
                e.charts.clone(),
                smoothing_options(2, ModeSetting::Always, None),
            )?;
            let s = plan.at(0.25)?;
            let mut worst: f64 = 0.0;
            for y in circle_directions(4) {
                let k = crate::geometry::flag_curvature(
                    &s,
                    &crate::geometry::Flag {
                        x: vec![0.1, 0.2],
                        z: transverse(&y),
                        y,
                    },
                )?;
                worst = worst.max(k.abs());
            }
            Ok((worst < 1e-6, format!("max |K_eps| = {worst:.2e}")))
        })(),
    );
    push(
        "geodesic_identity",
        (|| {
            let p = PiecewiseMetric::from_entry(lookup("piecewise_linear_jump")?)?;
            let mut worst: f64 = 0.0;
            for i in 0..9 {
                let x1 = -1.0 + 0.25 * i as f64;
                let (a, b) = p.geodesic_curvatures(x1)?;
                worst = worst.max((a + b - p.geodesic_sum_identity(x1)?).abs());
            }
            Ok((worst < 1e-12, format!("max residual {worst:.2e}")))
        })(),
    );
    push(
        "determinism",
        (|| {
            let mut c = SweepConfig::new("randers_2d", &[Quantity::F]);
            c.count = 2;
            c.grid = GridSpec {
                points: 2,
                directions: 4,
                flags: 2,
            };
            c.vertical = ModeSetting::Always;
            let a = run_sweep(&c)?;
            let b = run_sweep(&c)?;
            let same = a
                .series
                .iter()
                .zip(&b.series)
                .all(|(p, q)| series_csv(&a.epsilons, &p.errors) == series_csv(&b.epsilons, &q.errors));
            Ok((same, "two identical sweeps".into()))
        })(),
    );
    out
}
