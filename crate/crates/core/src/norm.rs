//! Sampled norm predicates, sphere extrema and the radial growth bound.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::FinslerField;
use crate::kernel::BoxDomain;

/// Extremes of F over the Euclidean unit sphere (and over a chart).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds {
    pub r_max: f64,
    pub r_min: f64,
}

impl NormBounds {
    pub fn new(r_max: f64, r_min: f64) -> Result<NormBounds> {
        if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
            return Err(Error::Constants(format!("r_max = {r_max}, r_min = {r_min}")));
        }
        Ok(NormBounds { r_max, r_min })
    }

    pub fn scaled(&self, c: f64) -> NormBounds {
        NormBounds {
            r_max: c * self.r_max,
            r_min: c * self.r_min,
        }
    }
}

const ANGLES_2D: usize = 720;
const ICOSPHERE_LEVEL: usize = 3;

/// Sample directions on the Euclidean unit sphere.
pub fn sphere_samples(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..ANGLES_2D)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / ANGLES_2D as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => icosphere(ICOSPHERE_LEVEL),
    }
}

/// `count` equally spaced unit vectors in the plane.
pub fn circle_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

fn icosphere(level: usize) -> Vec<Vec<f64>> {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in verts.iter_mut() {
        *v = unit(*v);
    }
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (u, w) = (verts[a], verts[b]);
                verts.push(unit([u[0] + w[0], u[1] + w[1], u[2] + w[2]]));
                verts.len() - 1
            })
        };
        for f in &faces {
            let a = midpoint(f[0], f[1], &mut verts);
            let b = midpoint(f[1], f[2], &mut verts);
            let c = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], a, c]);
            next.push([f[1], b, a]);
            next.push([f[2], c, b]);
            next.push([a, b, c]);
        }
        faces = next;
    }
    verts.into_iter().map(|v| v.to_vec()).collect()
}

/// Golden-section search for a maximum of `f` on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Refine a sampled extremum over the sphere. `sign` = 1 for a maximum,
/// -1 for a minimum. Golden section in the angle on the circle; on the
/// 2-sphere a shrinking compass search in the tangent plane, which also
/// walks along kinks.
fn refine_on_sphere(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64, sign: f64) -> f64 {
    match start.len() {
        1 => f(start),
        2 => {
            let t0 = start[1].atan2(start[0]);
            let g = |t: f64| sign * f(&[t.cos(), t.sin()]);
            let (_, v) = golden_max(g, t0 - step, t0 + step, 1e-13);
            sign * v.max(g(t0))
        }
        _ => {
            let mut p = start.to_vec();
            let mut best = sign * f(&p);
            let mut h = step;
            while h > 1e-12 {
                let (e1, e2) = tangent_frame(&p);
                let mut moved = false;
                for k in 0..8 {
                    let a = std::f64::consts::PI * k as f64 / 4.0;
                    let q: Vec<f64> = (0..3).map(|i| p[i] + h * (a.cos() * e1[i] + a.sin() * e2[i])).collect();
                    let nq = euclid(&q);
                    let q: Vec<f64> = q.iter().map(|v| v / nq).collect();
                    let v = sign * f(&q);
                    if v > best {
                        best = v;
                        p = q;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    h *= 0.5;
                }
            }
            sign * best
        }
    }
}

fn tangent_frame(p: &[f64]) -> ([f64; 3], [f64; 3]) {
    let a = if p[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = a[0] * p[0] + a[1] * p[1] + a[2] * p[2];
    let mut e1 = [a[0] - d * p[0], a[1] - d * p[1], a[2] - d * p[2]];
    let n = euclid(&e1);
    e1.iter_mut().for_each(|v| *v /= n);
    let e2 = [
        p[1] * e1[2] - p[2] * e1[1],
        p[2] * e1[0] - p[0] * e1[2],
        p[0] * e1[1] - p[1] * e1[0],
    ];
    (e1, e2)
}

/// Max and min of `f` over the Euclidean unit sphere.
pub fn sphere_extrema(dim: usize, f: &dyn Fn(&[f64]) -> f64) -> Result<NormBounds> {
    let samples = sphere_samples(dim);
    let vals: Vec<f64> = samples.iter().map(|v| f(v)).collect();
    if let Some((i, v)) = vals.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::NotANorm(format!("value {v} at unit vector {:?}", samples[i])));
    }
    let step = match dim {
        2 => 2.0 * std::f64::consts::PI / ANGLES_2D as f64,
        _ => 0.2,
    };
    // refine the few best candidates of each kind
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let k = order.len().min(6);
    let mut r_max = vals[order[0]];
    for &i in &order[..k] {
        r_max = r_max.max(refine_on_sphere(f, &samples[i], step, 1.0));
    }
    let mut r_min = vals[order[order.len() - 1]];
    for &i in order.iter().rev().take(k) {
        r_min = r_min.min(refine_on_sphere(f, &samples[i], step, -1.0));
    }
    NormBounds::new(r_max, r_min)
}

/// `(r_M, r_m)` of a norm at a fixed base point.
pub fn compute_bounds(field: &dyn FinslerField, x: &[f64]) -> Result<NormBounds> {
    sphere_extrema(field.dim(), &|y| field.eval(x, y))
}

/// Base points on a regular grid over a box, corners included.
pub fn box_grid(domain: &BoxDomain, per_axis: usize) -> Vec<Vec<f64>> {
    let n = domain.lo.len();
    let mut pts = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for p in &pts {
            for k in 0..per_axis {
                let t = if per_axis == 1 {
                    0.5
                } else {
                    k as f64 / (per_axis - 1) as f64
                };
                let mut q = p.clone();
                q.push(domain.lo[i] + t * (domain.hi[i] - domain.lo[i]));
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// `(r_U, r_u)`: extremes of F over the closed chart box times the unit sphere.
pub fn compute_chart_bounds(field: &dyn FinslerField, domain: &BoxDomain) -> Result<NormBounds> {
    if field.x_independent() {
        let c: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        return compute_bounds(field, &c);
    }
    let per_axis = match field.dim() {
        1 => 33,
        2 => 17,
        _ => 7,
    };
    let mut r_max: f64 = 0.0;
    let mut r_min = f64::INFINITY;
    for x in box_grid(domain, per_axis) {
        let b = compute_bounds(field, &x)?;
        r_max = r_max.max(b.r_max);
        r_min = r_min.min(b.r_min);
    }
    NormBounds::new(r_max, r_min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub gap: f64,
    pub threshold: f64,
    pub holds: bool,
    /// Whether `|w - v| <= r_min |v| / (4 n r_max)`.
    pub admissible: bool,
}

/// Largest admissible `|w - v|` for the growth bound.
pub fn growth_radius(v: &[f64], bounds: &NormBounds) -> f64 {
    let n = v.len() as f64;
    bounds.r_min * euclid(v) / (4.0 * n * bounds.r_max)
}

/// `F(w + t v/|v|) - F(w)` against `(r_min / 8) t`.
pub fn check_growth_bound(
    f: &dyn Fn(&[f64]) -> f64,
    v: &[f64],
    w: &[f64],
    t: f64,
    bounds: &NormBounds,
) -> Result<GrowthReport> {
    let nv = euclid(v);
    if !(nv > 0.0) || !(t > 0.0) {
        return Err(Error::Invalid(format!("|v| = {nv}, t = {t}")));
    }
    let dist = v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let moved: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + t * b / nv).collect();
    let gap = f(&moved) - f(w);
    let threshold = bounds.r_min / 8.0 * t;
    Ok(GrowthReport {
        gap,
        threshold,
        holds: gap > threshold,
        admissible: dist <= growth_radius(v, bounds) * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    /// Smallest eigenvalue within tolerance of zero.
    Degenerate,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiVerdict {
    pub hessian: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub verdict: Definiteness,
}

pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(a).eigenvalues.min()
}

pub fn classify(m: &[Vec<f64>]) -> (f64, f64, Definiteness) {
    let n = m.len();
    let trace: f64 = (0..n).map(|i| m[i][i]).sum();
    let e = min_eigenvalue(m);
    let tol = 1e-6 * (trace.abs() / n as f64);
    let v = if e > tol {
        Definiteness::PositiveDefinite
    } else if e >= -tol {
        Definiteness::Degenerate
    } else {
        Definiteness::Indefinite
    };
    (e, trace, v)
}

/// Central-difference Hessian of F^2 at y with relative step `h`.
pub fn check_minkowski(f: &dyn Fn(&[f64]) -> f64, y: &[f64], h: f64) -> Result<MinkowskiVerdict> {
    let ny = euclid(y);
    if !(ny > 0.0) {
        return Err(Error::Invalid("y = 0".into()));
    }
    let n = y.len();
    let s = h * ny;
    let f2 = |d: &[(usize, f64)]| {
        let mut p = y.to_vec();
        for &(i, v) in d {
            p[i] += v;
        }
        let v = f(&p);
        v * v
    };
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                (f2(&[(i, s)]) - 2.0 * f2(&[]) + f2(&[(i, -s)])) / (s * s)
            } else {
                (f2(&[(i, s), (j, s)]) - f2(&[(i, s), (j, -s)]) - f2(&[(i, -s), (j, s)]) + f2(&[(i, -s), (j, -s)]))
                    / (4.0 * s * s)
            };
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let (min_eigenvalue, trace, verdict) = classify(&hess);
    Ok(MinkowskiVerdict {
        hessian: hess,
        min_eigenvalue,
        trace,
        verdict,
    })
}

/// Sampled norm axioms: positivity, positive homogeneity, triangle inequality.
pub fn check_norm_axioms(f: &dyn Fn(&[f64]) -> f64, dim: usize, samples: &[Vec<f64>]) -> Result<()> {
    let tol = 1e-12;
    if f(&vec![0.0; dim]).abs() > tol {
        return Err(Error::NotANorm("F(0) != 0".into()));
    }
    for (k, a) in samples.iter().enumerate() {
        let fa = f(a);
        if !(fa > 0.0) && euclid(a) > 0.0 {
            return Err(Error::NotANorm(format!("F({a:?}) = {fa}")));
        }
        for mu in [0.1, 2.5, 17.0] {
            let s: Vec<f64> = a.iter().map(|v| mu * v).collect();
            if (f(&s) - mu * fa).abs() > tol * (1.0 + mu * fa) * 10.0 {
                return Err(Error::NotANorm(format!("homogeneity fails at {a:?}, mu {mu}")));
            }
        }
        let b = &samples[(k * 7 + 3) % samples.len()];
        let sum: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + v).collect();
        if f(&sum) > fa + f(b) + tol * (1.0 + fa + f(b)) {
            return Err(Error::NotANorm(format!("triangle inequality fails at {a:?}, {b:?}")));
        }
    }
    Ok(())
}

pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_norm(y: &[f64]) -> f64 {
        y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn bounds_of_basic_norms() {
        let b = sphere_extrema(2, &|y| euclid(y)).unwrap();
        assert!((b.r_max - 1.0).abs() < 1e-12 && (b.r_min - 1.0).abs() < 1e-12);
        let b = sphere_extrema(2, &max_norm).unwrap();
        assert!((b.r_max - 1.0).abs() < 1e-12);
        assert!((b.r_min - 0.5f64.sqrt()).abs() < 1e-10);
        let b2 = sphere_extrema(2, &|y| 2.0 * euclid(y)).unwrap();
        assert!((b2.r_max - 2.0).abs() < 1e-12 && (b2.r_min - 2.0).abs() < 1e-12);
        let b3 = sphere_extrema(3, &max_norm).unwrap();
        assert!((b3.r_min - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{b3:?}");
    }

    #[test]
    fn nonpositive_rejected() {
        assert!(matches!(sphere_extrema(2, &|y| y[0]), Err(Error::NotANorm(_))));
    }

    #[test]
    fn growth_examples() {
        let b = NormBounds::new(1.0, 0.5f64.sqrt()).unwrap();
        let r = check_growth_bound(&max_norm, &[1.0, 0.0], &[1.0, 0.05], 0.1, &b).unwrap();
        assert!((r.gap - 0.1).abs() < 1e-14 && r.holds && r.admissible);
        let e = NormBounds::new(1.0, 1.0).unwrap();
        let r = check_growth_bound(&euclid, &[0.3, 0.4], &[0.3, 0.4], 2.0, &e).unwrap();
        assert!((r.gap - 2.0).abs() < 1e-14 && r.holds);
    }

    #[test]
    fn minkowski_examples() {
        let v = check_minkowski(&euclid, &[0.3, -1.2], 1e-4).unwrap();
        assert!((v.min_eigenvalue - 2.0).abs() < 1e-5);
        assert_eq!(v.verdict, Definiteness::PositiveDefinite);
        let v = check_minkowski(&max_norm, &[1.0, 0.3], 1e-4).unwrap();
        assert_ne!(v.verdict, Definiteness::PositiveDefinite);
        let randers = |y: &[f64]| euclid(y) + 0.3 * y[0];
        let v = check_minkowski(&randers, &[-0.2, 0.7], 1e-4).unwrap();
        assert_eq!(v.verdict, Definiteness::PositiveDefinite);
    }

    #[test]
    fn icosphere_count() {
        assert_eq!(icosphere(3).len(), 642);
    }
}
