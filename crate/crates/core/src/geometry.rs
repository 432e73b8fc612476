//! Connections and curvature at a point of the slit tangent bundle.
//!
//! Pointwise quantities come from derivative jets of F^2 (one order in x,
//! up to four in y). Curvatures need derivatives of the Chern symbols,
//! taken by five-point differences of the rebuilt pointwise data.
//!
//! Index layout: `gamma[i][j][k]` is the symbol with upper index i,
//! `r_mixed[j][i][k][l]` is `R_j^i_kl`, `r_low[j][i][k][l]` is `R_jikl`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::{DerivativeSource, Metric};
use crate::jet::{invert_jet_matrix, Jet};
use crate::norm::euclid;

pub type Mat = Vec<Vec<f64>>;
pub type T3 = Vec<Vec<Vec<f64>>>;
pub type T4 = Vec<Vec<Vec<Vec<f64>>>>;

fn unit(n: usize, i: usize) -> Vec<usize> {
    let mut e = vec![0; n];
    e[i] += 1;
    e
}

fn pair(n: usize, i: usize, j: usize) -> Vec<usize> {
    let mut e = unit(n, i);
    e[j] += 1;
    e
}

fn t3(n: usize) -> T3 {
    vec![vec![vec![0.0; n]; n]; n]
}

fn t4(n: usize) -> T4 {
    vec![t3(n); n]
}

/// Inverse and condition number of a symmetric positive-definite matrix.
pub fn spd_inverse(g: &Mat) -> Result<(Mat, f64)> {
    let n = g.len();
    let a = DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let eig = SymmetricEigen::new(a.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 0.0) {
        return Err(Error::Singular(format!("metric eigenvalues in [{lo:e}, {hi:e}]")));
    }
    let inv = a
        .cholesky()
        .ok_or_else(|| Error::Singular("metric is not positive definite".into()))?
        .inverse();
    Ok(((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect(), hi / lo))
}

/// Everything at (x, y) that needs no derivative of the Chern symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryEval {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: f64,
    /// `y / F`.
    pub ell: Vec<f64>,
    pub g: Mat,
    pub g_inv: Mat,
    pub condition: f64,
    /// `C_ijk = (1/2) d g_ij / d y^k`.
    pub c: T3,
    /// `C^i_jk`.
    pub c_up: T3,
    /// `A_ijk = F C_ijk`.
    pub a: T3,
    /// `d g_ij / d x^k` stored as `[k][i][j]`.
    pub dg: T3,
    pub gamma: T3,
    pub n: Mat,
    pub chern: T3,
    /// `gamma^i_jk y^j y^k`; absent when only third y-derivatives were used.
    pub sigma: Option<Vec<f64>>,
    pub a_dot: Option<T3>,
}

impl GeometryEval {
    /// All pointwise quantities, including `sigma` and `A-dot`.
    pub fn at(src: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<GeometryEval> {
        Self::build(src, x, y, true)
    }

    /// Without `sigma` and `A-dot`: derivatives of F^2 to third order in y.
    pub fn connection_only(src: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<GeometryEval> {
        Self::build(src, x, y, false)
    }

    fn build(src: &dyn DerivativeSource, x: &[f64], y: &[f64], full: bool) -> Result<GeometryEval> {
        let n = src.dim();
        if x.len() != n || y.len() != n {
            return Err(Error::Invalid("point dimension".into()));
        }
        if euclid(y) == 0.0 {
            return Err(Error::Invalid("geometry at y = 0".into()));
        }
        let j = src.f2_jets(x, y, 1, if full { 4 } else { 3 })?;
        let f2 = j.value();
        let f = f2.value().sqrt();
        let ell: Vec<f64> = y.iter().map(|v| v / f).collect();
        let mut g = vec![vec![0.0; n]; n];
        let mut c = t3(n);
        let mut dg = t3(n);
        let fx: Vec<Jet> = (0..n)
            .map(|k| j.x_derivative(&unit(n, k)).expect("x order 1"))
            .collect();
        for i in 0..n {
            for jj in 0..n {
                g[i][jj] = 0.5 * f2.derivative(&pair(n, i, jj));
                for k in 0..n {
                    let mut e = pair(n, i, jj);
                    e[k] += 1;
                    c[i][jj][k] = 0.25 * f2.derivative(&e);
                    dg[k][i][jj] = 0.5 * fx[k].derivative(&pair(n, i, jj));
                }
            }
        }
        let (g_inv, condition) = spd_inverse(&g)?;
        let raise = |low: &T3| -> T3 {
            let mut up = t3(n);
            for i in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        up[i][a][b] = (0..n).map(|s| g_inv[i][s] * low[s][a][b]).sum();
                    }
                }
            }
            up
        };
        let c_up = raise(&c);
        let mut gamma_low = t3(n);
        for s in 0..n {
            for a in 0..n {
                for b in 0..n {
                    gamma_low[s][a][b] = 0.5 * (dg[b][s][a] - dg[s][a][b] + dg[a][b][s]);
                }
            }
        }
        let gamma = raise(&gamma_low);
        let mut gyy = vec![0.0; n];
        for (k, v) in gyy.iter_mut().enumerate() {
            for r in 0..n {
                for s in 0..n {
                    *v += gamma[k][r][s] * y[r] * y[s];
                }
            }
        }
        let mut nl = vec![vec![0.0; n]; n];
        for i in 0..n {
            for a in 0..n {
                nl[i][a] = (0..n).map(|k| gamma[i][a][k] * y[k] - c_up[i][a][k] * gyy[k]).sum();
            }
        }
        let mut chern = gamma.clone();
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        let mut t = 0.0;
                        for m in 0..n {
                            t += c[i][a][m] * nl[m][b] - c[a][b][m] * nl[m][i] + c[b][i][m] * nl[m][a];
                        }
                        s += g_inv[l][i] * t;
                    }
                    chern[l][a][b] -= s;
                }
            }
        }
        let a: T3 = c
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(|v| f * v).collect()).collect())
            .collect();
        let (sigma, a_dot) = if full {
            let (s, h) = sigma_jets(f2, &fx, y)?;
            let mut ad = t3(n);
            for i in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        ad[i][a][b] = 0.5 * h[i][a][b] - chern[i][a][b];
                    }
                }
            }
            (Some(s), Some(ad))
        } else {
            (None, None)
        };
        Ok(GeometryEval {
            x: x.to_vec(),
            y: y.to_vec(),
            f,
            ell,
            g,
            g_inv,
            condition,
            c,
            c_up,
            a,
            dg,
            gamma,
            n: nl,
            chern,
            sigma,
            a_dot,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.g[i][j] * u[i] * v[j]).sum::<f64>())
            .sum()
    }
}

/// `sigma` and its y-Hessian. Euler's relations for the 2-homogeneous F^2
/// give `sigma^i = g^is ((1/2) F^2_{x^k y^s} y^k - (1/2) F^2_{x^s})`, which
/// needs one x- and three y-derivatives instead of four.
fn sigma_jets(f2: &Jet, fx: &[Jet], y: &[f64]) -> Result<(Vec<f64>, T3)> {
    let n = y.len();
    let gj: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| f2.partial(i).partial(j).scale(0.5)).collect())
        .collect();
    let gi = invert_jet_matrix(&gj).ok_or_else(|| Error::Singular("metric jet".into()))?;
    let vars = Jet::variables(y, 2);
    let p: Vec<Jet> = (0..n)
        .map(|s| {
            let mut t = fx[s].truncate(2).scale(-0.5);
            for k in 0..n {
                t += fx[k].partial(s).truncate(2) * vars[k] * 0.5;
            }
            t
        })
        .collect();
    let mut sigma = vec![0.0; n];
    let mut hess = t3(n);
    for i in 0..n {
        let mut si = Jet::zero(n, 2);
        for s in 0..n {
            si += gi[i][s] * p[s];
        }
        sigma[i] = si.value();
        hess[i] = si.hessian();
    }
    Ok((sigma, hess))
}

/// Steps for differencing the Chern symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub hx: f64,
    pub hy: f64,
}

impl Steps {
    /// `1e-3` times the chart scale in x, `1e-2 |y|` in y.
    pub fn default_for(src: &dyn DerivativeSource, y: &[f64]) -> Steps {
        Steps {
            hx: 1e-3 * src.length_scale(),
            hy: 1e-2 * euclid(y),
        }
    }
}

const STENCIL: [(f64, f64); 4] = [
    (-2.0, 1.0 / 12.0),
    (-1.0, -8.0 / 12.0),
    (1.0, 8.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

fn difference_chern(src: &dyn DerivativeSource, x: &[f64], y: &[f64], axis: usize, in_y: bool, h: f64) -> Result<T3> {
    let n = x.len();
    let mut d = t3(n);
    for (s, w) in STENCIL {
        let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
        if in_y {
            ys[axis] += s * h;
        } else {
            xs[axis] += s * h;
        }
        let ch = GeometryEval::connection_only(src, &xs, &ys)?.chern;
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    d[i][a][b] += w * ch[i][a][b] / h;
                }
            }
        }
    }
    Ok(d)
}

/// hh-, hv- and vv-curvature of the Chern connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub geometry: GeometryEval,
    pub r_mixed: T4,
    pub r_low: T4,
    /// `P_j^i_kl = -F dGamma^i_jk / dy^l`, laid out `[j][i][k][l]`.
    pub p: T4,
    /// Identically zero.
    pub q: T4,
}

pub fn curvature(src: &dyn DerivativeSource, x: &[f64], y: &[f64], steps: Option<Steps>) -> Result<Curvature> {
    let steps = steps.unwrap_or_else(|| Steps::default_for(src, y));
    if !(steps.hx > 0.0 && steps.hy > 0.0) {
        return Err(Error::StepUnderflow(format!("{steps:?}")));
    }
    let geo = GeometryEval::connection_only(src, x, y)?;
    let n = geo.dim();
    let dx: Vec<T3> = (0..n)
        .map(|k| difference_chern(src, x, y, k, false, steps.hx))
        .collect::<Result<_>>()?;
    let dy: Vec<T3> = (0..n)
        .map(|m| difference_chern(src, x, y, m, true, steps.hy))
        .collect::<Result<_>>()?;
    // delta Gamma^i_ab / delta x^k, stored [k][i][a][b]
    let mut hd = t4(n);
    for k in 0..n {
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    hd[k][i][a][b] = dx[k][i][a][b] - (0..n).map(|m| geo.n[m][k] * dy[m][i][a][b]).sum::<f64>();
                }
            }
        }
    }
    let ch = &geo.chern;
    let mut r_mixed = t4(n);
    let mut p = t4(n);
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let quad: f64 = (0..n)
                        .map(|h| ch[i][h][k] * ch[h][j][l] - ch[i][h][l] * ch[h][j][k])
                        .sum();
                    r_mixed[j][i][k][l] = hd[k][i][j][l] - hd[l][i][j][k] + quad;
                    p[j][i][k][l] = -geo.f * dy[l][i][j][k];
                }
            }
        }
    }
    let r_low = lower(&r_mixed, &geo.g);
    Ok(Curvature {
        q: t4(n),
        r_mixed,
        r_low,
        p,
        geometry: geo,
    })
}

/// `R_jikl = g_im R_j^m_kl`.
pub fn lower(r_mixed: &T4, g: &Mat) -> T4 {
    let n = g.len();
    let mut out = t4(n);
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[j][i][k][l] = (0..n).map(|m| g[i][m] * r_mixed[j][m][k][l]).sum();
                }
            }
        }
    }
    out
}

pub fn hh_curvature(src: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<(T4, T4)> {
    let c = curvature(src, x, y, None)?;
    Ok((c.r_mixed, c.r_low))
}

pub fn hv_curvature(src: &dyn DerivativeSource, x: &[f64], y: &[f64]) -> Result<(T4, T4)> {
    let c = curvature(src, x, y, None)?;
    Ok((c.p, c.q))
}

/// A flagpole `y` and a transverse `z` at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// `z^i (y^j R_jikl y^l) z^k / (g(y,y) g(z,z) - g(y,z)^2)`.
pub fn flag_formula(r_low: &T4, g: &Mat, y: &[f64], z: &[f64]) -> Result<f64> {
    let n = g.len();
    let ip = |u: &[f64], v: &[f64]| -> f64 { (0..n).map(|i| (0..n).map(|j| g[i][j] * u[i] * v[j]).sum::<f64>()).sum() };
    let (yy, zz, yz) = (ip(y, y), ip(z, z), ip(y, z));
    let den = yy * zz - yz * yz;
    if !(den > 1e-12 * yy * zz) {
        return Err(Error::DegenerateFlag(den));
    }
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    num += z[i] * y[j] * r_low[j][i][k][l] * y[l] * z[k];
                }
            }
        }
    }
    Ok(num / den)
}

/// The flag with `F(y) = 1` and `z` made g-orthogonal to `y`.
pub fn normalize_flag(src: &dyn DerivativeSource, flag: &Flag) -> Result<Flag> {
    let f = src.f2(&flag.x, &flag.y)?.sqrt();
    if !(f > 0.0) {
        return Err(Error::DegenerateFlag(0.0));
    }
    let y: Vec<f64> = flag.y.iter().map(|v| v / f).collect();
    let geo = GeometryEval::connection_only(src, &flag.x, &y)?;
    let c = geo.inner(&y, &flag.z) / geo.inner(&y, &y);
    let z: Vec<f64> = flag.z.iter().zip(&y).map(|(a, b)| a - c * b).collect();
    let (zz, z0) = (geo.inner(&z, &z), geo.inner(&flag.z, &flag.z));
    if !(zz > 1e-12 * z0) {
        return Err(Error::DegenerateFlag(zz));
    }
    Ok(Flag {
        x: flag.x.clone(),
        y,
        z,
    })
}

pub fn flag_curvature(src: &dyn DerivativeSource, flag: &Flag) -> Result<f64> {
    let f = normalize_flag(src, flag)?;
    let c = curvature(src, &f.x, &f.y, None)?;
    flag_formula(&c.r_low, &c.geometry.g, &f.y, &f.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    Chern,
    Cartan,
    Hashiguchi,
    Berwald,
}

impl std::str::FromStr for ConnectionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ConnectionKind> {
        match s {
            "chern" => Ok(ConnectionKind::Chern),
            "cartan" => Ok(ConnectionKind::Cartan),
            "hashiguchi" => Ok(ConnectionKind::Hashiguchi),
            "berwald" => Ok(ConnectionKind::Berwald),
            _ => Err(Error::Invalid(format!("connection {s}"))),
        }
    }
}

/// `omega_j^i = dx[i][j][k] dx^k + dy[i][j][k] delta y^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub dx: T3,
    pub dy: T3,
}

pub fn connection_forms(geo: &GeometryEval, which: ConnectionKind) -> Result<ConnectionCoefficients> {
    let n = geo.dim();
    let with_a_dot = || -> Result<T3> {
        let ad = geo
            .a_dot
            .as_ref()
            .ok_or_else(|| Error::Invalid("A-dot needs fourth y-derivatives".into()))?;
        let mut s = geo.chern.clone();
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    s[i][a][b] += ad[i][a][b];
                }
            }
        }
        Ok(s)
    };
    Ok(match which {
        ConnectionKind::Chern => ConnectionCoefficients {
            dx: geo.chern.clone(),
            dy: t3(n),
        },
        ConnectionKind::Cartan => ConnectionCoefficients {
            dx: geo.chern.clone(),
            dy: geo.c_up.clone(),
        },
        ConnectionKind::Hashiguchi => ConnectionCoefficients {
            dx: with_a_dot()?,
            dy: geo.c_up.clone(),
        },
        ConnectionKind::Berwald => ConnectionCoefficients {
            dx: with_a_dot()?,
            dy: t3(n),
        },
    })
}

/// A vector field on the slit tangent bundle: `X = xh^i d/dx^i + xv^j d/dy^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub xh: Vec<f64>,
    pub xv: Vec<f64>,
}

/// `nabla_X E` for a section `E(x, y)` of the pulled-back bundle, with the
/// derivatives of E taken by five-point differences.
pub fn covariant_derivative(
    src: &dyn DerivativeSource,
    x: &[f64],
    y: &[f64],
    v: &TangentVector,
    e: &dyn Fn(&[f64], &[f64]) -> Vec<f64>,
    which: ConnectionKind,
) -> Result<Vec<f64>> {
    let geo = match which {
        ConnectionKind::Chern | ConnectionKind::Cartan => GeometryEval::connection_only(src, x, y)?,
        _ => GeometryEval::at(src, x, y)?,
    };
    let conn = connection_forms(&geo, which)?;
    let steps = Steps::default_for(src, y);
    let n = geo.dim();
    let e0 = e(x, y);
    let mut out = vec![0.0; n];
    for i in 0..n {
        for (coef, in_y, h) in [(v.xh[i], false, steps.hx), (v.xv[i], true, steps.hy)] {
            if coef == 0.0 {
                continue;
            }
            for (s, w) in STENCIL {
                let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
                if in_y {
                    ys[i] += s * h;
                } else {
                    xs[i] += s * h;
                }
                for (o, val) in out.iter_mut().zip(e(&xs, &ys)) {
                    *o += coef * w * val / h;
                }
            }
        }
    }
    // delta y^l (X) = xv^l + N^l_i xh^i
    let dyx: Vec<f64> = (0..n)
        .map(|l| v.xv[l] + (0..n).map(|i| geo.n[l][i] * v.xh[i]).sum::<f64>())
        .collect();
    for (k, o) in out.iter_mut().enumerate() {
        for j in 0..n {
            for i in 0..n {
                *o += e0[j] * (conn.dx[k][j][i] * v.xh[i] + conn.dy[k][j][i] * dyx[i]);
            }
        }
    }
    Ok(out)
}

/// Christoffel symbols and curvature of a metric given as x-jets.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurvature {
    pub g: Mat,
    pub christoffel: T3,
    pub r_mixed: T4,
    pub r_low: T4,
}

/// From metric entries as x-jets of order at least 2.
pub fn metric_curvature_from_jets(g: &[Vec<Jet>]) -> Result<MetricCurvature> {
    let n = g.len();
    let g1: Vec<Vec<Jet>> = g.iter().map(|r| r.iter().map(|j| j.truncate(1)).collect()).collect();
    let gi = invert_jet_matrix(&g1).ok_or_else(|| Error::Singular("metric".into()))?;
    let dg: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|k| (0..n).map(|i| (0..n).map(|j| g[i][j].partial(k)).collect()).collect())
        .collect();
    let z = Jet::zero(n, 1);
    let mut gam = vec![vec![vec![z; n]; n]; n];
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = z;
                for m in 0..n {
                    s += gi[i][m] * (dg[b][m][a] - dg[m][a][b] + dg[a][b][m]) * 0.5;
                }
                gam[i][a][b] = s;
            }
        }
    }
    let mut r_mixed = t4(n);
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = gam[i][j][l].derivative(&unit(n, k)) - gam[i][j][k].derivative(&unit(n, l));
                    for h in 0..n {
                        v += gam[i][h][k].value() * gam[h][j][l].value() - gam[i][h][l].value() * gam[h][j][k].value();
                    }
                    r_mixed[j][i][k][l] = v;
                }
            }
        }
    }
    let gv: Mat = g.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect();
    let christoffel = gam
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect())
        .collect();
    Ok(MetricCurvature {
        r_low: lower(&r_mixed, &gv),
        g: gv,
        christoffel,
        r_mixed,
    })
}

/// Levi-Civita connection and curvature of an analytic metric.
pub fn metric_curvature(metric: &dyn Metric, x: &[f64]) -> Result<MetricCurvature> {
    metric_curvature_from_jets(&metric.g_jet(x, 2))
}

/// Sectional curvature of the plane spanned by `y`, `z`.
pub fn sectional_curvature(metric: &dyn Metric, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let m = metric_curvature(metric, x)?;
    flag_formula(&m.r_low, &m.g, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{lookup, Poincare, PolyMetric};
    use crate::field::Analytic;
    use crate::horizontal::{SmoothingOptions, SmoothingPlan};

    fn analytic(name: &str) -> Analytic {
        Analytic::new(lookup(name).unwrap().field.clone())
    }

    fn max_abs3(t: &T3) -> f64 {
        t.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn max_abs4(t: &T4) -> f64 {
        t.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn poincare_oracle_is_minus_one() {
        for x in [[0.0, 1.0], [0.3, 0.7]] {
            let k = sectional_curvature(&Poincare, &x, &[1.0, 0.2], &[0.0, 1.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn riemannian_reduction() {
        let src = analytic("riemannian_smooth_poly");
        let x = [0.3, -0.2];
        let y = [0.7, 0.5];
        let geo = GeometryEval::at(&src, &x, &y).unwrap();
        assert!(max_abs3(&geo.c) < 1e-8);
        let lc = metric_curvature(&PolyMetric, &x).unwrap();
        for i in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert!((geo.chern[i][a][b] - lc.christoffel[i][a][b]).abs() < 1e-10);
                    assert!((geo.chern[i][a][b] - geo.chern[i][b][a]).abs() < 1e-12);
                }
                let ny: f64 = (0..2).map(|k| geo.gamma[i][a][k] * y[k]).sum();
                assert!((geo.n[i][a] - ny).abs() < 1e-10);
            }
        }
        assert!(max_abs3(geo.a_dot.as_ref().unwrap()) < 1e-9);
        let b = connection_forms(&geo, ConnectionKind::Berwald).unwrap();
        let h = connection_forms(&geo, ConnectionKind::Hashiguchi).unwrap();
        assert!(max_abs3(&h.dy) < 1e-8);
        for i in 0..2 {
            for a in 0..2 {
                for k in 0..2 {
                    let expect = geo.chern[i][a][k] + geo.a_dot.as_ref().unwrap()[i][a][k];
                    assert_eq!(b.dx[i][a][k], expect);
                }
            }
        }
        let c = curvature(&src, &x, &y, None).unwrap();
        assert!(max_abs4(&c.p) < 1e-5);
        for j in 0..2 {
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert!((c.r_low[j][i][k][l] - lc.r_low[j][i][k][l]).abs() < 1e-6);
                        assert!((c.r_mixed[j][i][k][l] + c.r_mixed[j][i][l][k]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn minkowski_norm_is_flat() {
        let src = analytic("randers_2d");
        let x = [0.1, 0.2];
        let y = [0.6, -0.4];
        let geo = GeometryEval::at(&src, &x, &y).unwrap();
        assert_eq!(max_abs3(&geo.gamma), 0.0);
        assert_eq!(max_abs3(&geo.chern), 0.0);
        assert!(max_abs3(&geo.c) > 1e-3);
        for i in 0..2 {
            for j in 0..2 {
                let cy: f64 = (0..2).map(|k| geo.c[i][j][k] * y[k]).sum();
                assert!(cy.abs() < 1e-12);
                for k in 0..2 {
                    assert!((geo.c[i][j][k] - geo.c[k][i][j]).abs() < 1e-12);
                }
            }
        }
        let k = flag_curvature(
            &src,
            &Flag {
                x: x.to_vec(),
                y: y.to_vec(),
                z: vec![0.1, 1.0],
            },
        )
        .unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn poincare_flag_curvature_and_invariance() {
        let src = analytic("poincare_half_plane");
        let x = vec![0.1, 0.9];
        let y = vec![0.8, 0.3];
        let k = |z: Vec<f64>| {
            flag_curvature(
                &src,
                &Flag {
                    x: x.clone(),
                    y: y.clone(),
                    z,
                },
            )
            .unwrap()
        };
        let k0 = k(vec![0.0, 1.0]);
        assert!((k0 + 1.0).abs() < 1e-6, "{k0}");
        assert!((k(vec![0.56, 1.21]) - k0).abs() < 1e-10);
        assert!(matches!(
            flag_curvature(
                &src,
                &Flag {
                    x: x.clone(),
                    y: y.clone(),
                    z: vec![1.6, 0.6]
                }
            ),
            Err(Error::DegenerateFlag(_))
        ));
    }

    #[test]
    fn covariant_derivative_examples() {
        let e = |_x: &[f64], _y: &[f64]| vec![1.0, 0.0];
        let src = analytic("euclidean");
        let v = TangentVector {
            xh: vec![0.3, 0.4],
            xv: vec![1.0, -1.0],
        };
        let d = covariant_derivative(&src, &[0.0, 0.0], &[1.0, 0.0], &v, &e, ConnectionKind::Chern).unwrap();
        assert!(d.iter().all(|c| c.abs() < 1e-12));
        // on a Riemannian input: d E^k + Gamma^k_ji E^j X^i with Levi-Civita symbols
        let src = analytic("riemannian_smooth_poly");
        let field = |x: &[f64], y: &[f64]| vec![x[0] * x[1] + y[0], 1.0 + x[0] * x[0]];
        let (x, y) = ([0.2, -0.3], [0.5, 0.5]);
        let lc = metric_curvature(&PolyMetric, &x).unwrap().christoffel;
        let e0 = field(&x, &y);
        let de = [[x[1], x[0]], [2.0 * x[0], 0.0]];
        let mut expect = vec![0.0; 2];
        for k in 0..2 {
            expect[k] = (0..2).map(|i| v.xh[i] * de[k][i]).sum::<f64>() + v.xv[k] * [1.0, 0.0][k];
            for j in 0..2 {
                for i in 0..2 {
                    expect[k] += lc[k][j][i] * e0[j] * v.xh[i];
                }
            }
        }
        for which in [ConnectionKind::Chern, ConnectionKind::Cartan, ConnectionKind::Berwald] {
            let got = covariant_derivative(&src, &x, &y, &v, &field, which).unwrap();
            for k in 0..2 {
                assert!((got[k] - expect[k]).abs() < 1e-8, "{which:?} {got:?} {expect:?}");
            }
        }
        let v2 = TangentVector {
            xh: v.xh.iter().map(|c| 2.5 * c).collect(),
            xv: v.xv.iter().map(|c| 2.5 * c).collect(),
        };
        let a = covariant_derivative(&src, &x, &y, &v, &field, ConnectionKind::Chern).unwrap();
        let b = covariant_derivative(&src, &x, &y, &v2, &field, ConnectionKind::Chern).unwrap();
        for k in 0..2 {
            assert!((b[k] - 2.5 * a[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_poincare_curvature_is_close() {
        let e = lookup("poincare_half_plane").unwrap();
        let plan = SmoothingPlan::new(e.field.clone(), e.charts.clone(), SmoothingOptions::for_dim(2)).unwrap();
        let s = plan.at(0.25).unwrap();
        let k = flag_curvature(
            &s,
            &Flag {
                x: vec![0.0, 1.0],
                y: vec![1.0, 0.0],
                z: vec![0.0, 1.0],
            },
        )
        .unwrap();
        assert!((k + 1.0).abs() < 5e-3, "{k}");
    }
}
