//! Central finite differences with one Richardson level.

use crate::error::{Error, Result};

const W1: [(f64, f64); 4] = [
    (-2.0, 1.0 / 12.0),
    (-1.0, -8.0 / 12.0),
    (1.0, 8.0 / 12.0),
    (2.0, -1.0 / 12.0),
];
const W2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

/// Five-point stencil for a first derivative of a vector-valued function.
pub fn first_derivative_vec(f: &dyn Fn(f64) -> Vec<f64>, h: f64) -> Vec<f64> {
    let mut out: Option<Vec<f64>> = None;
    for (s, w) in W1 {
        let v = f(s * h);
        let acc = out.get_or_insert_with(|| vec![0.0; v.len()]);
        for (a, b) in acc.iter_mut().zip(v) {
            *a += w * b / h;
        }
    }
    out.unwrap_or_default()
}

/// `D^alpha f(p)` by nested five-point stencils with step `h` per axis.
pub fn partial(f: &dyn Fn(&[f64]) -> f64, p: &[f64], alpha: &[usize], h: f64) -> Result<f64> {
    if !(h > 1e-8 * (1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs())))) {
        return Err(Error::StepUnderflow(format!("step {h:e} at {p:?}")));
    }
    partial_rec(f, p.to_vec(), alpha.to_vec(), h)
}

fn partial_rec(f: &dyn Fn(&[f64]) -> f64, p: Vec<f64>, mut alpha: Vec<usize>, h: f64) -> Result<f64> {
    let Some(i) = alpha.iter().position(|&a| a > 0) else {
        return Ok(f(&p));
    };
    let take = alpha[i].min(2);
    alpha[i] -= take;
    let stencil: &[(f64, f64)] = if take == 2 { &W2 } else { &W1 };
    let mut s = 0.0;
    for &(k, w) in stencil {
        let mut q = p.clone();
        q[i] += k * h;
        s += w * partial_rec(f, q, alpha.clone(), h)?;
    }
    Ok(s / h.powi(take as i32))
}

/// Richardson combination of step h and h/2 for a fourth-order stencil.
pub fn partial_richardson(f: &dyn Fn(&[f64]) -> f64, p: &[f64], alpha: &[usize], h: f64) -> Result<f64> {
    let a = partial(f, p, alpha, h)?;
    let b = partial(f, p, alpha, 0.5 * h)?;
    Ok((16.0 * b - a) / 15.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_partials() {
        let f = |p: &[f64]| (p[0] * 1.3).sin() * (p[1] * p[1]).exp();
        let p = [0.4, 0.3];
        let exact = 1.3 * (0.52f64).cos() * 2.0 * 0.3 * 0.09f64.exp();
        let v = partial_richardson(&f, &p, &[1, 1], 1e-2).unwrap();
        assert!((v - exact).abs() < 1e-9, "{v} {exact}");
        let v = partial(&f, &p, &[3, 0], 1e-2).unwrap();
        let exact = -1.3f64.powi(3) * 0.52f64.cos() * 0.09f64.exp();
        assert!((v - exact).abs() < 1e-4);
        assert!(partial(&f, &p, &[1, 0], 0.0).is_err());
    }
}
