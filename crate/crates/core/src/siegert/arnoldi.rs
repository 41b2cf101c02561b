//! Shift-and-invert Arnoldi with explicit restarts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiConfig {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Relative residual ‖Hx - λx‖ / (max(1,|λ|)‖x‖).
    pub tol: f64,
}

impl Default for ArnoldiConfig {
    fn default() -> Self {
        Self { krylov_dim: 40, max_restarts: 30, tol: 1e-9 }
    }
}

fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenpairs of an upper-triangular matrix by back substitution.
fn triangular_eigenvectors(t: &DMatrix<Complex64>) -> Vec<(Complex64, Vec<Complex64>)> {
    let m = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    (0..m)
        .map(|k| {
            let lam = t[(k, k)];
            let mut y = vec![ZERO; m];
            y[k] = Complex64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let mut s = ZERO;
                for p in j + 1..=k {
                    s += t[(j, p)] * y[p];
                }
                let mut d = t[(j, j)] - lam;
                if d.norm() < 1e-14 * scale {
                    d = Complex64::new(1e-14 * scale, 0.0);
                }
                y[j] = -s / d;
            }
            (lam, y)
        })
        .collect()
}

/// Ritz pair from the last Arnoldi cycle.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

/// The `n_wanted` eigenpairs of H nearest σ, using `solve` = (H - σ)⁻¹ and
/// `apply` = H for residuals.
pub fn shift_invert_arnoldi(
    solve: impl Fn(&[Complex64]) -> Vec<Complex64>,
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    sigma: Complex64,
    start: &[Complex64],
    n_wanted: usize,
    cfg: &ArnoldiConfig,
) -> Result<Vec<RitzPair>> {
    let n = start.len();
    let m_max = cfg.krylov_dim.max(n_wanted + 2).min(n);
    let mut v0 = start.to_vec();
    let mut last_res = Vec::new();
    for _restart in 0..=cfg.max_restarts {
        let b0 = norm(&v0);
        if !(b0 > 0.0) || !b0.is_finite() {
            return Err(Error::Numerical("Arnoldi start vector is zero or not finite".into()));
        }
        let mut q: Vec<Vec<Complex64>> = vec![v0.iter().map(|z| z / b0).collect()];
        let mut hm = DMatrix::<Complex64>::zeros(m_max + 1, m_max);
        let mut m = 0;
        for k in 0..m_max {
            let mut w = solve(&q[k]);
            let scale = norm(&w);
            for _pass in 0..2 {
                for (j, qj) in q.iter().enumerate() {
                    let c = hdot(qj, &w);
                    hm[(j, k)] += c;
                    for i in 0..n {
                        w[i] -= qj[i] * c;
                    }
                }
            }
            m = k + 1;
            let b = norm(&w);
            if k + 1 == m_max || b < 1e-13 * scale {
                break;
            }
            hm[(k + 1, k)] = Complex64::new(b, 0.0);
            q.push(w.iter().map(|z| z / b).collect());
        }
        let h = hm.view((0, 0), (m, m)).into_owned();
        let (qs, ts) = nalgebra::Schur::new(h).unpack();
        let mut pairs = triangular_eigenvectors(&ts);
        // largest |θ| ↔ nearest σ
        pairs.sort_by(|a, b| b.0.norm().partial_cmp(&a.0.norm()).unwrap());
        pairs.truncate(n_wanted.min(m));
        let mut out = Vec::new();
        let mut hx = vec![ZERO; n];
        for (theta, y) in pairs {
            let ys = &qs * nalgebra::DVector::from_vec(y);
            let mut x = vec![ZERO; n];
            for (qk, c) in q.iter().zip(ys.iter()) {
                for i in 0..n {
                    x[i] += qk[i] * c;
                }
            }
            let xn = norm(&x);
            x.iter_mut().for_each(|z| *z /= xn);
            let lam = if theta.norm() > 0.0 { sigma + theta.inv() } else { Complex64::new(f64::INFINITY, 0.0) };
            apply(&x, &mut hx);
            let r: f64 = hx.iter().zip(&x).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt();
            let residual = r / lam.norm().max(1.0);
            out.push(RitzPair { value: lam, vector: x, residual });
        }
        last_res = out.iter().map(|p| p.residual).collect();
        if out.iter().all(|p| p.residual.is_finite() && p.residual < cfg.tol) {
            return Ok(out);
        }
        // restart from the sum of the unconverged wanted Ritz vectors plus the converged ones
        let mut next = vec![ZERO; n];
        for p in &out {
            let w = if p.residual < cfg.tol { 0.1 } else { 1.0 };
            for i in 0..n {
                next[i] += p.vector[i] * w;
            }
        }
        v0 = next;
    }
    Err(Error::ArnoldiConvergence { residuals: last_res })
}
