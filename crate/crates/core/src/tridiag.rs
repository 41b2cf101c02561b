//! Real symmetric tridiagonal eigenproblems: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the vectors.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e[k]` couples rows k and k+1).
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

pub enum Selection {
    /// Indices `0..k` in ascending order.
    Lowest(usize),
    /// All eigenvalues not above the bound.
    Below(f64),
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len());
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 0.0f64;
        for k in 0..self.d.len() {
            q = if k == 0 {
                self.d[0] - x
            } else {
                self.d[k] - x - self.e[k - 1] * self.e[k - 1] / q
            };
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let r = if k > 0 { self.e[k - 1].abs() } else { 0.0 }
                + if k + 1 < n { self.e[k].abs() } else { 0.0 };
            lo = lo.min(self.d[k] - r);
            hi = hi.max(self.d[k] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * mid.abs() {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.d.len();
        for k in 0..n {
            let mut s = self.d[k] * x[k];
            if k > 0 {
                s += self.e[k - 1] * x[k - 1];
            }
            if k + 1 < n {
                s += self.e[k] * x[k + 1];
            }
            y[k] = s;
        }
    }

    /// Eigenpairs for the selection, ascending. Vectors are unit-norm in the
    /// Euclidean sense. `tag` labels errors.
    pub fn eigenpairs(&self, sel: Selection, tag: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let count = match sel {
            Selection::Lowest(k) => k.min(self.len()),
            Selection::Below(b) => self.count_below(b),
        };
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs());
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
        for k in 0..count {
            let lambda = self.eigenvalue(k);
            let mut v = self.inverse_iteration(lambda, k, tag)?;
            // keep vectors of clustered eigenvalues orthogonal
            for (mu, u) in out.iter().rev() {
                if (lambda - mu).abs() > 1e-3 * scale.max(1.0) {
                    break;
                }
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
                normalize(&mut v);
            }
            let mut hv = vec![0.0; v.len()];
            self.matvec(&v, &mut hv);
            let rq: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
            out.push((rq, v));
        }
        Ok(out)
    }

    fn inverse_iteration(&self, lambda: f64, k: usize, tag: usize) -> Result<Vec<f64>> {
        let n = self.len();
        let shift = lambda + f64::EPSILON * lambda.abs().max(1e-300) * 4.0;
        let lu = TridiagLu::factor(self, shift);
        // deterministic start with some structure to avoid accidental orthogonality
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i * 7919 + k * 104729) % 1000) as f64 / 1000.0))
            .collect();
        normalize(&mut v);
        let mut hv = vec![0.0; n];
        for iter in 0..8 {
            lu.solve(&mut v);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::EigenConvergence { l: tag, iterations: iter + 1 });
            }
            normalize(&mut v);
            self.matvec(&v, &mut hv);
            let res: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if iter >= 1 && res <= 1e-9 * lambda.abs().max(1.0) {
                return Ok(v);
            }
        }
        self.matvec(&v, &mut hv);
        let res: f64 = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= 1e-6 * lambda.abs().max(1.0) {
            Ok(v)
        } else {
            Err(Error::EigenConvergence { l: tag, iterations: 8 })
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// LU factorization with partial pivoting of `T - shift`.
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.d.iter().map(|x| x - shift).collect();
        let mut dl = t.e.clone();
        let mut du = t.e.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.d.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
