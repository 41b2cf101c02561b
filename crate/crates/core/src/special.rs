//! Spherical Bessel functions and spherical harmonics at φ = 0.

use std::f64::consts::PI;

/// j_0(x) .. j_lmax(x).
pub fn spherical_bessel(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    let ax = x.abs();
    if ax < 1e-6 {
        // leading series term
        let mut df = 1.0;
        for (l, o) in out.iter_mut().enumerate() {
            if l > 0 {
                df *= (2 * l + 1) as f64;
            }
            *o = ax.powi(l as i32) / df * (1.0 - ax * ax / (2.0 * (2 * l + 3) as f64));
        }
    } else if ax > lmax as f64 {
        out[0] = ax.sin() / ax;
        if lmax >= 1 {
            out[1] = ax.sin() / (ax * ax) - ax.cos() / ax;
        }
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / ax * out[l] - out[l - 1];
        }
    } else {
        // Miller's downward recurrence
        let start = lmax + 20 + (40.0 * (lmax as f64 + ax)).sqrt() as usize;
        let mut jp1 = 0.0;
        let mut j = 1e-300;
        for l in (1..=start).rev() {
            let jm1 = (2 * l + 1) as f64 / ax * j - jp1;
            jp1 = j;
            j = jm1;
            if l - 1 <= lmax {
                out[l - 1] = j;
            }
            if j.abs() > 1e250 {
                let s = 1e-250;
                j *= s;
                jp1 *= s;
                for o in out.iter_mut() {
                    *o *= s;
                }
            }
        }
        let j0 = ax.sin() / ax;
        let j1 = ax.sin() / (ax * ax) - ax.cos() / ax;
        let scale = if j0.abs() > j1.abs() || lmax == 0 {
            j0 / out[0]
        } else {
            j1 / out[1]
        };
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
    if x < 0.0 {
        for (l, o) in out.iter_mut().enumerate() {
            if l % 2 == 1 {
                *o = -*o;
            }
        }
    }
    out
}

/// Normalized Y_lm(θ, 0) for m ≥ 0 with the Condon-Shortley phase, for all
/// l in m..=lmax; index 0 corresponds to l = m.
pub fn ylm_column(lmax: usize, m: usize, cos_theta: f64) -> Vec<f64> {
    if m > lmax {
        return Vec::new();
    }
    let x = cos_theta;
    let s = (1.0 - x * x).max(0.0).sqrt();
    // normalized P_m^m
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    let mut out = vec![0.0; lmax - m + 1];
    out[0] = pmm;
    if lmax > m {
        out[1] = x * ((2 * m + 3) as f64).sqrt() * pmm;
    }
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        out[l - m] = a * (x * out[l - m - 1] - b * out[l - m - 2]);
    }
    out
}

/// Y_lm(θ, 0) for signed m.
pub fn ylm(l: usize, m: i32, cos_theta: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return 0.0;
    }
    let v = ylm_column(l, am, cos_theta)[l - am];
    if m < 0 && am % 2 == 1 {
        -v
    } else {
        v
    }
}
