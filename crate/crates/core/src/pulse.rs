//! Gaussian laser pulses: F(t) = F0 exp(-2 ln2 t²/τ²) cos(ωt + φ) and the
//! vector potential A(t) = -∫_{-∞}^t F.

use std::f64::consts::LN_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::GaussRule;
use crate::units;

/// Envelope cutoff in units of τ; exp(-2 ln2 · 36) ≈ 2e-22.
const SPAN: f64 = 6.0;

#[derive(Debug, Clone)]
pub struct Pulse {
    pub f0: f64,
    pub omega: f64,
    pub tau: f64,
    pub phase: f64,
    table: Arc<ATable>,
}

#[derive(Debug, Clone)]
struct ATable {
    t0: f64,
    h: f64,
    a: Vec<f64>,
    rule: GaussRule,
}

impl Pulse {
    /// Peak field `f0`, carrier frequency `omega`, intensity FWHM `tau`, all a.u.
    pub fn new(f0: f64, omega: f64, tau: f64, phase: f64) -> Result<Self> {
        if !(f0 >= 0.0) || !(omega > 0.0) || !(tau > 0.0) || !phase.is_finite() {
            return Err(Error::Config(format!(
                "pulse needs F0 ≥ 0, ω > 0, τ > 0 (got {f0}, {omega}, {tau})"
            )));
        }
        let mut p = Self { f0, omega, tau, phase, table: Arc::new(ATable { t0: 0.0, h: 1.0, a: vec![], rule: GaussRule::new(16) }) };
        p.table = Arc::new(p.build_table());
        Ok(p)
    }

    /// Lab parameters: peak intensity (W/cm²), photon energy (eV), FWHM (fs).
    pub fn from_lab(intensity_wcm2: f64, photon_ev: f64, fwhm_fs: f64, phase: f64) -> Result<Self> {
        Self::new(
            units::intensity_to_field(intensity_wcm2),
            units::ev_to_hartree(photon_ev),
            units::fs_to_au(fwhm_fs),
            phase,
        )
    }

    fn build_table(&self) -> ATable {
        let rule = GaussRule::new(16);
        let t0 = -SPAN * self.tau;
        let period = 2.0 * std::f64::consts::PI / self.omega;
        let h_target = (period.min(self.tau)) / 16.0;
        let n = ((2.0 * SPAN * self.tau) / h_target).ceil() as usize;
        let h = 2.0 * SPAN * self.tau / n as f64;
        let mut a = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        a.push(0.0);
        for k in 0..n {
            let lo = t0 + k as f64 * h;
            acc -= rule.integrate(lo, lo + h, |t| self.field(t));
            a.push(acc);
        }
        ATable { t0, h, a, rule }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.f0 * (-2.0 * LN_2 * t * t / (self.tau * self.tau)).exp()
    }

    pub fn field(&self, t: f64) -> f64 {
        self.envelope(t) * (self.omega * t + self.phase).cos()
    }

    pub fn vector_potential(&self, t: f64) -> f64 {
        let tb = &self.table;
        if self.f0 == 0.0 || t <= tb.t0 {
            return 0.0;
        }
        let n = tb.a.len() - 1;
        let k = (((t - tb.t0) / tb.h).floor() as usize).min(n);
        let tk = tb.t0 + k as f64 * tb.h;
        if k == n {
            return tb.a[n];
        }
        tb.a[k] - tb.rule.integrate(tk, t, |s| self.field(s))
    }

    /// Times outside which the field is negligible.
    pub fn support(&self) -> (f64, f64) {
        (-SPAN * self.tau, SPAN * self.tau)
    }

    /// Cycle-averaged peak intensity in a.u. (F0²; the conversion factor to
    /// W/cm² already contains the cycle average).
    pub fn peak_intensity_au(&self) -> f64 {
        self.f0 * self.f0
    }

    pub fn peak_intensity_wcm2(&self) -> f64 {
        units::field_to_intensity(self.f0)
    }

    /// Intensity FWHM bandwidth in hartree, from Δω·Δτ = 2.765 for the
    /// field spectrum convention used by the one-photon line.
    pub fn bandwidth(&self) -> f64 {
        2.765 / self.tau
    }

    /// ∫_{t0}^{t1} A dt and ∫_{t0}^{t1} A² dt by composite Simpson on
    /// doubling grids, refined until the Volkov phase p_max∫A + ½∫A² changes
    /// by less than `tol`.
    pub fn volkov_integrals(&self, t0: f64, t1: f64, p_max: f64, tol: f64) -> (f64, f64) {
        if self.f0 == 0.0 || t1 == t0 {
            return (0.0, 0.0);
        }
        let (lo, hi) = self.support();
        // outside the support A is constant
        let a_end = self.vector_potential(hi);
        let mut ia = 0.0;
        let mut ia2 = 0.0;
        let s0 = t0.max(lo);
        let s1 = t1.min(hi);
        if t1 > hi {
            let d = t1 - t0.max(hi);
            ia += a_end * d;
            ia2 += a_end * a_end * d;
        }
        if s1 > s0 {
            let period = 2.0 * std::f64::consts::PI / self.omega;
            let mut n = (((s1 - s0) / period * 8.0).ceil() as usize).max(8) * 2;
            let eval = |n: usize| {
                let h = (s1 - s0) / n as f64;
                let ys: Vec<f64> = (0..=n).map(|k| self.vector_potential(s0 + k as f64 * h)).collect();
                let y2: Vec<f64> = ys.iter().map(|v| v * v).collect();
                (crate::quad::simpson(h, &ys), crate::quad::simpson(h, &y2))
            };
            let mut prev = eval(n);
            for _ in 0..20 {
                n *= 2;
                let next = eval(n);
                let dphi = p_max * (next.0 - prev.0).abs() + 0.5 * (next.1 - prev.1).abs();
                prev = next;
                if dphi < tol {
                    break;
                }
            }
            ia += prev.0;
            ia2 += prev.1;
        }
        (ia, ia2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_is_minus_derivative_of_a() {
        let p = Pulse::new(0.05, 0.057, 300.0, 0.3).unwrap();
        for &t in &[-500.0, -100.0, 0.0, 37.3, 400.0] {
            let h = 1e-3;
            let d = (p.vector_potential(t + h) - p.vector_potential(t - h)) / (2.0 * h);
            assert!((d + p.field(t)).abs() < 1e-10, "t={t}");
        }
        assert_eq!(p.vector_potential(-1e5), 0.0);
    }

    #[test]
    fn residual_vector_potential_matches_fourier_component() {
        // A(∞) = -F0 √(π/a) exp(-ω²/4a) cos φ with a = 2 ln2/τ²
        let (f0, w, tau, phi) = (0.02, 0.03, 100.0, 0.4);
        let p = Pulse::new(f0, w, tau, phi).unwrap();
        let a = 2.0 * LN_2 / (tau * tau);
        let want = -f0 * (std::f64::consts::PI / a).sqrt() * (-w * w / (4.0 * a)).exp() * phi.cos();
        assert!((p.vector_potential(1e4) - want).abs() < 1e-12);
    }
}
