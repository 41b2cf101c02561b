//! Focal-volume integration for a Gaussian beam. A single-atom signal S(F)
//! is integrated over F(ρ, z) = F₀(z) exp(-ρ²/w(z)²) with
//! F₀(z) = 4 n_phot ln2 / (π w(z)²).
//!
//! Lengths can be in any unit as long as fluences use the same one.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::quad::GaussRule;

/// Inner cutoff: F ≥ F₀ e^{-U_MAX²}.
const U_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProfile {
    pub w0: f64,
    /// Rayleigh length.
    pub z0: f64,
    pub n_phot: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl BeamProfile {
    /// Axial acceptance defaults to ±3 z₀.
    pub fn new(w0: f64, z0: f64, n_phot: f64, z_range: Option<(f64, f64)>) -> Result<Self> {
        if !(w0 > 0.0 && z0 > 0.0 && n_phot > 0.0) {
            return Err(Error::Config("beam needs w0 > 0, z0 > 0 and n_phot > 0".into()));
        }
        let (z_min, z_max) = z_range.unwrap_or((-3.0 * z0, 3.0 * z0));
        if !(z_max > z_min) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::Config("axial acceptance needs z_min < z_max".into()));
        }
        Ok(Self { w0, z0, n_phot, z_min, z_max })
    }

    pub fn w2(&self, z: f64) -> f64 {
        self.w0 * self.w0 * (1.0 + (z / self.z0).powi(2))
    }

    pub fn peak_fluence(&self, z: f64) -> f64 {
        4.0 * self.n_phot * LN_2 / (PI * self.w2(z))
    }

    pub fn fluence(&self, rho: f64, z: f64) -> f64 {
        self.peak_fluence(z) * (-rho * rho / self.w2(z)).exp()
    }

    /// Positive branch ρ(F, z) = w(z) √(ln(F₀(z)/F)) for 0 < F ≤ F₀(z).
    pub fn rho(&self, f: f64, z: f64) -> Option<f64> {
        let f0 = self.peak_fluence(z);
        (f > 0.0 && f <= f0).then(|| (self.w2(z) * (f0 / f).ln()).sqrt())
    }

    /// ρ |∂ρ/∂F| = w(z)² / (2F).
    pub fn jacobian_weight(&self, f: f64, z: f64) -> f64 {
        self.w2(z) / (2.0 * f)
    }

    /// Largest fluence in the acceptance.
    pub fn max_fluence(&self) -> f64 {
        let z = 0.0f64.clamp(self.z_min, self.z_max);
        self.peak_fluence(z)
    }
}

/// A single-atom signal as a function of fluence.
pub trait Signal: Sync {
    fn value(&self, f: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64 + Sync> Signal for F {
    fn value(&self, f: f64) -> Result<f64> {
        Ok(self(f))
    }
}

/// Tabulated (F, S) pairs, monotone cubic in between. Below the first
/// point the curve continues as a power law with the slope of the first
/// two points; above the last point it is undefined.
#[derive(Debug, Clone)]
pub struct TabulatedSignal {
    curve: Pchip,
    low: (f64, f64, f64),
}

impl TabulatedSignal {
    pub fn new(f: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if f.len() < 2 || f.len() != s.len() {
            return Err(Error::Config("signal table needs at least two (F, S) rows".into()));
        }
        if f.iter().any(|v| !(*v >= 0.0)) || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("signal table needs F ≥ 0 and finite S".into()));
        }
        let slope = if f[0] > 0.0 && s[0] > 0.0 && s[1] > 0.0 { (s[1] / s[0]).ln() / (f[1] / f[0]).ln() } else { 1.0 };
        let low = (f[0], s[0], slope);
        Ok(Self { curve: Pchip::new(f, s)?, low })
    }

    /// Whitespace- or comma-separated `F S` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut f, mut s) = (Vec::new(), Vec::new());
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse { line: k + 1, msg: format!("expected two columns, found {}", cols.len()) });
            }
            let num = |c: &str| c.parse::<f64>().map_err(|e| Error::Parse { line: k + 1, msg: format!("{c}: {e}") });
            f.push(num(cols[0])?);
            s.push(num(cols[1])?);
        }
        Self::new(f, s)
    }

    pub fn f_max(&self) -> f64 {
        self.curve.x_max()
    }
}

impl Signal for TabulatedSignal {
    fn value(&self, f: f64) -> Result<f64> {
        let (f_lo, s_lo, k) = self.low;
        if f > self.curve.x_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("signal requested at F = {f:e} beyond the table end {:e}", self.curve.x_max())));
        }
        if f < f_lo {
            return Ok(if f_lo > 0.0 { s_lo * (f / f_lo).powf(k) } else { s_lo });
        }
        Ok(self.curve.eval(f.min(self.curve.x_max())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeIntegration {
    /// Gauss-Legendre panels along z and in u = √(ln(F₀/F)).
    pub z_panels: usize,
    pub u_panels: usize,
}

impl Default for VolumeIntegration {
    fn default() -> Self {
        Self { z_panels: 24, u_panels: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeSignal {
    pub value: f64,
    /// Same integral with both panel counts doubled.
    pub refined: f64,
}

impl VolumeSignal {
    pub fn rel_change(&self) -> f64 {
        if self.refined == 0.0 {
            (self.value - self.refined).abs()
        } else {
            (self.value / self.refined - 1.0).abs()
        }
    }
}

/// 2π ∫ S(F) ρ|∂ρ/∂F| dF over one z slice, with F = F₀ e^{-u²} so that
/// the integrand becomes 2π w² u S(F₀ e^{-u²}) du.
pub fn slice_signal(signal: &dyn Signal, beam: &BeamProfile, z: f64, u_panels: usize) -> Result<f64> {
    let rule = GaussRule::new(20);
    let f0 = beam.peak_fluence(z);
    let (us, ws) = rule.composite_nodes(0.0, U_MAX, u_panels);
    let mut acc = 0.0;
    for (u, w) in us.iter().zip(&ws) {
        acc += w * u * signal.value(f0 * (-u * u).exp())?;
    }
    Ok(2.0 * PI * beam.w2(z) * acc)
}

fn integrate(signal: &dyn Signal, beam: &BeamProfile, cfg: VolumeIntegration) -> Result<f64> {
    let (zs, ws) = GaussRule::new(20).composite_nodes(beam.z_min, beam.z_max, cfg.z_panels);
    let slices: Vec<f64> =
        zs.par_iter().map(|&z| slice_signal(signal, beam, z, cfg.u_panels)).collect::<Result<_>>()?;
    // fixed-order reduction keeps the result independent of thread count
    Ok(slices.iter().zip(&ws).map(|(s, w)| s * w).sum())
}

/// ∫ S(F) dV over the acceptance via the (ρ, z) → (F, z) change of variables.
pub fn volume_signal(signal: &dyn Signal, beam: &BeamProfile, cfg: VolumeIntegration) -> Result<VolumeSignal> {
    let value = integrate(signal, beam, cfg)?;
    let refined = integrate(signal, beam, VolumeIntegration { z_panels: 2 * cfg.z_panels, u_panels: 2 * cfg.u_panels })?;
    Ok(VolumeSignal { value, refined })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of ∫ S dV: z uniform, ρ drawn with density ∝ F so
/// each sample carries S/F times the slice integral 4 n_phot ln2.
pub fn monte_carlo_volume(signal: &dyn Signal, beam: &BeamProfile, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::Config("Monte Carlo needs at least two samples".into()));
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let len = beam.z_max - beam.z_min;
    let norm = 4.0 * beam.n_phot * LN_2 * len;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let z = beam.z_min + len * rng.gen::<f64>();
        // 1 - U in (0, 1] avoids ln 0
        let e = -(1.0 - rng.gen::<f64>()).ln();
        let f = beam.peak_fluence(z) * (-e).exp();
        let x = signal.value(f)? / f * norm;
        sum += x;
        sum2 += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(MonteCarloEstimate { value: mean, std_error: (var / n).sqrt() })
}
