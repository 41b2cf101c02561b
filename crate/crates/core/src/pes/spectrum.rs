//! Accumulation of spectral amplitudes and reduced spectra.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::volkov::{MomentumGrid, VolkovContribution};
use crate::error::{Error, Result};
use crate::units::HARTREE_EV;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Per-channel coherent sums Σ_n C_i(p, θ, t_n).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub grid: MomentumGrid,
    pub channels: Vec<Vec<Complex64>>,
}

impl SpectrumGrid {
    pub fn new(grid: MomentumGrid, n_channels: usize) -> Self {
        let n = grid.n_p() * grid.n_theta();
        Self { grid, channels: vec![vec![ZERO; n]; n_channels] }
    }

    /// C_i += Σ_j U_ij C_j(t_n), with U = 1 when `ion` is None.
    pub fn add(&mut self, c: &VolkovContribution, ion: Option<&DMatrix<Complex64>>) -> Result<()> {
        let n_ch = self.channels.len();
        if c.amplitudes.len() != n_ch || c.amplitudes.iter().any(|a| a.len() != self.channels[0].len()) {
            return Err(Error::Contract("contribution does not match the spectrum grid".into()));
        }
        match ion {
            None => {
                for (acc, a) in self.channels.iter_mut().zip(&c.amplitudes) {
                    acc.iter_mut().zip(a).for_each(|(x, y)| *x += y);
                }
            }
            Some(u) => {
                if u.nrows() != n_ch || u.ncols() != n_ch {
                    return Err(Error::Contract("ion propagator has the wrong size".into()));
                }
                for i in 0..n_ch {
                    for j in 0..n_ch {
                        let uij = u[(i, j)];
                        if uij == ZERO {
                            continue;
                        }
                        let (acc, a) = (&mut self.channels[i], &c.amplitudes[j]);
                        acc.iter_mut().zip(a).for_each(|(x, y)| *x += uij * y);
                    }
                }
            }
        }
        Ok(())
    }

    /// d²P/dE dΩ = p Σ_i |C_i|², stored as [j · n_θ + k].
    pub fn distribution(&self) -> Vec<f64> {
        let nt = self.grid.n_theta();
        (0..self.channels[0].len())
            .map(|idx| self.grid.p[idx / nt] * self.channels.iter().map(|c| c[idx].norm_sqr()).sum::<f64>())
            .collect()
    }

    pub fn channel_distribution(&self, c: usize) -> Vec<f64> {
        let nt = self.grid.n_theta();
        self.channels[c].iter().enumerate().map(|(idx, z)| self.grid.p[idx / nt] * z.norm_sqr()).collect()
    }

    pub fn energy_spectrum(&self) -> EnergySpectrum {
        angle_integrate(&self.grid, &self.distribution())
    }
}

/// Sums all contributions in the given order; `ions[n]` mixes the channels
/// of contribution n.
pub fn assemble_spectrum(
    grid: MomentumGrid,
    n_channels: usize,
    contributions: &[VolkovContribution],
    ions: Option<&[DMatrix<Complex64>]>,
) -> Result<SpectrumGrid> {
    if let Some(u) = ions {
        if u.len() != contributions.len() {
            return Err(Error::Contract("one ion propagator per contribution is required".into()));
        }
    }
    let mut s = SpectrumGrid::new(grid, n_channels);
    for (k, c) in contributions.iter().enumerate() {
        s.add(c, ions.map(|u| &u[k]))?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    /// Hartree.
    pub energy: Vec<f64>,
    /// dP/dE per hartree.
    pub density: Vec<f64>,
}

impl EnergySpectrum {
    /// ∫ dP/dE dE by the trapezoid rule.
    pub fn total(&self) -> f64 {
        self.area(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn area(&self, lo: f64, hi: f64) -> f64 {
        let (e, d) = (&self.energy, &self.density);
        (1..e.len())
            .filter(|&k| e[k - 1] >= lo && e[k] <= hi)
            .map(|k| 0.5 * (d[k] + d[k - 1]) * (e[k] - e[k - 1]))
            .sum()
    }
}

/// dP/dE = 2π ∫ sin θ dθ d²P/dE dΩ.
pub fn angle_integrate(grid: &MomentumGrid, dist: &[f64]) -> EnergySpectrum {
    let nt = grid.n_theta();
    let density = (0..grid.n_p())
        .map(|j| 2.0 * std::f64::consts::PI * (0..nt).map(|k| grid.weights[k] * dist[j * nt + k]).sum::<f64>())
        .collect();
    EnergySpectrum { energy: grid.energies(), density }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Parabolic estimate of the maximum.
    pub energy: f64,
    pub height: f64,
    pub area: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Local maxima above `rel_threshold` · global maximum, each bounded by the
/// adjacent minima.
pub fn find_peaks(spec: &EnergySpectrum, rel_threshold: f64) -> Vec<Peak> {
    let (e, d) = (&spec.energy, &spec.density);
    let n = d.len();
    let top = d.iter().cloned().fold(0.0, f64::max);
    if n < 3 || top <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for j in 1..n - 1 {
        if !(d[j] > d[j - 1] && d[j] >= d[j + 1] && d[j] >= rel_threshold * top) {
            continue;
        }
        let mut lo = j;
        while lo > 0 && d[lo - 1] < d[lo] {
            lo -= 1;
        }
        let mut hi = j;
        while hi + 1 < n && d[hi + 1] <= d[hi] {
            hi += 1;
        }
        let (x0, x1, x2) = (e[j - 1], e[j], e[j + 1]);
        let (y0, y1, y2) = (d[j - 1], d[j], d[j + 1]);
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        let energy = if a < 0.0 { -b / (2.0 * a) } else { x1 };
        peaks.push(Peak { energy, height: d[j], area: spec.area(e[lo], e[hi]), lo: e[lo], hi: e[hi] });
    }
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anisotropy {
    pub beta2: f64,
    pub beta4: f64,
}

/// Legendre moments of the distribution integrated over E ∈ [lo, hi]:
/// D(θ) ∝ 1 + β₂ P₂(cos θ) + β₄ P₄(cos θ).
pub fn anisotropy(spec: &SpectrumGrid, lo: f64, hi: f64) -> Result<Anisotropy> {
    let g = &spec.grid;
    let nt = g.n_theta();
    let dist = spec.distribution();
    let mut m = [0.0; 3];
    for (j, p) in g.p.iter().enumerate() {
        let e = 0.5 * p * p;
        if e < lo || e > hi {
            continue;
        }
        for k in 0..nt {
            let x = g.cos_theta[k];
            let p2 = 0.5 * (3.0 * x * x - 1.0);
            let p4 = (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0;
            let w = g.weights[k] * dist[j * nt + k] * p;
            m[0] += w;
            m[1] += w * p2;
            m[2] += w * p4;
        }
    }
    if !(m[0] > 0.0) {
        return Err(Error::Numerical("no spectral weight in the anisotropy window".into()));
    }
    Ok(Anisotropy { beta2: 5.0 * m[1] / m[0], beta4: 9.0 * m[2] / m[0] })
}

/// `E_eV theta_rad d2P/dE/dOmega` with the density per eV.
pub fn write_double_differential(spec: &SpectrumGrid, header: &str) -> String {
    let mut s = String::new();
    for line in header.lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "# E_eV theta_rad d2P_dE_dOmega_per_eV");
    let dist = spec.distribution();
    let nt = spec.grid.n_theta();
    for (j, p) in spec.grid.p.iter().enumerate() {
        for k in 0..nt {
            let _ = writeln!(
                s,
                "{:.10e} {:.10e} {:.10e}",
                0.5 * p * p * HARTREE_EV,
                spec.grid.theta[k],
                dist[j * nt + k] / HARTREE_EV
            );
        }
    }
    s
}

/// `E_eV dP/dE` with the density per eV.
pub fn write_energy_spectrum(spec: &EnergySpectrum, header: &str) -> String {
    let mut s = String::new();
    for line in header.lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "# E_eV dP_dE_per_eV");
    for (e, d) in spec.energy.iter().zip(&spec.density) {
        let _ = writeln!(s, "{:.10e} {:.10e}", e * HARTREE_EV, d / HARTREE_EV);
    }
    s
}
