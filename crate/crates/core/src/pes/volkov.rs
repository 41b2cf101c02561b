//! Plane-wave projection of split segments and the analytic Volkov phase.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::SplitSegment;
use crate::cis::{CisBasis, CisHamiltonian, Gauge};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::pulse::Pulse;
use crate::quad::gauss_legendre;
use crate::special::{spherical_bessel, ylm};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform momenta p_j = j Δp (j = 0..=n_p) and Gauss-Legendre nodes in cos θ
/// ordered by increasing θ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub p: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Quadrature weights in cos θ.
    pub weights: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(p_max: f64, n_p: usize, n_theta: usize) -> Result<Self> {
        if !(p_max > 0.0) || n_p < 2 || n_theta < 1 {
            return Err(Error::Config("momentum grid needs p_max > 0, n_p ≥ 2, n_θ ≥ 1".into()));
        }
        let dp = p_max / n_p as f64;
        let p = (0..=n_p).map(|j| j as f64 * dp).collect();
        let (mut x, mut w) = gauss_legendre(n_theta);
        x.reverse();
        w.reverse();
        let theta = x.iter().map(|c: &f64| c.acos()).collect();
        Ok(Self { p, cos_theta: x, theta, weights: w })
    }

    pub fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    pub fn n_p(&self) -> usize {
        self.p.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn p_max(&self) -> f64 {
        *self.p.last().unwrap()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.p.iter().map(|p| 0.5 * p * p).collect()
    }
}

/// 1.5 √(2 (n_max ω - E_b)), enough for the n_max-th photon order.
pub fn default_p_max(omega: f64, binding: f64, n_max: usize) -> f64 {
    1.5 * (2.0 * (n_max as f64 * omega - binding)).max(0.0).sqrt()
}

/// F(p) = ∫ j_l(p r) r u(r) dr on the grid quadrature.
pub fn radial_transform(grid: &RadialGrid, u: &[Complex64], l: usize, p: &[f64]) -> Vec<Complex64> {
    transform_waves(grid, &[(l, u.to_vec())], p).pop().unwrap()
}

fn transform_waves(grid: &RadialGrid, waves: &[(usize, Vec<Complex64>)], p: &[f64]) -> Vec<Vec<Complex64>> {
    let lmax = waves.iter().map(|w| w.0).max().unwrap_or(0);
    let r = grid.r();
    let wr: Vec<f64> = r.iter().zip(grid.weights()).map(|(r, w)| r * w).collect();
    // drop nodes where every wave is negligible
    let scale = waves.iter().flat_map(|w| w.1.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    let active: Vec<usize> =
        (0..r.len()).filter(|&k| waves.iter().any(|w| w.1[k].norm() > 1e-15 * scale)).collect();
    let cols: Vec<Vec<Complex64>> = p
        .par_iter()
        .map(|&pj| {
            let mut acc = vec![ZERO; waves.len()];
            for &k in &active {
                let j = spherical_bessel(lmax, pj * r[k]);
                for (a, (l, u)) in acc.iter_mut().zip(waves) {
                    *a += u[k] * (wr[k] * j[*l]);
                }
            }
            acc
        })
        .collect();
    (0..waves.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// Spectral amplitudes C_i(p, θ) of one segment at the final time, per channel,
/// stored as [j · n_θ + k].
#[derive(Debug, Clone, PartialEq)]
pub struct VolkovContribution {
    pub time: f64,
    pub amplitudes: Vec<Vec<Complex64>>,
    pub segment_norm: f64,
    /// Σ_lm (2/π) ∫ p² |F_lm|² dp, to be compared with `segment_norm`.
    pub captured_norm: f64,
}

impl VolkovContribution {
    /// Relative norm missing from the momentum grid.
    pub fn deficit(&self) -> f64 {
        if self.segment_norm == 0.0 {
            0.0
        } else {
            1.0 - self.captured_norm / self.segment_norm
        }
    }
}

/// Projects a segment on Volkov waves ⟨p^V| U_V(T, t_n) |χ_out⟩. Requires the
/// velocity form of the coupling when `pulse` is still on at t_n.
pub fn volkov_evolve(
    segment: &SplitSegment,
    basis: &CisBasis,
    pulse: Option<&Pulse>,
    t_final: f64,
    grid: &MomentumGrid,
) -> Result<VolkovContribution> {
    if t_final < segment.time {
        return Err(Error::Config("final time precedes the splitting time".into()));
    }
    let rgrid = basis.grid();
    let n_ch = basis.channels().len();
    let (ia, ia2) = match pulse {
        Some(pl) => pl.volkov_integrals(segment.time, t_final, grid.p_max(), 1e-8),
        None => (0.0, 0.0),
    };
    let dt = t_final - segment.time;
    let (np, nt) = (grid.n_p(), grid.n_theta());
    let phase: Vec<Complex64> = (0..np * nt)
        .map(|idx| {
            let (p, c) = (grid.p[idx / nt], grid.cos_theta[idx % nt]);
            Complex64::from_polar(1.0, -(0.5 * p * p * dt + p * c * ia + 0.5 * ia2))
        })
        .collect();
    let pref = (2.0 / std::f64::consts::PI).sqrt();
    let mut amplitudes = vec![vec![ZERO; np * nt]; n_ch];
    let mut captured = 0.0;
    let mut waves = Vec::new();
    let mut keys = Vec::new();
    for b in &segment.blocks {
        if b.beta.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let radial = &basis.virtuals().block(b.l).radial;
        if radial.ncols() != b.beta.len() {
            return Err(Error::Contract("segment does not match the basis".into()));
        }
        let mut u = vec![ZERO; rgrid.n_points()];
        crate::cis::gemv_rc(radial, &b.beta, &mut u, Complex64::new(1.0, 0.0));
        waves.push((b.l, u));
        keys.push((b.channel, b.l, b.m));
    }
    let transforms = transform_waves(rgrid, &waves, &grid.p);
    let dp = grid.dp();
    for ((c, l, m), f) in keys.into_iter().zip(&transforms) {
        // trapezoid with p² |F|², zero at p = 0
        let last = f.len() - 1;
        captured += (2.0 / std::f64::consts::PI)
            * dp
            * f.iter().enumerate().map(|(j, z)| {
                let w = if j == last { 0.5 } else { 1.0 };
                w * grid.p[j] * grid.p[j] * z.norm_sqr()
            }).sum::<f64>();
        let il = Complex64::new(0.0, -1.0).powu(l as u32) * pref;
        let y: Vec<f64> = grid.cos_theta.iter().map(|&x| ylm(l, m, x)).collect();
        let amp = &mut amplitudes[c];
        for j in 0..np {
            let fj = f[j] * il;
            for k in 0..nt {
                amp[j * nt + k] += fj * y[k];
            }
        }
    }
    for amp in &mut amplitudes {
        for (a, ph) in amp.iter_mut().zip(&phase) {
            *a *= ph;
        }
    }
    Ok(VolkovContribution { time: segment.time, amplitudes, segment_norm: segment.norm_sqr(), captured_norm: captured })
}

fn hermitian_exp(g: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    let eig = g.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * dt)));
    u * d * u.adjoint()
}

/// U^ion(T, t_n) for the hole space: i dU/dt = G(t) U with
/// G_ii' = -ε_i δ_ii' - A(t) ⟨φ_i'|p|φ_i⟩. Without mixing only the diagonal
/// phases e^{iε_i (T - t_n)} remain.
pub fn ion_propagator(
    h: &CisHamiltonian,
    pulse: Option<&Pulse>,
    t_n: f64,
    t_final: f64,
    mixing: bool,
) -> Result<DMatrix<Complex64>> {
    let basis = h.basis();
    let ch = basis.channels();
    let n = ch.len();
    let diag = || {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, ch[i].energy * (t_final - t_n))
            } else {
                ZERO
            }
        })
    };
    let Some(pulse) = pulse.filter(|_| mixing) else {
        return Ok(diag());
    };
    if h.gauge() != Gauge::Velocity {
        return Err(Error::Config("channel mixing needs the velocity-form hole dipoles".into()));
    }
    let e = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(-ch[i].energy, 0.0) } else { ZERO });
    let p = DMatrix::from_fn(n, n, |i, ip| h.dipole().hole_hole(ch[ip].orbital, ch[i].orbital));
    let g = |t: f64| &e - &p * Complex64::new(pulse.vector_potential(t), 0.0);
    let (_, hi) = pulse.support();
    let t_drive = t_final.min(hi).max(t_n);
    let dt_max = (2.0 * std::f64::consts::PI / pulse.omega / 64.0).min(0.05);
    let steps = ((t_drive - t_n) / dt_max).ceil() as usize;
    let mut u = DMatrix::<Complex64>::identity(n, n);
    if steps > 0 {
        let dt = (t_drive - t_n) / steps as f64;
        for k in 0..steps {
            // exponential midpoint rule: unitary at every step
            let tm = t_n + (k as f64 + 0.5) * dt;
            u = hermitian_exp(&g(tm), dt) * u;
        }
    }
    if t_final > t_drive {
        u = hermitian_exp(&g(t_final), t_final - t_drive) * u;
    }
    Ok(u)
}
