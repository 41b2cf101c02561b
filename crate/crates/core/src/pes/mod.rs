//! Photoelectron spectra by wave-function splitting: the outer part of each
//! channel wave packet is removed at fixed times and carried to the final
//! time analytically as a Volkov wave.

mod spectrum;
mod volkov;

pub use spectrum::{
    angle_integrate, anisotropy, assemble_spectrum, find_peaks, write_double_differential, write_energy_spectrum,
    Anisotropy, EnergySpectrum, Peak, SpectrumGrid,
};
pub use volkov::{default_p_max, ion_propagator, radial_transform, volkov_evolve, MomentumGrid, VolkovContribution};

use std::sync::Arc;

use num_complex::Complex64;

use crate::cis::{CisBasis, CisState, RadialBlocks};
use crate::error::{Error, Result};
use crate::propagator::Hook;

/// Logistic splitting function S(r) = 1 / (1 + e^{-(r - r_c)/Δ}).
pub fn split_function(r: f64, r_c: f64, delta: f64) -> f64 {
    1.0 / (1.0 + (-(r - r_c) / delta).exp())
}

/// Largest tolerated ‖S φ_i‖ for the occupied orbitals.
pub const CONTAMINATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingConfig {
    pub r_c: f64,
    pub delta: f64,
    pub times: Vec<f64>,
    pub t_final: f64,
}

impl SplittingConfig {
    pub fn new(r_c: f64, delta: f64, times: Vec<f64>, t_final: f64, r_max: f64) -> Result<Self> {
        if !(delta > 0.0) || !(r_c > 0.0) {
            return Err(Error::Config("splitting needs r_c > 0 and Δ > 0".into()));
        }
        if r_c < 20.0 * delta {
            return Err(Error::Config(format!("splitting radius {r_c} must be at least 20 Δ = {}", 20.0 * delta)));
        }
        if r_c >= r_max - 5.0 * delta {
            return Err(Error::Config(format!(
                "splitting radius {r_c} leaves less than 5 Δ before the box edge {r_max}"
            )));
        }
        if times.is_empty() {
            return Err(Error::Config("no splitting times".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("splitting times must be finite and strictly increasing".into()));
        }
        if *times.last().unwrap() > t_final {
            return Err(Error::Config("splitting times must not exceed the final time".into()));
        }
        Ok(Self { r_c, delta, times, t_final })
    }

    /// Splits every `every` after `t_start` up to `t_end`, with `t_end` itself last.
    pub fn cadence(t_start: f64, t_end: f64, every: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = t_start + every;
        while t < t_end - 1e-9 * every {
            out.push(t);
            t += every;
        }
        out.push(t_end);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentBlock {
    pub channel: usize,
    pub l: usize,
    pub m: i32,
    /// β_a = ⟨φ_a|S|χ_i⟩ over the virtual orbitals of this (l, m).
    pub beta: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSegment {
    pub time: f64,
    pub blocks: Vec<SegmentBlock>,
}

impl SplitSegment {
    pub fn norm_sqr(&self) -> f64 {
        self.blocks.iter().flat_map(|b| &b.beta).map(|z| z.norm_sqr()).sum()
    }

    pub fn channel_norm_sqr(&self, c: usize) -> f64 {
        self.blocks.iter().filter(|b| b.channel == c).flat_map(|b| &b.beta).map(|z| z.norm_sqr()).sum()
    }
}

/// S projected on the virtual space, plus the ground-state check.
#[derive(Debug, Clone)]
pub struct Splitter {
    pub config: SplittingConfig,
    basis: Arc<CisBasis>,
    s: RadialBlocks,
    /// max_i ‖S φ_i‖ over occupied orbitals.
    pub contamination: f64,
}

impl Splitter {
    pub fn new(basis: Arc<CisBasis>, config: SplittingConfig) -> Result<Self> {
        let grid = basis.grid();
        if config.r_c >= grid.r_max() - 5.0 * config.delta {
            return Err(Error::Config("splitting radius too close to the box edge".into()));
        }
        let sf = |r: f64| split_function(r, config.r_c, config.delta);
        let contamination = basis
            .occupied()
            .iter()
            .map(|o| {
                let s2: Vec<f64> = grid.r().iter().zip(&o.radial).map(|(r, u)| (sf(*r) * u).powi(2)).collect();
                grid.dot(&s2, &vec![1.0; s2.len()]).sqrt()
            })
            .fold(0.0, f64::max);
        if contamination > CONTAMINATION_TOL {
            return Err(Error::Config(format!(
                "splitting function reaches the occupied orbitals (‖SΦ₀‖ = {contamination:.2e})"
            )));
        }
        let s = RadialBlocks::project(grid, basis.virtuals(), sf);
        Ok(Self { config, basis, s, contamination })
    }

    pub fn basis(&self) -> &Arc<CisBasis> {
        &self.basis
    }

    /// χ_i ← (1 - S) χ_i for every channel; returns the removed S χ_i.
    pub fn split(&self, state: &mut CisState, t: f64) -> Result<SplitSegment> {
        let tol = 1e-9 * (1.0 + t.abs());
        if !self.config.times.iter().any(|&s| (s - t).abs() <= tol) {
            return Err(Error::Config(format!("t = {t} is not a configured splitting time")));
        }
        self.split_now(state, t)
    }

    pub(crate) fn split_now(&self, state: &mut CisState, t: f64) -> Result<SplitSegment> {
        if !Arc::ptr_eq(state.basis(), &self.basis) {
            return Err(Error::Contract("state and splitter were built on different bases".into()));
        }
        let mut blocks = Vec::with_capacity(self.basis.blocks().len());
        let data = state.data_mut();
        for b in self.basis.blocks() {
            let s = &self.s.blocks[b.l];
            let x = &mut data[b.range()];
            let mut beta = vec![Complex64::new(0.0, 0.0); b.len];
            crate::cis::gemv_rc(s, x, &mut beta, Complex64::new(1.0, 0.0));
            for (xi, bi) in x.iter_mut().zip(&beta) {
                *xi -= bi;
            }
            blocks.push(SegmentBlock { channel: b.channel, l: b.l, m: b.m, beta });
        }
        Ok(SplitSegment { time: t, blocks })
    }
}

/// Propagation hook collecting a segment at every splitting time.
#[derive(Debug, Clone)]
pub struct SplitHook {
    pub splitter: Splitter,
    pub segments: Vec<SplitSegment>,
    /// (time, state norm² before, after) per split.
    pub log: Vec<(f64, f64, f64)>,
}

impl SplitHook {
    pub fn new(splitter: Splitter) -> Self {
        Self { splitter, segments: Vec::new(), log: Vec::new() }
    }
}

impl Hook for SplitHook {
    fn times(&self) -> Vec<f64> {
        self.splitter.config.times.clone()
    }

    fn fire(&mut self, t: f64, state: &mut CisState) -> Result<()> {
        let before = state.norm_sqr();
        // the propagator reports the nearest step time, not the configured one
        let seg = self.splitter.split_now(state, t)?;
        self.log.push((t, before, state.norm_sqr()));
        self.segments.push(seg);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PesSettings {
    pub splitting: SplittingConfig,
    pub t_start: f64,
    pub dt: f64,
    pub krylov_dim: usize,
    pub cap: Option<crate::potential::AbsorbingPotential>,
    pub momentum: MomentumGrid,
    /// Apply the full ion propagator (A·p hole mixing) instead of the
    /// diagonal hole phases only.
    pub mixing: bool,
}

#[derive(Debug, Clone)]
pub struct PesOutcome {
    pub spectrum: SpectrumGrid,
    pub segments: Vec<SplitSegment>,
    pub contributions: Vec<VolkovContribution>,
    /// (time, norm² before, after) per split.
    pub split_log: Vec<(f64, f64, f64)>,
    pub trajectory: crate::propagator::Trajectory,
    pub final_state: CisState,
    pub contamination: f64,
}

impl PesOutcome {
    /// Worst relative Parseval deficit over segments that carry norm.
    pub fn worst_deficit(&self) -> f64 {
        let total: f64 = self.contributions.iter().map(|c| c.segment_norm).sum();
        self.contributions
            .iter()
            .filter(|c| c.segment_norm > 1e-6 * total)
            .map(|c| c.deficit().abs())
            .fold(0.0, f64::max)
    }
}

/// Velocity-form propagation from the ground state with splitting, then
/// Volkov projection of every segment and coherent assembly.
pub fn run_pes(
    h: &crate::cis::CisHamiltonian,
    pulse: &crate::pulse::Pulse,
    settings: &PesSettings,
) -> Result<PesOutcome> {
    use crate::propagator::{propagate, Driven, Method, PropagationPlan};
    use rayon::prelude::*;

    if h.gauge() != crate::cis::Gauge::Velocity {
        return Err(Error::Config("spectra need velocity-form propagation".into()));
    }
    let h = match settings.cap {
        Some(c) => h.with_cap(c),
        None => h.without_cap(),
    };
    let basis = h.basis().clone();
    let splitter = Splitter::new(basis.clone(), settings.splitting.clone())?;
    let contamination = splitter.contamination;
    let mut hook = SplitHook::new(splitter);
    let plan = PropagationPlan::new(
        settings.t_start,
        settings.splitting.t_final,
        settings.dt,
        Method::Lanczos,
        settings.krylov_dim,
    )?;
    let mut state = CisState::ground(basis.clone());
    let gen = Driven { h: &h, pulse };
    let trajectory = propagate(&mut state, &plan, &gen, &mut [&mut hook])?;
    let t_final = settings.splitting.t_final;
    let contributions: Vec<VolkovContribution> = hook
        .segments
        .par_iter()
        .map(|s| volkov_evolve(s, &basis, Some(pulse), t_final, &settings.momentum))
        .collect::<Result<_>>()?;
    let ions: Vec<nalgebra::DMatrix<Complex64>> = hook
        .segments
        .iter()
        .map(|s| ion_propagator(&h, Some(pulse), s.time, t_final, settings.mixing))
        .collect::<Result<_>>()?;
    let spectrum =
        assemble_spectrum(settings.momentum.clone(), basis.channels().len(), &contributions, Some(&ions))?;
    Ok(PesOutcome {
        spectrum,
        segments: hook.segments,
        contributions,
        split_log: hook.log,
        trajectory,
        final_state: state,
        contamination,
    })
}
