//! Diabatic continuation and the resulting rate-equation populations.

use num_complex::Complex64;

use super::{symmetric_dot, AdiabaticState, ScanPoint};
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::pulse::Pulse;
use crate::quad::GaussRule;

pub const DEFAULT_OVERLAP_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEntry {
    pub state: AdiabaticState,
    pub overlap: f64,
    pub below_floor: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiabaticTrack {
    pub entries: Vec<TrackEntry>,
    pub floor: f64,
    /// Fields whose diagonalization failed and were left out.
    pub missing: Vec<f64>,
}

impl DiabaticTrack {
    pub fn fields(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.state.field).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.state.width()).collect()
    }

    pub fn flagged(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| e.below_floor).map(|e| e.state.field).collect()
    }

    pub fn rate_curve(&self) -> Result<RateCurve> {
        RateCurve::new(self.fields(), self.widths())
    }

    pub fn export(&self) -> String {
        super::export_states(self.entries.iter().map(|e| &e.state))
    }
}

/// Per field, the state of largest |⟨g|Ψ_n(F)⟩| (symmetric product).
pub fn diabatize(scan: &[ScanPoint], ground: &[Complex64], floor: f64) -> Result<DiabaticTrack> {
    if scan.windows(2).any(|w| !(w[1].field > w[0].field)) {
        return Err(Error::Config("scan fields must be strictly ascending".into()));
    }
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    for p in scan {
        let states = match &p.states {
            Ok(s) if !s.is_empty() => s,
            _ => {
                missing.push(p.field);
                continue;
            }
        };
        let mut best = 0;
        let mut best_ov = -1.0;
        for (k, s) in states.iter().enumerate() {
            if s.vector.len() != ground.len() {
                return Err(Error::Contract("ground vector and eigenvectors differ in length".into()));
            }
            let ov = symmetric_dot(ground, &s.vector).norm();
            if ov > best_ov {
                best_ov = ov;
                best = k;
            }
        }
        entries.push(TrackEntry { state: states[best].clone(), overlap: best_ov, below_floor: best_ov < floor });
    }
    if entries.is_empty() {
        return Err(Error::Numerical("no field point produced eigenstates".into()));
    }
    Ok(DiabaticTrack { entries, floor, missing })
}

/// Γ(|F|) as a monotone cubic through max(Γ, 0).
#[derive(Debug, Clone)]
pub struct RateCurve {
    interp: Pchip,
}

impl RateCurve {
    pub fn new(fields: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if fields.first().is_none_or(|&f| f < 0.0) {
            return Err(Error::Config("rate curve needs fields ≥ 0".into()));
        }
        let widths = widths.into_iter().map(|g| g.max(0.0)).collect();
        Ok(Self { interp: Pchip::new(fields, widths)? })
    }

    pub fn f_max(&self) -> f64 {
        self.interp.x_max()
    }

    pub fn eval(&self, f: f64) -> f64 {
        self.interp.eval(f.abs()).max(0.0)
    }
}

/// P(t) = exp(-∫_{t0}^t Γ(F(t')) dt') on an ascending `t_grid`, with
/// Gauss-Legendre panels no longer than `panel`.
pub fn population_from_rate(
    rate: impl Fn(f64) -> f64,
    field: impl Fn(f64) -> f64,
    t0: f64,
    t_grid: &[f64],
    panel: f64,
) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < t0) {
        return Err(Error::Config("time grid must be ascending and start after t0".into()));
    }
    if !(panel > 0.0) {
        return Err(Error::Config("panel length must be positive".into()));
    }
    let rule = GaussRule::new(12);
    let mut acc = 0.0;
    let mut last = t0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t > last {
            let panels = ((t - last) / panel).ceil().max(1.0) as usize;
            acc += rule.composite(last, t, panels, |s| rate(field(s)));
            last = t;
        }
        out.push((-acc).exp());
    }
    Ok(out)
}

/// Diabatic ground population during a pulse, integrated from the start of
/// the pulse support.
pub fn tunneling_population(track: &DiabaticTrack, pulse: &Pulse, t_grid: &[f64]) -> Result<Vec<f64>> {
    let curve = track.rate_curve()?;
    if pulse.f0 > curve.f_max() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "pulse peak field {} exceeds the scanned range {}",
            pulse.f0,
            curve.f_max()
        )));
    }
    let (s0, _) = pulse.support();
    let t0 = t_grid.first().map_or(s0, |&t| t.min(s0));
    let panel = 2.0 * std::f64::consts::PI / pulse.omega / 16.0;
    population_from_rate(|f| curve.eval(f), |t| pulse.field(t), t0, t_grid, panel)
}

/// (1/2π) ∫₀^{2π} Γ(f cos φ) dφ for a rate even in F.
pub fn cycle_averaged_rate(rate: impl Fn(f64) -> f64, f: f64) -> f64 {
    let rule = GaussRule::new(20);
    let half_pi = std::f64::consts::FRAC_PI_2;
    rule.composite(0.0, half_pi, 16, |phi| rate((f * phi.cos()).abs())) / half_pi
}
