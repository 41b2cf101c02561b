//! Field-dressed (Siegert) states of the CAP-augmented length-gauge CIS
//! Hamiltonian, their diabatic continuation in F and tunneling-rate models.

mod arnoldi;
mod diabatic;
mod lu;

pub use arnoldi::{shift_invert_arnoldi, ArnoldiConfig, RitzPair};
pub use diabatic::{
    cycle_averaged_rate, diabatize, population_from_rate, tunneling_population, DiabaticTrack, RateCurve, TrackEntry,
    DEFAULT_OVERLAP_FLOOR,
};
pub use lu::{BlockLu, BlockMatrix};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cis::{CisHamiltonian, Gauge};
use crate::error::{Error, Result};
use crate::potential::AbsorbingPotential;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticState {
    pub field: f64,
    pub energy: Complex64,
    /// Normalized so that Σ x_i² = 1 (no conjugation).
    pub vector: Vec<Complex64>,
    /// |Σ g_i x_i| against the field-free ground vector g.
    pub overlap: f64,
}

impl AdiabaticState {
    pub fn width(&self) -> f64 {
        -2.0 * self.energy.im
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    pub n_eigs: usize,
    /// Reference energy; states are ranked by |Re E - target|.
    pub target: f64,
    /// σ = target - i·shift_im keeps H - σ regular when the target is an
    /// exact real eigenvalue.
    pub shift_im: f64,
    pub arnoldi: ArnoldiConfig,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { n_eigs: 4, target: 0.0, shift_im: 1e-3, arnoldi: ArnoldiConfig::default() }
    }
}

/// Reference determinant, the field-free CIS ground state.
pub fn field_free_ground(dim: usize) -> Vec<Complex64> {
    let mut g = vec![ZERO; dim];
    g[0] = Complex64::new(1.0, 0.0);
    g
}

pub fn symmetric_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn symmetric_normalize(x: &mut [Complex64]) {
    let s = symmetric_dot(x, x);
    let hn: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // self-orthogonal vectors only occur at exceptional points; fall back
    let d = if s.norm() > 1e-12 * hn * hn { s.sqrt() } else { Complex64::new(hn, 0.0) };
    x.iter_mut().for_each(|z| *z /= d);
}

fn check_operator(h: &CisHamiltonian) -> Result<()> {
    if h.gauge() != Gauge::Length {
        return Err(Error::Config("dressed eigenstates need the length-gauge dipole table".into()));
    }
    Ok(())
}

/// The `cfg.n_eigs` eigenpairs of H0 + F z - i W nearest `cfg.target` in Re E.
pub fn dressed_eigs(
    h: &CisHamiltonian,
    cap: Option<AbsorbingPotential>,
    field: f64,
    seed: Option<&[Complex64]>,
    cfg: &EigenConfig,
) -> Result<Vec<AdiabaticState>> {
    check_operator(h)?;
    if cfg.n_eigs == 0 {
        return Err(Error::Config("n_eigs must be positive".into()));
    }
    let h = match cap {
        Some(c) => h.with_cap(c),
        None => h.without_cap(),
    };
    let n = h.dim();
    let sigma = Complex64::new(cfg.target, -cfg.shift_im);
    let lu = BlockLu::factor(BlockMatrix::from_operator(&h, field, sigma))?;
    let start: Vec<Complex64> = match seed {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => {
            return Err(Error::Contract(format!("seed vector has length {}, basis has {n}", s.len())));
        }
        None => {
            // ground plus a little of everything, so no eigenvector is missed
            (0..n).map(|i| Complex64::new(if i == 0 { 1.0 } else { 1e-3 / (1.0 + i as f64).sqrt() }, 0.0)).collect()
        }
    };
    let extra = (cfg.n_eigs + 2).min(n);
    let pairs = shift_invert_arnoldi(
        |b| lu.solve(b),
        |x, y| h.apply(field, x, y),
        sigma,
        &start,
        extra,
        &cfg.arnoldi,
    )?;
    let ground = field_free_ground(n);
    let mut states: Vec<AdiabaticState> = pairs
        .into_iter()
        .map(|p| {
            let mut v = p.vector;
            symmetric_normalize(&mut v);
            let overlap = symmetric_dot(&ground, &v).norm().min(1.0);
            AdiabaticState { field, energy: p.value, vector: v, overlap }
        })
        .collect();
    states.sort_by(|a, b| {
        let da = (a.energy.re - cfg.target).abs();
        let db = (b.energy.re - cfg.target).abs();
        da.partial_cmp(&db).unwrap()
    });
    states.truncate(cfg.n_eigs);
    Ok(states)
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub field: f64,
    pub states: Result<Vec<AdiabaticState>>,
}

/// Eigenstates along an ascending field grid. Each point is seeded with the
/// sum of the previous eigenvectors and targets the previous best-overlap
/// energy; a failed point keeps the last good seed.
pub fn scan_adiabatic(
    h: &CisHamiltonian,
    cap: Option<AbsorbingPotential>,
    fields: &[f64],
    cfg: &EigenConfig,
) -> Result<Vec<ScanPoint>> {
    check_operator(h)?;
    if fields.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("field grid must be strictly ascending".into()));
    }
    let mut out = Vec::with_capacity(fields.len());
    let mut seed: Option<Vec<Complex64>> = None;
    let mut c = *cfg;
    for &f in fields {
        let res = dressed_eigs(h, cap, f, seed.as_deref(), &c);
        if let Ok(states) = &res {
            let n = h.dim();
            let mut s = vec![ZERO; n];
            for st in states {
                for (a, b) in s.iter_mut().zip(&st.vector) {
                    *a += b;
                }
            }
            seed = Some(s);
            if let Some(best) = states.iter().max_by(|a, b| a.overlap.partial_cmp(&b.overlap).unwrap()) {
                c.target = best.energy.re;
            }
        }
        out.push(ScanPoint { field: f, states: res });
    }
    Ok(out)
}

/// Smallest |E_a - E_b| among the returned states at each successful point.
pub fn min_level_gaps(scan: &[ScanPoint]) -> Vec<(f64, f64)> {
    scan.iter()
        .filter_map(|p| {
            let s = p.states.as_ref().ok()?;
            let mut gap = f64::INFINITY;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    gap = gap.min((s[i].energy - s[j].energy).norm());
                }
            }
            Some((p.field, gap))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkFit {
    pub e0: f64,
    /// α from E = E0 - α F²/2 + c F⁴.
    pub polarizability: f64,
    pub quartic: f64,
}

/// Least-squares fit of E(F) = a + b F² + c F⁴.
pub fn stark_fit(points: &[(f64, f64)]) -> Result<StarkFit> {
    if points.len() < 3 {
        return Err(Error::Config("Stark fit needs at least three fields".into()));
    }
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Config("Stark fit needs nonzero fields".into()));
    }
    let a = DMatrix::from_fn(points.len(), 3, |i, j| (points[i].0 / scale).powi(2 * j as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let sol = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Numerical(format!("Stark fit: {e}")))?;
    Ok(StarkFit {
        e0: sol[0],
        polarizability: -2.0 * sol[1] / scale.powi(2),
        quartic: sol[2] / scale.powi(4),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub gamma: f64,
    /// (max - min) / mean over the window.
    pub variation: f64,
}

impl Plateau {
    pub fn is_stable(&self, rel: f64) -> bool {
        self.variation < rel
    }
}

/// Window of at least one decade in η with the least relative spread of Γ.
pub fn eta_plateau(samples: &[(f64, f64)]) -> Option<Plateau> {
    let mut s: Vec<(f64, f64)> = samples.iter().copied().filter(|p| p.0 > 0.0 && p.1.is_finite()).collect();
    s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best: Option<Plateau> = None;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s[j].0 < 10.0 * s[i].0 * (1.0 - 1e-12) {
                continue;
            }
            let w = &s[i..=j];
            let lo = w.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = w.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let mean = w.iter().map(|p| p.1).sum::<f64>() / w.len() as f64;
            if mean <= 0.0 {
                continue;
            }
            let var = (hi - lo) / mean;
            if best.is_none_or(|b| var < b.variation) {
                best = Some(Plateau { eta_lo: s[i].0, eta_hi: s[j].0, gamma: mean, variation: var });
            }
            break;
        }
    }
    best
}

/// Best-overlap state at one field for each CAP strength.
pub fn eta_scan(
    h: &CisHamiltonian,
    r_cap: f64,
    etas: &[f64],
    field: f64,
    cfg: &EigenConfig,
) -> Result<Vec<(f64, AdiabaticState)>> {
    let mut out = Vec::new();
    let mut seed: Option<Vec<Complex64>> = None;
    for &eta in etas {
        let cap = AbsorbingPotential::new(r_cap, eta)?;
        let states = dressed_eigs(h, Some(cap), field, seed.as_deref(), cfg)?;
        let best = states
            .into_iter()
            .max_by(|a, b| a.overlap.partial_cmp(&b.overlap).unwrap())
            .ok_or_else(|| Error::Numerical("no eigenstates returned".into()))?;
        seed = Some(best.vector.clone());
        out.push((eta, best));
    }
    Ok(out)
}

/// Delimited text: F ReE ImE Gamma overlap, one line per state.
pub fn export_states<'a>(states: impl IntoIterator<Item = &'a AdiabaticState>) -> String {
    let mut s = String::from("# F ReE ImE Gamma overlap\n");
    for st in states {
        s.push_str(&format!(
            "{:.10e} {:.15e} {:.15e} {:.15e} {:.10}\n",
            st.field,
            st.energy.re,
            st.energy.im,
            st.width(),
            st.overlap
        ));
    }
    s
}
