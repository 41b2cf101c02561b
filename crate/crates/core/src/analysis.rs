//! Perturbative layer on top of the engine: Keldysh parameter, N-photon
//! fluences, rate equations, generalized cross sections, log-log order fits
//! and resonance models for two-photon cross sections.
//!
//! Fluxes and fluences are in atomic units unless a function says otherwise:
//! j = I/ω with I(t) = (c/8π) f(t)², so F^(N) = ∫ jᴺ dt has units
//! a₀^{-2N} t₀^{1-N} and σ^(N) has units a₀^{2N} t₀^{N-1}.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::quad::GaussRule;
use crate::units::{self, AU_TIME_FS, BOHR_CM, C_AU};

/// γ = √(I_p / 2U_p) with U_p = I/(4ω²); `intensity` is F0² in a.u.
pub fn keldysh(intensity: f64, omega: f64, ip: f64) -> Result<f64> {
    if !(intensity > 0.0 && omega > 0.0 && ip > 0.0) {
        return Err(Error::Domain("Keldysh parameter needs positive I, ω and I_p".into()));
    }
    let up = intensity / (4.0 * omega * omega);
    let g1 = (ip / (2.0 * up)).sqrt();
    let g2 = 2.0 * omega * (ip / (2.0 * intensity)).sqrt();
    debug_assert!((g1 - g2).abs() <= 1e-12 * g1);
    Ok(g1)
}

/// Ponderomotive energy I/(4ω²) in a.u.
pub fn ponderomotive(intensity: f64, omega: f64) -> f64 {
    intensity / (4.0 * omega * omega)
}

/// Photon flux j(t) = (c/8π) f(t)² / ω in a.u., f the field envelope.
pub fn flux(pulse: &Pulse, t: f64) -> f64 {
    C_AU / (8.0 * PI) * pulse.envelope(t).powi(2) / pulse.omega
}

/// F^(N) = ∫ jᴺ dt. N = 1, 2 in closed form, higher orders by quadrature.
pub fn fluence(pulse: &Pulse, n: u32) -> Result<f64> {
    match n {
        0 => Err(Error::Domain("photon order must be at least 1".into())),
        1 => Ok(C_AU * pulse.tau / (8.0 * PI * pulse.omega) * (PI / (4.0 * LN_2)).sqrt() * pulse.f0.powi(2)),
        // the closed form carries (c/8π)² and a factor τ
        2 => Ok((C_AU / (8.0 * PI)).powi(2) * pulse.tau * (PI / (8.0 * LN_2)).sqrt() * pulse.f0.powi(4)
            / pulse.omega.powi(2)),
        _ => Ok(fluence_quadrature(pulse, n)),
    }
}

/// ∫ jᴺ dt by composite Gauss-Legendre over the pulse support.
pub fn fluence_quadrature(pulse: &Pulse, n: u32) -> f64 {
    let (lo, hi) = pulse.support();
    GaussRule::new(20).composite(lo, hi, 48, |t| flux(pulse, t).powi(n as i32))
}

/// Converts F^(N) from a.u. to cm^{-2N} s^{1-N}.
pub fn fluence_to_cgs(f: f64, n: u32) -> f64 {
    f / (BOHR_CM.powi(2 * n as i32) * units::au_to_s(1.0).powi(n as i32 - 1))
}

/// Converts σ^(N) from a.u. to cm^{2N} s^{N-1}.
pub fn cross_section_to_cgs(sigma: f64, n: u32) -> f64 {
    sigma * BOHR_CM.powi(2 * n as i32) * (AU_TIME_FS * 1e-15).powi(n as i32 - 1)
}

pub fn cross_section_from_cgs(sigma: f64, n: u32) -> f64 {
    sigma / cross_section_to_cgs(1.0, n)
}

/// Populations from the rate equations dP₀/dt = -Σ_N σ^(N) jᴺ P₀.
#[derive(Debug, Clone, PartialEq)]
pub struct RateHistory {
    pub t: Vec<f64>,
    pub p0: Vec<f64>,
    /// `yields[N-1][k]`: population removed by N-photon absorption up to t_k.
    pub yields: Vec<Vec<f64>>,
}

impl RateHistory {
    pub fn final_yields(&self) -> Vec<f64> {
        self.yields.iter().map(|y| *y.last().unwrap()).collect()
    }

    pub fn final_p0(&self) -> f64 {
        *self.p0.last().unwrap()
    }
}

/// RK4 on (P₀, P₁, …) for an arbitrary flux; `sigmas[N-1]` is σ^(N).
/// Without depletion P₀ stays 1.
pub fn rate_solve_flux(
    sigmas: &[f64],
    j: impl Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    steps: usize,
    depletion: bool,
) -> Result<RateHistory> {
    if sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Domain("cross sections must be nonnegative".into()));
    }
    if !(t1 > t0) || steps == 0 {
        return Err(Error::Config("rate equations need t1 > t0 and at least one step".into()));
    }
    let n = sigmas.len();
    let rhs = |t: f64, y: &[f64]| -> Vec<f64> {
        let jt = j(t);
        let p0 = if depletion { y[0] } else { 1.0 };
        let mut d = vec![0.0; n + 1];
        let mut jn = 1.0;
        for (k, s) in sigmas.iter().enumerate() {
            jn *= jt;
            d[k + 1] = s * jn * p0;
        }
        if depletion {
            d[0] = -d[1..].iter().sum::<f64>();
        }
        d
    };
    let h = (t1 - t0) / steps as f64;
    let mut y = vec![0.0; n + 1];
    y[0] = 1.0;
    let mut hist = RateHistory { t: vec![t0], p0: vec![1.0], yields: vec![vec![0.0]; n] };
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = rhs(t + h, &axpy(&y, &k3, h));
        for i in 0..=n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        hist.t.push(t + h);
        hist.p0.push(y[0]);
        for k in 0..n {
            hist.yields[k].push(y[k + 1]);
        }
    }
    Ok(hist)
}

/// Rate equations driven by a Gaussian pulse over its support, τ/100 steps.
pub fn rate_solve(sigmas: &[f64], pulse: &Pulse, depletion: bool) -> Result<RateHistory> {
    let (lo, hi) = pulse.support();
    let steps = ((hi - lo) / (pulse.tau / 100.0)).ceil() as usize;
    rate_solve_flux(sigmas, |t| flux(pulse, t), lo, hi, steps, depletion)
}

/// Yields above this are flagged as outside the perturbative window.
pub const PERTURBATIVE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub order: u32,
    /// a₀^{2N} t₀^{N-1}.
    pub au: f64,
    /// cm^{2N} s^{N-1}.
    pub cgs: f64,
    pub perturbative: bool,
}

/// σ^(N) = P_N / F^(N), F in a.u.
pub fn cross_section_from_yield(yield_n: f64, fluence_au: f64, order: u32) -> Result<CrossSection> {
    if !(fluence_au > 0.0) || !fluence_au.is_finite() {
        return Err(Error::Domain(format!("cross section undefined for fluence {fluence_au}")));
    }
    if order == 0 {
        return Err(Error::Domain("photon order must be at least 1".into()));
    }
    let au = yield_n / fluence_au;
    Ok(CrossSection { order, au, cgs: cross_section_to_cgs(au, order), perturbative: yield_n <= PERTURBATIVE_LIMIT })
}

/// One engine or experiment data point.
#[derive(Debug, Clone, PartialEq)]
pub struct IonizationRecord {
    pub photon_ev: f64,
    pub intensity_wcm2: f64,
    pub tau_fs: f64,
    /// `yields[N-1]` = P_N.
    pub yields: Vec<f64>,
    /// `channels[i][N-1]`, empty if not resolved.
    pub channels: Vec<Vec<f64>>,
}

impl IonizationRecord {
    pub fn new(photon_ev: f64, intensity_wcm2: f64, tau_fs: f64, yields: Vec<f64>) -> Result<Self> {
        if !(photon_ev > 0.0 && intensity_wcm2 > 0.0 && tau_fs > 0.0) {
            return Err(Error::Domain("record needs positive photon energy, intensity and duration".into()));
        }
        if yields.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain("yields must be nonnegative".into()));
        }
        // small slack for quadrature noise in engine yields
        if yields.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(Error::Domain("yields sum to more than one".into()));
        }
        Ok(Self { photon_ev, intensity_wcm2, tau_fs, yields, channels: Vec::new() })
    }

    pub fn with_channels(mut self, channels: Vec<Vec<f64>>) -> Self {
        self.channels = channels;
        self
    }

    pub fn pulse(&self) -> Result<Pulse> {
        Pulse::from_lab(self.intensity_wcm2, self.photon_ev, self.tau_fs, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Intensities span at least a factor of ten.
    pub spans_decade: bool,
    /// No fitted yield above `PERTURBATIVE_LIMIT`.
    pub perturbative: bool,
}

/// Least-squares line through (ln x, ln y).
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<OrderFit> {
    if x.len() != y.len() {
        return Err(Error::Contract("x and y differ in length".into()));
    }
    if x.len() < 3 {
        return Err(Error::Domain(format!("order fit needs at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all intensities are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if lx.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    Ok(OrderFit { slope, stderr, intercept, spans_decade: hi >= 10.0 * lo * (1.0 - 1e-12), perturbative: true })
}

/// Slope of ln P_N against ln I over the records.
pub fn order_fit(records: &[IonizationRecord], order: u32) -> Result<OrderFit> {
    if order == 0 {
        return Err(Error::Domain("photon order must be at least 1".into()));
    }
    let k = order as usize - 1;
    if records.iter().any(|r| r.yields.len() <= k) {
        return Err(Error::Domain(format!("some records have no order-{order} yield")));
    }
    let x: Vec<f64> = records.iter().map(|r| r.intensity_wcm2).collect();
    let y: Vec<f64> = records.iter().map(|r| r.yields[k]).collect();
    let mut fit = log_log_fit(&x, &y)?;
    fit.perturbative = y.iter().all(|p| *p <= PERTURBATIVE_LIMIT);
    Ok(fit)
}

/// σ^(2)(ω) ∝ σ^(1)(ω) E^{-l-7/2} with E = 2ω - I_p the final photoelectron
/// energy (eV). Unnormalized; see `scale_to_peak`.
pub fn two_step_sigma2(photon_ev: &[f64], sigma1: &[f64], l: u32, ip_ev: f64) -> Result<Vec<f64>> {
    if photon_ev.len() != sigma1.len() {
        return Err(Error::Contract("energy grid and σ^(1) differ in length".into()));
    }
    let expo = -(l as f64) - 3.5;
    photon_ev
        .iter()
        .zip(sigma1)
        .map(|(w, s)| {
            let e = 2.0 * w - ip_ev;
            if e > 0.0 {
                Ok(s * e.powf(expo))
            } else {
                Err(Error::Domain(format!("photon energy {w} eV leaves no continuum energy after two photons")))
            }
        })
        .collect()
}

/// Rescales `curve` so its maximum equals `peak`.
pub fn scale_to_peak(curve: &[f64], peak: f64) -> Vec<f64> {
    let top = curve.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return curve.to_vec();
    }
    curve.iter().map(|v| v * peak / top).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub energy_ev: f64,
    pub width_ev: f64,
    /// ⟨F|H_int|M⟩⟨M|H_int|I⟩.
    pub numerator: Complex64,
}

impl Resonance {
    pub fn new(energy_ev: f64, width_ev: f64, numerator: Complex64) -> Result<Self> {
        if !(width_ev > 0.0) {
            return Err(Error::Domain("resonance width must be positive".into()));
        }
        Ok(Self { energy_ev, width_ev, numerator })
    }

    /// Width from a lifetime in attoseconds, Γ = ħ/τ.
    pub fn from_lifetime(energy_ev: f64, lifetime_as: f64, numerator: Complex64) -> Result<Self> {
        Self::new(energy_ev, units::lifetime_to_width_ev(lifetime_as * 1e-3), numerator)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceModel {
    pub resonances: Vec<Resonance>,
    /// Energy of the initial state, eV; resonance energies are on the same scale.
    pub initial_ev: f64,
}

/// σ^(2)(E) = |Σ_M num_M / (E - E_M + iΓ_M/2 + E_I)|² on photon energies E (eV).
pub fn multi_resonance_sigma2(model: &ResonanceModel, photon_ev: &[f64]) -> Result<Vec<f64>> {
    if model.resonances.is_empty() {
        return Err(Error::Domain("at least one resonance is required".into()));
    }
    if model.resonances.iter().any(|r| !(r.width_ev > 0.0)) {
        return Err(Error::Domain("resonance width must be positive".into()));
    }
    Ok(photon_ev
        .iter()
        .map(|&e| {
            model
                .resonances
                .iter()
                .map(|r| r.numerator / Complex64::new(e - r.energy_ev + model.initial_ev, 0.5 * r.width_ev))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect())
}

/// Peak position (parabolic), height and full width at half maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveShape {
    pub peak: f64,
    pub height: f64,
    pub fwhm: f64,
}

pub fn curve_shape(x: &[f64], y: &[f64]) -> Result<CurveShape> {
    let n = y.len();
    if n < 3 || x.len() != n {
        return Err(Error::Contract("curve needs at least 3 matching points".into()));
    }
    let k = (0..n).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    if k == 0 || k == n - 1 {
        return Err(Error::Domain("maximum sits on the grid edge".into()));
    }
    let half = 0.5 * y[k];
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        for i in range {
            let j = if i < k { i + 1 } else { i - 1 };
            if (y[i] - half) * (y[j] - half) <= 0.0 && y[i] != y[j] {
                return Some(x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]));
            }
        }
        None
    };
    let lo = cross(&mut (0..k).rev()).ok_or_else(|| Error::Domain("no half-maximum crossing below the peak".into()))?;
    let hi = cross(&mut (k + 1..n)).ok_or_else(|| Error::Domain("no half-maximum crossing above the peak".into()))?;
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    let peak = if a < 0.0 { -b / (2.0 * a) } else { x1 };
    Ok(CurveShape { peak, height: y[k], fwhm: hi - lo })
}

/// Shoulders: interior extrema of the slope at which the slope keeps its
/// sign, i.e. the curve flattens and steepens again without turning over.
pub fn find_shoulders(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 4 {
        return Vec::new();
    }
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let xm: Vec<f64> = (0..n - 1).map(|i| 0.5 * (x[i] + x[i + 1])).collect();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1..d.len() - 1)
        .filter(|&i| {
            let falling_max = d[i] < 0.0 && d[i] > d[i - 1] && d[i] >= d[i + 1];
            let rising_min = d[i] > 0.0 && d[i] < d[i - 1] && d[i] <= d[i + 1];
            (falling_max || rising_min) && d[i].abs() > 1e-9 * scale
        })
        .map(|i| xm[i])
        .collect()
}
