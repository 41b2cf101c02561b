//! Typed run configuration assembled from an `Ini`. Every section that is
//! present is read in full (so typos anywhere are caught); the scenario
//! decides which sections are required.

use std::path::{Path, PathBuf};

use tdcis::analysis::IonizationRecord;
use tdcis::beam::{BeamProfile, TabulatedSignal};
use tdcis::cis::{CouplingMode, Gauge, MSelection};
use tdcis::grid::Mapping;
use tdcis::potential::AbsorbingPotential;
use tdcis::propagator::Method;
use tdcis::pulse::Pulse;
use tdcis::system::{PotentialSpec, SystemSpec};
use tdcis::units;
use tdcis::{Error, Result};

use crate::config::{Dim, Ini};
use crate::tables;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Propagate,
    Pes,
    SiegertScan,
    IntensityScan,
    Analyze,
    BeamVolume,
}

impl Scenario {
    pub const NAMES: [&'static str; 6] = ["propagate", "pes", "siegert-scan", "intensity-scan", "analyze", "beam-volume"];

    fn from_name(s: &str) -> Self {
        match s {
            "propagate" => Scenario::Propagate,
            "pes" => Scenario::Pes,
            "siegert-scan" => Scenario::SiegertScan,
            "intensity-scan" => Scenario::IntensityScan,
            "analyze" => Scenario::Analyze,
            _ => Scenario::BeamVolume,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Propagate => "propagate",
            Scenario::Pes => "pes",
            Scenario::SiegertScan => "siegert-scan",
            Scenario::IntensityScan => "intensity-scan",
            Scenario::Analyze => "analyze",
            Scenario::BeamVolume => "beam-volume",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PulseSettings {
    pub omega: f64,
    pub f0: f64,
    pub tau: f64,
    pub cep: f64,
}

impl PulseSettings {
    pub fn pulse(&self) -> Result<Pulse> {
        Pulse::new(self.f0, self.omega, self.tau, self.cep)
    }

    pub fn with_field(&self, f0: f64) -> Self {
        Self { f0, ..*self }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Propagation {
    pub gauge: Gauge,
    pub method: Method,
    pub dt: f64,
    pub krylov: usize,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub cap: Option<AbsorbingPotential>,
}

#[derive(Debug, Clone, Copy)]
pub struct Splitting {
    pub r_c: f64,
    pub delta: f64,
    pub every: f64,
    pub t_final: f64,
    pub momenta: usize,
    pub angles: usize,
    pub p_max: Option<f64>,
    pub mixing: bool,
}

#[derive(Debug, Clone)]
pub struct Siegert {
    pub fields: Vec<f64>,
    pub cap_onset: f64,
    pub cap_strength: f64,
    pub states: usize,
    pub overlap_floor: f64,
    pub etas: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Scan {
    /// Peak intensities in a.u.
    pub intensities: Vec<f64>,
    pub orders: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub records: Vec<IonizationRecord>,
    pub orders: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Beam {
    pub profile: BeamProfile,
    pub signal: TabulatedSignal,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub label: String,
    pub output_dir: Option<PathBuf>,
    pub system: Option<SystemSpec>,
    pub pulse: Option<PulseSettings>,
    pub propagation: Option<Propagation>,
    pub splitting: Option<Splitting>,
    pub siegert: Option<Siegert>,
    pub scan: Option<Scan>,
    pub analysis: Option<Analysis>,
    pub beam: Option<Beam>,
    pub tolerance: f64,
    /// Trajectory sampling stride in steps.
    pub record_every: usize,
    /// Normalized config text.
    pub echo: String,
    /// Unit conversions applied while reading, one line each.
    pub conversions: Vec<String>,
    /// Auxiliary input files (path, contents) for hashing.
    pub inputs: Vec<(PathBuf, Vec<u8>)>,
}

const SECTIONS: [&str; 11] =
    ["run", "system", "grid", "pulse", "propagation", "splitting", "siegert", "scan", "analysis", "beam", "check"];

fn need<T>(x: Option<T>, section: &str, scenario: Scenario) -> Result<T> {
    x.ok_or_else(|| Error::Config(format!("scenario '{}' needs a [{section}] section", scenario.name())))
}

impl RunConfig {
    /// Parses and validates `text`; relative file references resolve
    /// against `base`.
    pub fn from_text(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::parse(text)?;
        let mut conv = Vec::new();
        if let Some(s) = ini.section_names().find(|s| !SECTIONS.contains(&s.as_str())) {
            return Err(Error::Config(format!("unknown section [{s}]")));
        }
        let scenario = Scenario::from_name(&ini.choice("run", "scenario", &Scenario::NAMES, None)?);
        let label = ini.str_opt("run", "label").unwrap_or_else(|| scenario.name().to_string());
        let output_dir = ini.str_opt("run", "output_dir").map(|p| base.join(p));
        let tolerance = ini.f64_or("check", "tolerance", 1e-3)?;
        if !(tolerance > 0.0) {
            return Err(Error::Config("[check] tolerance must be positive".into()));
        }

        let system = if ini.has_section("system") || ini.has_section("grid") { Some(read_system(&ini, &mut conv)?) } else { None };
        let pulse = if ini.has_section("pulse") { Some(read_pulse(&ini, scenario, &mut conv)?) } else { None };
        let propagation = if ini.has_section("propagation") { Some(read_propagation(&ini, &mut conv)?) } else { None };
        let splitting = if ini.has_section("splitting") { Some(read_splitting(&ini, &mut conv)?) } else { None };
        let siegert = if ini.has_section("siegert") { Some(read_siegert(&ini, &mut conv)?) } else { None };
        let scan = if ini.has_section("scan") { Some(read_scan(&ini, &mut conv)?) } else { None };
        let record_every = ini.usize_or("propagation", "record_every", 10)?.max(1);
        let mut inputs = Vec::new();
        let analysis = if ini.has_section("analysis") { Some(read_analysis(&ini, base, &mut inputs)?) } else { None };
        let beam = if ini.has_section("beam") { Some(read_beam(&ini, base, &mut conv, &mut inputs)?) } else { None };
        ini.reject_unknown()?;

        let cfg = Self {
            scenario,
            label,
            output_dir,
            system,
            pulse,
            propagation,
            splitting,
            siegert,
            scan,
            analysis,
            beam,
            tolerance,
            record_every,
            echo: ini.echo(),
            conversions: conv,
            inputs,
        };
        cfg.check_requirements()?;
        Ok(cfg)
    }

    fn check_requirements(&self) -> Result<()> {
        let s = self.scenario;
        match s {
            Scenario::Propagate => {
                need(self.system.as_ref(), "system", s)?;
                need(self.pulse.as_ref(), "pulse", s)?;
                need(self.propagation.as_ref(), "propagation", s)?;
            }
            Scenario::Pes | Scenario::IntensityScan => {
                need(self.system.as_ref(), "system", s)?;
                need(self.pulse.as_ref(), "pulse", s)?;
                let p = need(self.propagation.as_ref(), "propagation", s)?;
                let sp = need(self.splitting.as_ref(), "splitting", s)?;
                if p.gauge != Gauge::Velocity || p.method != Method::Lanczos {
                    return Err(Error::Config("spectra need velocity gauge with the lanczos method".into()));
                }
                let t0 = p.t_start.unwrap_or(self.pulse.unwrap().pulse()?.support().0);
                if !(sp.t_final > t0) {
                    return Err(Error::Config("[splitting] t_final must come after the propagation start".into()));
                }
                if s == Scenario::IntensityScan {
                    let scan = need(self.scan.as_ref(), "scan", s)?;
                    if scan.intensities.len() < 3 {
                        return Err(Error::Config("[scan] needs at least three intensities for a fit".into()));
                    }
                }
            }
            Scenario::SiegertScan => {
                need(self.system.as_ref(), "system", s)?;
                need(self.siegert.as_ref(), "siegert", s)?;
            }
            Scenario::Analyze => {
                need(self.analysis.as_ref(), "analysis", s)?;
            }
            Scenario::BeamVolume => {
                need(self.beam.as_ref(), "beam", s)?;
            }
        }
        Ok(())
    }
}

fn log(conv: &mut Vec<String>, what: &str, au: f64, unit: &str) {
    conv.push(format!("{what} = {au:.12e} {unit}"));
}

fn read_system(ini: &Ini, conv: &mut Vec<String>) -> Result<SystemSpec> {
    let kind = ini.choice("system", "potential", &["gaussian", "coulomb", "hfs"], None)?;
    let electrons = ini.usize("system", "electrons")?;
    let potential = match kind.as_str() {
        "gaussian" => {
            let depth = ini.quantity("system", "depth", Dim::Energy)?;
            let width = ini.quantity("system", "width", Dim::Length)?;
            log(conv, "system.depth", depth, "hartree");
            log(conv, "system.width", width, "bohr");
            PotentialSpec::SoftCore { depth, width, n_elec: electrons }
        }
        "coulomb" => PotentialSpec::BareCoulomb { z: ini.f64_opt("system", "z")?.ok_or_else(|| Error::Config("[system] z missing".into()))?, n_elec: electrons },
        _ => PotentialSpec::Hfs {
            z: ini.f64_opt("system", "z")?.ok_or_else(|| Error::Config("[system] z missing".into()))?,
            n_elec: electrons,
            mixing: ini.f64_or("system", "scf_mixing", 0.3)?,
            tol: ini.f64_or("system", "scf_tol", 1e-10)?,
        },
    };
    let e_cut = ini.quantity("system", "e_cut", Dim::Energy)?;
    log(conv, "system.e_cut", e_cut, "hartree");
    let coupling = match ini.choice("system", "coupling", &["interchannel", "intrachannel", "mean-field"], Some("interchannel"))?.as_str() {
        "interchannel" => CouplingMode::Interchannel,
        "intrachannel" => CouplingMode::Intrachannel,
        _ => CouplingMode::MeanFieldOnly,
    };
    let active_shells = ini.str_opt("system", "active").map(|s| s.split_whitespace().map(String::from).collect()).unwrap_or_default();
    let m_selection = match ini.choice("system", "m_states", &["linear", "full"], Some("linear"))?.as_str() {
        "linear" => MSelection::Linear,
        _ => MSelection::Full,
    };
    let r_max = ini.quantity("grid", "r_max", Dim::Length)?;
    log(conv, "grid.r_max", r_max, "bohr");
    let mapping = match ini.choice("grid", "mapping", &["uniform", "sqrt"], Some("uniform"))?.as_str() {
        "uniform" => Mapping::Uniform,
        _ => Mapping::SqrtMapped,
    };
    Ok(SystemSpec {
        r_max,
        n_points: ini.usize("grid", "points")?,
        mapping,
        potential,
        l_max: ini.usize("system", "l_max")?,
        e_cut,
        active_shells,
        m_selection,
        coupling,
        l_max_multipole: ini.usize_opt("system", "multipole_l_max")?,
    })
}

fn read_pulse(ini: &Ini, scenario: Scenario, conv: &mut Vec<String>) -> Result<PulseSettings> {
    let omega = ini.quantity("pulse", "photon", Dim::Energy)?;
    let tau = ini.quantity("pulse", "fwhm", Dim::Time)?;
    let intensity = ini.quantity_opt("pulse", "intensity", Dim::Intensity)?;
    let field = ini.quantity_opt("pulse", "field", Dim::Field)?;
    let f0 = match (intensity, field) {
        (Some(_), Some(_)) => return Err(Error::Config("[pulse] give either intensity or field, not both".into())),
        (Some(i), None) => i.max(0.0).sqrt(),
        (None, Some(f)) => f,
        // the scan supplies its own intensities
        (None, None) if scenario == Scenario::IntensityScan => 0.0,
        (None, None) => return Err(Error::Config("[pulse] needs intensity or field".into())),
    };
    let cep = ini.f64_or("pulse", "cep", 0.0)?;
    let p = PulseSettings { omega, f0, tau, cep };
    p.pulse()?;
    log(conv, "pulse.omega", omega, "hartree");
    log(conv, "pulse.f0", f0, "au");
    log(conv, "pulse.tau", tau, "au");
    Ok(p)
}

fn read_propagation(ini: &Ini, conv: &mut Vec<String>) -> Result<Propagation> {
    let gauge = match ini.choice("propagation", "gauge", &["velocity", "length"], Some("velocity"))?.as_str() {
        "velocity" => Gauge::Velocity,
        _ => Gauge::Length,
    };
    let method = match ini.choice("propagation", "method", &["lanczos", "rk4"], Some("lanczos"))?.as_str() {
        "lanczos" => Method::Lanczos,
        _ => Method::Rk4,
    };
    let dt = ini.quantity("propagation", "dt", Dim::Time)?;
    if !(dt > 0.0) {
        return Err(Error::Config("[propagation] dt must be positive".into()));
    }
    log(conv, "propagation.dt", dt, "au");
    let krylov = ini.usize_or("propagation", "krylov", 12)?;
    let t_start = ini.quantity_opt("propagation", "t_start", Dim::Time)?;
    let t_end = ini.quantity_opt("propagation", "t_end", Dim::Time)?;
    if let (Some(a), Some(b)) = (t_start, t_end) {
        if !(b > a) {
            return Err(Error::Config("[propagation] t_end must exceed t_start".into()));
        }
    }
    let onset = ini.quantity_opt("propagation", "cap_onset", Dim::Length)?;
    let eta = ini.f64_opt("propagation", "cap_strength")?;
    let cap = match (onset, eta) {
        (Some(r), Some(e)) => {
            log(conv, "propagation.cap_onset", r, "bohr");
            Some(AbsorbingPotential::new(r, e)?)
        }
        (None, None) => None,
        _ => return Err(Error::Config("[propagation] cap_onset and cap_strength go together".into())),
    };
    Ok(Propagation { gauge, method, dt, krylov, t_start, t_end, cap })
}

fn read_splitting(ini: &Ini, conv: &mut Vec<String>) -> Result<Splitting> {
    let s = Splitting {
        r_c: ini.quantity("splitting", "radius", Dim::Length)?,
        delta: ini.quantity("splitting", "smoothing", Dim::Length)?,
        every: ini.quantity("splitting", "every", Dim::Time)?,
        t_final: ini.quantity("splitting", "t_final", Dim::Time)?,
        momenta: ini.usize_or("splitting", "momenta", 400)?,
        angles: ini.usize_or("splitting", "angles", 16)?,
        p_max: ini.f64_opt("splitting", "p_max")?,
        mixing: ini.bool_or("splitting", "ion_mixing", false)?,
    };
    if !(s.every > 0.0) {
        return Err(Error::Config("[splitting] every must be positive".into()));
    }
    log(conv, "splitting.radius", s.r_c, "bohr");
    log(conv, "splitting.smoothing", s.delta, "bohr");
    log(conv, "splitting.every", s.every, "au");
    log(conv, "splitting.t_final", s.t_final, "au");
    Ok(s)
}

fn read_siegert(ini: &Ini, conv: &mut Vec<String>) -> Result<Siegert> {
    let f_max = ini.quantity("siegert", "field_max", Dim::Field)?;
    let step = ini.quantity("siegert", "field_step", Dim::Field)?;
    if !(step > 0.0 && f_max > 0.0) || f_max / step > 10_000.0 {
        return Err(Error::Config("[siegert] needs 0 < field_step ≤ field_max with at most 1e4 points".into()));
    }
    let n = (f_max / step + 1e-9).floor() as usize;
    let fields: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let cap_onset = ini.quantity("siegert", "cap_onset", Dim::Length)?;
    let cap_strength = ini.f64_opt("siegert", "cap_strength")?.ok_or_else(|| Error::Config("[siegert] cap_strength missing".into()))?;
    AbsorbingPotential::new(cap_onset, cap_strength)?;
    let etas = ini.f64_list("siegert", "eta_scan")?;
    if let Some(e) = &etas {
        if e.windows(2).any(|w| !(w[1] > w[0])) || e[0] <= 0.0 {
            return Err(Error::Config("[siegert] eta_scan must be positive and ascending".into()));
        }
    }
    log(conv, "siegert.field_max", f_max, "au");
    log(conv, "siegert.field_step", step, "au");
    log(conv, "siegert.cap_onset", cap_onset, "bohr");
    Ok(Siegert {
        fields,
        cap_onset,
        cap_strength,
        states: ini.usize_or("siegert", "states", 4)?,
        overlap_floor: ini.f64_or("siegert", "overlap_floor", tdcis::siegert::DEFAULT_OVERLAP_FLOOR)?,
        etas,
    })
}

fn read_orders(ini: &Ini, section: &str) -> Result<Vec<u32>> {
    let raw = ini.f64_list(section, "orders")?.unwrap_or(vec![1.0, 2.0]);
    raw.iter()
        .map(|&o| {
            if o >= 1.0 && o.fract() == 0.0 && o <= 16.0 {
                Ok(o as u32)
            } else {
                Err(Error::Config(format!("[{section}] orders must be integers ≥ 1, found {o}")))
            }
        })
        .collect()
}

fn read_scan(ini: &Ini, conv: &mut Vec<String>) -> Result<Scan> {
    let intensities = ini
        .quantity_list("scan", "intensities", Dim::Intensity)?
        .ok_or_else(|| Error::Config("[scan] intensities missing".into()))?;
    if intensities.windows(2).any(|w| !(w[1] > w[0])) || intensities[0] <= 0.0 {
        return Err(Error::Config("[scan] intensities must be positive and ascending".into()));
    }
    for (k, i) in intensities.iter().enumerate() {
        log(conv, &format!("scan.intensity[{k}]"), *i, "au");
    }
    Ok(Scan { intensities, orders: read_orders(ini, "scan")? })
}

fn read_file(base: &Path, rel: &str) -> Result<(PathBuf, Vec<u8>)> {
    let path = base.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok((path, bytes))
}

fn read_analysis(ini: &Ini, base: &Path, inputs: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<Analysis> {
    let (path, bytes) = read_file(base, &ini.str("analysis", "yields")?)?;
    let text = String::from_utf8_lossy(&bytes).into_owned();
    let records = tables::parse_yields(&text)?;
    let orders = read_orders(ini, "analysis")?;
    let width = records[0].yields.len();
    if let Some(o) = orders.iter().find(|&&o| o as usize > width) {
        return Err(Error::Config(format!("order {o} requested but the yields file has {width} yield columns")));
    }
    inputs.push((path, bytes));
    Ok(Analysis { records, orders })
}

fn read_beam(ini: &Ini, base: &Path, conv: &mut Vec<String>, inputs: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<Beam> {
    let cm = |key: &str| -> Result<Option<f64>> { Ok(ini.quantity_opt("beam", key, Dim::Length)?.map(units::bohr_to_cm)) };
    let w0 = cm("waist")?.ok_or_else(|| Error::Config("[beam] waist missing".into()))?;
    let z0 = cm("rayleigh")?.ok_or_else(|| Error::Config("[beam] rayleigh missing".into()))?;
    let photons = ini.f64_opt("beam", "photons")?.ok_or_else(|| Error::Config("[beam] photons missing".into()))?;
    let range = match (cm("z_min")?, cm("z_max")?) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(Error::Config("[beam] z_min and z_max go together".into())),
    };
    let profile = BeamProfile::new(w0, z0, photons, range)?;
    let (path, bytes) = read_file(base, &ini.str("beam", "signal")?)?;
    let signal = TabulatedSignal::parse(&String::from_utf8_lossy(&bytes))?;
    if profile.max_fluence() > signal.f_max() {
        return Err(Error::Config(format!(
            "signal table ends at {:e} photons/cm2 but the focus reaches {:e}",
            signal.f_max(),
            profile.max_fluence()
        )));
    }
    conv.push(format!("beam.waist = {w0:.12e} cm"));
    conv.push(format!("beam.rayleigh = {z0:.12e} cm"));
    inputs.push((path, bytes));
    Ok(Beam { profile, signal, samples: ini.usize_or("beam", "samples", 0)? })
}
