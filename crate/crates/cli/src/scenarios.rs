//! Scenario execution. Everything is computed in memory; the caller writes
//! the files only after the whole run succeeded.

use tdcis::analysis::{keldysh, IonizationRecord};
use tdcis::beam::{monte_carlo_volume, volume_signal, VolumeIntegration};
use tdcis::cis::{CisState, Gauge};
use tdcis::pes::{
    anisotropy, default_p_max, find_peaks, run_pes, write_double_differential, write_energy_spectrum, MomentumGrid,
    PesOutcome, PesSettings, SplittingConfig,
};
use tdcis::propagator::{propagate, Driven, PropagationPlan};
use tdcis::pulse::Pulse;
use tdcis::siegert::{
    diabatize, eta_plateau, eta_scan, export_states, field_free_ground, scan_adiabatic, tunneling_population,
    EigenConfig,
};
use tdcis::system::{System, SystemSpec};
use tdcis::units::{self, HARTREE_EV};
use tdcis::{Error, Result};

use crate::settings::{PulseSettings, RunConfig, Scenario};
use crate::tables;

#[derive(Debug, Default)]
pub struct Outcome {
    /// (file name, contents) in write order.
    pub files: Vec<(String, String)>,
    /// `key = value` lines for the manifest.
    pub diagnostics: Vec<String>,
    /// Scalar used by the refinement check.
    pub observable: Option<(String, f64)>,
}

impl Outcome {
    fn diag(&mut self, key: &str, value: impl std::fmt::Display) {
        self.diagnostics.push(format!("{key} = {value}"));
    }
}

pub fn run(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    match cfg.scenario {
        Scenario::Propagate => run_propagate(cfg),
        Scenario::Pes => run_spectrum(cfg),
        Scenario::IntensityScan => run_intensity_scan(cfg),
        Scenario::SiegertScan => run_siegert(cfg),
        Scenario::Analyze => run_analyze(cfg),
        Scenario::BeamVolume => run_beam(cfg, seed),
    }
}

fn system(spec: &SystemSpec, out: &mut Outcome) -> Result<System> {
    let sys = System::build(spec)?;
    out.diag("basis.dim", sys.basis.dim());
    out.diag("basis.channels", sys.basis.channels().iter().map(|c| c.label.as_str()).collect::<Vec<_>>().join(" "));
    out.diag("ionization_potential_eV", format!("{:.10}", sys.ionization_potential() * HARTREE_EV));
    Ok(sys)
}

fn lab_header(cfg: &RunConfig, pulse: &Pulse) -> String {
    format!(
        "{}\nphoton {:.6} eV, intensity {:.6e} W/cm2, fwhm {:.6} fs",
        cfg.label,
        pulse.omega * HARTREE_EV,
        pulse.peak_intensity_wcm2(),
        units::au_to_fs(pulse.tau)
    )
}

fn run_propagate(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let sys = system(cfg.system.as_ref().unwrap(), &mut out)?;
    let pulse = cfg.pulse.unwrap().pulse()?;
    let p = cfg.propagation.unwrap();
    let h = match p.cap {
        Some(c) => sys.hamiltonian(p.gauge).with_cap(c),
        None => sys.hamiltonian(p.gauge).clone(),
    };
    let (s0, s1) = pulse.support();
    let mut plan = PropagationPlan::new(p.t_start.unwrap_or(s0), p.t_end.unwrap_or(s1), p.dt, p.method, p.krylov)?;
    plan.record_every = cfg.record_every;
    let gen = Driven { h: &h, pulse: &pulse };
    let mut state = CisState::ground(sys.basis.clone());
    let traj = propagate(&mut state, &plan, &gen, &mut [])?;
    let labels: Vec<String> = sys.basis.channels().iter().map(|c| c.label.clone()).collect();
    let mut text = String::new();
    for line in lab_header(cfg, &pulse).lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&traj.to_text(&labels));
    out.files.push(("trajectory.dat".into(), text));
    let excitation = 1.0 - state.alpha0().norm_sqr();
    out.diag("steps", plan.steps());
    out.diag("final_norm", format!("{:.15e}", state.norm_sqr()));
    out.diag("final_excitation", format!("{excitation:.15e}"));
    for (c, l) in labels.iter().enumerate() {
        out.diag(&format!("final_population.{l}"), format!("{:.15e}", state.channel_population(c)));
    }
    out.observable = Some(("final_excitation".into(), excitation));
    Ok(out)
}

fn pes_settings(cfg: &RunConfig, sys: &System, pulse: &Pulse) -> Result<PesSettings> {
    let p = cfg.propagation.unwrap();
    let s = cfg.splitting.unwrap();
    let t_start = p.t_start.unwrap_or(pulse.support().0);
    let times = SplittingConfig::cadence(t_start, s.t_final, s.every);
    let p_max = s.p_max.unwrap_or_else(|| default_p_max(pulse.omega, sys.ionization_potential(), 2));
    Ok(PesSettings {
        splitting: SplittingConfig::new(s.r_c, s.delta, times, s.t_final, sys.spec.r_max)?,
        t_start,
        dt: p.dt,
        krylov_dim: p.krylov,
        cap: p.cap,
        momentum: MomentumGrid::new(p_max, s.momenta, s.angles)?,
        mixing: s.mixing,
    })
}

fn spectrum_for(cfg: &RunConfig, sys: &System, pulse: &Pulse) -> Result<PesOutcome> {
    run_pes(sys.hamiltonian(Gauge::Velocity), pulse, &pes_settings(cfg, sys, pulse)?)
}

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let sys = system(cfg.system.as_ref().unwrap(), &mut out)?;
    let pulse = cfg.pulse.unwrap().pulse()?;
    let res = spectrum_for(cfg, &sys, &pulse)?;
    let es = res.spectrum.energy_spectrum();
    let header = lab_header(cfg, &pulse);
    out.files.push(("spectrum_energy.dat".into(), write_energy_spectrum(&es, &header)));
    out.files.push(("spectrum_angle.dat".into(), write_double_differential(&res.spectrum, &header)));

    let mut peaks = String::from("# E_eV height_per_eV area beta2 beta4\n");
    for pk in find_peaks(&es, 1e-5) {
        let a = anisotropy(&res.spectrum, pk.lo, pk.hi)?;
        peaks.push_str(&format!(
            "{:.8} {:.8e} {:.8e} {:.6} {:.6}\n",
            pk.energy * HARTREE_EV,
            pk.height / HARTREE_EV,
            pk.area,
            a.beta2,
            a.beta4
        ));
    }
    out.files.push(("peaks.dat".into(), peaks));
    let total = es.total();
    out.diag("bandwidth_eV", format!("{:.8}", pulse.bandwidth() * HARTREE_EV));
    out.diag("expected_one_photon_eV", format!("{:.8}", (pulse.omega - sys.ionization_potential()) * HARTREE_EV));
    out.diag("ground_contamination", format!("{:.3e}", res.contamination));
    out.diag("worst_parseval_deficit", format!("{:.3e}", res.worst_deficit()));
    out.diag("splits", res.split_log.len());
    out.diag("total_yield", format!("{total:.15e}"));
    out.diag("remaining_norm", format!("{:.15e}", res.final_state.norm_sqr()));
    out.observable = Some(("total_yield".into(), total));
    Ok(out)
}

/// N-photon yield: spectrum area within ω/2 of N ω - E_b.
fn order_yield(es: &tdcis::pes::EnergySpectrum, omega: f64, ip: f64, n: u32) -> f64 {
    let centre = n as f64 * omega - ip;
    es.area((centre - 0.5 * omega).max(0.0), centre + 0.5 * omega)
}

fn run_intensity_scan(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let sys = system(cfg.system.as_ref().unwrap(), &mut out)?;
    let scan = cfg.scan.as_ref().unwrap();
    let base: PulseSettings = cfg.pulse.unwrap();
    let ip = sys.ionization_potential();
    let mut records = Vec::new();
    for (k, &i) in scan.intensities.iter().enumerate() {
        let pulse = base.with_field(i.sqrt()).pulse()?;
        let res = spectrum_for(cfg, &sys, &pulse)?;
        let es = res.spectrum.energy_spectrum();
        let max_order = *scan.orders.iter().max().unwrap();
        let yields: Vec<f64> = (1..=max_order).map(|n| order_yield(&es, pulse.omega, ip, n)).collect();
        out.diag(&format!("point{k}.worst_parseval_deficit"), format!("{:.3e}", res.worst_deficit()));
        if k == 0 {
            out.observable = Some(("lowest_intensity_one_photon_yield".into(), yields[0]));
        }
        records.push(IonizationRecord::new(
            pulse.omega * HARTREE_EV,
            pulse.peak_intensity_wcm2(),
            units::au_to_fs(pulse.tau),
            yields,
        )?);
    }
    let (report, slopes) = tables::fit_report(&records, &scan.orders)?;
    out.files.push(("yields.dat".into(), tables::write_yields(&records, &cfg.label)));
    out.files.push(("fit.dat".into(), report));
    for (n, s) in scan.orders.iter().zip(&slopes) {
        out.diag(&format!("slope.order{n}"), format!("{s:.6}"));
    }
    Ok(out)
}

fn run_siegert(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let sys = system(cfg.system.as_ref().unwrap(), &mut out)?;
    let sg = cfg.siegert.as_ref().unwrap();
    let cap = tdcis::potential::AbsorbingPotential::new(sg.cap_onset, sg.cap_strength)?;
    let ecfg = EigenConfig { n_eigs: sg.states, ..Default::default() };
    let scan = scan_adiabatic(&sys.length, Some(cap), &sg.fields, &ecfg)?;
    let all: Vec<_> = scan.iter().filter_map(|p| p.states.as_ref().ok()).flatten().collect();
    out.files.push(("states.dat".into(), export_states(all)));
    let track = diabatize(&scan, &field_free_ground(sys.length.dim()), sg.overlap_floor)?;
    out.files.push(("diabatic.dat".into(), track.export()));
    out.diag("missing_fields", format!("{:?}", track.missing));
    out.diag("below_overlap_floor", format!("{:?}", track.flagged()));
    let last = track.entries.last().ok_or_else(|| Error::Numerical("no field converged".into()))?;
    out.observable = Some(("width_at_field_max".into(), last.state.width()));

    if let Some(etas) = &sg.etas {
        let f = *sg.fields.last().unwrap();
        // aim at the tracked resonance; the default target sits in the continuum
        let target = EigenConfig { target: last.state.energy.re, ..ecfg };
        let rows = eta_scan(&sys.length, sg.cap_onset, etas, f, &target)?;
        let mut text = format!("# eta Gamma_au at F = {f:.6e} au\n");
        for (e, s) in &rows {
            text.push_str(&format!("{e:.6e} {:.15e}\n", s.width()));
        }
        out.files.push(("eta_scan.dat".into(), text));
        let samples: Vec<(f64, f64)> = rows.iter().map(|(e, s)| (*e, s.width())).collect();
        match eta_plateau(&samples) {
            Some(p) => out.diag("eta_plateau", format!("{:.3e}..{:.3e} spread {:.3e}", p.eta_lo, p.eta_hi, p.variation)),
            None => out.diag("eta_plateau", "none"),
        }
    }
    if let Some(ps) = cfg.pulse {
        let pulse = ps.pulse()?;
        let (_, t1) = pulse.support();
        let p = tunneling_population(&track, &pulse, &[t1])?[0];
        out.diag("keldysh", format!("{:.6}", keldysh(pulse.peak_intensity_au(), pulse.omega, sys.ionization_potential())?));
        out.diag("diabatic_ground_population", format!("{p:.15e}"));
    }
    Ok(out)
}

fn run_analyze(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let a = cfg.analysis.as_ref().unwrap();
    let (report, slopes) = tables::fit_report(&a.records, &a.orders)?;
    out.files.push(("fit.dat".into(), report));
    for (n, s) in a.orders.iter().zip(&slopes) {
        out.diag(&format!("slope.order{n}"), format!("{s:.6}"));
    }
    Ok(out)
}

fn run_beam(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let b = cfg.beam.as_ref().unwrap();
    let v = volume_signal(&b.signal, &b.profile, VolumeIntegration::default())?;
    let mut text = String::from("# volume-integrated signal (signal units x cm^3)\n");
    text.push_str(&format!("quadrature {:.12e}\nrefined {:.12e}\n", v.value, v.refined));
    out.diag("refinement_change", format!("{:.3e}", v.rel_change()));
    if b.samples > 0 {
        let mc = monte_carlo_volume(&b.signal, &b.profile, b.samples, seed)?;
        text.push_str(&format!("monte_carlo {:.12e} {:.3e}\n", mc.value, mc.std_error));
        out.diag("monte_carlo_seed", seed);
    }
    out.files.push(("volume.dat".into(), text));
    Ok(out)
}
