//! Refinement check: rerun the scenario with dt halved, the grid doubled
//! and the basis cutoff raised by half, and compare one scalar observable.

use std::fmt::Write as _;

use tdcis::system::SystemSpec;
use tdcis::{Error, Result};

use crate::scenarios;
use crate::settings::{Propagation, RunConfig, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct AxisResult {
    pub axis: &'static str,
    pub change: &'static str,
    pub value: f64,
    pub rel_change: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub observable: String,
    pub baseline: f64,
    pub tolerance: f64,
    pub axes: Vec<AxisResult>,
}

impl CheckReport {
    pub fn flagged(&self) -> Vec<&'static str> {
        self.axes.iter().filter(|a| a.flagged).map(|a| a.axis).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# observable {} tolerance {:.3e}", self.observable, self.tolerance);
        let _ = writeln!(s, "# axis change value rel_change flagged");
        let _ = writeln!(s, "baseline - {:.15e} 0 false", self.baseline);
        for a in &self.axes {
            let _ = writeln!(s, "{} {} {:.15e} {:.6e} {}", a.axis, a.change, a.value, a.rel_change, a.flagged);
        }
        s
    }
}

fn observable(cfg: &RunConfig) -> Result<(String, f64)> {
    scenarios::run(cfg, 0)?.observable.ok_or_else(|| Error::Config("scenario has no refinement observable".into()))
}

pub fn doubling_check(cfg: &RunConfig) -> Result<CheckReport> {
    if matches!(cfg.scenario, Scenario::Analyze | Scenario::BeamVolume) {
        return Err(Error::Config(format!("scenario '{}' has no grid to refine", cfg.scenario.name())));
    }
    let (name, baseline) = observable(cfg)?;
    let mut variants: Vec<(&'static str, &'static str, RunConfig)> = Vec::new();
    if let Some(p) = cfg.propagation {
        let mut c = cfg.clone();
        c.propagation = Some(Propagation { dt: 0.5 * p.dt, ..p });
        c.record_every = cfg.record_every * 2;
        variants.push(("time", "dt/2", c));
    }
    let spec = cfg.system.as_ref().expect("grid scenarios carry a system");
    let mut c = cfg.clone();
    c.system = Some(SystemSpec { n_points: spec.n_points * 2, ..spec.clone() });
    variants.push(("grid", "points*2", c));
    let mut c = cfg.clone();
    c.system = Some(SystemSpec { e_cut: spec.e_cut * 1.5, ..spec.clone() });
    variants.push(("basis", "e_cut*1.5", c));

    let mut axes = Vec::new();
    for (axis, change, c) in variants {
        let (_, value) = observable(&c)?;
        let rel_change = if baseline == 0.0 { value.abs() } else { (value / baseline - 1.0).abs() };
        axes.push(AxisResult { axis, change, value, rel_change, flagged: !(rel_change <= cfg.tolerance) });
    }
    Ok(CheckReport { observable: name, baseline, tolerance: cfg.tolerance, axes })
}
