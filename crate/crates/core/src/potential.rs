//! Central-field potentials and the complex absorbing potential.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{aufbau, RadialGrid};
use crate::tridiag::Selection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    BareCoulomb,
    SoftCore,
    Hfs,
    Tabulated,
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::BareCoulomb => "bare-coulomb",
            PotentialKind::SoftCore => "soft-core",
            PotentialKind::Hfs => "hfs",
            PotentialKind::Tabulated => "tabulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "bare-coulomb" => PotentialKind::BareCoulomb,
            "soft-core" => PotentialKind::SoftCore,
            "hfs" => PotentialKind::Hfs,
            "tabulated" => PotentialKind::Tabulated,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    pub kind: PotentialKind,
    pub z: f64,
    pub n_elec: usize,
    values: Vec<f64>,
}

impl RadialPotential {
    pub fn tabulated(z: f64, n_elec: usize, values: Vec<f64>) -> Self {
        Self { kind: PotentialKind::Tabulated, z, n_elec, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Z' = Z - N_elec.
    pub fn z_eff(&self) -> f64 {
        self.z - self.n_elec as f64
    }

    /// Same potential, different electron count used for orbital filling.
    pub fn with_electrons(mut self, n_elec: usize) -> Self {
        self.n_elec = n_elec;
        self
    }
}

/// -Z/r. The electron count defaults to a closed 1s² shell.
pub fn bare_coulomb(grid: &RadialGrid, z: f64) -> RadialPotential {
    RadialPotential {
        kind: PotentialKind::BareCoulomb,
        z,
        n_elec: 2,
        values: grid.r().iter().map(|r| -z / r).collect(),
    }
}

/// depth·exp(-r²/width²). The electron count defaults to a closed 1s² shell.
pub fn soft_core(grid: &RadialGrid, depth: f64, width: f64) -> Result<RadialPotential> {
    if !(depth < 0.0) {
        return Err(Error::Config(format!("soft-core depth must be negative, got {depth}")));
    }
    if !(width > 0.0) {
        return Err(Error::Config(format!("soft-core width must be positive, got {width}")));
    }
    Ok(RadialPotential {
        kind: PotentialKind::SoftCore,
        z: 2.0,
        n_elec: 2,
        values: grid.r().iter().map(|r| soft_core_value(depth, width, *r)).collect(),
    })
}

pub fn soft_core_value(depth: f64, width: f64, r: f64) -> f64 {
    depth * (-(r * r) / (width * width)).exp()
}

/// Outcome of one HFS iteration from a given density.
#[derive(Debug, Clone)]
pub struct HfsStep {
    pub potential: Vec<f64>,
    pub energies: Vec<f64>,
    /// Radial density Σ occ u² (integrates to N_elec).
    pub density: Vec<f64>,
}

/// Potential generated by a radial density n(r) = 4πr²ρ: nuclear, Hartree,
/// Slater exchange, with the Latter tail.
pub fn hfs_potential(grid: &RadialGrid, z: f64, n_elec: usize, density: &[f64]) -> Vec<f64> {
    let tail = -(z - n_elec as f64 + 1.0);
    hfs_untailed(grid, z, density)
        .into_iter()
        .zip(grid.r())
        .map(|(v, r)| v.min(tail / r))
        .collect()
}

/// Nuclear + Hartree + Slater exchange, without the Latter tail.
pub fn hfs_untailed(grid: &RadialGrid, z: f64, density: &[f64]) -> Vec<f64> {
    let r = grid.r();
    let w = grid.weights();
    let n = r.len();
    let mut inner = vec![0.0; n];
    let mut acc = 0.0;
    for k in 0..n {
        acc += w[k] * density[k];
        inner[k] = acc;
    }
    let mut outer = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        outer[k] = acc;
        acc += w[k] * density[k] / r[k];
    }
    (0..n)
        .map(|k| {
            let rho = (density[k] / (4.0 * PI * r[k] * r[k])).max(1e-30);
            let vx = -1.5 * (3.0 * rho / PI).cbrt();
            -z / r[k] + inner[k] / r[k] + outer[k] + vx
        })
        .collect()
}

fn occupied_solve(grid: &RadialGrid, v: &[f64], shells: &[(usize, usize)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.n_points();
    let mut density = vec![0.0; n];
    let mut energies = Vec::new();
    let l_top = shells.iter().map(|s| s.1).max().unwrap_or(0);
    for l in 0..=l_top {
        let count = shells.iter().filter(|s| s.1 == l).count();
        if count == 0 {
            continue;
        }
        let pairs = grid.radial_eigenpairs(v, l, Selection::Lowest(count))?;
        for (e, u) in pairs {
            energies.push(e);
            let occ = 2.0 * (2 * l + 1) as f64;
            for k in 0..n {
                density[k] += occ * u[k] * u[k];
            }
        }
    }
    Ok((energies, density))
}

/// One SCF map: density in, potential and output density out.
pub fn hfs_iterate(grid: &RadialGrid, z: f64, n_elec: usize, density: &[f64]) -> Result<HfsStep> {
    let shells = aufbau(n_elec)?;
    let potential = hfs_potential(grid, z, n_elec, density);
    let (energies, density) = occupied_solve(grid, &potential, &shells)?;
    Ok(HfsStep { potential, energies, density })
}

pub const HFS_MAX_ITER: usize = 200;

/// Self-consistent Hartree-Fock-Slater potential with linear density mixing.
pub fn hfs_scf(grid: &RadialGrid, z: f64, n_elec: usize, mixing: f64, tol: f64) -> Result<RadialPotential> {
    Ok(hfs_scf_with_density(grid, z, n_elec, mixing, tol)?.0)
}

/// As [`hfs_scf`], also returning the converged radial density.
pub fn hfs_scf_with_density(
    grid: &RadialGrid,
    z: f64,
    n_elec: usize,
    mixing: f64,
    tol: f64,
) -> Result<(RadialPotential, Vec<f64>)> {
    if n_elec == 0 || !n_elec.is_multiple_of(2) {
        return Err(Error::Config(format!("HFS needs a closed shell, got {n_elec} electrons")));
    }
    if !(mixing > 0.0 && mixing <= 1.0) {
        return Err(Error::Config(format!("mixing must lie in (0, 1], got {mixing}")));
    }
    if !(z > 0.0) {
        return Err(Error::Config(format!("nuclear charge must be positive, got {z}")));
    }
    let shells = aufbau(n_elec)?;
    // screened start: nuclear charge seen at short range, Z'+1 far out
    let a = 1.5 * z.cbrt();
    let z_out = z - n_elec as f64 + 1.0;
    let v0: Vec<f64> = grid
        .r()
        .iter()
        .map(|r| -(z_out + (z - z_out) * (-a * r).exp()) / r)
        .collect();
    let (mut energies, mut density) = occupied_solve(grid, &v0, &shells)?;
    let mut residuals = Vec::new();
    for _ in 0..HFS_MAX_ITER {
        let step = hfs_iterate(grid, z, n_elec, &density)?;
        let change = step
            .energies
            .iter()
            .zip(&energies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(change);
        energies = step.energies;
        if change < tol {
            let v = hfs_potential(grid, z, n_elec, &density);
            return Ok((RadialPotential { kind: PotentialKind::Hfs, z, n_elec, values: v }, density));
        }
        for (d, s) in density.iter_mut().zip(&step.density) {
            *d = (1.0 - mixing) * *d + mixing * s;
        }
    }
    Err(Error::ScfConvergence { residuals })
}

/// Quadratic absorber -iη(r - r_cap)² beyond the onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingPotential {
    pub r_cap: f64,
    pub eta: f64,
}

impl AbsorbingPotential {
    pub fn new(r_cap: f64, eta: f64) -> Result<Self> {
        if !(r_cap >= 0.0) || !(eta >= 0.0) {
            return Err(Error::Config(format!("absorber needs r_cap ≥ 0 and η ≥ 0, got {r_cap}, {eta}")));
        }
        Ok(Self { r_cap, eta })
    }

    /// Magnitude W(r) so that the absorber is -iW(r).
    pub fn strength(&self, r: f64) -> f64 {
        if r <= self.r_cap {
            0.0
        } else {
            self.eta * (r - self.r_cap).powi(2)
        }
    }
}

pub fn cap_value(cap: &AbsorbingPotential, r: f64) -> Complex64 {
    Complex64::new(0.0, -cap.strength(r))
}

/// Text dump: `@potential` header then `r V` rows at 17 significant digits.
pub fn write_potential(grid: &RadialGrid, p: &RadialPotential) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# columns: r (bohr), V (hartree)");
    let _ = writeln!(s, "@potential kind={} z={:.16e} n_elec={}", p.kind.name(), p.z, p.n_elec);
    for (r, v) in grid.r().iter().zip(&p.values) {
        let _ = writeln!(s, "{r:.16e} {v:.16e}");
    }
    s
}

/// Reads a dump written by [`write_potential`]; the result is `tabulated`.
pub fn read_potential(text: &str) -> Result<(Vec<f64>, RadialPotential)> {
    let mut z = None;
    let mut n_elec = None;
    let mut r = Vec::new();
    let mut v = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let perr = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@potential") {
            for kv in rest.split_whitespace() {
                let (k, val) = kv.split_once('=').ok_or_else(|| perr("expected key=value"))?;
                match k {
                    "kind" => {}
                    "z" => z = Some(val.parse::<f64>().map_err(|_| perr("bad z"))?),
                    "n_elec" => n_elec = Some(val.parse::<usize>().map_err(|_| perr("bad n_elec"))?),
                    _ => return Err(perr("unknown potential header key")),
                }
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(perr("expected r V"));
        };
        r.push(a.parse::<f64>().map_err(|_| perr("bad r"))?);
        v.push(b.parse::<f64>().map_err(|_| perr("bad V"))?);
    }
    let z = z.ok_or_else(|| Error::Parse { line: 0, msg: "missing @potential header".into() })?;
    let n_elec = n_elec.ok_or_else(|| Error::Parse { line: 0, msg: "missing n_elec".into() })?;
    Ok((r, RadialPotential::tabulated(z, n_elec, v)))
}
