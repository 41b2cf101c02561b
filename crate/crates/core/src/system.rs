//! Assembly of a complete CIS system from a compact description.

use std::sync::Arc;

use crate::cis::{
    build_coulomb_table, build_dipole_table, CisBasis, CisHamiltonian, CouplingMode, Gauge, MSelection,
};
use crate::error::{Error, Result};
use crate::grid::{build_grid, solve_orbitals, Mapping, RadialGrid};
use crate::potential::{bare_coulomb, hfs_scf, soft_core, RadialPotential};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    BareCoulomb { z: f64, n_elec: usize },
    SoftCore { depth: f64, width: f64, n_elec: usize },
    Hfs { z: f64, n_elec: usize, mixing: f64, tol: f64 },
    /// Samples on the grid nodes.
    Tabulated { z: f64, n_elec: usize, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub r_max: f64,
    pub n_points: usize,
    pub mapping: Mapping,
    pub potential: PotentialSpec,
    pub l_max: usize,
    pub e_cut: f64,
    /// Labels such as "1s"; empty activates every occupied orbital.
    pub active_shells: Vec<String>,
    pub m_selection: MSelection,
    pub coupling: CouplingMode,
    pub l_max_multipole: Option<usize>,
}

impl SystemSpec {
    /// Two electrons in the ground state of a Gaussian well.
    pub fn soft_core_model(depth: f64, width: f64, r_max: f64, n_points: usize, l_max: usize, e_cut: f64) -> Self {
        Self {
            r_max,
            n_points,
            mapping: Mapping::Uniform,
            potential: PotentialSpec::SoftCore { depth, width, n_elec: 2 },
            l_max,
            e_cut,
            active_shells: Vec::new(),
            m_selection: MSelection::Linear,
            coupling: CouplingMode::MeanFieldOnly,
            l_max_multipole: None,
        }
    }
}

/// Basis plus the Hamiltonian in both gauges (sharing one Coulomb table).
#[derive(Debug, Clone)]
pub struct System {
    pub spec: SystemSpec,
    pub potential: RadialPotential,
    pub basis: Arc<CisBasis>,
    pub velocity: CisHamiltonian,
    pub length: CisHamiltonian,
}

pub fn make_potential(grid: &RadialGrid, spec: &PotentialSpec) -> Result<RadialPotential> {
    Ok(match spec {
        PotentialSpec::BareCoulomb { z, n_elec } => bare_coulomb(grid, *z).with_electrons(*n_elec),
        PotentialSpec::SoftCore { depth, width, n_elec } => soft_core(grid, *depth, *width)?.with_electrons(*n_elec),
        PotentialSpec::Hfs { z, n_elec, mixing, tol } => hfs_scf(grid, *z, *n_elec, *mixing, *tol)?,
        PotentialSpec::Tabulated { z, n_elec, values } => {
            if values.len() != grid.n_points() {
                return Err(Error::Config(format!(
                    "tabulated potential has {} samples, grid has {}",
                    values.len(),
                    grid.n_points()
                )));
            }
            RadialPotential::tabulated(*z, *n_elec, values.clone())
        }
    })
}

impl System {
    pub fn build(spec: &SystemSpec) -> Result<Self> {
        let grid = build_grid(spec.r_max, spec.n_points, spec.mapping)?;
        let potential = make_potential(&grid, &spec.potential)?;
        let (occupied, virtuals) = solve_orbitals(&grid, &potential, spec.l_max, spec.e_cut)?;
        let basis = if spec.active_shells.is_empty() {
            CisBasis::new(grid, occupied, virtuals, None, spec.m_selection)?
        } else {
            CisBasis::with_shells(grid, occupied, virtuals, &spec.active_shells, spec.m_selection)?
        };
        let basis = Arc::new(basis);
        let coulomb = Arc::new(build_coulomb_table(&basis, spec.coupling, spec.l_max_multipole)?);
        let velocity = CisHamiltonian::from_shared(
            basis.clone(),
            Arc::new(build_dipole_table(&basis, Gauge::Velocity)),
            coulomb.clone(),
        );
        let length =
            CisHamiltonian::from_shared(basis.clone(), Arc::new(build_dipole_table(&basis, Gauge::Length)), coulomb);
        Ok(Self { spec: spec.clone(), potential, basis, velocity, length })
    }

    pub fn hamiltonian(&self, gauge: Gauge) -> &CisHamiltonian {
        match gauge {
            Gauge::Velocity => &self.velocity,
            Gauge::Length => &self.length,
        }
    }

    /// Binding energy of the highest occupied orbital (positive).
    pub fn ionization_potential(&self) -> f64 {
        -self.basis.occupied().iter().map(|o| o.energy).fold(f64::NEG_INFINITY, f64::max)
    }
}
