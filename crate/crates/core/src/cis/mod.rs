//! The CIS state, one- and two-body couplings and the equations of motion.

mod basis;
mod coulomb;
mod dipole;
mod hamiltonian;

pub use basis::{channel_wavefunction, wave_norm_sqr, Block, ChannelIndex, CisBasis, CisState, MSelection, PartialWave};
pub use coulomb::{
    build_coulomb_table, coulomb_element, default_multipole, min_multipole, slater_rk, yk, yk_columns,
    CouplingMode, CoulombBlock, CoulombTable, OrbitalRef,
};
pub use dipole::{build_dipole_table, orbital_element, radial_up, DipoleTable, Gauge};
pub use hamiltonian::{gemv_rc, gemv_rc_t, CisHamiltonian, RadialBlocks, Symmetry};
