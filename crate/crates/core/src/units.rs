//! Conversion constants between atomic units and lab units.
//!
//! All internals run in Hartree atomic units. Configs and output files use
//! eV, fs, W/cm² and cm.

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211386245988;
/// Atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.024188843265857;
/// Bohr radius in cm.
pub const BOHR_CM: f64 = 5.29177210903e-9;
/// Intensity in W/cm² for a peak field of 1 a.u. (I = F0² times this).
pub const AU_INTENSITY_WCM2: f64 = 3.50944506e16;
/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;
/// Speed of light in a.u.
pub const C_AU: f64 = 137.035999084;
/// Speed of light in cm/s.
pub const C_CM_S: f64 = 2.99792458e10;
/// Elementary charge in C (converts eV to J).
pub const EV_J: f64 = 1.602176634e-19;

pub fn ev_to_hartree(e: f64) -> f64 {
    e / HARTREE_EV
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn fs_to_au(t: f64) -> f64 {
    t / AU_TIME_FS
}

pub fn au_to_fs(t: f64) -> f64 {
    t * AU_TIME_FS
}

pub fn au_to_s(t: f64) -> f64 {
    t * AU_TIME_FS * 1e-15
}

/// Peak field (a.u.) of a linearly polarized pulse with cycle-averaged peak
/// intensity `i_wcm2`.
pub fn intensity_to_field(i_wcm2: f64) -> f64 {
    (i_wcm2 / AU_INTENSITY_WCM2).sqrt()
}

pub fn field_to_intensity(f0: f64) -> f64 {
    f0 * f0 * AU_INTENSITY_WCM2
}

pub fn intensity_to_au(i_wcm2: f64) -> f64 {
    i_wcm2 / AU_INTENSITY_WCM2
}

pub fn intensity_from_au(i: f64) -> f64 {
    i * AU_INTENSITY_WCM2
}

/// Photon flux (photons per cm² per s) for intensity in W/cm² and photon
/// energy in eV.
pub fn photon_flux(i_wcm2: f64, photon_ev: f64) -> f64 {
    i_wcm2 / (photon_ev * EV_J)
}

pub fn bohr_to_cm(x: f64) -> f64 {
    x * BOHR_CM
}

pub fn cm_to_bohr(x: f64) -> f64 {
    x / BOHR_CM
}

/// Width in eV of a level with lifetime `tau_fs`.
pub fn lifetime_to_width_ev(tau_fs: f64) -> f64 {
    HBAR_EV_FS / tau_fs
}

/// Wavelength in nm to photon energy in hartree.
pub fn wavelength_nm_to_hartree(lambda_nm: f64) -> f64 {
    ev_to_hartree(1239.84198 / lambda_nm)
}
