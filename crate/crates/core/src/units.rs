//! Conversions between laboratory units and atomic units.
//!
//! Everything inside the crate runs in atomic units (ħ = mₑ = e = 1). Lab
//! units (nm, W·cm⁻², fs, eV) appear only at configuration and report
//! boundaries.

use crate::error::{Error, Result};

/// One atomic unit of time, in seconds.
pub const AU_TIME_SECONDS: f64 = 2.418884e-17;

/// One atomic unit of energy (hartree), in eV.
pub const AU_ENERGY_EV: f64 = 27.2114;

/// Intensity whose peak field is one atomic unit of field, in W·cm⁻².
pub const AU_INTENSITY_W_CM2: f64 = 3.50945e16;

/// Photon energy in hartree times wavelength in nm.
pub const WAVELENGTH_ENERGY_NM: f64 = 45.5634;

/// Peak field amplitude (a.u.) for a given intensity (W·cm⁻²).
pub fn intensity_to_field(intensity: f64) -> Result<f64> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::Domain {
            quantity: "intensity",
            value: intensity,
            reason: "must be finite and non-negative",
        });
    }
    Ok((intensity / AU_INTENSITY_W_CM2).sqrt())
}

pub fn field_to_intensity(field: f64) -> f64 {
    field * field * AU_INTENSITY_W_CM2
}

/// Angular frequency (a.u.) of light with the given vacuum wavelength (nm).
pub fn wavelength_to_omega(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(Error::Domain {
            quantity: "wavelength",
            value: wavelength_nm,
            reason: "must be finite and positive",
        });
    }
    Ok(WAVELENGTH_ENERGY_NM / wavelength_nm)
}

pub fn omega_to_wavelength(omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain {
            quantity: "omega",
            value: omega,
            reason: "must be finite and positive",
        });
    }
    Ok(WAVELENGTH_ENERGY_NM / omega)
}

pub fn fs_to_au(femtoseconds: f64) -> f64 {
    femtoseconds * 1e-15 / AU_TIME_SECONDS
}

pub fn au_to_fs(time: f64) -> f64 {
    time * AU_TIME_SECONDS * 1e15
}

pub fn ev_to_au(ev: f64) -> f64 {
    ev / AU_ENERGY_EV
}

pub fn au_to_ev(energy: f64) -> f64 {
    energy * AU_ENERGY_EV
}
