//! Physical constants (SI) and the unit conversions used for reporting.

use std::f64::consts::PI;

/// Vacuum permeability (T m / A).
pub const MU_0: f64 = 4.0e-7 * PI;

/// mu_0 / (4 pi), the Biot-Savart prefactor (T m / A).
pub const MU0_OVER_4PI: f64 = 1.0e-7;

/// Bohr magneton (J / T).
pub const MU_B: f64 = 9.274_010_078_3e-24;

/// Planck constant (J s).
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK_H / (2.0 * PI);

/// Boltzmann constant (J / K).
pub const K_B: f64 = 1.380_649e-23;

/// Resistivity of copper at 20 C (ohm m).
pub const RHO_COPPER: f64 = 1.7e-8;

/// Riemann zeta(3); the BEC threshold phase-space density in a harmonic trap.
pub const ZETA_3: f64 = 2.612;

// Unit conversions. Internal units are SI; reports use G, cm, MHz.
pub const TESLA_TO_GAUSS: f64 = 1.0e4;
pub const GAUSS_TO_TESLA: f64 = 1.0e-4;
/// 1 T/m = 100 G/cm.
pub const TPM_TO_GPCM: f64 = 100.0;
pub const GPCM_TO_TPM: f64 = 1.0e-2;
/// 1 T/m^2 = 1 G/cm^2.
pub const TPM2_TO_GPCM2: f64 = 1.0;
pub const GPCM2_TO_TPM2: f64 = 1.0;

/// Bohr magneton over Planck constant, in Hz/T (~1.3996 MHz/G).
pub const MU_B_OVER_H: f64 = MU_B / PLANCK_H;
