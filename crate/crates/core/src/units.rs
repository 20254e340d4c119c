//! Unit system shared by every module.
//!
//! Length nm, time ps, energy kJ/mol, mass amu, charge e, temperature K.
//! With these choices amu·nm²/ps² is exactly one kJ/mol, so integrators never
//! carry a conversion factor. Forces are in kJ·mol⁻¹·nm⁻¹.

/// Boltzmann constant in kJ·mol⁻¹·K⁻¹.
pub const BOLTZMANN: f64 = 0.008314462618;

/// Electrostatic conversion factor 1/(4πε₀) in kJ·mol⁻¹·nm·e⁻².
pub const COULOMB_PREFACTOR: f64 = 138.935458;

/// One kJ·mol⁻¹·nm⁻³ expressed in bar.
pub const BAR_PER_KJ_MOL_NM3: f64 = 16.605_390_404;

/// Femtoseconds to picoseconds.
pub const PS_PER_FS: f64 = 1.0e-3;
