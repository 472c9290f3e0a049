//! Simulator for the gravity-mediated-entanglement quantum circuit and its
//! two-photon linear-optics implementation.
//!
//! The crate is split by concern:
//!
//! * [`qmath`] dense complex linear algebra for small systems (states,
//!   density matrices, partial traces, a Jacobi Hermitian eigensolver).
//! * [`circuit`] the abstract spin/geometry circuit and the final spin state.
//! * [`photonic`] a two-photon Fock-space simulator of the optical network,
//!   coincidence post-selection and Hong-Ou-Mandel interference.
//! * [`noise`] phenomenological decoherence channels (polarization-delay
//!   dephasing, photon distinguishability).
//! * [`certify`] entanglement certification: witness, CHSH, Poisson count
//!   simulation, linear and maximum-likelihood tomography, PPT.

pub mod certify;
pub mod circuit;
pub mod noise;
pub mod photonic;
pub mod qmath;

pub use num_complex::Complex64 as C64;

/// Qubit-to-polarization labelling used throughout: `|0> = V`, `|1> = H`.
pub const BASIS_CONVENTION: &str = "qubit |0> = V (vertical), qubit |1> = H (horizontal)";

/// Fixed, locale-independent text form for reals in CSV output: scientific
/// notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}
