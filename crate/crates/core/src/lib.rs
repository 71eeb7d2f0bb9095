//! Time-splitting spectral solvers for semiclassically scaled
//! time-dependent self-consistent field (TDSCF) systems.
//!
//! * [`grid`]: periodic grids, Fourier analysis, spectral derivatives.
//! * [`field`]: wavefunctions on a grid and WKB initial data.
//! * [`potential`]: coupling potentials and the mean-field functionals.
//! * [`observables`]: mass, energy, densities, currents, Wigner transforms.
//! * [`ssp2`]: Strang splitting for the coupled Schrödinger pair.
//! * [`svsp2`]: Strang-Verlet splitting for the Ehrenfest system.
//! * [`classical`]: particle dynamics for the classical-limit systems.
//! * [`harness`]: presets, convergence sweeps and CSV output.

pub mod classical;
pub mod field;
pub mod grid;
pub mod harness;
pub mod observables;
pub mod potential;
pub mod ssp2;
pub mod svsp2;

mod error;
mod steps;

pub use error::{Error, Result};
pub use field::{Amplitude, Phase, WaveField, WkbData};
pub use grid::{Grid1D, SpectralCoeffs};
pub use potential::PotentialSpec;

pub use num_complex::Complex64;
