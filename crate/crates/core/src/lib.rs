//! Propagation of weak probe pulses through multilayer electromagnetically
//! induced transparency (EIT) media with time-modulated control fields.
//!
//! The crate provides three engines operating in normalized units
//! (`omega_p = k_p = c = 1` unless noted otherwise):
//!
//! * [`dispersion`] — closed-form and small-matrix analysis of the EIT
//!   optical response: susceptibility, polariton bands, group velocity,
//!   decay, reflectivity, transmission window, adiabaticity.
//! * [`mb`] — split-step spectral integration of the modified-SVEA
//!   Maxwell–Bloch system on a 1D grid with space-dependent coupling and
//!   space- and time-dependent control field.
//! * [`flow`] — fast effective description of dark-polariton transport:
//!   a continuity equation for the field intensity with a diffusion loss
//!   term, plus the closed-form vacuum-defect solution.
//!
//! [`scenario`] assembles the building blocks into ready-to-run
//! experiments, [`measure`] reduces run outputs to scalar observables and
//! [`output`] writes snapshot/diagnostic files.

pub mod dispersion;
pub mod error;
pub mod flow;
pub mod grid;
pub mod math;
pub mod measure;
pub mod medium;
pub mod mb;
pub mod output;
pub mod runner;
pub mod scenario;

pub use dispersion::{DispersionSubstitute, EitParams, PolaritonPoint};
pub use error::CoreError;
pub use flow::{FlowSolver, IntensityState};
pub use grid::Grid;
pub use mb::{FieldState, MbSolver, PulseSpec};
pub use medium::{Layer, MediumProfile, ModulationProtocol, RampShape, Segment};
pub use scenario::Scenario;
