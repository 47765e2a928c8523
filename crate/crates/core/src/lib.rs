//! Multi-pulse standing waves of the discrete nonlinear Schrödinger lattice:
//! continuation from the anti-continuum limit, stability spectra and the
//! leading-order predictions for the small interaction eigenvalues.

pub mod eig;
pub mod error;
pub mod lattice;
pub mod multipulse;
pub mod output;
pub mod plot;
pub mod solver;
pub mod spectrum;
pub mod study;
pub mod theory;
pub mod tridiag;

pub use error::{DnlsError, Result};
pub use lattice::{LatticeField, Problem};
pub use multipulse::{build_multipulse, Phase, PhasePattern, PulseSpec};
pub use solver::{continue_in_d, newton_solve, omega_derivative, ContinuationSettings, NewtonSettings, StepPolicy};
pub use output::{emit_outputs, Emit};
pub use spectrum::{compute_spectrum, Axis, ClassifyTolerances, EigenClass, Spectrum};
pub use theory::{PredictionRoute, TheoryPrediction};
pub use study::{run_decay_study, run_error_sweep, DecayStudy, ErrorSweep, StudySettings};
