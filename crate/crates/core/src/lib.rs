//! Pseudo-spectral simulation of compressible and incompressible nematic
//! liquid crystal flow on the periodic box, and tools to measure the
//! incompressible limit `λ → ∞`.

pub mod compressible;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod imex;
pub mod incompressible;
pub mod observe;
pub mod picard;
pub mod snapshot;
pub mod spectral;
pub mod state;
pub mod sweep;

pub use compressible::{
    eval_rhs_conservative, eval_rhs_nonconservative, ericksen_stress_div,
    ericksen_stress_divergence_form, CompressibleRHS, CompressibleSolver,
};
pub use diagnostics::{
    energy_functionals, fit_rate, modulated_energy, CompressibleEnergyObserver, EnergyFunctionals,
    IncompressibleEnergyObserver, ModulatedEnergy,
};
pub use error::{NlcError, Result};
pub use field::{DirectorField, ScalarField, Spectrum, VectorField};
pub use grid::Grid;
pub use imex::{Scheme, StepControl};
pub use incompressible::{
    eval_rhs_incompressible, recover_pressure, run_incompressible, step_incompressible,
    IncompressibleRHS, IncompressibleSolver,
};
pub use observe::{Observer, StepInfo, Trajectory};
pub use picard::{linearized_step, picard_iterate, ContractionReport, Linearization, LinearizationInput};
pub use state::{
    well_prepared_initial_data, CompressibleState, IncompressibleState, ModelParams, Preparation,
    PressureLaw,
};
pub use sweep::{sweep_lambda, RateReport, SweepConfig};
