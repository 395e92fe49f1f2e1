//! Scenario drivers built on the lower modules: homogeneous relaxation,
//! specular billiards, the truncated energy functionals and the cavity
//! checks.

mod billiards;
mod cavity;
mod functionals;
mod relaxation;

pub use billiards::{
    random_particles, reflect, run_billiard, run_particle, velocity, BilliardConfig, BilliardReport, Domain, Particle,
    ParticleReport,
};
pub use cavity::{observed_order, run_cavity, CavityConfig, CavityReport, Level};
pub use functionals::{functionals, FunctionalValue, MAX_TIME_DERIVATIVES};
pub use relaxation::{
    fit_decay, run_relaxation, write_relaxation_csv, DecayFit, DiagnosticsRecord, InitialRecipe, Integrator,
    RelaxationConfig, RelaxationRun,
};
