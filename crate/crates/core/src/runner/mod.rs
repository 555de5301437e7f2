//! Configuration, named scenarios, single runs with on-disk artifacts, parallel sweeps
//! and verification suites.

mod config;
mod presets;
mod run;
mod sweep;
mod verify;

pub use config::{
    GridConfig, InitialConfig, RunConfig, SweepAxes, SweepCell, SweepConfig, TestFunctionConfig,
    SCHEMA_VERSION,
};
pub use presets::{
    critical_mass_alpha1, preset, preset_sweep, reference_gns, supercritical_mass_alpha05,
    PRESETS, REFERENCE_GNS_BUDGET, SWEEP_PRESETS,
};
pub use run::{
    cauchy_residual, exit_code, read_summary, run, run_with, snapshot_name, RunContext,
    RunReport,
};
pub use sweep::{sweep, write_phase_csv, PhasePoint, PHASE_HEADER};
pub use verify::{
    cross_validation_checks, eigenmode_check, gns_stability_check, heat_oracle, ipp_checks,
    mass_conservation_check, poisson_oracle, supercritical_homogeneity_check, verify,
    CheckResult, Suite,
};

/// Exit code for invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for runs that lost resolution or hit the step floor.
pub const EXIT_RESOLUTION: i32 = 3;
/// Exit code for failed verification.
pub const EXIT_VERIFY: i32 = 4;
