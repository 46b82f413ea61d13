//! Oracles, convergence and stability studies, and report generation.

pub mod fit;
pub mod gronwall;
pub mod oracle;
pub mod study;
pub mod verify;

pub use fit::{fit_loglog, LogLogFit};
pub use gronwall::{gronwall_envelope, gronwall_phi, gronwall_phi_inv, gronwall_phi_sup};
pub use oracle::{
    ball_heat_field, exact_sphere_radius, radial_heat_solution, radial_jump_error, radial_mbo_step_oracle,
    radial_trajectory, RadialStep,
};
pub use study::{
    consistency_study, exact_perimeter, jump_error_study, measured_radius, observed_run, perimeter_study,
    phase_geometry, phase_snapshot, radius_law_study, run_study, run_study_with, stability_study,
    stability_study_with, topology_study, topology_study_with, write_report, Check, ConvergenceReport, Gates,
    Measurements, OutputPaths, ReportRow, StepGeometry, StudyConfig, StudyKind,
};
pub use verify::{verify_all, SuiteResult, VerifyReport};
