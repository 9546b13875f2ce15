//! Signals with known complexity and the calibrated surrogate cohort.

mod generators;
mod surrogate;

pub use generators::{
    circulant_eigenvalues, fbm, fgn_autocovariance, fgn_cholesky, fgn_circulant, weierstrass,
    WEIERSTRASS_B,
};
pub use surrogate::{
    calibrate_groups, surrogate_cohort, CohortManifest, GroupCalibration, SubjectEntry,
    SurrogateCohort, SurrogateConfig, TargetRange,
};
