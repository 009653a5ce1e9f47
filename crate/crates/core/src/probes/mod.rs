//! Numerical certification of the inequalities behind the convergence
//! analysis. Conditional expectations are exact sums over
//! `(action, reward)` outcomes; fuzzing supplies the states.

pub mod checks;
pub mod concentration;
pub mod fuzz;
pub mod report;

pub use checks::*;
pub use concentration::{
    check_conc_algebra, conc_algebra_f, concentration_bound, coverage_test, ConcentrationSpec, Coverage, Family,
};
pub use fuzz::{run_all, run_probe, Probe};
pub use report::{merge_all, ProbeReport, RELATIVE_TOLERANCE};
