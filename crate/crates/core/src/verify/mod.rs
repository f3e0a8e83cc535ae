//! Independent checks of a construction, with flow finite differences as
//! the derivative oracle.

mod fd;

pub use fd::{central_difference, fd_orbital_derivative, fd_orbital_derivative_with};
mod report;

pub use report::{verify_report, Bound, CheckResult, Tolerances, VerificationReport, VerifyConfig};
