//! Independent oracles and certifiers for the candidates and optimizers.

pub mod convexity;
pub mod induction;
pub mod report;
pub mod sampling;
pub mod scan;
pub mod suites;
pub mod theorems;

pub use report::VerificationReport;
pub use scan::{ScanConfig, ScanResult};
