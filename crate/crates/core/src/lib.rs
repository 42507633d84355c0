pub mod error;
pub mod matkernel;
pub mod qobjects;
pub mod dilation;
pub mod instruments;
pub mod infometrics;
pub mod relations;
pub mod scenarios;
