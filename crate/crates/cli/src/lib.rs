//! File formats, method runners and benchmark sweeps around `lpcc-core`.

pub mod bench;
pub mod error;
pub mod instance;
pub mod methods;
pub mod records;
pub mod report;

pub use error::CliError;
