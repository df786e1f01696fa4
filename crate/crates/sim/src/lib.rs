//! Monte Carlo BER harness for the `cpmeq` receiver.

pub mod config;
pub mod engine;
pub mod error;
pub mod records;

pub use config::{Precision, Preset, SimConfig};
pub use engine::{run_monte_carlo, run_monte_carlo_with};
pub use error::{Result, SimError};
pub use records::{gnuplot_script, read_records, write_records, BerRecord, CSV_HEADER};
