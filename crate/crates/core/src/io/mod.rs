//! File formats: extended-XYZ structures, binary weight containers, charge
//! tables and run configs.

mod config;
mod extxyz;
mod table;
mod weights;

pub use config::{load_run_config, parse_run_config, parse_vector, RunConfig};
pub use extxyz::{read_extxyz, write_extxyz, ExtXyzRecord};
pub use table::{load_charge_table, parse_charge_table, ChargeTable, FREQUENCY_TOLERANCE, MEG_TABLE, SIO2_TABLE};
pub use weights::{read_weights, write_weights, MAGIC};
