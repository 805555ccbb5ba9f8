//! Charge-table text files. One element per line:
//!
//! ```text
//! # symbol  charge  frequency  radius
//! Si        4       0.30       1.11
//! X         0       0.10       -      ghost
//! ```
//!
//! A radius of `-` means none is known. Blank lines and `#` comments are skipped.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::ElementTable;

/// Tolerance on the frequency sum for tables read from text.
pub const FREQUENCY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeTable {
    pub table: ElementTable,
    /// Covalent radius per element in Å.
    pub radii: Vec<Option<f64>>,
}

pub fn parse_charge_table(text: &str) -> Result<ChargeTable> {
    let mut names = Vec::new();
    let mut charges = Vec::new();
    let mut freqs = Vec::new();
    let mut radii = Vec::new();
    let mut ghost = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { line, message: m };
        let toks: Vec<&str> = content.split_whitespace().collect();
        if !(toks.len() == 4 || toks.len() == 5) {
            return Err(err(format!("expected 4 or 5 fields, found {}", toks.len())));
        }
        let charge: i64 = toks[1]
            .parse()
            .map_err(|_| err(format!("charge `{}` is not an integer", toks[1])))?;
        let freq: f64 = toks[2]
            .parse()
            .map_err(|_| err(format!("frequency `{}` is not a number", toks[2])))?;
        let radius = match toks[3] {
            "-" => None,
            t => {
                let r: f64 = t.parse().map_err(|_| err(format!("radius `{t}` is not a number")))?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(err(format!("radius must be positive, got {t}")));
                }
                Some(r)
            }
        };
        if let Some(flag) = toks.get(4) {
            if *flag != "ghost" {
                return Err(err(format!("unknown flag `{flag}`")));
            }
            if ghost.is_some() {
                return Err(err("more than one ghost row".into()));
            }
            ghost = Some(names.len());
        }
        names.push(toks[0].to_string());
        charges.push(charge);
        freqs.push(freq);
        radii.push(radius);
    }
    let table = ElementTable::with_tolerance(names, charges, freqs, ghost, FREQUENCY_TOLERANCE)?;
    Ok(ChargeTable { table, radii })
}

pub fn load_charge_table(path: impl AsRef<Path>) -> Result<ChargeTable> {
    parse_charge_table(&fs::read_to_string(path)?)
}

/// Silica table shipped with the crate.
pub const SIO2_TABLE: &str = include_str!("../../data/sio2.table");
/// Multicomponent oxide-glass table shipped with the crate.
pub const MEG_TABLE: &str = include_str!("../../data/meg.table");
