use crate::error::{Error, Result};
use crate::types::ElementTable;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionReport {
    pub mae: f64,
    pub rmse: f64,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
}

/// MAE, RMSE and MAPE of generated property values against their targets.
pub fn regression_metrics(targets: &[f64], generated: &[f64]) -> Result<RegressionReport> {
    if targets.len() != generated.len() {
        return Err(Error::LengthMismatch(targets.len(), generated.len()));
    }
    if targets.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(i) = targets.iter().position(|&t| t == 0.0) {
        return Err(Error::ZeroTarget(i));
    }
    let n = targets.len() as f64;
    let (mut abs, mut sq, mut pct) = (0.0, 0.0, 0.0);
    for (&t, &g) in targets.iter().zip(generated) {
        let err = g - t;
        abs += err.abs();
        sq += err * err;
        pct += (err / t).abs();
    }
    Ok(RegressionReport {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        mape: 100.0 * pct / n,
    })
}

/// Fraction of non-ghost atoms that are `species`.
pub fn molar_concentration(assignments: &[usize], table: &ElementTable, species: usize) -> Result<f64> {
    table.check_index(species)?;
    let mut real = 0usize;
    let mut hits = 0usize;
    for &a in assignments {
        table.check_index(a)?;
        if table.is_ghost(a) {
            continue;
        }
        real += 1;
        if a == species {
            hits += 1;
        }
    }
    if real == 0 {
        return Err(Error::EmptyStructure);
    }
    Ok(hits as f64 / real as f64)
}
