//! Total formal charge: the exact discrete value, its softmax relaxation and
//! the relaxation's analytic gradient.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::types::ElementTable;

/// Batch charge-balance statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeReport {
    /// Fraction of samples with Q = 0.
    pub p_balanced: f64,
    /// |mean Q|.
    pub mean_abs_charge: f64,
    /// Population standard deviation of Q.
    pub std_charge: f64,
    pub per_sample: Vec<i64>,
}

/// Sum of formal charges over an assignment.
pub fn hard_charge(assignments: &[usize], table: &ElementTable) -> Result<i64> {
    let charges = table.charges();
    assignments.iter().try_fold(0i64, |acc, &e| {
        table.check_index(e)?;
        Ok(acc + charges[e])
    })
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax_row(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, &v) in row.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    best
}

pub fn argmax_assignments(logits: &Array2<f64>) -> Vec<usize> {
    logits.axis_iter(Axis(0)).map(argmax_row).collect()
}

pub fn hard_charge_from_logits(logits: &Array2<f64>, table: &ElementTable) -> i64 {
    let charges = table.charges();
    logits
        .axis_iter(Axis(0))
        .map(|row| charges[argmax_row(row)])
        .sum()
}

/// Writes softmax(row / tau) into `out` and returns `p . c`.
fn softmax_row(row: ArrayView1<'_, f64>, tau: f64, charges: &[i64], out: &mut [f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &v) in out.iter_mut().zip(row.iter()) {
        *o = ((v - max) / tau).exp();
        z += *o;
    }
    let mut mean = 0.0;
    for (o, &c) in out.iter_mut().zip(charges) {
        *o /= z;
        mean += *o * c as f64;
    }
    mean
}

/// Differentiable total charge `sum_i softmax(E_i / tau) . c`.
pub fn soft_charge(logits: &Array2<f64>, tau: f64, table: &ElementTable) -> f64 {
    let charges = table.charges();
    let mut p = vec![0.0; logits.ncols()];
    logits
        .axis_iter(Axis(0))
        .map(|row| softmax_row(row, tau, charges, &mut p))
        .sum()
}

/// Gradient of [`soft_charge`] with respect to the logits:
/// `dQ/dE_ij = p_ij (c_j - p_i . c) / tau`.
pub fn soft_charge_gradient(logits: &Array2<f64>, tau: f64, table: &ElementTable) -> Array2<f64> {
    let charges = table.charges();
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut p = vec![0.0; logits.ncols()];
    for (row, mut g) in logits.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))) {
        let mean = softmax_row(row, tau, charges, &mut p);
        for ((g, &pj), &c) in g.iter_mut().zip(&p).zip(charges) {
            *g = pj * (c as f64 - mean) / tau;
        }
    }
    grad
}

/// Balance statistics from precomputed charges.
pub fn charge_report(per_sample: Vec<i64>) -> Result<ChargeReport> {
    if per_sample.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = per_sample.len() as f64;
    let balanced = per_sample.iter().filter(|&&q| q == 0).count();
    let mean = per_sample.iter().map(|&q| q as f64).sum::<f64>() / n;
    let var = per_sample
        .iter()
        .map(|&q| (q as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(ChargeReport {
        p_balanced: balanced as f64 / n,
        mean_abs_charge: mean.abs(),
        std_charge: var.sqrt(),
        per_sample,
    })
}

pub fn charge_metrics<A: AsRef<[usize]>>(batch: &[A], table: &ElementTable) -> Result<ChargeReport> {
    let qs = batch
        .iter()
        .map(|a| hard_charge(a.as_ref(), table))
        .collect::<Result<Vec<_>>>()?;
    charge_report(qs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn si_o() -> ElementTable {
        ElementTable::new(vec!["Si".into(), "O".into()], vec![4, -2], vec![1.0 / 3.0, 2.0 / 3.0], None)
            .unwrap()
    }

    #[test]
    fn silica_unit_is_neutral() {
        let t = ElementTable::silica(0.0);
        assert_eq!(hard_charge(&[0, 1, 1], &t).unwrap(), 0);
        assert_eq!(hard_charge(&[2, 2, 2], &t).unwrap(), 0);
        assert!(matches!(hard_charge(&[3], &t), Err(Error::InvalidElement { .. })));
    }

    #[test]
    fn charge_from_logits_and_ties() {
        let t = si_o();
        assert_eq!(hard_charge_from_logits(&array![[5.0, 0.0], [0.0, 5.0]], &t), 2);
        assert_eq!(hard_charge_from_logits(&array![[1.0, 1.0]], &t), 4);
    }

    #[test]
    fn soft_charge_uniform_rows() {
        let t = si_o();
        let q = soft_charge(&Array2::zeros((3, 2)), 0.7, &t);
        assert!((q - 3.0).abs() < 1e-14);
    }

    #[test]
    fn soft_charge_saturates_to_hard() {
        let t = si_o();
        let l = array![[40.0, 0.0], [0.0, 40.0], [0.0, 40.0]];
        let hard = hard_charge_from_logits(&l, &t) as f64;
        assert!((soft_charge(&l, 1.0, &t) - hard).abs() < 1e-6);
    }

    #[test]
    fn gradient_of_uniform_row() {
        let g = soft_charge_gradient(&Array2::zeros((1, 2)), 1.0, &si_o());
        assert!((g[[0, 0]] - 1.5).abs() < 1e-15);
        assert!((g[[0, 1]] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_when_saturated() {
        let g = soft_charge_gradient(&array![[60.0, 0.0]], 0.5, &si_o());
        assert!(g.iter().all(|v| v.abs() < 1e-30));
    }

    #[test]
    fn metrics_hand_arithmetic() {
        let r = charge_report(vec![0, 0, 0]).unwrap();
        assert_eq!((r.p_balanced, r.mean_abs_charge, r.std_charge), (1.0, 0.0, 0.0));
        let r = charge_report(vec![2, -2]).unwrap();
        assert_eq!((r.p_balanced, r.mean_abs_charge, r.std_charge), (0.0, 0.0, 2.0));
        let r = charge_report(vec![0, 4]).unwrap();
        assert_eq!((r.p_balanced, r.mean_abs_charge, r.std_charge), (0.5, 2.0, 2.0));
        assert_eq!(charge_report(vec![]), Err(Error::EmptyBatch));
    }

    #[test]
    fn metrics_from_assignments() {
        let t = ElementTable::silica(0.1);
        let batch = vec![vec![0, 1, 1], vec![0, 1, 2], vec![2]];
        let r = charge_metrics(&batch, &t).unwrap();
        assert_eq!(r.per_sample, vec![0, 2, 0]);
        assert!((r.p_balanced - 2.0 / 3.0).abs() < 1e-15);
    }
}
