//! Charge-constraint enforcement.
//!
//! Two mechanisms run during generation: a rank-1 Gauss-Newton correction of
//! the predicted clean logits at every step, and a final minimum-cost discrete
//! repair that makes the total charge exactly zero.

use ndarray::{Array2, Zip};

use crate::charge::{argmax_assignments, hard_charge_from_logits, soft_charge_gradient};
use crate::error::{Error, Result};
use crate::types::ElementTable;

/// Below this squared gradient norm the Gauss-Newton step is refused.
pub const MIN_GRADIENT_NORM_SQ: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionOutcome {
    pub corrected_logits: Array2<f64>,
    /// Discrete charge of the input logits.
    pub residual_charge_before: i64,
    pub gradient_norm_sq: f64,
}

impl ProjectionOutcome {
    pub fn fired(&self) -> bool {
        self.residual_charge_before != 0
    }
}

/// One Gauss-Newton correction toward Q = 0.
///
/// The step length uses the exact discrete charge while the direction comes
/// from the softmax relaxation at temperature `tau`:
/// `E - Q / |g|^2 * g` with `g = dQ_soft/dE`. Balanced input is returned
/// unchanged.
pub fn gauss_newton_step(
    logits: &Array2<f64>,
    table: &ElementTable,
    tau: f64,
) -> Result<ProjectionOutcome> {
    let q = hard_charge_from_logits(logits, table);
    let grad = soft_charge_gradient(logits, tau, table);
    let norm_sq = grad.iter().map(|g| g * g).sum::<f64>();
    if q == 0 {
        return Ok(ProjectionOutcome {
            corrected_logits: logits.clone(),
            residual_charge_before: 0,
            gradient_norm_sq: norm_sq,
        });
    }
    if norm_sq.is_nan() || norm_sq < MIN_GRADIENT_NORM_SQ {
        return Err(Error::VanishingGradient { charge: q, norm_sq });
    }
    let scale = q as f64 / norm_sq;
    let mut corrected = logits.clone();
    Zip::from(&mut corrected)
        .and(&grad)
        .for_each(|e, &g| *e -= scale * g);
    Ok(ProjectionOutcome {
        corrected_logits: corrected,
        residual_charge_before: q,
        gradient_norm_sq: norm_sq,
    })
}

/// Point at time `t_next` on the straight path from `e0` to `e1_proj`.
///
/// Panics if the shapes differ.
pub fn reinterpolate(e0: &Array2<f64>, e1_proj: &Array2<f64>, t_next: f64) -> Array2<f64> {
    assert_eq!(e0.dim(), e1_proj.dim(), "reinterpolate: shape mismatch");
    debug_assert!((0.0..=1.0).contains(&t_next));
    let mut out = Array2::zeros(e0.raw_dim());
    Zip::from(&mut out)
        .and(e0)
        .and(e1_proj)
        .for_each(|o, &a, &b| *o = (1.0 - t_next) * a + t_next * b);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Swap {
    pub atom: usize,
    pub from: usize,
    pub to: usize,
}

/// Result of the minimum-cost discrete charge repair.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteRepair {
    pub assignments: Vec<usize>,
    /// Sum of logit gaps given up by the swaps.
    pub total_cost: f64,
    pub swaps: Vec<Swap>,
    /// Charge of the argmax assignment before repair.
    pub charge_before: i64,
}

// One reassignment option for an atom: best element for a given charge delta.
#[derive(Clone, Copy)]
struct Candidate {
    delta: i64,
    cost: f64,
    element: u16,
}

/// Minimum-cost set of element swaps that brings the argmax assignment of
/// `logits` to zero total charge.
///
/// Atoms are processed one at a time over a dense table of accumulated charge
/// deltas. Each layer only keeps states that are both reachable from the
/// start and able to reach the target, which leaves the optimum unchanged.
/// Cost ties go to the smaller element index.
pub fn discrete_project(logits: &Array2<f64>, table: &ElementTable) -> Result<DiscreteRepair> {
    let (n, d) = logits.dim();
    if d != table.len() {
        return Err(Error::LengthMismatch(d, table.len()));
    }
    if d > u16::MAX as usize {
        return Err(Error::InvalidSize(format!("{d} elements")));
    }
    let charges = table.charges();
    let current = argmax_assignments(logits);
    let q: i64 = current.iter().map(|&e| charges[e]).sum();
    if q == 0 {
        return Ok(DiscreteRepair {
            assignments: current,
            total_cost: 0.0,
            swaps: Vec::new(),
            charge_before: 0,
        });
    }
    let target = -q;
    let c_min = *charges.iter().min().expect("non-empty table");
    let c_max = *charges.iter().max().expect("non-empty table");

    // Per-atom options, computed as one row operation over all elements.
    let mut options: Vec<Vec<Candidate>> = Vec::with_capacity(n);
    let mut best_by_delta: Vec<Option<(f64, u16)>> = vec![None; (c_max - c_min + 1) as usize];
    for (i, &e) in current.iter().enumerate() {
        let row = logits.row(i);
        let top = row[e];
        best_by_delta.iter_mut().for_each(|b| *b = None);
        for (j, &c) in charges.iter().enumerate() {
            let slot = &mut best_by_delta[(c - c_min) as usize];
            let cost = top - row[j];
            match slot {
                Some((best, _)) if *best <= cost => {}
                _ => *slot = Some((cost, j as u16)),
            }
        }
        let mut opts: Vec<Candidate> = best_by_delta
            .iter()
            .enumerate()
            .filter_map(|(k, b)| {
                b.map(|(cost, element)| Candidate {
                    delta: k as i64 + c_min - charges[e],
                    cost,
                    element,
                })
            })
            .collect();
        opts.sort_by_key(|o| o.element);
        options.push(opts);
    }

    // Forward (prefix) and backward (suffix) bounds on accumulated deltas.
    let lo_i: Vec<i64> = current.iter().map(|&e| c_min - charges[e]).collect();
    let hi_i: Vec<i64> = current.iter().map(|&e| c_max - charges[e]).collect();
    let mut suffix_lo = vec![0i64; n + 1];
    let mut suffix_hi = vec![0i64; n + 1];
    for i in (0..n).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + lo_i[i];
        suffix_hi[i] = suffix_hi[i + 1] + hi_i[i];
    }
    if target < suffix_lo[0] || target > suffix_hi[0] {
        return Err(infeasible(q, &options));
    }

    let mut prev_lo = 0i64;
    let mut prev = vec![0.0f64];
    let mut fwd_lo = 0i64;
    let mut fwd_hi = 0i64;
    let mut layers: Vec<(i64, Vec<u16>)> = Vec::with_capacity(n);
    for i in 0..n {
        fwd_lo += lo_i[i];
        fwd_hi += hi_i[i];
        let band_lo = fwd_lo.max(target - suffix_hi[i + 1]);
        let band_hi = fwd_hi.min(target - suffix_lo[i + 1]);
        let width = (band_hi - band_lo + 1).max(0) as usize;
        let mut cur = vec![f64::INFINITY; width];
        let mut choice = vec![u16::MAX; width];
        for opt in &options[i] {
            // prev index p maps to cur index p + shift
            let shift = prev_lo + opt.delta - band_lo;
            let p_start = (-shift).max(0) as usize;
            let p_end = (width as i64 - shift).min(prev.len() as i64);
            if p_end <= p_start as i64 {
                continue;
            }
            let p_end = p_end as usize;
            let c_start = (p_start as i64 + shift) as usize;
            let dst = &mut cur[c_start..c_start + (p_end - p_start)];
            let dst_choice = &mut choice[c_start..c_start + (p_end - p_start)];
            for ((slot, ch), &base) in dst.iter_mut().zip(dst_choice.iter_mut()).zip(&prev[p_start..p_end]) {
                let cand = base + opt.cost;
                if cand < *slot {
                    *slot = cand;
                    *ch = opt.element;
                }
            }
        }
        layers.push((band_lo, choice));
        prev = cur;
        prev_lo = band_lo;
    }

    let final_idx = target - prev_lo;
    let total_cost = if final_idx >= 0 && (final_idx as usize) < prev.len() {
        prev[final_idx as usize]
    } else {
        f64::INFINITY
    };
    if !total_cost.is_finite() {
        return Err(infeasible(q, &options));
    }

    let mut assignments = current.clone();
    let mut state = target;
    for i in (0..n).rev() {
        let (band_lo, choice) = &layers[i];
        let element = choice[(state - band_lo) as usize] as usize;
        debug_assert!(element != u16::MAX as usize);
        assignments[i] = element;
        state -= charges[element] - charges[current[i]];
    }
    debug_assert_eq!(state, 0);
    let swaps = assignments
        .iter()
        .zip(&current)
        .enumerate()
        .filter(|(_, (a, c))| a != c)
        .map(|(atom, (&to, &from))| Swap { atom, from, to })
        .collect();
    Ok(DiscreteRepair {
        assignments,
        total_cost,
        swaps,
        charge_before: q,
    })
}

// Reachability sweep used only to report the closest achievable total charge.
fn infeasible(q: i64, options: &[Vec<Candidate>]) -> Error {
    let lo: i64 = options.iter().map(|o| o.iter().map(|x| x.delta).min().unwrap_or(0)).sum();
    let hi: i64 = options.iter().map(|o| o.iter().map(|x| x.delta).max().unwrap_or(0)).sum();
    let width = (hi - lo + 1) as usize;
    let mut reach = vec![false; width];
    reach[(-lo) as usize] = true;
    for opts in options {
        let mut next = vec![false; width];
        for (s, _) in reach.iter().enumerate().filter(|(_, r)| **r) {
            for o in opts {
                next[(s as i64 + o.delta) as usize] = true;
            }
        }
        reach = next;
    }
    let nearest = reach
        .iter()
        .enumerate()
        .filter(|(_, r)| **r)
        .map(|(s, _)| q + s as i64 + lo)
        .min_by_key(|charge| (charge.abs(), *charge))
        .unwrap_or(q);
    Error::InfeasibleRepair { residual: q, nearest }
}
