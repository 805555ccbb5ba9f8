//! Structure and property analysis for generated samples. Ghost atoms never
//! take part in any of these calculations.

mod bonds;
mod metrics;
mod rdf;
mod rings;

pub use bonds::{build_bond_graph, Bond, BondGraph, DEFAULT_BOND_FACTOR};
pub use metrics::{molar_concentration, regression_metrics, RegressionReport};
pub use rdf::{cumulative_cn, partial_rdf, CoordinationCurve, Rdf};
pub use rings::{ring_statistics, RingStats, DEFAULT_MAX_RING};

use crate::error::Result;
use crate::types::{Lattice, Vec3};
use crate::velocity::{neighbor_pairs, Pair};

/// Pairs closer than `cutoff`; falls back to a direct minimum-image scan when
/// the cutoff reaches half the cell width.
pub(crate) fn pairs_within(lattice: &Lattice, positions: &[Vec3], cutoff: f64) -> Result<Vec<Pair>> {
    if cutoff < lattice.half_min_width() {
        return neighbor_pairs(lattice, positions, cutoff);
    }
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let (vector, shift) = lattice.reduce(&(positions[j] - positions[i]));
            let distance = vector.norm();
            if distance < cutoff {
                pairs.push(crate::velocity::Pair {
                    i,
                    j,
                    shift,
                    vector,
                    distance,
                });
            }
        }
    }
    Ok(pairs)
}
