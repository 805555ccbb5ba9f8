//! Shared fixtures for the pipeline benchmarks.

use amgenc_core::io::{parse_charge_table, MEG_TABLE};
use amgenc_core::noise::{sample_element_noise, sample_position_noise, ElementNoise};
use amgenc_core::{ghost_padded_count, Egnn, EgnnConfig, ElementTable, Lattice, Vec3};

/// A 12-element MEG system in a cubic cell at the given density.
pub struct Fixture {
    pub table: ElementTable,
    pub lattice: Lattice,
    pub positions: Vec<Vec3>,
    pub noise: ElementNoise,
}

impl Fixture {
    pub fn meg(edge: f64, rho: f64, seed: u64) -> Self {
        let table = parse_charge_table(MEG_TABLE).expect("shipped table parses").table;
        let lattice = Lattice::cubic(edge).expect("positive edge");
        let n = ghost_padded_count(&lattice, rho);
        let positions = sample_position_noise(n, &lattice, seed);
        let noise = sample_element_noise(n, &table, 1.0, seed).expect("valid noise settings");
        Self {
            table,
            lattice,
            positions,
            noise,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Random network sized for this table with one property input.
    pub fn network(&self, layers: usize, hidden: usize, channels: usize, r_cut: f64) -> Egnn {
        let cfg = EgnnConfig {
            layers,
            hidden_dim: hidden,
            vector_channels: channels,
            r_cut,
            n_norm: 20.0,
            attention_dim: hidden,
            n_y: 1,
            n_elements: self.table.len(),
        };
        Egnn::random(cfg, 1).expect("valid network config")
    }
}
