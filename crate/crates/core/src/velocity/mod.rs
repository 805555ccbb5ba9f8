//! Velocity fields driving the flow: the equivariant network and a constant
//! teacher field used as an exact reference.

mod egnn;
mod neighbors;
mod teacher;
mod weights;

pub use egnn::{cutoff_weight, edge_attribute, init_weights, Egnn, EgnnConfig};
pub use neighbors::{build_neighbor_graph, neighbor_pairs, NeighborGraph, Pair};
pub use teacher::TeacherField;
pub use weights::{Tensor, WeightContainer};

use ndarray::Array2;

use crate::error::Result;
use crate::types::{Lattice, Vec3};

/// Position and element velocities for every atom.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityOutput {
    pub v_pos: Vec<Vec3>,
    pub v_el: Array2<f64>,
}

/// Intermediate state handed to a velocity field at flow time `t`.
///
/// `x0` and `e0` are the source noise the trajectory started from.
#[derive(Clone, Copy, Debug)]
pub struct FieldState<'a> {
    pub lattice: &'a Lattice,
    pub positions: &'a [Vec3],
    pub logits: &'a Array2<f64>,
    pub x0: &'a [Vec3],
    pub e0: &'a Array2<f64>,
    pub target: &'a [f64],
    pub t: f64,
}

pub trait VelocityField: Sync {
    fn velocity(&self, state: &FieldState<'_>) -> Result<VelocityOutput>;
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn velocity(&self, state: &FieldState<'_>) -> Result<VelocityOutput> {
        (**self).velocity(state)
    }
}
