use ndarray::Array2;

use super::{FieldState, VelocityField, VelocityOutput};
use crate::error::{Error, Result};
use crate::types::Vec3;

/// Exact straight-path velocities toward a fixed target.
///
/// Returns `v_X = min_image(x0 -> x1)` and `v_E = e1 - e0` for the source
/// noise recorded in the state, independent of `t`. Euler integration along
/// this field lands on the target for any step count.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherField {
    pub positions: Vec<Vec3>,
    pub logits: Array2<f64>,
}

impl TeacherField {
    pub fn new(positions: Vec<Vec3>, logits: Array2<f64>) -> Result<Self> {
        if positions.len() != logits.nrows() {
            return Err(Error::LengthMismatch(positions.len(), logits.nrows()));
        }
        Ok(Self { positions, logits })
    }

    /// Target logits with `scale` on the assigned element and 0 elsewhere.
    pub fn from_assignments(positions: Vec<Vec3>, assignments: &[usize], n_elements: usize, scale: f64) -> Result<Self> {
        let mut logits = Array2::zeros((assignments.len(), n_elements));
        for (i, &e) in assignments.iter().enumerate() {
            if e >= n_elements {
                return Err(Error::InvalidElement { index: e, len: n_elements });
            }
            logits[[i, e]] = scale;
        }
        Self::new(positions, logits)
    }
}

impl VelocityField for TeacherField {
    fn velocity(&self, state: &FieldState<'_>) -> Result<VelocityOutput> {
        if state.x0.len() != self.positions.len() || state.e0.dim() != self.logits.dim() {
            return Err(Error::LengthMismatch(state.x0.len(), self.positions.len()));
        }
        let v_pos = state
            .x0
            .iter()
            .zip(&self.positions)
            .map(|(a, b)| state.lattice.min_image(a, b))
            .collect();
        Ok(VelocityOutput {
            v_pos,
            v_el: &self.logits - state.e0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Lattice;

    #[test]
    fn constant_in_time() {
        let lat = Lattice::cubic(10.0).unwrap();
        let field = TeacherField::from_assignments(
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(5.0, 5.0, 5.0)],
            &[0, 1],
            2,
            3.0,
        )
        .unwrap();
        let x0 = vec![Vec3::new(9.0, 0.0, 0.0), Vec3::new(4.0, 4.0, 4.0)];
        let e0 = Array2::from_elem((2, 2), 0.5);
        let at = |t| {
            field
                .velocity(&FieldState {
                    lattice: &lat,
                    positions: &x0,
                    logits: &e0,
                    x0: &x0,
                    e0: &e0,
                    target: &[],
                    t,
                })
                .unwrap()
        };
        let v0 = at(0.0);
        assert!((v0.v_pos[0] - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(v0.v_el, ndarray::array![[2.5, -0.5], [-0.5, 2.5]]);
        assert_eq!(at(0.3), at(0.7));
    }
}
