//! Periodic cells, samples, element tables and generation settings.
//!
//! Lattices use the row-vector convention: each row of the 3x3 matrix is one
//! cell vector, so a fractional row vector `f` maps to Cartesian `f * rows`.

use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Periodic cell with cell vectors stored as matrix rows (Å).
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    rows: Matrix3<f64>,
    // maps Cartesian column vectors to fractional column vectors
    inv: Matrix3<f64>,
    widths: Vec3,
}

impl Lattice {
    pub fn new(rows: Matrix3<f64>) -> Result<Self> {
        let det = rows.determinant();
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::DegenerateLattice { det });
        }
        let inv = rows
            .transpose()
            .try_inverse()
            .ok_or(Error::DegenerateLattice { det })?;
        let a = rows.row(0).transpose();
        let b = rows.row(1).transpose();
        let c = rows.row(2).transpose();
        let widths = Vec3::new(
            det / b.cross(&c).norm(),
            det / c.cross(&a).norm(),
            det / a.cross(&b).norm(),
        );
        Ok(Self { rows, inv, widths })
    }

    pub fn cubic(edge: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal_element(edge))
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn rows(&self) -> &Matrix3<f64> {
        &self.rows
    }

    /// Cell vector `i` as a Cartesian vector.
    pub fn vector(&self, i: usize) -> Vec3 {
        self.rows.row(i).transpose()
    }

    pub fn volume(&self) -> f64 {
        self.rows.determinant()
    }

    /// Perpendicular distances between opposite cell faces.
    pub fn widths(&self) -> Vec3 {
        self.widths
    }

    pub fn half_min_width(&self) -> f64 {
        0.5 * self.widths.min()
    }

    /// Fractional coordinates of a Cartesian point, without wrapping.
    pub fn to_fractional(&self, cart: &Vec3) -> Vec3 {
        self.inv * cart
    }

    pub fn from_fractional(&self, frac: &Vec3) -> Vec3 {
        self.rows.transpose() * frac
    }

    /// Cartesian displacement of an integer image shift.
    pub fn shift_vector(&self, shift: [i32; 3]) -> Vec3 {
        self.from_fractional(&Vec3::new(
            shift[0] as f64,
            shift[1] as f64,
            shift[2] as f64,
        ))
    }

    /// Fractional coordinates wrapped into `[0, 1)`.
    pub fn wrapped_fractional(&self, cart: &Vec3) -> Vec3 {
        self.to_fractional(cart).map(wrap_unit)
    }

    pub fn wrap(&self, cart: &Vec3) -> Vec3 {
        self.from_fractional(&self.wrapped_fractional(cart))
    }

    /// Minimum-image displacement from `a` to `b`.
    pub fn min_image(&self, a: &Vec3, b: &Vec3) -> Vec3 {
        self.reduce(&(b - a)).0
    }

    /// Shortest periodic image of a displacement, together with the integer
    /// lattice shift that was added to reach it.
    ///
    /// Fractional rounding gives the answer whenever the rounded vector is no
    /// longer than half the smallest cell width; otherwise the 27 neighbouring
    /// images are searched, which is exact for any reasonably reduced cell.
    pub fn reduce(&self, d: &Vec3) -> (Vec3, [i32; 3]) {
        let f = self.to_fractional(d);
        let mut shift = [0i32; 3];
        let mut fr = f;
        for k in 0..3 {
            let n = (f[k] + 0.5).floor();
            fr[k] = f[k] - n;
            shift[k] = -(n as i32);
        }
        let r = self.from_fractional(&fr);
        if r.norm() <= self.half_min_width() {
            return (r, shift);
        }
        let mut best = (r, shift);
        let mut best_sq = r.norm_squared();
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    if i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let cand = r + self.shift_vector([i, j, k]);
                    let sq = cand.norm_squared();
                    if sq < best_sq {
                        best_sq = sq;
                        best = (cand, [shift[0] + i, shift[1] + j, shift[2] + k]);
                    }
                }
            }
        }
        best
    }

    /// Same lattice rotated by `rot` (Cartesian vectors map to `rot * v`).
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Result<Self> {
        Self::new(self.rows * rot.transpose())
    }
}

fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Displacement from `a` to `b` under the minimum-image convention.
pub fn min_image_displacement(a: &Vec3, b: &Vec3, lattice: &Lattice) -> Vec3 {
    lattice.min_image(a, b)
}

/// Number of atom slots (real plus ghost) for a cell at maximum density `rho`.
pub fn ghost_padded_count(lattice: &Lattice, rho: f64) -> usize {
    let slots = rho * lattice.volume();
    // absorb representation error when rho * V is meant to be an integer
    (slots * (1.0 + 8.0 * f64::EPSILON)).floor() as usize
}

/// Per-atom element information: continuous logits or discrete indices.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementState {
    Logits(Array2<f64>),
    Assignments(Vec<usize>),
}

impl ElementState {
    pub fn len(&self) -> usize {
        match self {
            ElementState::Logits(l) => l.nrows(),
            ElementState::Assignments(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One periodic structure: fixed cell, Cartesian positions, element state.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSample {
    pub lattice: Lattice,
    pub positions: Vec<Vec3>,
    pub elements: ElementState,
}

impl MaterialSample {
    pub fn new(lattice: Lattice, positions: Vec<Vec3>, elements: ElementState) -> Result<Self> {
        if positions.len() != elements.len() {
            return Err(Error::LengthMismatch(positions.len(), elements.len()));
        }
        Ok(Self {
            lattice,
            positions,
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Wrapped fractional coordinates of every atom.
    pub fn to_fractional(&self) -> Vec<Vec3> {
        self.positions
            .iter()
            .map(|p| self.lattice.wrapped_fractional(p))
            .collect()
    }

    pub fn assignments(&self) -> Result<&[usize]> {
        match &self.elements {
            ElementState::Assignments(a) => Ok(a),
            ElementState::Logits(_) => Err(Error::WrongElementState {
                expected: "assignments",
            }),
        }
    }

    pub fn logits(&self) -> Result<&Array2<f64>> {
        match &self.elements {
            ElementState::Logits(l) => Ok(l),
            ElementState::Assignments(_) => Err(Error::WrongElementState { expected: "logits" }),
        }
    }
}

/// Element symbols with their integer formal charges and marginal frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementTable {
    names: Vec<String>,
    charges: Vec<i64>,
    frequencies: Vec<f64>,
    ghost: Option<usize>,
}

impl ElementTable {
    pub fn new(
        names: Vec<String>,
        charges: Vec<i64>,
        frequencies: Vec<f64>,
        ghost: Option<usize>,
    ) -> Result<Self> {
        Self::with_tolerance(names, charges, frequencies, ghost, 1e-12)
    }

    /// Like [`ElementTable::new`] with a custom tolerance on the frequency sum.
    pub fn with_tolerance(
        names: Vec<String>,
        charges: Vec<i64>,
        frequencies: Vec<f64>,
        ghost: Option<usize>,
        tol: f64,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidTable("no elements".into()));
        }
        if charges.len() != n || frequencies.len() != n {
            return Err(Error::InvalidTable(format!(
                "{} names, {} charges, {} frequencies",
                n,
                charges.len(),
                frequencies.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidTable(format!("duplicate symbol `{name}`")));
            }
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidTable("negative or non-finite frequency".into()));
        }
        let sum: f64 = frequencies.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidTable(format!("frequencies sum to {sum}, not 1")));
        }
        if let Some(g) = ghost {
            if g >= n {
                return Err(Error::InvalidElement { index: g, len: n });
            }
            if charges[g] != 0 {
                return Err(Error::InvalidTable("ghost element must carry charge 0".into()));
            }
        }
        Ok(Self {
            names,
            charges,
            frequencies,
            ghost,
        })
    }

    /// Silica: Si(+4), O(-2) and a ghost class.
    pub fn silica(ghost_fraction: f64) -> Self {
        let g = ghost_fraction;
        Self::new(
            vec!["Si".into(), "O".into(), "X".into()],
            vec![4, -2, 0],
            vec![(1.0 - g) / 3.0, 2.0 * (1.0 - g) / 3.0, g],
            Some(2),
        )
        .expect("valid silica table")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn charges(&self) -> &[i64] {
        &self.charges
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn ghost(&self) -> Option<usize> {
        self.ghost
    }

    pub fn is_ghost(&self, index: usize) -> bool {
        self.ghost == Some(index)
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.names.iter().position(|n| n == symbol)
    }

    /// Expected per-atom charge under the marginal frequencies.
    pub fn mean_charge(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.charges)
            .map(|(f, &c)| f * c as f64)
            .sum()
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidElement {
                index,
                len: self.len(),
            })
        }
    }
}

/// Settings for one constrained generation run.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationConfig {
    /// Number of Euler steps T.
    pub steps: usize,
    /// Element-noise scale.
    pub sigma: f64,
    /// Softmax temperature for the soft-charge gradient.
    pub tau: f64,
    /// Neighbour cutoff in Å; must stay below half the smallest cell width.
    pub r_cut: f64,
    /// Maximum atom density (atoms/Å^3) that sets the number of atom slots.
    pub max_density: f64,
    /// Target property vector.
    pub target: Vec<f64>,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            sigma: 0.25,
            tau: 0.13,
            r_cut: 6.5,
            max_density: 0.11,
            target: Vec::new(),
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("r_cut", self.r_cut),
            ("max_density", self.max_density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("target contains non-finite values".into()));
        }
        Ok(())
    }
}
