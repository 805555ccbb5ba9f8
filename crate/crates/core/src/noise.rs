//! Source noise for generation: uniform positions and element logits drawn
//! from the frequency-weighted Gaussian mixture around one-hot centers.
//!
//! Each atom draws from its own ChaCha stream, so a row depends only on
//! `(seed, atom index)` and never on how many other rows were sampled.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{ElementTable, Lattice, Vec3};

const ELEMENT_DOMAIN: u64 = 0x454c_454d_454e_5453;
const POSITION_DOMAIN: u64 = 0x504f_5349_5449_4f4e;

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed for the `index`-th child of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn atom_stream(seed: u64, domain: u64, atom: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ domain));
    rng.set_stream(atom as u64);
    rng
}

/// Element part of the source noise.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementNoise {
    pub logits: Array2<f64>,
    /// Mixture component drawn for each atom.
    pub centers: Vec<usize>,
}

/// Full source sample: element logits, Cartesian positions and centers.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    pub element_logits: Array2<f64>,
    pub positions: Vec<Vec3>,
    pub centers: Vec<usize>,
}

pub fn sample_element_noise(
    n_atoms: usize,
    table: &ElementTable,
    sigma: f64,
    seed: u64,
) -> Result<ElementNoise> {
    if n_atoms == 0 {
        return Err(Error::InvalidSize("need at least one atom".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let categorical = WeightedIndex::new(table.frequencies())
        .map_err(|e| Error::InvalidTable(e.to_string()))?;
    let d = table.len();
    let mut logits = Array2::zeros((n_atoms, d));
    let mut centers = Vec::with_capacity(n_atoms);
    for (i, mut row) in logits.rows_mut().into_iter().enumerate() {
        let mut rng = atom_stream(seed, ELEMENT_DOMAIN, i);
        let k = categorical.sample(&mut rng);
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = if j == k { 1.0 } else { 0.0 } + sigma * z;
        }
        centers.push(k);
    }
    Ok(ElementNoise { logits, centers })
}

/// Positions with i.i.d. uniform fractional coordinates in `[0, 1)`.
pub fn sample_position_noise(n_atoms: usize, lattice: &Lattice, seed: u64) -> Vec<Vec3> {
    (0..n_atoms)
        .map(|i| {
            let mut rng = atom_stream(seed, POSITION_DOMAIN, i);
            let f = Vec3::new(rng.random(), rng.random(), rng.random());
            lattice.from_fractional(&f)
        })
        .collect()
}

pub fn sample_noise(
    n_atoms: usize,
    table: &ElementTable,
    lattice: &Lattice,
    sigma: f64,
    seed: u64,
) -> Result<NoiseDraw> {
    let el = sample_element_noise(n_atoms, table, sigma, seed)?;
    Ok(NoiseDraw {
        element_logits: el.logits,
        positions: sample_position_noise(n_atoms, lattice, seed),
        centers: el.centers,
    })
}
