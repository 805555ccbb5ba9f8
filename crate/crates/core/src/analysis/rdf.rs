use std::f64::consts::PI;

use super::pairs_within;
use crate::error::{Error, Result};
use crate::types::MaterialSample;

/// Partial radial distribution function on uniform bins over `[0, r_max)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdf {
    /// Bin centers.
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    /// Raw ordered-pair counts per bin.
    pub counts: Vec<u64>,
    pub bin_width: f64,
}

/// Cumulative neighbour count n(r) sampled at `r_k = k * r_max / n_bins`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinationCurve {
    pub r: Vec<f64>,
    pub n: Vec<f64>,
}

fn check_range(sample: &MaterialSample, r_max: f64, n_bins: usize) -> Result<()> {
    let half = sample.lattice.half_min_width();
    if !(r_max > 0.0 && r_max <= half) {
        return Err(Error::RangeExceedsCell {
            r_max,
            half_width: half,
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidSize("need at least one bin".into()));
    }
    Ok(())
}

/// Minimum-image distances from each `center` atom to each `neighbor` atom
/// (self pairs excluded) shorter than `r_max`, plus the two species counts.
fn species_distances(
    sample: &MaterialSample,
    center: usize,
    neighbor: usize,
    r_max: f64,
) -> Result<(Vec<f64>, usize, usize)> {
    let species = sample.assignments()?;
    let n_center = species.iter().filter(|&&s| s == center).count();
    let n_neighbor = species.iter().filter(|&&s| s == neighbor).count();
    if n_center == 0 || n_neighbor == 0 {
        return Ok((Vec::new(), n_center, n_neighbor));
    }
    let mut out = Vec::new();
    for p in pairs_within(&sample.lattice, &sample.positions, r_max)? {
        let (a, b) = (species[p.i], species[p.j]);
        if a == center && b == neighbor {
            out.push(p.distance);
        }
        if b == center && a == neighbor {
            out.push(p.distance);
        }
    }
    Ok((out, n_center, n_neighbor))
}

/// `g(r)` for the species pair `(a, b)`: pair histogram divided by
/// `N_a * (N_b / V) * shell volume`, so that uncorrelated positions give 1.
pub fn partial_rdf(
    sample: &MaterialSample,
    a: usize,
    b: usize,
    r_max: f64,
    n_bins: usize,
) -> Result<Rdf> {
    check_range(sample, r_max, n_bins)?;
    let dr = r_max / n_bins as f64;
    let (dists, n_a, n_b) = species_distances(sample, a, b, r_max)?;
    let mut counts = vec![0u64; n_bins];
    for d in dists {
        let k = ((d / dr) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let density_b = n_b as f64 / sample.lattice.volume();
    let r = (0..n_bins).map(|k| (k as f64 + 0.5) * dr).collect();
    let g = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if n_a == 0 || n_b == 0 {
                return 0.0;
            }
            let (lo, hi) = (k as f64 * dr, (k + 1) as f64 * dr);
            let shell = 4.0 / 3.0 * PI * (hi.powi(3) - lo.powi(3));
            c as f64 / (n_a as f64 * density_b * shell)
        })
        .collect();
    Ok(Rdf {
        r,
        g,
        counts,
        bin_width: dr,
    })
}

/// Mean number of `neighbor` atoms within distance `r` of a `center` atom.
/// Returns `None` when the sample has no center atoms.
pub fn cumulative_cn(
    sample: &MaterialSample,
    center: usize,
    neighbor: usize,
    r_max: f64,
    n_bins: usize,
) -> Result<Option<CoordinationCurve>> {
    check_range(sample, r_max, n_bins)?;
    let (mut dists, n_center, _) = species_distances(sample, center, neighbor, r_max)?;
    if n_center == 0 {
        return Ok(None);
    }
    dists.sort_by(f64::total_cmp);
    let dr = r_max / n_bins as f64;
    let mut r = Vec::with_capacity(n_bins + 1);
    let mut n = Vec::with_capacity(n_bins + 1);
    let mut seen = 0;
    for k in 0..=n_bins {
        let rk = k as f64 * dr;
        while seen < dists.len() && dists[seen] <= rk {
            seen += 1;
        }
        r.push(rk);
        n.push(if k == 0 { 0.0 } else { seen as f64 / n_center as f64 });
    }
    Ok(Some(CoordinationCurve { r, n }))
}
