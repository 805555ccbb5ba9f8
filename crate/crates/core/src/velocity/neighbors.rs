use crate::error::{Error, Result};
use crate::types::{Lattice, Vec3};

/// Unordered atom pair within a cutoff, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    /// Lattice shift applied to `j`: the pair vector is `x_j - x_i + shift . rows`.
    pub shift: [i32; 3],
    /// Minimum-image vector from `i` to `j`.
    pub vector: Vec3,
    pub distance: f64,
}

/// All pairs closer than `cutoff` under the minimum-image convention.
///
/// Uses a cell list when every cell width holds at least three bins and a
/// direct pair scan otherwise. The cutoff must stay below half the smallest
/// cell width so that each pair has a single image in range.
pub fn neighbor_pairs(lattice: &Lattice, positions: &[Vec3], cutoff: f64) -> Result<Vec<Pair>> {
    let mut pairs = unordered_pairs(lattice, positions, cutoff)?;
    pairs.sort_unstable_by_key(|p| (p.i, p.j));
    Ok(pairs)
}

fn unordered_pairs(lattice: &Lattice, positions: &[Vec3], cutoff: f64) -> Result<Vec<Pair>> {
    let half = lattice.half_min_width();
    if !(cutoff > 0.0 && cutoff < half) {
        return Err(Error::CutoffExceedsCell {
            r_cut: cutoff,
            half_width: half,
        });
    }
    let n = positions.len();
    // wrapped fractional and Cartesian coordinates, and the image each atom sits in
    let mut frac = Vec::with_capacity(n);
    let mut wrapped = Vec::with_capacity(n);
    let mut image = Vec::with_capacity(n);
    for p in positions {
        let f = lattice.to_fractional(p);
        let w = lattice.wrapped_fractional(p);
        image.push([
            (f[0] - w[0]).round() as i32,
            (f[1] - w[1]).round() as i32,
            (f[2] - w[2]).round() as i32,
        ]);
        frac.push(w);
        wrapped.push(lattice.from_fractional(&w));
    }
    let widths = lattice.widths();
    let bins = [0, 1, 2].map(|k| (widths[k] / cutoff).floor() as usize);
    let cutoff_sq = cutoff * cutoff;
    let mut pairs = Vec::new();
    // shift vectors for s in {-1, 0, 1}^3
    let mut offsets = [Vec3::zeros(); 27];
    for (k, o) in offsets.iter_mut().enumerate() {
        *o = lattice.shift_vector([k as i32 / 9 - 1, (k as i32 / 3) % 3 - 1, k as i32 % 3 - 1]);
    }
    let mut push = |i: usize, j: usize, s: [i32; 3]| {
        let offset = if s.iter().all(|c| c.abs() <= 1) {
            offsets[((s[0] + 1) * 9 + (s[1] + 1) * 3 + s[2] + 1) as usize]
        } else {
            lattice.shift_vector(s)
        };
        let vector = wrapped[j] - wrapped[i] + offset;
        let dist_sq = vector.norm_squared();
        if dist_sq < cutoff_sq {
            let shift = [
                s[0] - image[j][0] + image[i][0],
                s[1] - image[j][1] + image[i][1],
                s[2] - image[j][2] + image[i][2],
            ];
            pairs.push(Pair {
                i,
                j,
                shift,
                vector,
                distance: dist_sq.sqrt(),
            });
        }
    };

    if bins.iter().any(|&b| b < 3) {
        for i in 0..n {
            for j in i + 1..n {
                let (_, s) = lattice.reduce(&lattice.from_fractional(&(frac[j] - frac[i])));
                push(i, j, s);
            }
        }
    } else {
        let n_cells = bins[0] * bins[1] * bins[2];
        let cell_of = |f: &Vec3| {
            let c = [0, 1, 2].map(|k| ((f[k] * bins[k] as f64) as usize).min(bins[k] - 1));
            (c, (c[0] * bins[1] + c[1]) * bins[2] + c[2])
        };
        let mut heads = vec![usize::MAX; n_cells];
        let mut next = vec![usize::MAX; n];
        let mut cells = Vec::with_capacity(n);
        for (a, f) in frac.iter().enumerate() {
            let (c, id) = cell_of(f);
            next[a] = heads[id];
            heads[id] = a;
            cells.push(c);
        }
        for (i, &ci) in cells.iter().enumerate() {
            for dx in -1i32..=1 {
                for dy in -1i32..=1 {
                    for dz in -1i32..=1 {
                        let mut s = [0i32; 3];
                        let mut cj = [0usize; 3];
                        for (k, d) in [dx, dy, dz].into_iter().enumerate() {
                            let raw = ci[k] as i32 + d;
                            let b = bins[k] as i32;
                            s[k] = raw.div_euclid(b);
                            cj[k] = raw.rem_euclid(b) as usize;
                        }
                        let id = (cj[0] * bins[1] + cj[1]) * bins[2] + cj[2];
                        let mut j = heads[id];
                        while j != usize::MAX {
                            if j > i {
                                push(i, j, s);
                            }
                            j = next[j];
                        }
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Directed edge list for message passing. Both directions of every pair are
/// present, sorted by (source, target).
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    pub n_atoms: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Periodic offset `o_ij` such that `x_i - x_j - o_ij` is the minimum image.
    pub offsets: Vec<Vec3>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    /// `x_i - x_j - o_ij` for edge `e`.
    pub fn displacement(&self, positions: &[Vec3], e: usize) -> Vec3 {
        positions[self.src[e]] - positions[self.dst[e]] - self.offsets[e]
    }
}

pub fn build_neighbor_graph(
    lattice: &Lattice,
    positions: &[Vec3],
    r_cut: f64,
) -> Result<NeighborGraph> {
    let n = positions.len();
    let pairs = unordered_pairs(lattice, positions, r_cut)?;
    // bucket directed edges by source, then order each bucket by target
    let mut start = vec![0usize; n + 1];
    for p in &pairs {
        start[p.i + 1] += 1;
        start[p.j + 1] += 1;
    }
    for a in 0..n {
        start[a + 1] += start[a];
    }
    let mut fill = start.clone();
    let mut edges = vec![(0usize, Vec3::zeros()); 2 * pairs.len()];
    for p in &pairs {
        let o = lattice.shift_vector(p.shift);
        edges[fill[p.i]] = (p.j, o);
        fill[p.i] += 1;
        edges[fill[p.j]] = (p.i, -o);
        fill[p.j] += 1;
    }
    let mut src = Vec::with_capacity(edges.len());
    for a in 0..n {
        edges[start[a]..start[a + 1]].sort_unstable_by_key(|e| e.0);
        src.resize(start[a + 1], a);
    }
    let dst = edges.iter().map(|e| e.0).collect();
    let offsets = edges.iter().map(|e| e.1).collect();
    Ok(NeighborGraph {
        n_atoms: n,
        src,
        dst,
        offsets,
    })
}
