use super::pairs_within;
use crate::error::{Error, Result};
use crate::types::{ElementTable, MaterialSample};

/// Bonded when closer than this multiple of the summed covalent radii.
pub const DEFAULT_BOND_FACTOR: f64 = 1.3;

/// Bond to atom `to`, seen through lattice image `shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bond {
    pub to: usize,
    pub shift: [i32; 3],
}

/// Symmetric bond network; ghost atoms have no bonds.
#[derive(Clone, Debug, PartialEq)]
pub struct BondGraph {
    pub adjacency: Vec<Vec<Bond>>,
}

impl BondGraph {
    pub fn n_atoms(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(i, bonds)| {
            bonds.iter().all(|b| {
                let back = Bond {
                    to: i,
                    shift: b.shift.map(|s| -s),
                };
                self.adjacency[b.to].contains(&back)
            })
        })
    }
}

/// Bonds every non-ghost pair closer than `factor * (r_a + r_b)` under the
/// minimum-image convention. `radii` is indexed by element.
pub fn build_bond_graph(
    sample: &MaterialSample,
    table: &ElementTable,
    radii: &[Option<f64>],
    factor: f64,
) -> Result<BondGraph> {
    let species = sample.assignments()?;
    let mut max_radius: f64 = 0.0;
    for &e in species {
        table.check_index(e)?;
        if table.is_ghost(e) {
            continue;
        }
        let r = radii
            .get(e)
            .copied()
            .flatten()
            .ok_or_else(|| Error::MissingRadius(table.name(e).to_string()))?;
        max_radius = max_radius.max(r);
    }
    let mut adjacency = vec![Vec::new(); sample.len()];
    if max_radius == 0.0 {
        return Ok(BondGraph { adjacency });
    }
    let search = factor * 2.0 * max_radius;
    for p in pairs_within(&sample.lattice, &sample.positions, search)? {
        let (a, b) = (species[p.i], species[p.j]);
        if table.is_ghost(a) || table.is_ghost(b) {
            continue;
        }
        let threshold = factor * (radii[a].unwrap() + radii[b].unwrap());
        if p.distance < threshold {
            adjacency[p.i].push(Bond { to: p.j, shift: p.shift });
            adjacency[p.j].push(Bond {
                to: p.i,
                shift: p.shift.map(|s| -s),
            });
        }
    }
    for bonds in &mut adjacency {
        bonds.sort();
    }
    Ok(BondGraph { adjacency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ElementState, Lattice, Vec3};

    fn pair(distance: f64) -> MaterialSample {
        MaterialSample::new(
            Lattice::cubic(20.0).unwrap(),
            vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0 + distance, 1.0, 1.0)],
            ElementState::Assignments(vec![0, 1]),
        )
        .unwrap()
    }

    fn radii() -> Vec<Option<f64>> {
        vec![Some(1.11), Some(0.66), None]
    }

    #[test]
    fn si_o_threshold() {
        let t = ElementTable::silica(0.1);
        // threshold 1.3 * (1.11 + 0.66) = 2.301
        let g = build_bond_graph(&pair(1.6), &t, &radii(), DEFAULT_BOND_FACTOR).unwrap();
        assert_eq!(g.n_bonds(), 1);
        assert!(g.is_symmetric());
        let g = build_bond_graph(&pair(2.4), &t, &radii(), DEFAULT_BOND_FACTOR).unwrap();
        assert_eq!(g.n_bonds(), 0);
        let g = build_bond_graph(&pair(2.30), &t, &radii(), DEFAULT_BOND_FACTOR).unwrap();
        assert_eq!(g.n_bonds(), 1);
    }

    #[test]
    fn bonds_across_the_boundary() {
        let t = ElementTable::silica(0.1);
        let s = MaterialSample::new(
            Lattice::cubic(10.0).unwrap(),
            vec![Vec3::new(0.5, 1.0, 1.0), Vec3::new(9.2, 1.0, 1.0)],
            ElementState::Assignments(vec![0, 1]),
        )
        .unwrap();
        let g = build_bond_graph(&s, &t, &radii(), DEFAULT_BOND_FACTOR).unwrap();
        assert_eq!(g.adjacency[0], vec![Bond { to: 1, shift: [-1, 0, 0] }]);
        assert_eq!(g.adjacency[1], vec![Bond { to: 0, shift: [1, 0, 0] }]);
    }

    #[test]
    fn ghosts_and_missing_radii() {
        let t = ElementTable::silica(0.1);
        let mut s = pair(1.0);
        s.elements = ElementState::Assignments(vec![0, 2]);
        let g = build_bond_graph(&s, &t, &radii(), DEFAULT_BOND_FACTOR).unwrap();
        assert_eq!(g.n_bonds(), 0);
        let err = build_bond_graph(&pair(1.0), &t, &[Some(1.11), None, None], 1.3).unwrap_err();
        assert_eq!(err, Error::MissingRadius("O".into()));
    }

    #[test]
    fn single_atom_graph_is_empty() {
        let t = ElementTable::silica(0.1);
        let s = MaterialSample::new(
            Lattice::cubic(10.0).unwrap(),
            vec![Vec3::zeros()],
            ElementState::Assignments(vec![0]),
        )
        .unwrap();
        let g = build_bond_graph(&s, &t, &radii(), 1.3).unwrap();
        assert_eq!(g.n_bonds(), 0);
    }
}
