//! Shortest-path ring statistics of a bond network.
//!
//! For every bond the shortest alternative path between its two atoms, with
//! the bond itself removed, closes a ring. The search runs breadth-first over
//! (atom, lattice image) states, so a path only counts when it returns to the
//! same periodic image of the partner atom: chains that merely wrap around the
//! cell are not rings.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::bonds::{Bond, BondGraph};

/// Default cap on ring size, counted in atoms of the counted species.
pub const DEFAULT_MAX_RING: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct RingStats {
    /// Ring size (counted atoms per ring) -> number of distinct rings.
    pub histogram: BTreeMap<usize, usize>,
    /// Mean ring size, absent when no ring was found.
    pub mean: Option<f64>,
    /// Distinct rings as sorted atom lists.
    pub rings: Vec<Vec<usize>>,
}

type State = (usize, [i32; 3]);

fn add(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Shortest path from `(i, 0)` to `(j, shift)` avoiding that direct bond,
/// with at most `max_edges` edges. Neighbours are expanded in ascending
/// order, which returns the lexicographically smallest shortest path.
fn shortest_alternative(
    graph: &BondGraph,
    i: usize,
    bond: Bond,
    max_edges: usize,
) -> Option<Vec<usize>> {
    let start: State = (i, [0; 3]);
    let goal: State = (bond.to, bond.shift);
    let mut parent: HashMap<State, State> = HashMap::new();
    let mut depth: HashMap<State, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    depth.insert(start, 0);
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        let d = depth[&cur];
        if d >= max_edges {
            continue;
        }
        for b in &graph.adjacency[cur.0] {
            let next = (b.to, add(cur.1, b.shift));
            let is_direct = (cur == start && next == goal) || (cur == goal && next == start);
            if is_direct || depth.contains_key(&next) {
                continue;
            }
            depth.insert(next, d + 1);
            parent.insert(next, cur);
            if next == goal {
                let mut path = vec![goal.0];
                let mut s = goal;
                while let Some(&p) = parent.get(&s) {
                    path.push(p.0);
                    s = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Rings closed by the shortest alternative path of every bond, sized by the
/// number of atoms whose element is `counted` (Si for silica). Rings holding
/// more than `max_ring` counted atoms, or none at all, are ignored; the
/// search depth is bounded at `2 * max_ring` atoms per ring.
pub fn ring_statistics(
    graph: &BondGraph,
    assignments: &[usize],
    counted: usize,
    max_ring: usize,
) -> RingStats {
    let max_edges = (2 * max_ring).saturating_sub(1);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut histogram = BTreeMap::new();
    let mut total = 0usize;
    for (i, bonds) in graph.adjacency.iter().enumerate() {
        for &bond in bonds {
            // each bond once; bonds to an atom's own image do not close rings here
            if bond.to <= i {
                continue;
            }
            let Some(path) = shortest_alternative(graph, i, bond, max_edges) else {
                continue;
            };
            let mut key = path.clone();
            key.sort_unstable();
            key.dedup();
            if seen.contains(&key) {
                continue;
            }
            let size = key.iter().filter(|&&a| assignments[a] == counted).count();
            if size == 0 || size > max_ring {
                continue;
            }
            *histogram.entry(size).or_insert(0) += 1;
            total += size;
            seen.insert(key);
        }
    }
    let count: usize = histogram.values().sum();
    RingStats {
        mean: (count > 0).then(|| total as f64 / count as f64),
        histogram,
        rings: seen.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> BondGraph {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            adjacency[a].push(Bond { to: b, shift: [0; 3] });
            adjacency[b].push(Bond { to: a, shift: [0; 3] });
        }
        for bonds in &mut adjacency {
            bonds.sort();
        }
        BondGraph { adjacency }
    }

    #[test]
    fn six_cycle_is_one_three_membered_ring() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let species = [0, 1, 0, 1, 0, 1];
        let r = ring_statistics(&g, &species, 0, DEFAULT_MAX_RING);
        assert_eq!(r.histogram, BTreeMap::from([(3, 1)]));
        assert_eq!(r.mean, Some(3.0));
    }

    #[test]
    fn trees_have_no_rings() {
        let g = graph(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
        let r = ring_statistics(&g, &[0, 1, 0, 1, 0], 0, DEFAULT_MAX_RING);
        assert!(r.histogram.is_empty());
        assert_eq!(r.mean, None);
    }

    #[test]
    fn wrapping_chain_is_not_a_ring() {
        // 0 - 1 - 0' where 0' is the next image: an infinite chain
        let adjacency = vec![
            vec![Bond { to: 1, shift: [0, 0, 0] }, Bond { to: 1, shift: [-1, 0, 0] }],
            vec![Bond { to: 0, shift: [0, 0, 0] }, Bond { to: 0, shift: [1, 0, 0] }],
        ];
        let r = ring_statistics(&BondGraph { adjacency }, &[0, 1], 0, DEFAULT_MAX_RING);
        assert!(r.histogram.is_empty());
    }

    #[test]
    fn ring_closing_through_the_boundary() {
        // square 0-1-2-3 with atom 3 bonded through the neighbouring image
        let adjacency = vec![
            vec![Bond { to: 1, shift: [0; 3] }, Bond { to: 3, shift: [1, 0, 0] }],
            vec![Bond { to: 0, shift: [0; 3] }, Bond { to: 2, shift: [0; 3] }],
            vec![Bond { to: 1, shift: [0; 3] }, Bond { to: 3, shift: [1, 0, 0] }],
            vec![Bond { to: 0, shift: [-1, 0, 0] }, Bond { to: 2, shift: [-1, 0, 0] }],
        ];
        let r = ring_statistics(&BondGraph { adjacency }, &[0, 1, 0, 1], 0, DEFAULT_MAX_RING);
        assert_eq!(r.histogram, BTreeMap::from([(2, 1)]));
    }

    #[test]
    fn fused_rings_counted_separately() {
        // two hexagons sharing the 0-1 edge
        let g = graph(
            10,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 6), (6, 7), (7, 8), (8, 9), (9, 0)],
        );
        let species = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let r = ring_statistics(&g, &species, 0, DEFAULT_MAX_RING);
        assert_eq!(r.histogram, BTreeMap::from([(3, 2)]));
    }
}
