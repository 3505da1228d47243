//! Hardware coupler graphs.
//!
//! Chimera `C_m` is an `m x m` grid of `K_{4,4}` unit cells. Qubit indices
//! are cell-major, row-major, side-then-position:
//!
//! ```text
//! index(row, col, side, k) = ((row * m + col) * 2 + side) * 4 + k
//! ```
//!
//! Side 0 qubits couple to the same `k` in the cell below (vertical
//! couplers); side 1 qubits couple to the same `k` in the cell to the right
//! (horizontal couplers). Within a cell every side-0 qubit couples to every
//! side-1 qubit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Undirected coupler graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct Topology {
    num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    label: String,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from an edge list. Pairs may be in either order;
    /// duplicates collapse. Self-loops and out-of-range indices are errors.
    pub fn from_edges(
        num_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(Error::IndexOutOfRange { index: q, size: num_qubits });
                }
            }
            if a == b {
                return Err(Error::SelfCoupling(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); num_qubits];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        Ok(Topology { num_qubits, edges: set, label: label.into(), adjacency })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Sorted neighbors of `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adjacency.get(i).map(Vec::as_slice).ok_or(Error::IndexOutOfRange { index: i, size: self.num_qubits })
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.neighbors(i).map(<[usize]>::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Grid size if this topology carries a `chimera-<m>` label with the
    /// matching qubit count.
    pub fn chimera_size(&self) -> Option<usize> {
        let m: usize = self.label.strip_prefix("chimera-")?.parse().ok()?;
        (m >= 1 && self.num_qubits == 8 * m * m).then_some(m)
    }
}

/// Index of the qubit at `(row, col, side, k)` in `C_m`.
pub fn chimera_index(m: usize, row: usize, col: usize, side: usize, k: usize) -> usize {
    debug_assert!(row < m && col < m && side < 2 && k < 4);
    ((row * m + col) * 2 + side) * 4 + k
}

/// Inverse of [`chimera_index`].
pub fn chimera_coords(m: usize, index: usize) -> (usize, usize, usize, usize) {
    let k = index % 4;
    let side = (index / 4) % 2;
    let cell = index / 8;
    (cell / m, cell % m, side, k)
}

/// Defect-free Chimera `C_m`: `8 m^2` qubits, `16 m^2 + 8 m (m - 1)` couplers.
pub fn chimera(m: usize) -> Result<Topology> {
    if m < 1 {
        return Err(Error::InvalidParameter("chimera grid size must be at least 1".into()));
    }
    let mut edges = Vec::with_capacity(16 * m * m + 8 * m * (m - 1));
    for row in 0..m {
        for col in 0..m {
            for a in 0..4 {
                for b in 0..4 {
                    edges.push((chimera_index(m, row, col, 0, a), chimera_index(m, row, col, 1, b)));
                }
            }
            for k in 0..4 {
                if row + 1 < m {
                    edges.push((chimera_index(m, row, col, 0, k), chimera_index(m, row + 1, col, 0, k)));
                }
                if col + 1 < m {
                    edges.push((chimera_index(m, row, col, 1, k), chimera_index(m, row, col + 1, 1, k)));
                }
            }
        }
    }
    Topology::from_edges(8 * m * m, edges, format!("chimera-{m}"))
}

#[derive(Serialize, Deserialize)]
struct RawTopology {
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    label: String,
}

impl TryFrom<RawTopology> for Topology {
    type Error = Error;

    fn try_from(raw: RawTopology) -> Result<Self> {
        Topology::from_edges(raw.num_qubits, raw.edges, raw.label)
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology { num_qubits: t.num_qubits, edges: t.edges.into_iter().collect(), label: t.label }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let t = chimera(1).unwrap();
        assert_eq!((t.num_qubits(), t.num_edges()), (8, 16));
        for q in 0..8 {
            assert_eq!(t.degree(q).unwrap(), 4);
        }
        assert!(t.has_edge(0, 4));
        assert!(!t.has_edge(0, 1));
    }

    #[test]
    fn zero_grid_is_rejected() {
        assert!(chimera(0).is_err());
    }

    #[test]
    fn two_by_two_has_degree_five_everywhere() {
        // Every qubit of C2 sits on a boundary and has exactly one inter-cell
        // neighbor; count directly from the edge list.
        let t = chimera(2).unwrap();
        let mut deg = [0usize; 32];
        for (a, b) in t.edges() {
            deg[a] += 1;
            deg[b] += 1;
        }
        assert!(deg.iter().all(|&d| d == 5));
        assert_eq!(t.degree(chimera_index(2, 0, 0, 0, 2)).unwrap(), 5);
    }

    #[test]
    fn full_size_counts() {
        let t = chimera(16).unwrap();
        assert_eq!(t.num_qubits(), 2048);
        assert_eq!(t.num_edges(), 6016);
        assert_eq!(t.max_degree(), 6);
        assert_eq!(t.degree(chimera_index(16, 5, 7, 0, 1)).unwrap(), 6);
        assert_eq!(t.degree(chimera_index(16, 5, 7, 1, 3)).unwrap(), 6);
    }

    #[test]
    fn closed_form_counts() {
        for m in 1..=16 {
            let t = chimera(m).unwrap();
            assert_eq!(t.num_qubits(), 8 * m * m);
            assert_eq!(t.num_edges(), 16 * m * m + 8 * m * (m - 1));
            assert!(t.max_degree() <= 6);
            assert_eq!(t.chimera_size(), Some(m));
        }
    }

    #[test]
    fn smaller_grid_is_a_subgraph() {
        for m in 1..8 {
            let small = chimera(m).unwrap();
            let big = chimera(m + 1).unwrap();
            let lift = |q: usize| {
                let (r, c, s, k) = chimera_coords(m, q);
                chimera_index(m + 1, r, c, s, k)
            };
            for (a, b) in small.edges() {
                assert!(big.has_edge(lift(a), lift(b)), "m={m} edge ({a},{b})");
            }
        }
    }

    #[test]
    fn coords_roundtrip() {
        let m = 3;
        for q in 0..8 * m * m {
            let (r, c, s, k) = chimera_coords(m, q);
            assert_eq!(chimera_index(m, r, c, s, k), q);
        }
    }

    #[test]
    fn degree_out_of_range() {
        assert!(matches!(chimera(1).unwrap().degree(8), Err(Error::IndexOutOfRange { index: 8, size: 8 })));
    }

    #[test]
    fn json_is_sorted_and_stable() {
        let t = Topology::from_edges(3, [(2, 1), (1, 0), (0, 2)], "tri").unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(text, r#"{"num_qubits":3,"edges":[[0,1],[0,2],[1,2]],"label":"tri"}"#);
        assert_eq!(serde_json::from_str::<Topology>(&text).unwrap(), t);
        assert!(serde_json::from_str::<Topology>(r#"{"num_qubits":2,"edges":[[0,0]],"label":""}"#).is_err());
    }
}
