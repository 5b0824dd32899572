//! Unweighted interaction graphs without self-loops.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Interaction topology among `num_vertices` agents.
///
/// The adjacency matrix is built once at construction; `a[(i, k)] = 1` iff the
/// edge `(i, k)` is present. Undirected graphs store both orientations.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    directed: bool,
    adjacency: DMatrix<f64>,
}

/// Builds a graph, symmetrizing the edge set when `directed` is false.
///
/// Self-loops, out-of-range indices and repeated edges are rejected. For an
/// undirected graph `(i, j)` and `(j, i)` name the same edge.
pub fn build_graph(num_vertices: usize, edges: &[(usize, usize)], directed: bool) -> Result<Graph> {
    if num_vertices == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut set = BTreeSet::new();
    for &(i, j) in edges {
        for v in [i, j] {
            if v >= num_vertices {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    num_vertices,
                });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let key = if directed {
            (i, j)
        } else {
            (i.min(j), i.max(j))
        };
        if !set.insert(key) {
            return Err(Error::DuplicateEdge(i, j));
        }
    }
    let mut all = Vec::with_capacity(set.len() * 2);
    for &(i, j) in &set {
        all.push((i, j));
        if !directed {
            all.push((j, i));
        }
    }
    all.sort_unstable();
    let mut adjacency = DMatrix::zeros(num_vertices, num_vertices);
    for &(i, j) in &all {
        adjacency[(i, j)] = 1.0;
    }
    Ok(Graph {
        num_vertices,
        edges: all,
        directed,
        adjacency,
    })
}

impl Graph {
    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        build_graph(n, &edges, false)
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        build_graph(n, &edges, false)
    }

    /// Undirected cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        build_graph(n, &edges, false)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// All ordered pairs `(i, k)` with `a_ik = 1`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges as supplied to [`build_graph`]: one pair per undirected edge.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        if self.directed {
            self.edges.clone()
        } else {
            self.edges.iter().copied().filter(|(i, j)| i < j).collect()
        }
    }

    pub fn adjacency_matrix(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).iter().filter(|&&a| a != 0.0).count()
    }

    /// Weak connectivity (edge orientation ignored).
    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices;
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for k in 0..n {
                let linked = self.adjacency[(i, k)] != 0.0 || self.adjacency[(k, i)] != 0.0;
                if linked && !seen[k] {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Adjacency matrix of `g` (an owned copy).
pub fn adjacency_matrix(g: &Graph) -> DMatrix<f64> {
    g.adjacency_matrix().clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_adjacency() {
        let g = build_graph(3, &[(0, 1), (1, 2)], false).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.]);
        assert_eq!(adjacency_matrix(&g), expected);
        assert_eq!(g, Graph::path(3).unwrap());
        assert_eq!(g.degree(1), 2);
    }

    #[test]
    fn edgeless_graph_is_zero() {
        let g = build_graph(2, &[], false).unwrap();
        assert_eq!(adjacency_matrix(&g), DMatrix::zeros(2, 2));
        assert!(!g.is_connected());
    }

    #[test]
    fn complete_graph_is_ones_minus_identity() {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = build_graph(4, &pairs, false).unwrap();
        let a = adjacency_matrix(&g);
        assert_eq!(
            a,
            DMatrix::from_element(4, 4, 1.0) - DMatrix::identity(4, 4)
        );
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(build_graph(3, &[(1, 1)], false), Err(Error::SelfLoop(1)));
        assert_eq!(
            build_graph(3, &[(0, 3)], false),
            Err(Error::VertexOutOfRange {
                vertex: 3,
                num_vertices: 3
            })
        );
        assert_eq!(
            build_graph(3, &[(0, 1), (1, 0)], false),
            Err(Error::DuplicateEdge(1, 0))
        );
        assert_eq!(build_graph(0, &[], false), Err(Error::EmptyGraph));
    }

    #[test]
    fn directed_edges_keep_orientation() {
        let g = build_graph(3, &[(0, 1), (1, 0), (1, 2)], true).unwrap();
        let a = g.adjacency_matrix();
        assert_eq!(a[(1, 2)], 1.0);
        assert_eq!(a[(2, 1)], 0.0);
        assert_eq!(g.edge_list(), alloc::vec![(0, 1), (1, 0), (1, 2)]);
        assert!(g.is_connected());
    }
}
