//! Undirected weighted communication graphs, their Laplacians and the two
//! modal bases used to decouple consensus dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{symmetric_eigen, Matrix};

/// Weighted undirected graph on `N` agents, stored as its adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: Matrix,
}

impl Graph {
    /// Validates a symmetric, nonnegative adjacency matrix with zero diagonal.
    pub fn new(weights: Matrix) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::Graph(format!(
                "adjacency must be square, got {}x{}",
                weights.rows(),
                weights.cols()
            )));
        }
        let n = weights.rows();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("self-loop on agent {}", i + 1)));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if w < 0.0 {
                    return Err(Error::Graph(format!("negative weight {w} on edge ({}, {})", i + 1, j + 1)));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Graph(format!("weights not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Builds a graph from 0-based undirected edges `(i, j, weight)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one agent".into()));
        }
        let mut w = Matrix::zeros(n, n);
        for &(i, j, a) in edges {
            if i >= n || j >= n {
                return Err(Error::Graph(format!("edge ({i}, {j}) out of range for {n} agents")));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop on agent {}", i + 1)));
            }
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Graph(format!("edge weight must be positive and finite, got {a}")));
            }
            if w[(i, j)] != 0.0 {
                return Err(Error::Graph(format!("duplicate edge ({}, {})", i + 1, j + 1)));
            }
            w[(i, j)] = a;
            w[(j, i)] = a;
        }
        Self::new(w)
    }

    pub fn n_agents(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// 0-based edges with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_agents();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.weights[(i, j)] != 0.0 {
                    out.push((i, j, self.weights[(i, j)]));
                }
            }
        }
        out
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.n_agents();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if !seen[j] && self.weights[(i, j)] != 0.0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }
}

/// Pinning gains `a_i0 ≥ 0` from the leader to each follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LeaderLinks {
    gains: Vec<f64>,
}

impl LeaderLinks {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::Graph(format!("leader gains must be finite and nonnegative, got {g}")));
        }
        if !gains.iter().any(|&g| g > 0.0) {
            return Err(Error::Graph("no follower receives the leader (all leader gains are zero)".into()));
        }
        Ok(Self { gains })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// The diagonal pinning matrix `D`.
    pub fn matrix(&self) -> Matrix {
        Matrix::diag(&self.gains)
    }
}

impl TryFrom<Vec<f64>> for LeaderLinks {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LeaderLinks> for Vec<f64> {
    fn from(l: LeaderLinks) -> Self {
        l.gains
    }
}

/// Orthonormal eigenbasis of a symmetric graph matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    /// Eigenvectors as columns.
    pub basis: Matrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// Graph Laplacian `L_G = diag(row sums) − adjacency`.
pub fn laplacian(g: &Graph) -> Matrix {
    let n = g.n_agents();
    let mut l = g.weights.scale(-1.0);
    for i in 0..n {
        l[(i, i)] = (0..n).map(|j| g.weights[(i, j)]).sum();
    }
    l
}

/// Eigenbasis of `L_G` whose first column is exactly `1/√N`.
pub fn consensus_basis(g: &Graph) -> Result<ModalBasis> {
    let l = laplacian(g);
    let (mut eigenvalues, mut basis) = symmetric_eigen(&l)?;
    let n = g.n_agents();
    let scale = eigenvalues.last().map_or(1.0, |v| v.abs().max(1.0));
    if n > 1 && eigenvalues[1] <= 1e-9 * scale {
        return Err(Error::Graph(format!(
            "graph is disconnected (second Laplacian eigenvalue {:e})",
            eigenvalues[1]
        )));
    }
    eigenvalues[0] = 0.0;
    let v = 1.0 / (n as f64).sqrt();
    for i in 0..n {
        basis[(i, 0)] = v;
    }
    Ok(ModalBasis { basis, eigenvalues })
}

/// Eigenbasis of the grounded matrix `L_G + D`.
pub fn grounded_basis(g: &Graph, d: &LeaderLinks) -> Result<ModalBasis> {
    if d.len() != g.n_agents() {
        return Err(Error::Dimension(format!(
            "{} leader gains for {} agents",
            d.len(),
            g.n_agents()
        )));
    }
    let m = &laplacian(g) + &d.matrix();
    let (eigenvalues, basis) = symmetric_eigen(&m)?;
    Ok(ModalBasis { basis, eigenvalues })
}

/// JSON form of a graph: 1-based edges plus optional leader gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_gains: Option<Vec<f64>>,
}

impl GraphSpec {
    pub fn from_graph(g: &Graph, leader: Option<&LeaderLinks>) -> Self {
        Self {
            n: g.n_agents(),
            edges: g.edges().into_iter().map(|(i, j, w)| (i + 1, j + 1, w)).collect(),
            leader_gains: leader.map(|l| l.gains.clone()),
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(i, j, w) in &self.edges {
            if i == 0 || j == 0 {
                return Err(Error::Graph(format!("agent indices are 1-based, got edge [{i}, {j}]")));
            }
            edges.push((i - 1, j - 1, w));
        }
        Graph::from_edges(self.n, &edges)
    }

    pub fn leader(&self) -> Result<Option<LeaderLinks>> {
        match &self.leader_gains {
            None => Ok(None),
            Some(v) if v.len() != self.n => Err(Error::Graph(format!(
                "{} leader gains for {} agents",
                v.len(),
                self.n
            ))),
            Some(v) => LeaderLinks::new(v.clone()).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_diagonalizes(target: &Matrix, mb: &ModalBasis) {
        let n = target.rows();
        let utu = &mb.basis.transpose() * &mb.basis;
        assert!(utu.max_abs_diff(&Matrix::identity(n)) < 1e-9);
        let d = &(&mb.basis.transpose() * target) * &mb.basis;
        for i in 0..n {
            assert!((d[(i, i)] - mb.eigenvalues[i]).abs() < 1e-8);
            for j in 0..n {
                if i != j {
                    assert!(d[(i, j)].abs() < 1e-8, "off-diagonal {} at ({i},{j})", d[(i, j)]);
                }
            }
        }
        assert!(mb.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_nodes() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(laplacian(&g), Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap());
        let mb = consensus_basis(&g).unwrap();
        assert_eq!(mb.eigenvalues[0], 0.0);
        assert!((mb.eigenvalues[1] - 2.0).abs() < 1e-12);
        check_diagonalizes(&laplacian(&g), &mb);
    }

    #[test]
    fn disconnected_rejected() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(g.components(), 2);
        assert!(matches!(consensus_basis(&g), Err(Error::Graph(_))));
    }

    #[test]
    fn single_agent_grounded() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let d = LeaderLinks::new(vec![2.5]).unwrap();
        let mb = grounded_basis(&g, &d).unwrap();
        assert_eq!(mb.eigenvalues, vec![2.5]);
    }

    #[test]
    fn leader_links_validation() {
        assert!(LeaderLinks::new(vec![0.0, 0.0]).is_err());
        assert!(LeaderLinks::new(vec![-1.0, 1.0]).is_err());
        assert!(serde_json::from_str::<LeaderLinks>("[0.0, 0.0]").is_err());
    }

    #[test]
    fn bad_edges_rejected() {
        assert!(Graph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2, 1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 1, -1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        let asym = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(Graph::new(asym).is_err());
    }

    #[test]
    fn graph_spec_json_round_trip() {
        let text = r#"{"n": 3, "edges": [[1, 2, 1.0], [2, 3, 0.5]], "leader_gains": [1.0, 0.0, 0.0]}"#;
        let spec: GraphSpec = serde_json::from_str(text).unwrap();
        let g = spec.graph().unwrap();
        assert_eq!(g.weight(1, 2), 0.5);
        let leader = spec.leader().unwrap().unwrap();
        let back = GraphSpec::from_graph(&g, Some(&leader));
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<GraphSpec>(r#"{"n": 2, "edges": [], "extra": 1}"#).is_err());
        let zero_based: GraphSpec = serde_json::from_str(r#"{"n": 2, "edges": [[0, 1, 1.0]]}"#).unwrap();
        assert!(zero_based.graph().is_err());
    }

    fn connected_graph() -> impl Strategy<Value = Graph> {
        (2usize..=12).prop_flat_map(|n| {
            let tree = proptest::collection::vec((any::<prop::sample::Index>(), 0.1f64..3.0), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n, 0.1f64..3.0), 0..2 * n);
            (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
                let mut w = Matrix::zeros(n, n);
                for (k, (parent, a)) in tree.into_iter().enumerate() {
                    let child = k + 1;
                    let p = parent.index(child);
                    w[(child, p)] = a;
                    w[(p, child)] = a;
                }
                for (i, j, a) in extra {
                    if i != j {
                        w[(i, j)] = a;
                        w[(j, i)] = a;
                    }
                }
                Graph::new(w).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn laplacian_rows_sum_to_zero(g in connected_graph()) {
            let l = laplacian(&g);
            for r in l.mul_vec(&vec![1.0; g.n_agents()]) {
                prop_assert!(r.abs() < 1e-12);
            }
        }

        #[test]
        fn single_zero_eigenvalue(g in connected_graph()) {
            let mb = consensus_basis(&g).unwrap();
            let zeros = mb.eigenvalues.iter().filter(|v| v.abs() < 1e-8).count();
            prop_assert_eq!(zeros, g.components());
            check_diagonalizes(&laplacian(&g), &mb);
        }

        #[test]
        fn grounded_matrix_positive_definite(
            g in connected_graph(),
            pin in any::<prop::sample::Index>(),
            gain in 0.05f64..3.0,
        ) {
            let n = g.n_agents();
            let mut gains = vec![0.0; n];
            gains[pin.index(n)] = gain;
            let d = LeaderLinks::new(gains).unwrap();
            let mb = grounded_basis(&g, &d).unwrap();
            prop_assert!(mb.eigenvalues[0] > 1e-10);
            check_diagonalizes(&(&laplacian(&g) + &d.matrix()), &mb);
        }
    }
}
