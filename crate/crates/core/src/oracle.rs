//! Centralized ground truth over a snapshot of the whole team.
//!
//! Nothing in here is reachable from an agent's step; the harness uses it for
//! metrics and the tests use it as the reference the distributed code is
//! checked against.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::netsim::RadioModel;
use crate::{Error, Result, Vector};

/// Eigenvector entries with magnitude below this are treated as zero when
/// picking the sign of the Fiedler vector.
const SIGN_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    /// `w(d) = exp(-d² / 2σ²)` inside range, 0 outside.
    Smooth,
    /// `w(d) = 1` inside range, 0 outside.
    Binary,
}

/// Edge weight model shared by the oracle and the agents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub kind: WeightKind,
    /// Gaussian width; ignored in binary mode.
    pub sigma: f64,
}

impl WeightParams {
    pub fn smooth(sigma: f64) -> Self {
        Self {
            kind: WeightKind::Smooth,
            sigma,
        }
    }

    pub fn binary() -> Self {
        Self {
            kind: WeightKind::Binary,
            sigma: 1.0,
        }
    }

    /// Smooth weights with `σ = comm_range / 3`.
    pub fn default_for_range(comm_range: f64) -> Self {
        Self::smooth(comm_range / 3.0)
    }

    pub fn weight(&self, d: f64, comm_range: f64) -> f64 {
        if d > comm_range {
            return 0.0;
        }
        match self.kind {
            WeightKind::Binary => 1.0,
            WeightKind::Smooth => (-d * d / (2.0 * self.sigma * self.sigma)).exp(),
        }
    }

    /// `dw/dd`, zero outside range and everywhere in binary mode.
    pub fn weight_derivative(&self, d: f64, comm_range: f64) -> f64 {
        if d > comm_range {
            return 0.0;
        }
        match self.kind {
            WeightKind::Binary => 0.0,
            WeightKind::Smooth => -d / (self.sigma * self.sigma) * self.weight(d, comm_range),
        }
    }
}

/// Ground-truth weighted communication graph at one instant.
#[derive(Clone, Debug)]
pub struct GraphSnapshot {
    pub positions: Vec<Vector>,
    pub weights: DMatrix<f64>,
    pub comm_range: f64,
}

impl GraphSnapshot {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&j| j != i && self.has_edge(i, j))
    }

    /// Builds a snapshot directly from a weight matrix; used for abstract
    /// graphs in tests where geometry does not matter.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "weight matrix is {}x{}",
                n,
                weights.ncols()
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w >= 0.0 && w.is_finite()) || w != weights[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "weight ({i},{j}) must be finite, nonnegative and symmetric"
                    )));
                }
            }
        }
        Ok(Self {
            positions: vec![Vector::zeros(0); n],
            weights,
            comm_range: f64::INFINITY,
        })
    }
}

/// Eigenpair of the Laplacian belonging to the algebraic connectivity.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub lambda2: f64,
    /// Unit norm, orthogonal to the all-ones vector, first nonzero entry positive.
    pub fiedler_vector: DVector<f64>,
}

/// Builds the disk graph of `positions` under `radio.comm_range`.
pub fn build_graph(
    positions: &[Vector],
    radio: &RadioModel,
    weight_params: &WeightParams,
) -> Result<GraphSnapshot> {
    if !(radio.comm_range > 0.0) {
        return Err(Error::InvalidInput("comm_range must be positive".into()));
    }
    if let Some(i) = positions
        .iter()
        .position(|p| p.iter().any(|c| !c.is_finite()))
    {
        return Err(Error::NonFinitePosition(i));
    }
    let n = positions.len();
    let mut weights = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (&positions[i] - &positions[j]).norm();
            if d <= radio.comm_range {
                let w = weight_params.weight(d, radio.comm_range);
                weights[(i, j)] = w;
                weights[(j, i)] = w;
            }
        }
    }
    Ok(GraphSnapshot {
        positions: positions.to_vec(),
        weights,
        comm_range: radio.comm_range,
    })
}

/// `L = D − W`.
pub fn laplacian(g: &GraphSnapshot) -> DMatrix<f64> {
    let n = g.n();
    let mut l = -g.weights.clone();
    for i in 0..n {
        l[(i, i)] = g.weights.row(i).sum();
    }
    l
}

/// Exact algebraic connectivity and Fiedler vector via a dense symmetric
/// eigendecomposition.
pub fn fiedler(g: &GraphSnapshot) -> Result<SpectralResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "fiedler needs at least 2 nodes, got {n}"
        )));
    }
    let eig = SymmetricEigen::new(laplacian(g));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lambda2 = eig.eigenvalues[order[1]].max(0.0);

    // For a connected graph the second eigenvector is already orthogonal to
    // the ones vector. When λ₂ = 0 the kernel is degenerate and the solver may
    // return any basis of it, so project both kernel vectors and keep the
    // better-conditioned one.
    let centered = |k: usize| {
        let v = eig.eigenvectors.column(order[k]).into_owned();
        let mean = v.mean();
        v.add_scalar(-mean)
    };
    let mut v = centered(1);
    if lambda2 <= 1e-9 {
        let alt = centered(0);
        if alt.norm() > v.norm() {
            v = alt;
        }
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    if let Some(first) = v.iter().copied().find(|c| c.abs() > SIGN_EPS) {
        if first < 0.0 {
            v = -v;
        }
    }
    Ok(SpectralResult {
        lambda2,
        fiedler_vector: v,
    })
}

/// Breadth-first hop distances from `source` over the unweighted support.
pub fn hop_distances(g: &GraphSnapshot, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    if source >= g.n() {
        return dist;
    }
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn is_connected(g: &GraphSnapshot) -> bool {
    g.n() <= 1 || hop_distances(g, 0).iter().all(Option::is_some)
}

/// Hop diameter of a connected graph, `None` when disconnected.
pub fn diameter(g: &GraphSnapshot) -> Option<usize> {
    let mut best = 0;
    for s in 0..g.n() {
        for d in hop_distances(g, s) {
            best = best.max(d?);
        }
    }
    Some(best)
}

/// Node `i`'s 1-and-2-hop neighborhood and its weakly attached 2-hop nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoHopStructure {
    /// |Π_i|: distinct nodes at hop distance 1 or 2.
    pub pi_size: usize,
    /// Nodes at hop distance exactly 2 reachable through at most `k` relays.
    pub path_set: BTreeSet<usize>,
}

pub fn two_hop_structure(g: &GraphSnapshot, i: usize, k: usize) -> TwoHopStructure {
    let dist = hop_distances(g, i);
    let pi_size = dist
        .iter()
        .filter(|d| matches!(d, Some(1) | Some(2)))
        .count();
    let path_set = (0..g.n())
        .filter(|&j| dist[j] == Some(2))
        .filter(|&j| g.neighbors(i).filter(|&m| g.has_edge(m, j)).count() <= k)
        .collect();
    TwoHopStructure { pi_size, path_set }
}

/// ν_i^k = |Path_i(k)| / |Π_i|, defined as 0 for an empty neighborhood.
pub fn robustness_score(g: &GraphSnapshot, i: usize, k: usize) -> f64 {
    let s = two_hop_structure(g, i, k);
    if s.pi_size == 0 {
        0.0
    } else {
        s.path_set.len() as f64 / s.pi_size as f64
    }
}
