//! The three velocity contributions and their weighted sum
//! `u = σ·u^c + ψ·u^r + ζ·u^LJ`.
//!
//! All inputs are local: own Fiedler entry and λ₂ estimate, neighbor offsets
//! and Fiedler entries from beacons, and the 2-hop view from digests.

use std::collections::BTreeSet;

use crate::netsim::NeighborTable;
use crate::oracle::WeightParams;
use crate::{RobotId, Vector, D_MIN};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gains {
    /// Connectivity gain.
    pub sigma: f64,
    /// Robustness gain.
    pub psi: f64,
    /// Coverage gain.
    pub zeta: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            psi: 1.0,
            zeta: 1.0,
        }
    }
}

/// Generalized Lennard-Jones parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LJParams {
    pub a: f64,
    pub b: f64,
    /// Spacing scale in meters.
    pub delta: f64,
    /// Strength.
    pub iota: f64,
}

impl LJParams {
    pub fn default_for_range(comm_range: f64) -> Self {
        Self {
            a: 4.0,
            b: 2.0,
            delta: comm_range,
            iota: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriggerDirection {
    /// Fire when ν > r.
    Above,
    /// Fire when ν < r.
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessParams {
    /// Maximum number of relays for a 2-hop node to count as weakly attached.
    pub k: usize,
    /// Trigger threshold on ν.
    pub r: f64,
    pub trigger: TriggerDirection,
}

impl Default for RobustnessParams {
    fn default() -> Self {
        Self {
            k: 1,
            r: 0.3,
            trigger: TriggerDirection::Above,
        }
    }
}

impl RobustnessParams {
    pub fn fires(&self, nu: f64) -> bool {
        match self.trigger {
            TriggerDirection::Above => nu > self.r,
            TriggerDirection::Below => nu < self.r,
        }
    }
}

/// Shape of the connectivity energy `V(λ) = coth((λ − ε/2) / s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VParams {
    /// Lower clamp on the λ₂ estimate; the pole of V sits at half of it.
    pub epsilon_lambda: f64,
    pub scale: f64,
}

impl Default for VParams {
    fn default() -> Self {
        Self {
            epsilon_lambda: 0.01,
            scale: 1.0,
        }
    }
}

impl VParams {
    fn shifted(&self, lambda: f64) -> f64 {
        (lambda - self.epsilon_lambda / 2.0) / self.scale
    }

    pub fn energy(&self, lambda: f64) -> f64 {
        1.0 / self.shifted(lambda).tanh()
    }

    /// `dV/dλ = −csch²((λ − ε/2)/s) / s`.
    pub fn energy_derivative(&self, lambda: f64) -> f64 {
        let sinh = self.shifted(lambda).sinh();
        -1.0 / (sinh * sinh * self.scale)
    }
}

/// A vector contribution plus whether a singular configuration was skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct Contribution {
    pub vector: Vector,
    pub degenerate: bool,
}

impl Contribution {
    fn zero(dim: usize, degenerate: bool) -> Self {
        Self {
            vector: Vector::zeros(dim),
            degenerate,
        }
    }
}

/// One neighbor as seen by the connectivity term.
#[derive(Clone, Debug, PartialEq)]
pub struct FiedlerNeighbor {
    pub fiedler: f64,
    /// Neighbor position minus own position.
    pub offset: Vector,
}

/// Simple-eigenvalue derivative `∂λ₂/∂p_i = Σ_j (∂w_ij/∂p_i)(x_i − x_j)²`,
/// exact when `x` is the unit-norm Fiedler vector.
pub fn lambda2_gradient(
    own_fiedler: f64,
    neighbors: &[FiedlerNeighbor],
    weights: &WeightParams,
    comm_range: f64,
    dim: usize,
) -> Contribution {
    let mut grad = Vector::zeros(dim);
    let mut degenerate = false;
    for nb in neighbors {
        let d = nb.offset.norm();
        if d < D_MIN {
            degenerate = true;
            continue;
        }
        let diff = own_fiedler - nb.fiedler;
        // ∂w/∂p_i = w'(d)·(p_i − p_j)/d = −w'(d)·offset/d
        let scale = -weights.weight_derivative(d, comm_range) / d * diff * diff;
        grad.axpy(scale, &nb.offset, 1.0);
    }
    Contribution {
        vector: grad,
        degenerate,
    }
}

/// `u^c = −V'(λ₂)·∂λ₂/∂p_i`.
pub fn connectivity_contribution(
    lambda2_est: f64,
    own_fiedler: f64,
    neighbors: &[FiedlerNeighbor],
    vparams: &VParams,
    weights: &WeightParams,
    comm_range: f64,
    dim: usize,
) -> Contribution {
    let mut c = lambda2_gradient(own_fiedler, neighbors, weights, comm_range, dim);
    c.vector *= -vparams.energy_derivative(lambda2_est);
    c
}

/// Locally reconstructed |Π_i| and Path_i(k).
pub fn local_two_hop(table: &NeighborTable, k: usize) -> (usize, BTreeSet<RobotId>) {
    let pi_size = table.one_hop.len() + table.two_hop.len();
    let path = table
        .two_hop
        .iter()
        .filter(|(_, e)| e.relays.len() <= k)
        .map(|(&id, _)| id)
        .collect();
    (pi_size, path)
}

/// ν_i^k from the neighbor table, 0 for an empty neighborhood.
pub fn local_robustness_score(table: &NeighborTable, k: usize) -> f64 {
    let (pi_size, path) = local_two_hop(table, k);
    if pi_size == 0 {
        0.0
    } else {
        path.len() as f64 / pi_size as f64
    }
}

/// `u^r`: unit pull towards the barycentre of the weakly attached 2-hop
/// robots when the trigger fires, zero otherwise.
pub fn robustness_contribution(
    own_pos: &Vector,
    table: &NeighborTable,
    params: &RobustnessParams,
) -> Contribution {
    let dim = own_pos.len();
    let (pi_size, path) = local_two_hop(table, params.k);
    let nu = if pi_size == 0 {
        0.0
    } else {
        path.len() as f64 / pi_size as f64
    };
    if path.is_empty() || !params.fires(nu) {
        return Contribution::zero(dim, false);
    }
    let mut bary = Vector::zeros(dim);
    for id in &path {
        bary += own_pos + &table.two_hop[id].offset;
    }
    bary /= path.len() as f64;
    let dir = bary - own_pos;
    let d = dir.norm();
    if d < D_MIN {
        return Contribution::zero(dim, true);
    }
    Contribution {
        vector: dir / d,
        degenerate: false,
    }
}

/// Scalar force of the generalized Lennard-Jones potential at separation
/// `d`: `−ι·((aδ^a / d^(a+1))^a − 2·(bδ / d^(b+1))^b)`.
///
/// Negative values push the pair apart, positive values pull it together.
pub fn lj_force(d: f64, lj: &LJParams) -> f64 {
    let d = d.max(D_MIN);
    let rep = (lj.a * lj.delta.powf(lj.a) / d.powf(lj.a + 1.0)).powf(lj.a);
    let att = (lj.b * lj.delta / d.powf(lj.b + 1.0)).powf(lj.b);
    -lj.iota * (rep - 2.0 * att)
}

/// Separation where [`lj_force`] vanishes (closed form; unique for `a > b`).
pub fn lj_equilibrium_distance(lj: &LJParams) -> f64 {
    let (a, b) = (lj.a, lj.b);
    let ln_delta = lj.delta.ln();
    let num = 2f64.ln() + b * b.ln() + b * ln_delta - a * a.ln() - a * a * ln_delta;
    let den = b * (b + 1.0) - a * (a + 1.0);
    (num / den).exp()
}

/// `u^LJ`: pairwise forces along the unit inter-robot vectors, summed.
pub fn coverage_contribution(own_pos: &Vector, neighbors: &[Vector], lj: &LJParams) -> Vector {
    let mut u = Vector::zeros(own_pos.len());
    for p in neighbors {
        let offset = p - own_pos;
        let d = offset.norm();
        if d == 0.0 {
            continue;
        }
        u.axpy(lj_force(d, lj) / d, &offset, 1.0);
    }
    u
}

/// Weighted sum of the contributions, norm-clamped to `v_max`.
pub fn combine(uc: &Vector, ur: &Vector, ulj: &Vector, gains: &Gains, v_max: f64) -> Vector {
    let mut u = uc * gains.sigma + ur * gains.psi + ulj * gains.zeta;
    let norm = u.norm();
    if norm > v_max {
        u *= v_max / norm;
    }
    u
}
