//! Decentralized estimation of λ₂ and the Fiedler vector.
//!
//! Each agent holds one entry `x_k` of the team vector and applies the row
//! `k` of `M = I − αL` every iteration, using its neighbors' entries from the
//! previous tick. On the deflated subspace (orthogonal to the ones vector)
//! the dominant eigenvalue of `M` is `1 − αλ₂`, so the team vector turns
//! towards the Fiedler vector.
//!
//! Drift along the ones vector and the overall scale are removed by periodic
//! mean-correction rounds: every agent floods `(x_k, x_k², x_k·(Lx)_k)` and,
//! once the round has spread, subtracts the team mean and renormalizes. The
//! same sums give the Rayleigh quotient `xᵀLx / xᵀx`, which is the λ₂
//! estimate.

use std::collections::BTreeSet;

use rand::Rng;

use crate::RobotId;

/// `|x_k|` beyond this flags the estimator as unstable.
pub const INSTABILITY_BOUND: f64 = 1e12;

/// Below this deflated squared norm the team vector is considered collapsed.
pub const COLLAPSE_NORM2: f64 = 1e-18;

/// `α = 1 / (2·Δ + 1)` for a bound `Δ` on the weighted degree, which keeps
/// every nonzero eigenvalue of `I − αL` inside `(−1, 1)`.
pub fn default_alpha(degree_bound: f64) -> f64 {
    1.0 / (2.0 * degree_bound + 1.0)
}

/// Flood body for one agent's contribution to a correction round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloodPayload {
    pub round_id: u64,
    pub x: f64,
    pub x2: f64,
    /// Local Rayleigh numerator term `x_k · (Lx)_k`.
    pub xlx: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiState {
    /// This agent's entry of the team vector.
    pub x: f64,
    pub alpha: f64,
    /// Number of power-iteration steps taken.
    pub iteration: u64,
    pub last_correction_iter: u64,
    pub lambda2_est: f64,
    pub rounds_completed: u64,
    /// Latest round this agent started.
    pub round_id: u64,
    /// Highest round id observed from anyone.
    pub highest_round_seen: u64,
    /// Last round whose correction was applied.
    pub applied_round: u64,
    /// Point at which `(Lx)_k` was last evaluated: `(x_k, (Lx)_k)`.
    pub probe: (f64, f64),
    pub unstable: bool,
}

impl PiState {
    /// Fresh estimator with `x_k` drawn uniformly from `[-1, 1]`.
    pub fn new<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Self {
        let x = rng.random_range(-1.0..=1.0);
        Self::with_value(alpha, x)
    }

    pub fn with_value(alpha: f64, x: f64) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        Self {
            x,
            alpha,
            iteration: 0,
            last_correction_iter: 0,
            lambda2_est: 0.0,
            rounds_completed: 0,
            round_id: 0,
            highest_round_seen: 0,
            applied_round: 0,
            probe: (x, 0.0),
            unstable: false,
        }
    }

    /// One row of `x ← (I − αL) x`.
    ///
    /// `neighbors` holds `(w_kj, x_j)` for every direct neighbor and
    /// `own_degree` is `Σ_j w_kj`.
    pub fn pi_step(&mut self, own_degree: f64, neighbors: &[(f64, f64)]) {
        let lx = own_degree * self.x - neighbors.iter().map(|&(w, xj)| w * xj).sum::<f64>();
        self.probe = (self.x, lx);
        self.x -= self.alpha * lx;
        self.iteration += 1;
        if !(self.x.abs() <= INSTABILITY_BOUND) {
            self.unstable = true;
        }
    }

    /// Starts a new correction round and returns this agent's contribution.
    ///
    /// The round id is strictly larger than any round this agent started,
    /// and joins a newer round already started elsewhere.
    pub fn begin_correction(&mut self) -> FloodPayload {
        self.round_id = (self.round_id + 1).max(self.highest_round_seen);
        self.highest_round_seen = self.round_id;
        let (x, lx) = self.probe;
        FloodPayload {
            round_id: self.round_id,
            x,
            x2: x * x,
            xlx: x * lx,
        }
    }

    pub fn observe_round(&mut self, round_id: u64) {
        self.highest_round_seen = self.highest_round_seen.max(round_id);
    }

    /// Deflates, renormalizes and refreshes the λ₂ estimate from a completed
    /// round. A collapsed team vector is re-drawn from `rng`.
    pub fn apply_correction<R: Rng + ?Sized>(&mut self, acc: &FloodAccumulator, rng: &mut R) {
        if acc.count == 0 {
            return;
        }
        let count = acc.count as f64;
        let mean = acc.sum_x / count;
        // Squared norm of the deflated snapshot, Σx² − (Σx)²/n.
        let norm2 = acc.sum_x2 - acc.sum_x * acc.sum_x / count;
        self.applied_round = acc.round_id;
        self.last_correction_iter = self.iteration;
        self.unstable = false;
        if !(norm2 >= COLLAPSE_NORM2) || !norm2.is_finite() {
            self.x = rng.random_range(-1.0..=1.0);
            self.probe = (self.x, 0.0);
            return;
        }
        self.x = (self.x - mean) / norm2.sqrt();
        self.lambda2_est = (acc.sum_xlx / norm2).max(0.0);
        self.rounds_completed += 1;
    }

    /// λ₂ estimate for the controller: never below `epsilon_lambda`, and
    /// exactly `epsilon_lambda` before the first completed round.
    pub fn estimate_lambda2(&self, epsilon_lambda: f64) -> f64 {
        if self.rounds_completed == 0 {
            epsilon_lambda
        } else {
            self.lambda2_est.max(epsilon_lambda)
        }
    }

    /// Re-draws `x_k` after a non-finite value.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.x = rng.random_range(-1.0..=1.0);
        self.probe = (self.x, 0.0);
        self.unstable = false;
    }
}

/// Running sums of one correction round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FloodAccumulator {
    pub round_id: u64,
    pub sum_x: f64,
    pub sum_x2: f64,
    pub sum_xlx: f64,
    pub count: usize,
    pub seen: BTreeSet<RobotId>,
}

impl FloodAccumulator {
    /// Adds `origin`'s contribution. Older rounds and repeated originators
    /// are ignored; a newer round resets the sums first.
    pub fn absorb(&mut self, origin: RobotId, msg: &FloodPayload) {
        if msg.round_id < self.round_id {
            return;
        }
        if msg.round_id > self.round_id {
            *self = FloodAccumulator {
                round_id: msg.round_id,
                ..Default::default()
            };
        }
        if !self.seen.insert(origin) {
            return;
        }
        self.sum_x += msg.x;
        self.sum_x2 += msg.x2;
        self.sum_xlx += msg.xlx;
        self.count = self.seen.len();
    }
}
