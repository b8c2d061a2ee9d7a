//! Per-robot state machine and failure injection.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::control::{
    combine, connectivity_contribution, coverage_contribution, robustness_contribution,
    FiedlerNeighbor,
};
use crate::estimator::{FloodAccumulator, PiState};
use crate::netsim::{relay_flood, Message, NeighborTable, Payload};
use crate::{RobotId, Vector};

/// Stream offset for per-agent RNGs; streams below are reserved for the
/// harness (placement, radio, failures).
pub const AGENT_STREAM_BASE: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FailureModel {
    None,
    /// Permanent failures with exponentially distributed lifetimes.
    Exponential {
        mtbf: f64,
    },
}

impl FailureModel {
    /// Probability that a live robot fails during a step of `dt` seconds.
    pub fn hazard(&self, dt: f64) -> f64 {
        match *self {
            FailureModel::None => 0.0,
            FailureModel::Exponential { mtbf } => 1.0 - (-dt / mtbf).exp(),
        }
    }
}

/// Kills each live robot independently with the per-tick hazard of `model`.
/// Returns the ids that died this call.
pub fn inject_failures<R: Rng + ?Sized>(
    team: &mut [RobotState],
    model: &FailureModel,
    dt: f64,
    rng: &mut R,
) -> Vec<RobotId> {
    let p = model.hazard(dt);
    if p <= 0.0 {
        return Vec::new();
    }
    let mut dead = Vec::new();
    for robot in team.iter_mut().filter(|r| r.alive) {
        if rng.random::<f64>() < p {
            robot.alive = false;
            dead.push(robot.id);
        }
    }
    dead
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DegeneracyCounters {
    /// Connectivity terms skipped for coincident neighbors.
    pub connectivity: u64,
    /// Robustness pulls dropped because the barycentre sat on the robot.
    pub robustness: u64,
    /// Ticks frozen because of a non-finite intermediate.
    pub faults: u64,
}

#[derive(Clone, Debug)]
pub struct RobotState {
    pub id: RobotId,
    pub position: Vector,
    pub alive: bool,
    pub pi: PiState,
    pub table: NeighborTable,
    pub flood_acc: FloodAccumulator,
    pub seen_floods: BTreeSet<(u64, RobotId)>,
    pub flags: DegeneracyCounters,
    /// Steps executed so far (the robot's own iteration counter).
    pub iteration: u64,
    /// Most recent `origin_iteration` received in a flood, per originator.
    pub flood_recency: BTreeMap<RobotId, u64>,
    /// Velocity commanded in the last step.
    pub velocity: Vector,
    rng: ChaCha8Rng,
}

impl RobotState {
    pub fn new(id: RobotId, position: Vector, alpha: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(AGENT_STREAM_BASE + id as u64);
        let pi = PiState::new(alpha, &mut rng);
        let dim = position.len();
        Self {
            id,
            position,
            alive: true,
            pi,
            table: NeighborTable::new(id),
            flood_acc: FloodAccumulator::default(),
            seen_floods: BTreeSet::new(),
            flags: DegeneracyCounters::default(),
            iteration: 0,
            flood_recency: BTreeMap::new(),
            velocity: Vector::zeros(dim),
            rng,
        }
    }

    /// One control tick at time `now`. Reads only this robot's state and its
    /// inbox; returns the messages to broadcast.
    pub fn step(&mut self, inbox: &[Message], now: u64, config: &ScenarioConfig) -> Vec<Message> {
        debug_assert!(self.alive, "dead robots are never stepped");
        self.iteration += 1;
        let range = config.radio.comm_range;

        self.table
            .update(inbox, &self.position, now, config.staleness_ttl);

        let relayed = relay_flood(self.id, inbox, &mut self.seen_floods, &config.radio);
        for msg in inbox {
            if let Payload::Flood(f) = &msg.payload {
                if msg.origin == self.id {
                    continue;
                }
                self.flood_recency.insert(msg.origin, msg.origin_iteration);
                self.flood_acc.absorb(msg.origin, f);
                self.pi.observe_round(f.round_id);
            }
        }

        let mut outbox = Vec::new();
        let period = config.pi.correction_period;
        if now % period == period - 1 {
            if self.flood_acc.count > 0 && self.flood_acc.round_id > self.pi.applied_round {
                self.pi.apply_correction(&self.flood_acc, &mut self.rng);
            }
        } else {
            let neighbors: Vec<(f64, f64)> = self
                .table
                .one_hop
                .values()
                .map(|e| (config.weights.weight(e.offset.norm(), range), e.fiedler))
                .collect();
            let degree = neighbors.iter().map(|(w, _)| w).sum();
            self.pi.pi_step(degree, &neighbors);
            if !self.pi.x.is_finite() {
                self.flags.faults += 1;
                self.pi.reset(&mut self.rng);
            }
            let round_in_flight = self.pi.round_id > self.pi.applied_round;
            if now.is_multiple_of(period) || (self.pi.unstable && !round_in_flight) {
                let payload = self.pi.begin_correction();
                self.flood_acc.absorb(self.id, &payload);
                self.seen_floods.insert((payload.round_id, self.id));
                outbox.push(Message {
                    sender: self.id,
                    origin: self.id,
                    origin_iteration: self.iteration,
                    hop_count: 0,
                    payload: Payload::Flood(payload),
                });
            }
        }
        let horizon = self.pi.highest_round_seen.saturating_sub(2);
        self.seen_floods.retain(|&(round, _)| round >= horizon);

        let u = if self.pi.rounds_completed >= config.pi.warmup_rounds {
            self.control(config)
        } else {
            Vector::zeros(self.position.len())
        };
        if u.iter().all(|c| c.is_finite()) {
            let mut next = &self.position + &u * config.dt;
            for (c, &extent) in next.iter_mut().zip(&config.arena) {
                *c = c.clamp(0.0, extent);
            }
            self.velocity = (&next - &self.position) / config.dt;
            self.position = next;
        } else {
            self.flags.faults += 1;
            self.velocity.fill(0.0);
        }

        let mut head = vec![Message {
            sender: self.id,
            origin: self.id,
            origin_iteration: self.iteration,
            hop_count: 0,
            payload: Payload::Beacon {
                position: self.position.clone(),
                fiedler: self.pi.x,
                pi_iteration: self.pi.iteration,
            },
        }];
        if now.is_multiple_of(config.digest_every) {
            head.push(Message {
                sender: self.id,
                origin: self.id,
                origin_iteration: self.iteration,
                hop_count: 0,
                payload: Payload::Digest {
                    entries: self.table.digest(),
                },
            });
        }
        head.extend(outbox);
        head.extend(relayed);
        head
    }

    fn control(&mut self, config: &ScenarioConfig) -> Vector {
        let dim = self.position.len();
        let range = config.radio.comm_range;
        let lambda = self.pi.estimate_lambda2(config.vparams.epsilon_lambda);
        let fiedler_nbrs: Vec<FiedlerNeighbor> = self
            .table
            .one_hop
            .values()
            .map(|e| FiedlerNeighbor {
                fiedler: e.fiedler,
                offset: e.offset.clone(),
            })
            .collect();
        let uc = connectivity_contribution(
            lambda,
            self.pi.x,
            &fiedler_nbrs,
            &config.vparams,
            &config.weights,
            range,
            dim,
        );
        if uc.degenerate {
            self.flags.connectivity += 1;
        }
        let ur = robustness_contribution(&self.position, &self.table, &config.robustness);
        if ur.degenerate {
            self.flags.robustness += 1;
        }
        let neighbor_positions: Vec<Vector> = self
            .table
            .one_hop
            .values()
            .map(|e| &self.position + &e.offset)
            .collect();
        let ulj = coverage_contribution(&self.position, &neighbor_positions, &config.lj);
        combine(&uc.vector, &ur.vector, &ulj, &config.gains, config.v_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::lj_equilibrium_distance;

    fn cfg(extra: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(&format!(
            "n = 2\nticks = 10\n{extra}\n[pi]\nwarmup_rounds = 0\n"
        ))
        .unwrap()
    }

    fn v(x: f64, y: f64) -> Vector {
        Vector::from_vec(vec![x, y])
    }

    #[test]
    fn lone_robot_stays_put() {
        let c = cfg("");
        let mut r = RobotState::new(0, v(25.0, 25.0), c.pi.alpha, 1);
        for t in 0..30 {
            let out = r.step(&[], t, &c);
            assert!(matches!(out[0].payload, Payload::Beacon { .. }));
        }
        assert_eq!(r.position, v(25.0, 25.0));
    }

    #[test]
    fn coverage_only_pushes_close_neighbor_away() {
        let c = cfg("[gains]\nsigma = 0.0\npsi = 0.0\nzeta = 1.0\n");
        assert!(4.0 < lj_equilibrium_distance(&c.lj));
        let mut r = RobotState::new(0, v(20.0, 20.0), c.pi.alpha, 1);
        let beacon = Message {
            sender: 1,
            origin: 1,
            origin_iteration: 1,
            hop_count: 0,
            payload: Payload::Beacon {
                position: v(24.0, 20.0),
                fiedler: 0.0,
                pi_iteration: 0,
            },
        };
        r.step(&[beacon], 1, &c);
        assert!(r.position[0] < 20.0);
        assert_eq!(r.position[1], 20.0);
    }

    #[test]
    fn displacement_is_bounded_and_clamped_to_arena() {
        let c = cfg("[gains]\nsigma = 0.0\npsi = 0.0\nzeta = 1.0\n");
        let mut r = RobotState::new(0, v(0.05, 10.0), c.pi.alpha, 1);
        let beacon = Message {
            sender: 1,
            origin: 1,
            origin_iteration: 1,
            hop_count: 0,
            payload: Payload::Beacon {
                position: v(1.0, 10.0),
                fiedler: 0.0,
                pi_iteration: 0,
            },
        };
        let before = r.position.clone();
        r.step(&[beacon], 1, &c);
        assert!((&r.position - &before).norm() <= c.v_max * c.dt + 1e-12);
        assert_eq!(r.position[0], 0.0);
    }

    #[test]
    fn no_failures_without_model() {
        let c = cfg("");
        let mut team: Vec<_> = (0..5)
            .map(|i| RobotState::new(i, v(1.0, 1.0), c.pi.alpha, 0))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert!(inject_failures(&mut team, &FailureModel::None, 0.1, &mut rng).is_empty());
        }
        let huge = FailureModel::Exponential {
            mtbf: f64::INFINITY,
        };
        for _ in 0..1000 {
            assert!(inject_failures(&mut team, &huge, 0.1, &mut rng).is_empty());
        }
        assert!(team.iter().all(|r| r.alive));
    }

    #[test]
    fn exponential_failure_rate() {
        let c = cfg("");
        let model = FailureModel::Exponential { mtbf: 100.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut deaths = 0u64;
        let mut robot_ticks = 0u64;
        // 100 robots × 1000 ticks, reviving after each death to keep exposure fixed.
        let mut team: Vec<_> = (0..100)
            .map(|i| RobotState::new(i, v(1.0, 1.0), c.pi.alpha, 0))
            .collect();
        for _ in 0..1000 {
            robot_ticks += team.iter().filter(|r| r.alive).count() as u64;
            let dead = inject_failures(&mut team, &model, 0.1, &mut rng);
            deaths += dead.len() as u64;
            for id in dead {
                team[id].alive = true;
            }
        }
        let rate = deaths as f64 / robot_ticks as f64;
        let expected = 1.0 - (-0.001f64).exp();
        assert!((rate - expected).abs() <= 1e-4, "rate {rate}");
    }

    #[test]
    fn deaths_are_permanent() {
        let c = cfg("");
        let mut team: Vec<_> = (0..10)
            .map(|i| RobotState::new(i, v(1.0, 1.0), c.pi.alpha, 0))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = FailureModel::Exponential { mtbf: 0.5 };
        let mut all_dead = BTreeSet::new();
        for _ in 0..100 {
            for id in inject_failures(&mut team, &model, 0.1, &mut rng) {
                assert!(all_dead.insert(id), "robot {id} died twice");
            }
        }
        assert_eq!(all_dead.len(), 10);
    }
}
