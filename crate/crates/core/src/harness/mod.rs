//! Simulation loop, ground-truth metrics and run outputs.
//!
//! One tick is: failure injection → delivery of last tick's messages →
//! every live robot steps → broadcast of the new outboxes → oracle metrics
//! over the live robots.

mod gaps;
mod output;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use gaps::{gap_ratios, GapCounter, RobotGaps};
pub use output::{replay, run_to_dir, ReplayReport, Summary, FORMAT_VERSION};

use crate::agent::{inject_failures, RobotState};
use crate::config::{Placement, ScenarioConfig};
use crate::netsim::{LinkRecord, Network};
use crate::oracle::{build_graph, fiedler, is_connected, WeightParams};
use crate::{Error, Result, RobotId, Vector};

/// RNG streams reserved for the harness.
pub const PLACEMENT_STREAM: u64 = 0;
pub const RADIO_STREAM: u64 = 1;
pub const FAILURE_STREAM: u64 = 2;

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Per-robot observables for one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotMetrics {
    pub position: Vector,
    pub alive: bool,
    /// Raw estimator output (0 before the first completed round).
    pub lambda2_est: f64,
    pub one_hop: usize,
    pub two_hop: usize,
    /// Latest flood `origin_iteration` received from each originator.
    pub flood_recency: Vec<(RobotId, u64)>,
    /// On-board distance estimate to each 1-hop neighbor.
    pub neighbor_distances: Vec<(RobotId, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub tick: u64,
    pub robots: Vec<RobotMetrics>,
    /// λ₂ of the live robots' graph (0 with fewer than two live robots).
    pub lambda2_true: f64,
    pub connected: bool,
    pub min_distance: Option<f64>,
    pub max_distance: Option<f64>,
}

impl MetricsRecord {
    pub fn alive_count(&self) -> usize {
        self.robots.iter().filter(|r| r.alive).count()
    }
}

/// Draws the initial layout described by `config.placement`.
pub fn initial_positions(config: &ScenarioConfig) -> Result<Vec<Vector>> {
    match &config.placement {
        Placement::Explicit(ps) => Ok(ps.clone()),
        Placement::Uniform { region, connected } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(PLACEMENT_STREAM);
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let ps: Vec<Vector> = (0..config.n)
                    .map(|_| {
                        Vector::from_iterator(
                            region.len(),
                            region.iter().map(|&r| rng.random_range(0.0..r)),
                        )
                    })
                    .collect();
                if !connected {
                    return Ok(ps);
                }
                let g = build_graph(&ps, &config.radio, &WeightParams::binary())?;
                if is_connected(&g) {
                    return Ok(ps);
                }
            }
            Err(Error::config(
                "placement",
                format!("no connected layout found in {MAX_PLACEMENT_ATTEMPTS} attempts"),
            ))
        }
    }
}

/// A running scenario.
pub struct Simulation {
    config: ScenarioConfig,
    robots: Vec<RobotState>,
    net: Network<ChaCha8Rng>,
    failure_rng: ChaCha8Rng,
    tick: u64,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let positions = initial_positions(&config)?;
        Self::with_positions(config, positions)
    }

    pub fn with_positions(config: ScenarioConfig, positions: Vec<Vector>) -> Result<Self> {
        if positions.len() != config.n {
            return Err(Error::InvalidInput(format!(
                "expected {} positions, got {}",
                config.n,
                positions.len()
            )));
        }
        let robots = positions
            .into_iter()
            .enumerate()
            .map(|(id, p)| RobotState::new(id, p, config.pi.alpha, config.seed))
            .collect();
        let mut radio_rng = ChaCha8Rng::seed_from_u64(config.seed);
        radio_rng.set_stream(RADIO_STREAM);
        let mut failure_rng = ChaCha8Rng::seed_from_u64(config.seed);
        failure_rng.set_stream(FAILURE_STREAM);
        let mut net = Network::new(config.n, config.radio, radio_rng);
        if !config.write_messages {
            net = net.without_log();
        }
        Ok(Self {
            config,
            robots,
            net,
            failure_rng,
            tick: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Drains the link log accumulated since the last call.
    pub fn take_links(&mut self) -> Vec<LinkRecord> {
        self.net.take_log()
    }

    pub fn positions(&self) -> Vec<Vector> {
        self.robots.iter().map(|r| r.position.clone()).collect()
    }

    /// Advances one tick and returns its metrics.
    pub fn step(&mut self) -> Result<MetricsRecord> {
        self.step_with(|_, _, _| {})
    }

    /// Like [`Simulation::step`], calling `on_delivery(tick, receiver, msg)`
    /// for every message that survives the radio.
    pub fn step_with<F>(&mut self, mut on_delivery: F) -> Result<MetricsRecord>
    where
        F: FnMut(u64, RobotId, &crate::netsim::Message),
    {
        let now = self.tick;
        let cfg = &self.config;
        for id in inject_failures(
            &mut self.robots,
            &cfg.failure,
            cfg.dt,
            &mut self.failure_rng,
        ) {
            self.net.set_alive(id, false);
        }

        let inboxes = self.net.deliver(now);
        let outboxes: Vec<Vec<_>> = self
            .robots
            .iter_mut()
            .zip(&inboxes)
            .map(|(robot, inbox)| {
                if robot.alive {
                    robot.step(inbox, now, cfg)
                } else {
                    Vec::new()
                }
            })
            .collect();

        let positions = self.positions();
        let world = build_graph(&positions, &cfg.radio, &cfg.weights)?;
        for msg in outboxes.iter().flatten() {
            let d = self.net.broadcast(now, msg, &world);
            for receiver in d.delivered {
                on_delivery(now, receiver, msg);
            }
        }

        let record = self.metrics(now, &positions)?;
        self.tick += 1;
        Ok(record)
    }

    fn metrics(&self, now: u64, positions: &[Vector]) -> Result<MetricsRecord> {
        let live: Vec<usize> = (0..self.robots.len())
            .filter(|&i| self.robots[i].alive)
            .collect();
        let live_positions: Vec<Vector> = live.iter().map(|&i| positions[i].clone()).collect();
        let g = build_graph(&live_positions, &self.config.radio, &self.config.weights)?;
        let (lambda2_true, connected) = if live.len() >= 2 {
            (fiedler(&g)?.lambda2, is_connected(&g))
        } else {
            (0.0, true)
        };
        let mut min_distance: Option<f64> = None;
        let mut max_distance: Option<f64> = None;
        for a in 0..live_positions.len() {
            for b in (a + 1)..live_positions.len() {
                let d = (&live_positions[a] - &live_positions[b]).norm();
                min_distance = Some(min_distance.map_or(d, |m| m.min(d)));
                max_distance = Some(max_distance.map_or(d, |m| m.max(d)));
            }
        }
        let robots = self
            .robots
            .iter()
            .map(|r| RobotMetrics {
                position: r.position.clone(),
                alive: r.alive,
                lambda2_est: r.pi.lambda2_est,
                one_hop: r.table.one_hop.len(),
                two_hop: r.table.two_hop.len(),
                flood_recency: r.flood_recency.iter().map(|(&k, &v)| (k, v)).collect(),
                neighbor_distances: r
                    .table
                    .one_hop
                    .iter()
                    .map(|(&k, e)| (k, e.offset.norm()))
                    .collect(),
            })
            .collect();
        Ok(MetricsRecord {
            tick: now,
            robots,
            lambda2_true,
            connected,
            min_distance,
            max_distance,
        })
    }
}

/// Result of an in-memory run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub metrics: Vec<MetricsRecord>,
    pub links: Vec<LinkRecord>,
    pub summary: Summary,
}

/// Runs the whole scenario in memory. Link records are only kept when
/// `config.write_messages` is set.
pub fn run(config: &ScenarioConfig) -> Result<RunResult> {
    let mut sim = Simulation::new(config.clone())?;
    let mut metrics = Vec::with_capacity(config.ticks as usize);
    let mut links = Vec::new();
    let mut gaps = GapCounter::new();
    let mut acc = output::SummaryAccumulator::default();
    for _ in 0..config.ticks {
        let m = sim.step()?;
        let tick_links = sim.take_links();
        gaps.push_tick(&tick_links);
        acc.push(&m);
        links.extend(tick_links);
        metrics.push(m);
    }
    Ok(RunResult {
        metrics,
        links,
        summary: acc.finish(config, gaps.report()),
    })
}

/// Convenience: run a scenario loaded from `path`.
pub fn run_file(path: impl AsRef<Path>) -> Result<RunResult> {
    run(&crate::config::load_config(path)?)
}
