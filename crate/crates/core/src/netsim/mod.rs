//! Limited-range lossy radio with tick-synchronous, double-buffered inboxes.
//!
//! Everything sent during tick `t` lands in the receivers' inboxes for tick
//! `t + 1`; [`Network::deliver`] only hands out messages stamped with an
//! earlier tick than the one being delivered.

mod message;
mod table;

use std::collections::BTreeSet;

use rand::Rng;

pub use message::{DigestEntry, Message, MessageKind, Payload, SCHEMA_VERSION};
pub use table::{NeighborTable, OneHopEntry, TwoHopEntry};

use crate::oracle::GraphSnapshot;
use crate::RobotId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioModel {
    /// Disk radius in meters.
    pub comm_range: f64,
    /// Independent per-link, per-message loss probability.
    pub drop_prob: f64,
    /// Hop budget for relayed floods.
    pub max_hops: u32,
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            comm_range: 16.0,
            drop_prob: 0.0,
            max_hops: 20,
        }
    }
}

/// Outcome of one broadcast: every in-range live receiver, and the subset
/// whose Bernoulli trial succeeded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Delivery {
    pub attempted: Vec<RobotId>,
    pub delivered: Vec<RobotId>,
}

/// Draws the per-link losses for one message. Receivers are visited in id
/// order so the draw sequence only depends on the topology and the stream.
pub fn broadcast<R: Rng + ?Sized>(
    sender: RobotId,
    world: &GraphSnapshot,
    alive: &[bool],
    radio: &RadioModel,
    rng: &mut R,
) -> Delivery {
    let mut out = Delivery::default();
    for receiver in world.neighbors(sender) {
        if !alive.get(receiver).copied().unwrap_or(false) {
            continue;
        }
        out.attempted.push(receiver);
        let roll: f64 = rng.random();
        if roll >= radio.drop_prob {
            out.delivered.push(receiver);
        }
    }
    out
}

/// Picks the floods in `inbox` that should be forwarded by `relay`.
///
/// A flood is forwarded once per `(round_id, origin)`, with its hop count
/// bumped, as long as the hop budget allows. Every flood seen is recorded in
/// `already_seen`, including those that are not forwarded.
pub fn relay_flood(
    relay: RobotId,
    inbox: &[Message],
    already_seen: &mut BTreeSet<(u64, RobotId)>,
    radio: &RadioModel,
) -> Vec<Message> {
    let mut out = Vec::new();
    for msg in inbox {
        let Payload::Flood(f) = &msg.payload else {
            continue;
        };
        if !already_seen.insert((f.round_id, msg.origin)) {
            continue;
        }
        if msg.hop_count < radio.max_hops {
            out.push(Message {
                sender: relay,
                hop_count: msg.hop_count + 1,
                ..msg.clone()
            });
        }
    }
    out
}

/// One link-level transmission attempt, as logged to `messages.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkRecord {
    pub tick: u64,
    pub sender: RobotId,
    pub receiver: RobotId,
    pub kind: MessageKind,
    pub origin: RobotId,
    pub origin_iteration: u64,
    pub hop_count: u32,
    pub delivered: bool,
}

/// The shared medium: pending inboxes plus the loss stream.
#[derive(Debug)]
pub struct Network<R> {
    pub radio: RadioModel,
    rng: R,
    alive: Vec<bool>,
    pending: Vec<Vec<(u64, Message)>>,
    log: Vec<LinkRecord>,
    record: bool,
}

impl<R: Rng> Network<R> {
    pub fn new(n: usize, radio: RadioModel, rng: R) -> Self {
        Self {
            radio,
            rng,
            alive: vec![true; n],
            pending: vec![Vec::new(); n],
            log: Vec::new(),
            record: true,
        }
    }

    /// Disables link logging (long runs that do not need `messages.csv`).
    pub fn without_log(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn set_alive(&mut self, id: RobotId, alive: bool) {
        self.alive[id] = alive;
        if !alive {
            self.pending[id].clear();
        }
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    /// Sends `msg` from `msg.sender` at tick `now`.
    pub fn broadcast(&mut self, now: u64, msg: &Message, world: &GraphSnapshot) -> Delivery {
        if !self.alive[msg.sender] {
            return Delivery::default();
        }
        let d = broadcast(msg.sender, world, &self.alive, &self.radio, &mut self.rng);
        if self.record {
            for &receiver in &d.attempted {
                self.log.push(LinkRecord {
                    tick: now,
                    sender: msg.sender,
                    receiver,
                    kind: msg.kind(),
                    origin: msg.origin,
                    origin_iteration: msg.origin_iteration,
                    hop_count: msg.hop_count,
                    delivered: d.delivered.contains(&receiver),
                });
            }
        }
        for &receiver in &d.delivered {
            self.pending[receiver].push((now, msg.clone()));
        }
        d
    }

    /// Hands out every message sent strictly before `now`.
    pub fn deliver(&mut self, now: u64) -> Vec<Vec<Message>> {
        self.pending
            .iter_mut()
            .map(|queue| {
                let (ready, later): (Vec<_>, Vec<_>) =
                    queue.drain(..).partition(|(sent, _)| *sent < now);
                *queue = later;
                ready.into_iter().map(|(_, m)| m).collect()
            })
            .collect()
    }

    pub fn log(&self) -> &[LinkRecord] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<LinkRecord> {
        std::mem::take(&mut self.log)
    }
}
