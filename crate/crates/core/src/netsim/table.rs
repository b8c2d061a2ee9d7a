use std::collections::BTreeMap;

use super::message::{DigestEntry, Message, Payload};
use crate::{RobotId, Vector};

/// What an agent knows about a direct neighbor.
#[derive(Clone, Debug, PartialEq)]
pub struct OneHopEntry {
    /// Neighbor position minus own position, as measured on reception.
    pub offset: Vector,
    pub fiedler: f64,
    pub last_heard: u64,
    pub origin_iteration: u64,
}

/// A robot exactly two hops away, learned from neighbors' digests.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoHopEntry {
    /// Estimated position minus own position, through the most recent relay.
    pub offset: Vector,
    /// Direct neighbors whose latest digest lists this robot, with the tick
    /// that digest was heard.
    pub relays: BTreeMap<RobotId, u64>,
}

impl TwoHopEntry {
    pub fn last_heard(&self) -> u64 {
        self.relays.values().copied().max().unwrap_or(0)
    }
}

/// Per-agent 1-hop / 2-hop neighborhood view.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable {
    pub own_id: RobotId,
    pub one_hop: BTreeMap<RobotId, OneHopEntry>,
    pub two_hop: BTreeMap<RobotId, TwoHopEntry>,
    /// Messages dropped because their payload failed validation.
    pub malformed: u64,
}

impl NeighborTable {
    pub fn new(own_id: RobotId) -> Self {
        Self {
            own_id,
            one_hop: BTreeMap::new(),
            two_hop: BTreeMap::new(),
            malformed: 0,
        }
    }

    /// Folds one tick's inbox into the table. Floods are ignored here.
    ///
    /// Beacons are processed before digests so that an id heard both
    /// directly and through a relay in the same tick ends up 1-hop only.
    pub fn update(&mut self, inbox: &[Message], own_position: &Vector, now: u64, ttl: u64) {
        let dim = own_position.len();
        for msg in inbox {
            if msg.sender == self.own_id {
                continue;
            }
            if let Payload::Beacon {
                position, fiedler, ..
            } = &msg.payload
            {
                if position.len() != dim || !finite(position) || !fiedler.is_finite() {
                    self.malformed += 1;
                    continue;
                }
                self.one_hop.insert(
                    msg.sender,
                    OneHopEntry {
                        offset: position - own_position,
                        fiedler: *fiedler,
                        last_heard: now,
                        origin_iteration: msg.origin_iteration,
                    },
                );
            }
        }

        for msg in inbox {
            if msg.sender == self.own_id {
                continue;
            }
            if let Payload::Digest { entries } = &msg.payload {
                if entries
                    .iter()
                    .any(|e| e.offset.len() != dim || !finite(&e.offset))
                {
                    self.malformed += 1;
                    continue;
                }
                self.absorb_digest(msg.sender, entries, now);
            }
        }

        self.evict(now, ttl);
    }

    fn absorb_digest(&mut self, relay: RobotId, entries: &[DigestEntry], now: u64) {
        let Some(relay_offset) = self.one_hop.get(&relay).map(|e| e.offset.clone()) else {
            // Without the relay's own offset the listed positions cannot be placed.
            return;
        };
        for entry in self.two_hop.values_mut() {
            entry.relays.remove(&relay);
        }
        for e in entries {
            if e.id == self.own_id || self.one_hop.contains_key(&e.id) {
                continue;
            }
            let slot = self.two_hop.entry(e.id).or_insert_with(|| TwoHopEntry {
                offset: Vector::zeros(relay_offset.len()),
                relays: BTreeMap::new(),
            });
            slot.offset = &relay_offset + &e.offset;
            slot.relays.insert(relay, now);
        }
    }

    fn evict(&mut self, now: u64, ttl: u64) {
        self.one_hop
            .retain(|_, e| now.saturating_sub(e.last_heard) <= ttl);
        let one_hop = &self.one_hop;
        let own = self.own_id;
        self.two_hop.retain(|id, e| {
            e.relays
                .retain(|r, heard| one_hop.contains_key(r) && now.saturating_sub(*heard) <= ttl);
            *id != own && !one_hop.contains_key(id) && !e.relays.is_empty()
        });
    }

    /// The 1-hop list broadcast as this agent's digest.
    pub fn digest(&self) -> Vec<DigestEntry> {
        self.one_hop
            .iter()
            .map(|(&id, e)| DigestEntry {
                id,
                offset: e.offset.clone(),
            })
            .collect()
    }
}

fn finite(v: &Vector) -> bool {
    v.iter().all(|c| c.is_finite())
}
