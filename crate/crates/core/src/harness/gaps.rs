//! Per-robot digest gap statistics from the link log.
//!
//! For every receiver and tick we look at the digests its in-range live
//! neighbors attempted to send it. A sender "missed" that tick if its digest
//! was lost. Reported per receiver: the miss ratio for each sender, the ratio
//! of ticks in which every attempted digest was lost, and the Pearson
//! correlation between the miss indicators of each pair of senders.

use std::collections::BTreeMap;

use crate::netsim::{LinkRecord, MessageKind};
use crate::RobotId;

#[derive(Clone, Debug, Default, PartialEq)]
struct SenderStats {
    attempts: u64,
    misses: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct PairStats {
    n: u64,
    sum_a: f64,
    sum_b: f64,
    sum_aa: f64,
    sum_bb: f64,
    sum_ab: f64,
}

impl PairStats {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        self.sum_a += a;
        self.sum_b += b;
        self.sum_aa += a * a;
        self.sum_bb += b * b;
        self.sum_ab += a * b;
    }

    fn correlation(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let cov = self.sum_ab - self.sum_a * self.sum_b / n;
        let va = self.sum_aa - self.sum_a * self.sum_a / n;
        let vb = self.sum_bb - self.sum_b * self.sum_b / n;
        if va <= 0.0 || vb <= 0.0 {
            None
        } else {
            Some(cov / (va * vb).sqrt())
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ReceiverStats {
    senders: BTreeMap<RobotId, SenderStats>,
    pairs: BTreeMap<(RobotId, RobotId), PairStats>,
    ticks: u64,
    ticks_without_any: u64,
}

/// Table-I-style gap summary for one receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotGaps {
    pub robot: RobotId,
    /// Fraction of ticks a given in-range sender's digest was missing.
    pub per_sender: BTreeMap<RobotId, f64>,
    /// Fraction of ticks with at least one expected digest in which none arrived.
    pub none_received: f64,
    /// Fraction of ticks in which exactly one expected digest was missing.
    pub exactly_one_missing: f64,
    /// Correlation of miss indicators for each sender pair, when defined.
    pub correlations: BTreeMap<(RobotId, RobotId), Option<f64>>,
}

/// Streaming accumulator; feed it link records tick by tick.
#[derive(Clone, Debug, Default)]
pub struct GapCounter {
    receivers: BTreeMap<RobotId, ReceiverStats>,
    exactly_one: BTreeMap<RobotId, u64>,
}

impl GapCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Consumes the digest attempts of one tick.
    pub fn push_tick(&mut self, records: &[LinkRecord]) {
        let mut by_receiver: BTreeMap<RobotId, BTreeMap<RobotId, bool>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.kind == MessageKind::Digest) {
            let slot = by_receiver
                .entry(r.receiver)
                .or_default()
                .entry(r.sender)
                .or_insert(false);
            *slot |= r.delivered;
        }
        for (receiver, heard) in by_receiver {
            let stats = self.receivers.entry(receiver).or_default();
            stats.ticks += 1;
            let missing = heard.values().filter(|d| !**d).count();
            if missing == heard.len() {
                stats.ticks_without_any += 1;
            }
            if missing == 1 {
                *self.exactly_one.entry(receiver).or_default() += 1;
            }
            for (&sender, &delivered) in &heard {
                let s = stats.senders.entry(sender).or_default();
                s.attempts += 1;
                s.misses += u64::from(!delivered);
            }
            let entries: Vec<(RobotId, f64)> = heard
                .iter()
                .map(|(&s, &d)| (s, if d { 0.0 } else { 1.0 }))
                .collect();
            for (i, &(a, ma)) in entries.iter().enumerate() {
                for &(b, mb) in &entries[i + 1..] {
                    stats.pairs.entry((a, b)).or_default().push(ma, mb);
                }
            }
        }
    }

    pub fn report(&self) -> Vec<RobotGaps> {
        self.receivers
            .iter()
            .map(|(&robot, s)| {
                let ticks = s.ticks.max(1) as f64;
                RobotGaps {
                    robot,
                    per_sender: s
                        .senders
                        .iter()
                        .map(|(&id, st)| (id, st.misses as f64 / st.attempts.max(1) as f64))
                        .collect(),
                    none_received: s.ticks_without_any as f64 / ticks,
                    exactly_one_missing: self.exactly_one.get(&robot).copied().unwrap_or(0) as f64
                        / ticks,
                    correlations: s.pairs.iter().map(|(&k, p)| (k, p.correlation())).collect(),
                }
            })
            .collect()
    }
}

/// Gap ratios of a complete link log (records in tick order).
pub fn gap_ratios(records: &[LinkRecord]) -> Vec<RobotGaps> {
    let mut counter = GapCounter::new();
    let mut start = 0;
    while start < records.len() {
        let tick = records[start].tick;
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.tick == tick)
                .count();
        counter.push_tick(&records[start..end]);
        start = end;
    }
    counter.report()
}
