mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use swarmconn::estimator::FloodPayload;
use swarmconn::harness::Simulation;
use swarmconn::netsim::{relay_flood, Message, Network, Payload};
use swarmconn::oracle::{build_graph, diameter, WeightParams};

fn flood(origin: usize, round_id: u64) -> Message {
    Message {
        sender: origin,
        origin,
        origin_iteration: round_id,
        hop_count: 0,
        payload: Payload::Flood(FloodPayload {
            round_id,
            x: 0.0,
            x2: 0.0,
            xlx: 0.0,
        }),
    }
}

#[test]
fn line_flood_reaches_the_far_end_in_three_ticks() {
    let ps: Vec<_> = (0..4).map(|i| v2(10.0 * i as f64, 0.0)).collect();
    let world = build_graph(&ps, &radio(12.0), &WeightParams::binary()).unwrap();
    let mut net = Network::new(4, radio(12.0), rng(0));
    let mut seen = vec![BTreeSet::new(); 4];
    let mut first_arrival = vec![None; 4];
    net.broadcast(0, &flood(0, 1), &world);
    seen[0].insert((1, 0));
    for now in 1..10 {
        let inboxes = net.deliver(now);
        let mut out = Vec::new();
        for (i, inbox) in inboxes.iter().enumerate() {
            if inbox.iter().any(|m| m.origin != i) && first_arrival[i].is_none() {
                first_arrival[i] = Some(now);
            }
            out.extend(relay_flood(i, inbox, &mut seen[i], &net.radio));
        }
        for m in &out {
            net.broadcast(now, m, &world);
        }
    }
    assert_eq!(first_arrival, vec![None, Some(1), Some(2), Some(3)]);
    // Each robot forwards the flood exactly once.
    let sends: Vec<_> = net
        .log()
        .iter()
        .map(|r| r.sender)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert_eq!(sends, vec![0, 1, 2, 3]);
    assert_eq!(net.log().iter().filter(|r| r.sender == 2).count(), 2);
}

proptest! {
    /// The send tick rides in `origin_iteration`; nothing is handed out early,
    /// and with no loss nothing is lost.
    #[test]
    fn messages_never_arrive_before_the_next_tick(
        sends in prop::collection::vec((0u64..20, 0usize..5), 1..60),
        drop in prop_oneof![Just(0.0), 0.0..0.9f64],
        seed in any::<u64>(),
    ) {
        let ps: Vec<_> = (0..5).map(|i| v2(4.0 * i as f64, 0.0)).collect();
        let mut rd = radio(100.0);
        rd.drop_prob = drop;
        let world = build_graph(&ps, &rd, &WeightParams::binary()).unwrap();
        let mut net = Network::new(5, rd, rng(seed));
        let mut sent = 0;
        let mut received = 0;
        for now in 0..25u64 {
            for inbox in net.deliver(now) {
                for m in inbox {
                    prop_assert!(m.origin_iteration < now);
                    received += 1;
                }
            }
            for &(t, who) in sends.iter().filter(|(t, _)| *t == now) {
                sent += net.broadcast(now, &flood(who, t), &world).attempted.len();
            }
        }
        if drop == 0.0 {
            prop_assert_eq!(sent, received);
        }
    }
}

#[test]
fn lossless_floods_cover_the_team_within_the_diameter() {
    let mut r = rng(11);
    for _ in 0..5 {
        let n = 12;
        let ps = connected_layout(&mut r, n, 45.0, 16.0);
        let c = static_config(ps.clone(), 120, "[radio]\nmax_hops = 64\n");
        let d = diameter(&build_graph(&ps, &c.radio, &c.weights).unwrap()).unwrap() as u64;
        let mut sim = Simulation::new(c.clone()).unwrap();
        let mut started: BTreeMap<(u64, usize), u64> = BTreeMap::new();
        let mut reached: BTreeMap<(u64, usize), BTreeMap<usize, u64>> = BTreeMap::new();
        for _ in 0..c.ticks {
            sim.step_with(|now, receiver, m| {
                if let Payload::Flood(f) = &m.payload {
                    let key = (f.round_id, m.origin);
                    if m.hop_count == 0 {
                        started.entry(key).or_insert(now);
                    }
                    if receiver != m.origin {
                        reached
                            .entry(key)
                            .or_default()
                            .entry(receiver)
                            .or_insert(now + 1);
                    }
                }
            })
            .unwrap();
        }
        assert!(started.len() >= 8 * n, "{} floods", started.len());
        for (key, start) in &started {
            let Some(arrivals) = reached.get(key) else {
                panic!("flood {key:?} went nowhere");
            };
            // Rounds still in flight at the end are exempt.
            if start + d >= c.ticks {
                continue;
            }
            assert_eq!(arrivals.len() + 1, n, "flood {key:?}");
            let last = arrivals.values().max().unwrap();
            assert!(
                last - start <= d,
                "flood {key:?}: {} ticks, diameter {d}",
                last - start
            );
        }
    }
}

#[test]
fn lossless_recency_only_dips_within_the_hop_window() {
    let mut r = rng(12);
    let ps = connected_layout(&mut r, 10, 45.0, 16.0);
    let c = static_config(ps, 400, "");
    let max_hops = c.radio.max_hops as u64;
    let mut sim = Simulation::new(c.clone()).unwrap();
    let mut history: BTreeMap<(usize, usize), Vec<(u64, u64)>> = BTreeMap::new();
    for _ in 0..c.ticks {
        sim.step_with(|now, receiver, m| {
            if matches!(m.payload, Payload::Flood(_)) && m.origin != receiver {
                history
                    .entry((receiver, m.origin))
                    .or_default()
                    .push((now + 1, m.origin_iteration));
            }
        })
        .unwrap();
    }
    assert_eq!(history.len(), 10 * 9);
    for (pair, seq) in &history {
        for (a, &(ta, va)) in seq.iter().enumerate() {
            for &(tb, vb) in &seq[a + 1..] {
                assert!(
                    vb >= va || tb - ta <= max_hops,
                    "{pair:?}: {va}@{ta} then {vb}@{tb}"
                );
            }
        }
    }
}

#[test]
fn tables_stay_disjoint_and_fresh_under_loss() {
    let mut r = rng(13);
    let ps = connected_layout(&mut r, 12, 40.0, 16.0);
    let c = static_config(ps, 300, "[radio]\ndrop_prob = 0.4\nstaleness_ttl = 4\n");
    let mut sim = Simulation::new(c.clone()).unwrap();
    let mut saw_two_hop = false;
    for _ in 0..c.ticks {
        let now = sim.tick();
        sim.step().unwrap();
        for robot in sim.robots() {
            let t = &robot.table;
            assert!(!t.one_hop.contains_key(&robot.id));
            assert!(!t.two_hop.contains_key(&robot.id));
            assert!(t.one_hop.keys().all(|k| !t.two_hop.contains_key(k)));
            assert!(t
                .one_hop
                .values()
                .all(|e| now - e.last_heard <= c.staleness_ttl));
            for e in t.two_hop.values() {
                assert!(e.relays.keys().all(|relay| t.one_hop.contains_key(relay)));
                assert!(now - e.last_heard() <= c.staleness_ttl);
            }
            saw_two_hop |= !t.two_hop.is_empty();
        }
    }
    assert!(saw_two_hop);
}

#[test]
fn delivery_trace_is_a_function_of_the_seed() {
    let trace = |seed: u64| {
        let mut r = rng(14);
        let ps = connected_layout(&mut r, 8, 35.0, 16.0);
        let mut c = static_config(ps, 150, "[radio]\ndrop_prob = 0.3\n");
        c.seed = seed;
        let mut sim = Simulation::new(c.clone()).unwrap();
        let mut out = Vec::new();
        for _ in 0..c.ticks {
            sim.step_with(|now, receiver, m| out.push((now, receiver, m.encode())))
                .unwrap();
        }
        out
    };
    let a = trace(5);
    assert_eq!(a, trace(5));
    assert_ne!(a, trace(6));
}
