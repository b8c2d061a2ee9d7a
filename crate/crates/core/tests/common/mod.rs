//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmconn::config::{Placement, ScenarioConfig};
use swarmconn::control::Gains;
use swarmconn::oracle::{build_graph, is_connected, WeightParams};
use swarmconn::Vector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v2(x: f64, y: f64) -> Vector {
    Vector::from_vec(vec![x, y])
}

pub fn random_positions<R: Rng>(rng: &mut R, n: usize, extent: f64) -> Vec<Vector> {
    (0..n)
        .map(|_| v2(rng.random_range(0.0..extent), rng.random_range(0.0..extent)))
        .collect()
}

/// Uniform layout in `[0, extent]²` resampled until the disk graph is connected.
pub fn connected_layout<R: Rng>(rng: &mut R, n: usize, extent: f64, range: f64) -> Vec<Vector> {
    loop {
        let ps = random_positions(rng, n, extent);
        let g = build_graph(&ps, &radio(range), &WeightParams::binary()).unwrap();
        if is_connected(&g) {
            return ps;
        }
    }
}

pub fn radio(range: f64) -> swarmconn::netsim::RadioModel {
    swarmconn::netsim::RadioModel {
        comm_range: range,
        drop_prob: 0.0,
        max_hops: 64,
    }
}

/// Static team: all gains zero, explicit positions, default everything else.
pub fn static_config(positions: Vec<Vector>, ticks: u64, extra_toml: &str) -> ScenarioConfig {
    let text = format!("n = {}\nticks = {ticks}\n{extra_toml}", positions.len());
    let mut c = ScenarioConfig::from_toml_str(&text).unwrap();
    c.gains = Gains {
        sigma: 0.0,
        psi: 0.0,
        zeta: 0.0,
    };
    c.placement = Placement::Explicit(positions);
    c
}

/// Union-find connectivity over an explicit edge predicate; independent of
/// the oracle's breadth-first search.
pub fn union_find_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if edge(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, 0);
    (0..n).all(|i| find(&mut parent, i) == root)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Laplacian of a weight matrix given as nested rows.
pub fn laplacian_rows(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = w.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { w[i].iter().sum() } else { -w[i][j] })
                .collect()
        })
        .collect()
}

/// Brute-force Path_i(k) and |Π_i| from an adjacency predicate: every node at
/// hop distance exactly two, counted with the number of distinct middle nodes.
pub fn brute_two_hop(
    n: usize,
    adj: &dyn Fn(usize, usize) -> bool,
    i: usize,
    k: usize,
) -> (usize, Vec<usize>) {
    let one: Vec<usize> = (0..n).filter(|&j| j != i && adj(i, j)).collect();
    let mut pi = one.len();
    let mut path = Vec::new();
    for t in 0..n {
        if t == i || adj(i, t) {
            continue;
        }
        let relays = one.iter().filter(|&&m| adj(m, t)).count();
        if relays > 0 {
            pi += 1;
            if relays <= k {
                path.push(t);
            }
        }
    }
    (pi, path)
}
