//! Output files of a run and bit-exact replay.
//!
//! Every file starts with a `# swarmconn <name> v<FORMAT_VERSION>` line.
//!
//! * `config.toml`: the fully resolved scenario, seed included.
//! * `metrics.csv`: one row per tick. Global columns `tick, lambda2_true,
//!   connected, min_distance, max_distance, alive_count`, then for each robot
//!   `i`: `alive_i, lambda2_est_i, one_hop_i, two_hop_i, flood_recency_i`.
//!   `flood_recency_i` is a space-separated list of `origin:iteration`.
//! * `trajectories.csv`: `tick, robot, alive, p0..p{m-1}, v0..v{m-1}`.
//! * `neighbors.csv`: `tick, robot, neighbor, estimated_distance,
//!   true_distance` for every 1-hop table entry.
//! * `messages.csv`: `tick, sender, receiver, kind, origin,
//!   origin_iteration, hop_count, delivered`, one row per link attempt.
//! * `summary.txt`: `key = value` lines.
//! * `trace.bin` (optional): magic `SWTR`, schema byte, then one frame per
//!   delivered message: `u64 tick, u32 receiver, u32 len, len bytes` in the
//!   canonical message layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{GapCounter, MetricsRecord, RobotGaps, Simulation};
use crate::config::{load_config, ScenarioConfig};
use crate::netsim::{LinkRecord, SCHEMA_VERSION};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const OUTPUT_FILES: [&str; 7] = [
    "config.toml",
    "metrics.csv",
    "trajectories.csv",
    "neighbors.csv",
    "messages.csv",
    "summary.txt",
    "trace.bin",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub ticks: u64,
    /// Fraction of ticks with a connected live graph.
    pub connected_fraction: f64,
    pub first_disconnected_tick: Option<u64>,
    /// Mean of `|λ₂_est − λ₂_true| / λ₂_true` over live robots with at least
    /// one completed round, on connected ticks.
    pub lambda2_rel_error_mean: Option<f64>,
    pub final_alive: usize,
    pub gaps: Vec<RobotGaps>,
}

#[derive(Default)]
pub(super) struct SummaryAccumulator {
    ticks: u64,
    connected: u64,
    first_disconnected: Option<u64>,
    err_sum: f64,
    err_count: u64,
    final_alive: usize,
}

impl SummaryAccumulator {
    pub(super) fn push(&mut self, m: &MetricsRecord) {
        self.ticks += 1;
        if m.connected {
            self.connected += 1;
        } else if self.first_disconnected.is_none() {
            self.first_disconnected = Some(m.tick);
        }
        if m.connected && m.lambda2_true > 1e-9 {
            for r in m.robots.iter().filter(|r| r.alive && r.lambda2_est > 0.0) {
                self.err_sum += (r.lambda2_est - m.lambda2_true).abs() / m.lambda2_true;
                self.err_count += 1;
            }
        }
        self.final_alive = m.alive_count();
    }

    pub(super) fn finish(self, config: &ScenarioConfig, gaps: Vec<RobotGaps>) -> Summary {
        Summary {
            ticks: config.ticks,
            connected_fraction: self.connected as f64 / self.ticks.max(1) as f64,
            first_disconnected_tick: self.first_disconnected,
            lambda2_rel_error_mean: (self.err_count > 0)
                .then(|| self.err_sum / self.err_count as f64),
            final_alive: self.final_alive,
            gaps,
        }
    }
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut s = format!("# swarmconn summary v{FORMAT_VERSION}\n");
        s += &format!("ticks = {}\n", self.ticks);
        s += &format!("connected_fraction = {}\n", self.connected_fraction);
        s += &format!(
            "first_disconnected_tick = {}\n",
            opt(self.first_disconnected_tick)
        );
        s += &format!(
            "lambda2_rel_error_mean = {}\n",
            opt(self.lambda2_rel_error_mean)
        );
        s += &format!("final_alive = {}\n", self.final_alive);
        for g in &self.gaps {
            for (sender, ratio) in &g.per_sender {
                s += &format!(
                    "robot.{}.digest_miss.from.{} = {}\n",
                    g.robot, sender, ratio
                );
            }
            s += &format!(
                "robot.{}.digest_exactly_one_missing = {}\n",
                g.robot, g.exactly_one_missing
            );
            s += &format!(
                "robot.{}.digest_none_received = {}\n",
                g.robot, g.none_received
            );
            for ((a, b), c) in &g.correlations {
                s += &format!("robot.{}.miss_corr.{}.{} = {}\n", g.robot, a, b, opt(*c));
            }
        }
        s
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Writers {
    metrics: BufWriter<File>,
    trajectories: BufWriter<File>,
    neighbors: BufWriter<File>,
    messages: Option<BufWriter<File>>,
    trace: Option<BufWriter<File>>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(&path, e))
}

fn io_at(dir: &Path, name: &str) -> impl Fn(std::io::Error) -> Error {
    let path = dir.join(name);
    move |e| Error::io(&path, e)
}

fn write_metrics_header(w: &mut impl Write, n: usize) -> std::io::Result<()> {
    writeln!(w, "# swarmconn metrics v{FORMAT_VERSION}")?;
    write!(
        w,
        "tick,lambda2_true,connected,min_distance,max_distance,alive_count"
    )?;
    for i in 0..n {
        write!(
            w,
            ",alive_{i},lambda2_est_{i},one_hop_{i},two_hop_{i},flood_recency_{i}"
        )?;
    }
    writeln!(w)
}

fn write_metrics_row(w: &mut impl Write, m: &MetricsRecord) -> std::io::Result<()> {
    write!(
        w,
        "{},{},{},{},{},{}",
        m.tick,
        m.lambda2_true,
        u8::from(m.connected),
        opt(m.min_distance),
        opt(m.max_distance),
        m.alive_count()
    )?;
    for r in &m.robots {
        let recency: Vec<String> = r
            .flood_recency
            .iter()
            .map(|(o, it)| format!("{o}:{it}"))
            .collect();
        write!(
            w,
            ",{},{},{},{},{}",
            u8::from(r.alive),
            r.lambda2_est,
            r.one_hop,
            r.two_hop,
            recency.join(" ")
        )?;
    }
    writeln!(w)
}

fn write_trajectory_rows(
    w: &mut impl Write,
    m: &MetricsRecord,
    sim: &Simulation,
) -> std::io::Result<()> {
    for (id, (r, state)) in m.robots.iter().zip(sim.robots()).enumerate() {
        write!(w, "{},{},{}", m.tick, id, u8::from(r.alive))?;
        for c in r.position.iter() {
            write!(w, ",{c}")?;
        }
        for c in state.velocity.iter() {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn write_neighbor_rows(w: &mut impl Write, m: &MetricsRecord) -> std::io::Result<()> {
    for (id, r) in m.robots.iter().enumerate() {
        if !r.alive {
            continue;
        }
        for &(nb, est) in &r.neighbor_distances {
            let truth = (&m.robots[nb].position - &r.position).norm();
            writeln!(w, "{},{},{},{},{}", m.tick, id, nb, est, truth)?;
        }
    }
    Ok(())
}

fn write_link_rows(w: &mut impl Write, links: &[LinkRecord]) -> std::io::Result<()> {
    for l in links {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            l.tick,
            l.sender,
            l.receiver,
            l.kind.as_str(),
            l.origin,
            l.origin_iteration,
            l.hop_count,
            u8::from(l.delivered)
        )?;
    }
    Ok(())
}

/// Runs `config` and writes every output file into `out_dir`.
pub fn run_to_dir(config: &ScenarioConfig, out_dir: &Path, dump_trace: bool) -> Result<Summary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    std::fs::write(out_dir.join("config.toml"), config.to_toml_string())
        .map_err(io_at(out_dir, "config.toml"))?;

    let dim = config.dim();
    let mut w = Writers {
        metrics: create(out_dir, "metrics.csv")?,
        trajectories: create(out_dir, "trajectories.csv")?,
        neighbors: create(out_dir, "neighbors.csv")?,
        messages: config
            .write_messages
            .then(|| create(out_dir, "messages.csv"))
            .transpose()?,
        trace: dump_trace
            .then(|| create(out_dir, "trace.bin"))
            .transpose()?,
    };
    write_metrics_header(&mut w.metrics, config.n).map_err(io_at(out_dir, "metrics.csv"))?;
    {
        let t = &mut w.trajectories;
        let mut header = String::from("tick,robot,alive");
        for k in 0..dim {
            header += &format!(",p{k}");
        }
        for k in 0..dim {
            header += &format!(",v{k}");
        }
        writeln!(t, "# swarmconn trajectories v{FORMAT_VERSION}\n{header}")
            .map_err(io_at(out_dir, "trajectories.csv"))?;
    }
    writeln!(
        w.neighbors,
        "# swarmconn neighbors v{FORMAT_VERSION}\ntick,robot,neighbor,estimated_distance,true_distance"
    )
    .map_err(io_at(out_dir, "neighbors.csv"))?;
    if let Some(m) = w.messages.as_mut() {
        writeln!(
            m,
            "# swarmconn messages v{FORMAT_VERSION}\ntick,sender,receiver,kind,origin,origin_iteration,hop_count,delivered"
        )
        .map_err(io_at(out_dir, "messages.csv"))?;
    }
    if let Some(t) = w.trace.as_mut() {
        t.write_all(b"SWTR")
            .and_then(|_| t.write_all(&[SCHEMA_VERSION]))
            .map_err(io_at(out_dir, "trace.bin"))?;
    }

    let mut sim = Simulation::new(config.clone())?;
    let mut gaps = GapCounter::new();
    let mut acc = SummaryAccumulator::default();
    let mut trace_err: Option<std::io::Error> = None;
    for _ in 0..config.ticks {
        let trace = &mut w.trace;
        let m = sim.step_with(|tick, receiver, msg| {
            if let Some(t) = trace.as_mut() {
                let bytes = msg.encode();
                let res = t
                    .write_all(&tick.to_le_bytes())
                    .and_then(|_| t.write_all(&(receiver as u32).to_le_bytes()))
                    .and_then(|_| t.write_all(&(bytes.len() as u32).to_le_bytes()))
                    .and_then(|_| t.write_all(&bytes));
                if let Err(e) = res {
                    trace_err.get_or_insert(e);
                }
            }
        })?;
        if let Some(e) = trace_err.take() {
            return Err(Error::io(out_dir.join("trace.bin"), e));
        }
        let links = sim.take_links();
        gaps.push_tick(&links);
        acc.push(&m);
        write_metrics_row(&mut w.metrics, &m).map_err(io_at(out_dir, "metrics.csv"))?;
        write_trajectory_rows(&mut w.trajectories, &m, &sim)
            .map_err(io_at(out_dir, "trajectories.csv"))?;
        write_neighbor_rows(&mut w.neighbors, &m).map_err(io_at(out_dir, "neighbors.csv"))?;
        if let Some(mw) = w.messages.as_mut() {
            write_link_rows(mw, &links).map_err(io_at(out_dir, "messages.csv"))?;
        }
    }
    w.metrics.flush().map_err(io_at(out_dir, "metrics.csv"))?;
    w.trajectories
        .flush()
        .map_err(io_at(out_dir, "trajectories.csv"))?;
    w.neighbors
        .flush()
        .map_err(io_at(out_dir, "neighbors.csv"))?;
    if let Some(mw) = w.messages.as_mut() {
        mw.flush().map_err(io_at(out_dir, "messages.csv"))?;
    }
    if let Some(t) = w.trace.as_mut() {
        t.flush().map_err(io_at(out_dir, "trace.bin"))?;
    }

    let summary = acc.finish(config, gaps.report());
    std::fs::write(out_dir.join("summary.txt"), summary.to_text())
        .map_err(io_at(out_dir, "summary.txt"))?;
    Ok(summary)
}

/// Outcome of re-running a stored run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    /// `(file name, byte-identical)` for every output file present.
    pub files: Vec<(String, bool)>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.files.iter().all(|(_, same)| *same)
    }
}

/// Re-runs the scenario stored in `run_dir/config.toml` into a scratch
/// directory and compares every output file byte for byte.
pub fn replay(run_dir: &Path) -> Result<ReplayReport> {
    let config = load_config(run_dir.join("config.toml"))?;
    let dump_trace = run_dir.join("trace.bin").exists();
    let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    run_to_dir(&config, scratch.path(), dump_trace)?;
    let mut files = Vec::new();
    for name in OUTPUT_FILES {
        let a: PathBuf = run_dir.join(name);
        let b: PathBuf = scratch.path().join(name);
        match (a.exists(), b.exists()) {
            (false, false) => continue,
            (true, true) => {
                let same = std::fs::read(&a).map_err(|e| Error::io(&a, e))?
                    == std::fs::read(&b).map_err(|e| Error::io(&b, e))?;
                files.push((name.to_string(), same));
            }
            _ => files.push((name.to_string(), false)),
        }
    }
    Ok(ReplayReport { files })
}
