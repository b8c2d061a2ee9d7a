//! Decentralized algebraic-connectivity maintenance for robot swarms.
//!
//! Each simulated robot runs the same local control law: a connectivity term
//! driven by a distributed estimate of the Laplacian's second eigenpair, a
//! robustness term built from the robot's 2-hop neighborhood, and a
//! Lennard-Jones spacing term. Robots only talk over a limited-range, lossy,
//! tick-synchronous radio.
//!
//! The crate is split along those lines:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`oracle`] | Centralized ground truth: weighted graphs, Laplacian, exact λ₂ / Fiedler vector, 2-hop path counting |
//! | [`estimator`] | Per-agent power iteration on `I − αL` with flood-based mean correction |
//! | [`control`] | Connectivity, robustness and coverage contributions and their combination |
//! | [`netsim`] | Wire messages, neighbor tables, double-buffered lossy broadcast, flood relaying |
//! | [`agent`] | The per-robot tick: inbox → estimator → control → motion → outbox; failure injection |
//! | [`config`] | Scenario configuration (TOML) |
//! | [`harness`] | Simulation loop, metrics and output files |
//!
//! Agents never see the oracle; it is only used for metrics and tests.

pub mod agent;
pub mod config;
pub mod control;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod netsim;
pub mod oracle;

pub use error::{Error, Result};

/// Position or displacement in the m-dimensional plane/space the robots live in.
pub type Vector = nalgebra::DVector<f64>;

/// Robot identifier; robots are numbered `0..n`.
pub type RobotId = usize;

/// Separation below which pairwise terms are treated as degenerate (meters).
pub const D_MIN: f64 = 0.01;
