//! Scenario configuration.
//!
//! Scenarios are TOML files. Only `n` and `ticks` are required; every other
//! key has a default. Unknown keys are rejected. Full grammar with defaults:
//!
//! ```toml
//! n = 20                 # team size
//! ticks = 3000           # simulation length
//! dt = 0.1               # seconds per tick
//! seed = 0               # master seed (overridden by `--seed`)
//!
//! [arena]
//! size = [50.0, 50.0]    # box extent per axis; its length sets the dimension
//!
//! [radio]
//! comm_range = 16.0
//! drop_prob = 0.0
//! max_hops = 20          # default: n
//! staleness_ttl = 5      # ticks before a silent neighbor is evicted
//! digest_every = 1       # ticks between 2-hop digests
//!
//! [weights]
//! kind = "smooth"        # or "binary"
//! sigma = 5.333          # default: comm_range / 3
//!
//! [gains]
//! sigma = 1.0            # connectivity
//! psi = 1.0              # robustness
//! zeta = 1.0             # coverage
//! v_max = 1.0            # m/s
//!
//! [lj]
//! a = 4.0
//! b = 2.0
//! delta = 16.0           # default: comm_range
//! iota = 20.0
//!
//! [robustness]
//! k = 1
//! r = 0.3
//! trigger = "above"      # or "below"
//!
//! [energy]
//! epsilon_lambda = 0.01
//! scale = 1.0
//!
//! [pi]
//! degree_bound = 19.0    # default: n - 1
//! alpha = 0.0256         # default: 1 / (2 * degree_bound + 1)
//! correction_period = 10
//! warmup_rounds = 3      # robots hold still until this many rounds completed
//!
//! [failure]
//! mtbf = 600.0           # seconds; omit the section for no failures
//!
//! [placement]
//! kind = "uniform"       # or "explicit"
//! region = [50.0, 50.0]  # uniform: sample in [0, region] (default: arena)
//! connected = true       # uniform: resample until the start is connected
//! positions = [[0.0, 0.0], [10.0, 0.0]]   # explicit only
//!
//! [output]
//! messages = true        # write messages.csv
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::FailureModel;
use crate::control::{Gains, LJParams, RobustnessParams, TriggerDirection, VParams};
use crate::estimator::default_alpha;
use crate::netsim::RadioModel;
use crate::oracle::{WeightKind, WeightParams};
use crate::{Error, Result, Vector};

#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    Explicit(Vec<Vector>),
    Uniform { region: Vec<f64>, connected: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiParams {
    pub alpha: f64,
    pub degree_bound: f64,
    pub correction_period: u64,
    /// Correction rounds a robot completes before it starts moving.
    pub warmup_rounds: u64,
}

/// A validated scenario with every default resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub ticks: u64,
    pub dt: f64,
    pub seed: u64,
    pub arena: Vec<f64>,
    pub radio: RadioModel,
    pub staleness_ttl: u64,
    pub digest_every: u64,
    pub weights: WeightParams,
    pub gains: Gains,
    pub v_max: f64,
    pub lj: LJParams,
    pub robustness: RobustnessParams,
    pub vparams: VParams,
    pub pi: PiParams,
    pub failure: FailureModel,
    pub placement: Placement,
    pub write_messages: bool,
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.arena.len()
    }

    /// The 20-robot, 50×50 m, 16 m range scenario with all defaults.
    pub fn nominal() -> Self {
        Self::from_toml_str("n = 20\nticks = 3000\n").expect("nominal scenario is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        raw.resolve()
    }

    /// Serializes the resolved config so that it loads back to an equal value.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serializes")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    ticks: u64,
    dt: Option<f64>,
    seed: Option<u64>,
    #[serde(default)]
    arena: RawArena,
    #[serde(default)]
    radio: RawRadio,
    #[serde(default)]
    weights: RawWeights,
    #[serde(default)]
    gains: RawGains,
    #[serde(default)]
    lj: RawLj,
    #[serde(default)]
    robustness: RawRobustness,
    #[serde(default)]
    energy: RawEnergy,
    #[serde(default)]
    pi: RawPi,
    failure: Option<RawFailure>,
    #[serde(default)]
    placement: RawPlacement,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArena {
    size: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    comm_range: Option<f64>,
    drop_prob: Option<f64>,
    max_hops: Option<u32>,
    staleness_ttl: Option<u64>,
    digest_every: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    kind: Option<String>,
    sigma: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    sigma: Option<f64>,
    psi: Option<f64>,
    zeta: Option<f64>,
    v_max: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLj {
    a: Option<f64>,
    b: Option<f64>,
    delta: Option<f64>,
    iota: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobustness {
    k: Option<usize>,
    r: Option<f64>,
    trigger: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    epsilon_lambda: Option<f64>,
    scale: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPi {
    alpha: Option<f64>,
    degree_bound: Option<f64>,
    correction_period: Option<u64>,
    warmup_rounds: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFailure {
    mtbf: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlacement {
    kind: Option<String>,
    region: Option<Vec<f64>>,
    connected: Option<bool>,
    positions: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    messages: Option<bool>,
}

fn require(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, reason))
    }
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl RawConfig {
    fn resolve(self) -> Result<ScenarioConfig> {
        require(self.n >= 1, "n", "team size must be at least 1")?;
        require(self.ticks >= 1, "ticks", "must be at least 1")?;
        let dt = self.dt.unwrap_or(0.1);
        require(finite_pos(dt), "dt", "must be a positive finite number")?;

        let arena = self.arena.size.unwrap_or_else(|| vec![50.0, 50.0]);
        require(
            !arena.is_empty() && arena.len() <= 3,
            "arena.size",
            "must list 1 to 3 extents",
        )?;
        require(
            arena.iter().all(|&s| finite_pos(s)),
            "arena.size",
            "extents must be positive",
        )?;

        let comm_range = self.radio.comm_range.unwrap_or(16.0);
        require(
            finite_pos(comm_range),
            "radio.comm_range",
            "must be positive",
        )?;
        let drop_prob = self.radio.drop_prob.unwrap_or(0.0);
        require(
            (0.0..1.0).contains(&drop_prob),
            "radio.drop_prob",
            "must lie in [0, 1)",
        )?;
        let max_hops = self.radio.max_hops.unwrap_or(self.n as u32);
        require(max_hops >= 1, "radio.max_hops", "must be at least 1")?;
        let staleness_ttl = self.radio.staleness_ttl.unwrap_or(5);
        let digest_every = self.radio.digest_every.unwrap_or(1);
        require(
            digest_every >= 1,
            "radio.digest_every",
            "must be at least 1",
        )?;

        let weights = match self.weights.kind.as_deref().unwrap_or("smooth") {
            "smooth" => {
                let sigma = self.weights.sigma.unwrap_or(comm_range / 3.0);
                require(finite_pos(sigma), "weights.sigma", "must be positive")?;
                WeightParams::smooth(sigma)
            }
            "binary" => WeightParams::binary(),
            other => {
                return Err(Error::config(
                    "weights.kind",
                    format!("unknown kind `{other}`, expected `smooth` or `binary`"),
                ))
            }
        };

        let gains = Gains {
            sigma: self.gains.sigma.unwrap_or(1.0),
            psi: self.gains.psi.unwrap_or(1.0),
            zeta: self.gains.zeta.unwrap_or(1.0),
        };
        for (key, g) in [
            ("gains.sigma", gains.sigma),
            ("gains.psi", gains.psi),
            ("gains.zeta", gains.zeta),
        ] {
            require(g.is_finite(), key, "must be finite")?;
        }
        let v_max = self.gains.v_max.unwrap_or(1.0);
        require(finite_pos(v_max), "gains.v_max", "must be positive")?;

        let lj_default = LJParams::default_for_range(comm_range);
        let lj = LJParams {
            a: self.lj.a.unwrap_or(lj_default.a),
            b: self.lj.b.unwrap_or(lj_default.b),
            delta: self.lj.delta.unwrap_or(lj_default.delta),
            iota: self.lj.iota.unwrap_or(lj_default.iota),
        };
        require(finite_pos(lj.b), "lj.b", "must be positive")?;
        require(lj.a.is_finite() && lj.a > lj.b, "lj.a", "must exceed lj.b")?;
        require(finite_pos(lj.delta), "lj.delta", "must be positive")?;
        require(
            lj.iota.is_finite() && lj.iota >= 0.0,
            "lj.iota",
            "must be nonnegative",
        )?;

        let trigger = match self.robustness.trigger.as_deref().unwrap_or("above") {
            "above" => TriggerDirection::Above,
            "below" => TriggerDirection::Below,
            other => {
                return Err(Error::config(
                    "robustness.trigger",
                    format!("unknown direction `{other}`, expected `above` or `below`"),
                ))
            }
        };
        let robustness = RobustnessParams {
            k: self.robustness.k.unwrap_or(1),
            r: self.robustness.r.unwrap_or(0.3),
            trigger,
        };
        require(robustness.k >= 1, "robustness.k", "must be at least 1")?;
        require(
            (0.0..=1.0).contains(&robustness.r),
            "robustness.r",
            "must lie in [0, 1]",
        )?;

        let vdef = VParams::default();
        let vparams = VParams {
            epsilon_lambda: self.energy.epsilon_lambda.unwrap_or(vdef.epsilon_lambda),
            scale: self.energy.scale.unwrap_or(vdef.scale),
        };
        require(
            finite_pos(vparams.epsilon_lambda),
            "energy.epsilon_lambda",
            "must be positive",
        )?;
        require(
            finite_pos(vparams.scale),
            "energy.scale",
            "must be positive",
        )?;

        let degree_bound = self
            .pi
            .degree_bound
            .unwrap_or((self.n.saturating_sub(1)).max(1) as f64);
        require(
            finite_pos(degree_bound),
            "pi.degree_bound",
            "must be positive",
        )?;
        let alpha = self.pi.alpha.unwrap_or_else(|| default_alpha(degree_bound));
        require(finite_pos(alpha), "pi.alpha", "must be positive")?;
        let correction_period = self.pi.correction_period.unwrap_or(10);
        require(
            correction_period >= 2,
            "pi.correction_period",
            "must be at least 2",
        )?;
        let warmup_rounds = self.pi.warmup_rounds.unwrap_or(3);

        let failure = match self.failure {
            None | Some(RawFailure { mtbf: None }) => FailureModel::None,
            Some(RawFailure { mtbf: Some(m) }) => {
                require(m > 0.0, "failure.mtbf", "must be positive")?;
                FailureModel::Exponential { mtbf: m }
            }
        };

        let dim = arena.len();
        let placement = match self.placement.kind.as_deref().unwrap_or("uniform") {
            "uniform" => {
                let region = self.placement.region.unwrap_or_else(|| arena.clone());
                require(
                    region.len() == dim
                        && region.iter().zip(&arena).all(|(&r, &a)| r > 0.0 && r <= a),
                    "placement.region",
                    "must match the arena dimension and fit inside it",
                )?;
                Placement::Uniform {
                    region,
                    connected: self.placement.connected.unwrap_or(true),
                }
            }
            "explicit" => {
                let positions = self.placement.positions.ok_or_else(|| {
                    Error::config("placement.positions", "required for explicit placement")
                })?;
                require(
                    positions.len() == self.n,
                    "placement.positions",
                    "must list exactly n positions",
                )?;
                require(
                    positions.iter().all(|p| {
                        p.len() == dim
                            && p.iter()
                                .zip(&arena)
                                .all(|(&c, &a)| c.is_finite() && (0.0..=a).contains(&c))
                    }),
                    "placement.positions",
                    "every position must be finite, match the arena dimension and lie inside it",
                )?;
                Placement::Explicit(positions.into_iter().map(Vector::from_vec).collect())
            }
            other => {
                return Err(Error::config(
                    "placement.kind",
                    format!("unknown kind `{other}`, expected `uniform` or `explicit`"),
                ))
            }
        };

        Ok(ScenarioConfig {
            n: self.n,
            ticks: self.ticks,
            dt,
            seed: self.seed.unwrap_or(0),
            arena,
            radio: RadioModel {
                comm_range,
                drop_prob,
                max_hops,
            },
            staleness_ttl,
            digest_every,
            weights,
            gains,
            v_max,
            lj,
            robustness,
            vparams,
            pi: PiParams {
                alpha,
                degree_bound,
                correction_period,
                warmup_rounds,
            },
            failure,
            placement,
            write_messages: self.output.messages.unwrap_or(true),
        })
    }
}

impl From<&ScenarioConfig> for RawConfig {
    fn from(c: &ScenarioConfig) -> Self {
        let (kind, region, connected, positions) = match &c.placement {
            Placement::Uniform { region, connected } => {
                ("uniform", Some(region.clone()), Some(*connected), None)
            }
            Placement::Explicit(ps) => (
                "explicit",
                None,
                None,
                Some(ps.iter().map(|p| p.iter().copied().collect()).collect()),
            ),
        };
        RawConfig {
            n: c.n,
            ticks: c.ticks,
            dt: Some(c.dt),
            seed: Some(c.seed),
            arena: RawArena {
                size: Some(c.arena.clone()),
            },
            radio: RawRadio {
                comm_range: Some(c.radio.comm_range),
                drop_prob: Some(c.radio.drop_prob),
                max_hops: Some(c.radio.max_hops),
                staleness_ttl: Some(c.staleness_ttl),
                digest_every: Some(c.digest_every),
            },
            weights: match c.weights.kind {
                WeightKind::Smooth => RawWeights {
                    kind: Some("smooth".into()),
                    sigma: Some(c.weights.sigma),
                },
                WeightKind::Binary => RawWeights {
                    kind: Some("binary".into()),
                    sigma: None,
                },
            },
            gains: RawGains {
                sigma: Some(c.gains.sigma),
                psi: Some(c.gains.psi),
                zeta: Some(c.gains.zeta),
                v_max: Some(c.v_max),
            },
            lj: RawLj {
                a: Some(c.lj.a),
                b: Some(c.lj.b),
                delta: Some(c.lj.delta),
                iota: Some(c.lj.iota),
            },
            robustness: RawRobustness {
                k: Some(c.robustness.k),
                r: Some(c.robustness.r),
                trigger: Some(
                    match c.robustness.trigger {
                        TriggerDirection::Above => "above",
                        TriggerDirection::Below => "below",
                    }
                    .into(),
                ),
            },
            energy: RawEnergy {
                epsilon_lambda: Some(c.vparams.epsilon_lambda),
                scale: Some(c.vparams.scale),
            },
            pi: RawPi {
                alpha: Some(c.pi.alpha),
                degree_bound: Some(c.pi.degree_bound),
                correction_period: Some(c.pi.correction_period),
                warmup_rounds: Some(c.pi.warmup_rounds),
            },
            failure: match c.failure {
                FailureModel::None => None,
                FailureModel::Exponential { mtbf } => Some(RawFailure { mtbf: Some(mtbf) }),
            },
            placement: RawPlacement {
                kind: Some(kind.into()),
                region,
                connected,
                positions,
            },
            output: RawOutput {
                messages: Some(c.write_messages),
            },
        }
    }
}
