//! Experiment configuration files.
//!
//! A config is a TOML document with the sections below. Every key is optional
//! and defaults to the benchmark setup (20 nodes, nodes 17..19 malicious,
//! mean-shift attack of 5, RSGP with `beta = 1.5`); unknown keys are errors.
//!
//! ```toml
//! [experiment]
//! algorithm = "rsgp"          # rsgp | sgp_plain | tv | trimmed
//! trials = 50
//! base_seed = 0               # trial k uses seed base_seed + k
//! output_dir = "out"
//! sample_stride = 0           # trajectory sampling, 0 = off
//! resample_instance = false   # draw a fresh instance per trial
//! norm_p = 2.0
//! varrho_form = "per_node"    # per_node | global
//!
//! [graph]
//! n = 20
//! p = 0.449                   # default 3 ln(n) / n
//! malicious = [17, 18, 19]
//! max_attempts = 1000
//!
//! [instance]
//! x_o = [0.0859, -1.4916]
//! h_sigma = 1.0
//! noise_sigma = 1.0
//! seed = 0                    # default base_seed
//!
//! [attack]
//! kind = "mean_shift"         # none | spoof_shift | mean_shift | target_pull
//! shift = 5.0                 # delta_s, target, gain for the other kinds
//!
//! [schedule]
//! eta0 = 1.0
//! rho = 1.0
//! rounds = 5000
//!
//! [protocol]
//! alpha = 0.9
//! beta = 1.5
//! score_mode = "forgetting"   # forgetting | literal
//! detection_start = 0
//! detection_enabled = true
//! y_floor = 1e-12
//! gradient_clip = 50.0        # 0 disables clipping
//!
//! [tv]
//! lambda = 0.1
//!
//! [trimmed]
//! kappa = 3
//!
//! [sweep]
//! parameter = "beta"          # beta | lambda | alpha | kappa | eta0 | rho
//! values = [0.2, 0.8, 1.5, 3.0, 5.0, 10.0]
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{TrimConfig, TvConfig};
use crate::error::{Error, Result};
use crate::graph::{default_edge_probability, NodeId};
use crate::objective::AttackSpec;
use crate::protocol::{ProtocolConfig, ScoreMode, StepSchedule, DEFAULT_GRADIENT_CLIP};
use crate::vector::{NormOrder, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Rsgp,
    /// RSGP with detection switched off.
    SgpPlain,
    Tv,
    Trimmed,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Rsgp => "rsgp",
            Algorithm::SgpPlain => "sgp_plain",
            Algorithm::Tv => "tv",
            Algorithm::Trimmed => "trimmed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarrhoForm {
    /// Mean of per-node loss differences.
    #[default]
    PerNode,
    /// Mean final loss minus the benchmark's mean loss.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub sample_stride: usize,
    pub resample_instance: bool,
    pub norm_p: f64,
    pub varrho_form: VarrhoForm,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            algorithm: Algorithm::Rsgp,
            trials: 50,
            base_seed: 0,
            output_dir: PathBuf::from("out"),
            sample_stride: 0,
            resample_instance: false,
            norm_p: 2.0,
            varrho_form: VarrhoForm::PerNode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub n: usize,
    pub p: Option<f64>,
    pub malicious: Vec<NodeId>,
    pub max_attempts: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            n: 20,
            p: None,
            malicious: vec![17, 18, 19],
            max_attempts: 1000,
        }
    }
}

impl GraphSection {
    pub fn edge_probability(&self) -> f64 {
        self.p.unwrap_or_else(|| default_edge_probability(self.n))
    }
}

pub const BENCHMARK_X_O: [f64; 2] = [0.0859, -1.4916];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSection {
    pub x_o: Vec<f64>,
    pub h_sigma: f64,
    pub noise_sigma: f64,
    pub seed: Option<u64>,
}

impl Default for InstanceSection {
    fn default() -> Self {
        InstanceSection {
            x_o: BENCHMARK_X_O.to_vec(),
            h_sigma: 1.0,
            noise_sigma: 1.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    SpoofShift,
    MeanShift,
    TargetPull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    pub delta_s: f64,
    pub shift: f64,
    pub target: Vec<f64>,
    pub gain: f64,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection {
            kind: AttackKind::MeanShift,
            delta_s: 0.0,
            shift: 5.0,
            target: Vec::new(),
            gain: 1.0,
        }
    }
}

impl AttackSection {
    pub fn spec(&self, d: usize) -> Result<AttackSpec<f64>> {
        Ok(match self.kind {
            AttackKind::None => AttackSpec::None,
            AttackKind::SpoofShift => AttackSpec::SpoofShift { delta_s: self.delta_s },
            AttackKind::MeanShift => AttackSpec::MeanShift { shift: self.shift },
            AttackKind::TargetPull => {
                if self.target.len() != d {
                    return Err(Error::config(
                        "attack.target",
                        format!("needs {d} components, got {}", self.target.len()),
                    ));
                }
                if !(self.gain > 0.0) {
                    return Err(Error::config("attack.gain", "must be positive"));
                }
                AttackSpec::TargetPull {
                    target: Vector::from_f64(&self.target),
                    gain: self.gain,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub eta0: f64,
    pub rho: f64,
    pub rounds: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            eta0: 1.0,
            rho: 1.0,
            rounds: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub alpha: f64,
    pub beta: f64,
    pub score_mode: ScoreMode,
    pub detection_start: usize,
    pub detection_enabled: bool,
    pub y_floor: f64,
    pub gradient_clip: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            alpha: 0.9,
            beta: 1.5,
            score_mode: ScoreMode::Forgetting,
            detection_start: 0,
            detection_enabled: true,
            y_floor: 1e-12,
            gradient_clip: DEFAULT_GRADIENT_CLIP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvSection {
    pub lambda: f64,
}

impl Default for TvSection {
    fn default() -> Self {
        TvSection { lambda: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimmedSection {
    pub kappa: usize,
}

impl Default for TrimmedSection {
    fn default() -> Self {
        TrimmedSection { kappa: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    Lambda,
    Alpha,
    Kappa,
    Eta0,
    Rho,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Beta => "beta",
            SweepParameter::Lambda => "lambda",
            SweepParameter::Alpha => "alpha",
            SweepParameter::Kappa => "kappa",
            SweepParameter::Eta0 => "eta0",
            SweepParameter::Rho => "rho",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub graph: GraphSection,
    pub instance: InstanceSection,
    pub attack: AttackSection,
    pub schedule: ScheduleSection,
    pub protocol: ProtocolSection,
    pub tv: TvSection,
    pub trimmed: TrimmedSection,
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field,
                reason: format!("{reason} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn d(&self) -> usize {
        self.instance.x_o.len()
    }

    pub fn malicious(&self) -> BTreeSet<NodeId> {
        self.graph.malicious.iter().copied().collect()
    }

    pub fn norm(&self) -> NormOrder {
        NormOrder(self.experiment.norm_p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.trials == 0 {
            return Err(Error::config("experiment.trials", "must be at least 1"));
        }
        NormOrder::new(self.experiment.norm_p).map_err(|_| Error::config("experiment.norm_p", "must be >= 1"))?;
        let n = self.graph.n;
        if n < 2 {
            return Err(Error::config("graph.n", "must be at least 2"));
        }
        let p = self.graph.edge_probability();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("graph.p", "must lie in [0, 1]"));
        }
        if self.graph.max_attempts == 0 {
            return Err(Error::config("graph.max_attempts", "must be at least 1"));
        }
        let mal = self.malicious();
        if mal.len() != self.graph.malicious.len() {
            return Err(Error::config("graph.malicious", "contains duplicates"));
        }
        if let Some(&m) = mal.iter().find(|&&m| m >= n) {
            return Err(Error::config("graph.malicious", format!("node {m} out of range for n = {n}")));
        }
        if mal.len() == n {
            return Err(Error::config("graph.malicious", "at least one node must be regular"));
        }
        if self.d() == 0 {
            return Err(Error::config("instance.x_o", "must have at least one component"));
        }
        if !(self.instance.h_sigma >= 0.0) {
            return Err(Error::config("instance.h_sigma", "must be non-negative"));
        }
        if !(self.instance.noise_sigma >= 0.0) {
            return Err(Error::config("instance.noise_sigma", "must be non-negative"));
        }
        self.attack.spec(self.d())?;
        match self.experiment.algorithm {
            Algorithm::Rsgp | Algorithm::SgpPlain => self.protocol_config()?.validate()?,
            Algorithm::Tv => {
                self.tv_config().schedule.validate()?;
                if !(self.tv.lambda >= 0.0) || !self.tv.lambda.is_finite() {
                    return Err(Error::config("tv.lambda", "must be finite and non-negative"));
                }
            }
            Algorithm::Trimmed => self.trim_config().schedule.validate()?,
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::config("sweep.values", "must not be empty"));
            }
            for &v in &sweep.values {
                self.with_parameter(sweep.parameter, v)?;
            }
        }
        Ok(())
    }

    fn schedule(&self) -> StepSchedule<f64> {
        StepSchedule {
            eta0: self.schedule.eta0,
            rho: self.schedule.rho,
        }
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig<f64>> {
        let p = &self.protocol;
        if !(p.gradient_clip >= 0.0) {
            return Err(Error::config("protocol.gradient_clip", "must be non-negative"));
        }
        let cfg = ProtocolConfig {
            schedule: self.schedule(),
            alpha: p.alpha,
            beta: p.beta,
            score_mode: p.score_mode,
            detection_start: p.detection_start,
            detection_enabled: p.detection_enabled && self.experiment.algorithm != Algorithm::SgpPlain,
            rounds: self.schedule.rounds,
            y_floor: p.y_floor,
            gradient_clip: (p.gradient_clip > 0.0).then_some(p.gradient_clip),
            sample_stride: self.experiment.sample_stride,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config { field, reason } => Error::config(qualify(&field), reason),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn tv_config(&self) -> TvConfig<f64> {
        TvConfig {
            lambda: self.tv.lambda,
            schedule: self.schedule(),
            rounds: self.schedule.rounds,
            sample_stride: self.experiment.sample_stride,
        }
    }

    pub fn trim_config(&self) -> TrimConfig<f64> {
        TrimConfig {
            kappa: self.trimmed.kappa,
            schedule: self.schedule(),
            rounds: self.schedule.rounds,
            sample_stride: self.experiment.sample_stride,
        }
    }

    /// Copy of this config with one sweep parameter overridden.
    pub fn with_parameter(&self, param: SweepParameter, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        match param {
            SweepParameter::Beta => cfg.protocol.beta = value,
            SweepParameter::Lambda => cfg.tv.lambda = value,
            SweepParameter::Alpha => cfg.protocol.alpha = value,
            SweepParameter::Eta0 => cfg.schedule.eta0 = value,
            SweepParameter::Rho => cfg.schedule.rho = value,
            SweepParameter::Kappa => {
                if !(value >= 0.0) || value.fract() != 0.0 {
                    return Err(Error::config("sweep.values", format!("kappa must be a whole number, got {value}")));
                }
                cfg.trimmed.kappa = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn qualify(field: &str) -> String {
    match field {
        "eta0" | "rho" | "rounds" => format!("schedule.{field}"),
        other => format!("protocol.{other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_benchmark() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.graph.n, 20);
        assert_eq!(cfg.malicious(), BTreeSet::from([17, 18, 19]));
        assert_eq!(cfg.instance.x_o, BENCHMARK_X_O.to_vec());
        assert_eq!(cfg.protocol.beta, 1.5);
        assert_eq!(cfg.experiment.trials, 50);
        assert!((cfg.graph.edge_probability() - 3.0 * 20f64.ln() / 20.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("[protocol]\nbta = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("bta"), "{err}");
        assert!(ExperimentConfig::from_toml_str("[nonsense]\n").is_err());
    }

    #[test]
    fn invalid_fields_are_named() {
        let err = ExperimentConfig::from_toml_str("[protocol]\nalpha = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("protocol.alpha"), "{err}");
        let err = ExperimentConfig::from_toml_str("[graph]\nmalicious = [25]\n").unwrap_err();
        assert!(err.to_string().contains("graph.malicious"), "{err}");
        let err = ExperimentConfig::from_toml_str("[schedule]\nrho = 0.4\n").unwrap_err();
        assert!(err.to_string().contains("schedule.rho"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let text = "[experiment]\nalgorithm = \"tv\"\ntrials = 3\n[sweep]\nparameter = \"lambda\"\nvalues = [0.0, 1.0]\n";
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn sgp_plain_disables_detection() {
        let cfg = ExperimentConfig::from_toml_str("[experiment]\nalgorithm = \"sgp_plain\"\n").unwrap();
        assert!(!cfg.protocol_config().unwrap().detection_enabled);
    }

    #[test]
    fn sweep_override() {
        let cfg = ExperimentConfig::default();
        let c = cfg.with_parameter(SweepParameter::Kappa, 2.0).unwrap();
        assert_eq!(c.trimmed.kappa, 2);
        assert!(cfg.with_parameter(SweepParameter::Kappa, 1.5).is_err());
        assert!(cfg.with_parameter(SweepParameter::Alpha, 1.0).is_err());
    }
}
