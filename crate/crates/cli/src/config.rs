//! Experiment configuration files (TOML).
//!
//! Every section is optional and falls back to the desk-scale defaults: a
//! 6-story shear building with a 3 s fundamental period, 10 + 34 synthetic
//! motions of 10 s at `dt = 0.02`, and a causal convolutional model.
//!
//! ```toml
//! name = "causality-60"
//! out = "runs/causality-60"
//!
//! [system]
//! floors = 6
//! period = 3.0
//! damping = 0.05
//!
//! [signals]
//! train = 10
//! test = 34
//! seed = 1
//!
//! [model]
//! architecture = "causality"
//! branch = [500, 60, 60, 60]
//! trunk = [1, 60, 60, 60]
//! activation = "tanh"
//!
//! [train]
//! loss = "weighted_mse"
//! epochs = 5000
//! schedule = [[500, 1e-3], [2500, 1e-4], [5000, 1e-5]]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use causonet::harness::{LossKind, ModelSpec, Normalization, TrainConfig};
use causonet::lindyn::{MdofSystem, SystemFile};
use causonet::neuralcore::{Activation, LrSchedule, RegConfig};
use causonet::operatornets::Architecture;
use causonet::signalgen::{CorpusSpec, Solver, Units};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub out: PathBuf,
    pub threads: usize,
    pub system: SystemSection,
    pub signals: SignalSection,
    pub model: ModelSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    /// System definition file; when set the shear-building keys are unused.
    pub file: Option<PathBuf>,
    pub floors: usize,
    pub period: f64,
    pub damping: f64,
    /// Recorded DOF (0 is the roof of the shear building).
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub train: usize,
    pub test: usize,
    pub duration: f64,
    pub dt: f64,
    pub band: [f64; 2],
    /// PGA range in m/s².
    pub pga: [f64; 2],
    pub seed: u64,
    pub solver: String,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub architecture: String,
    pub branch: Vec<usize>,
    pub trunk: Vec<usize>,
    pub activation: String,
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Batch {
    Named(String),
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub loss: String,
    pub epochs: usize,
    /// `[end_epoch, rate]` pairs.
    pub schedule: Vec<(usize, f64)>,
    pub seed: u64,
    pub normalization: String,
    /// `"full"` or a number of time indices per step.
    pub batch: Batch,
    /// Defaults to true for causal architectures.
    pub include_ic_pair: Option<bool>,
    pub l2_branch: f64,
    pub l2_trunk: f64,
    pub dropout_branch: f64,
    pub dropout_trunk: f64,
    pub eval_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            out: PathBuf::from("runs/run"),
            threads: 1,
            system: SystemSection::default(),
            signals: SignalSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { file: None, floors: 6, period: 3.0, damping: 0.05, dof: 0 }
    }
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            train: 10,
            test: 34,
            duration: 10.0,
            dt: 0.02,
            band: [0.1, 24.9],
            pga: [1.0, 4.0],
            seed: 1,
            solver: "duhamel".into(),
            units: "g-cm".into(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            architecture: "causality".into(),
            branch: vec![500, 60, 60, 60],
            trunk: vec![1, 60, 60, 60],
            activation: "tanh".into(),
            scales: None,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            loss: "weighted_mse".into(),
            epochs: 5000,
            schedule: vec![(500, 1e-3), (2500, 1e-4), (5000, 1e-5)],
            seed: 0,
            normalization: "none".into(),
            batch: Batch::Named("full".into()),
            include_ic_pair: None,
            l2_branch: 0.0,
            l2_trunk: 0.0,
            dropout_branch: 0.0,
            dropout_trunk: 0.0,
            eval_every: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        // relative system paths are resolved against the config file
        if let (Some(file), Some(dir)) = (&cfg.system.file, path.parent()) {
            if file.is_relative() {
                cfg.system.file = Some(dir.join(file));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Samples per signal.
    pub fn m(&self) -> usize {
        (self.signals.duration / self.signals.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.signals;
        if !(s.dt > 0.0 && s.duration > 0.0) {
            return Err(bad("signals.dt and signals.duration must be positive"));
        }
        let ratio = s.duration / s.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(bad(format!("signals.duration {} is not a multiple of dt {}", s.duration, s.dt)));
        }
        if self.threads == 0 {
            return Err(bad("threads must be >= 1"));
        }
        self.solver()?;
        self.units()?;
        self.model_spec()?;
        self.train_config()?;
        if self.model.branch.first() != Some(&self.m()) {
            return Err(bad(format!(
                "model.branch input width {:?} does not match m = duration/dt = {}",
                self.model.branch.first(),
                self.m()
            )));
        }
        if self.system.file.is_none() && (self.system.floors == 0 || !(self.system.period > 0.0)) {
            return Err(bad("system.floors must be >= 1 and system.period > 0"));
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<Solver, ConfigError> {
        self.signals.solver.parse().map_err(|e| bad(format!("signals.solver: {e}")))
    }

    pub fn units(&self) -> Result<Units, ConfigError> {
        self.signals.units.parse().map_err(|e| bad(format!("signals.units: {e}")))
    }

    pub fn architecture(&self) -> Result<Architecture, ConfigError> {
        self.model.architecture.parse().map_err(|e| bad(format!("model.architecture: {e}")))
    }

    pub fn corpus(&self) -> CorpusSpec {
        let s = &self.signals;
        CorpusSpec {
            count: s.train + s.test,
            duration: s.duration,
            dt: s.dt,
            band: (s.band[0], s.band[1]),
            pga: (s.pga[0], s.pga[1]),
            seed: s.seed,
        }
    }

    /// The structural system and the modal damping ratios of the classical
    /// solver.
    pub fn system(&self) -> Result<(MdofSystem, Vec<f64>), causonet::Error> {
        match &self.system.file {
            Some(path) => {
                let file = SystemFile::read(path)?;
                let ratios = file.modal_ratios()?;
                Ok((file.system, ratios))
            }
            None => {
                let n = self.system.floors;
                let sys = MdofSystem::shear_building(n, self.system.period, self.system.damping)?;
                Ok((sys, vec![self.system.damping; n]))
            }
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let activation: Activation =
            self.model.activation.parse().map_err(|e| bad(format!("model.activation: {e}")))?;
        let mut spec = ModelSpec::new(self.architecture()?, self.model.branch.clone(), self.model.trunk.clone(), activation);
        spec.scales = self.model.scales.clone();
        Ok(spec)
    }

    pub fn train_config(&self) -> Result<TrainConfig, ConfigError> {
        let t = &self.train;
        let schedule = LrSchedule::new(t.schedule.clone()).map_err(|e| bad(format!("train.schedule: {e}")))?;
        let mut cfg = TrainConfig::new(schedule, t.epochs);
        cfg.loss = t.loss.parse::<LossKind>().map_err(|e| bad(format!("train.loss: {e}")))?;
        cfg.normalization =
            t.normalization.parse::<Normalization>().map_err(|e| bad(format!("train.normalization: {e}")))?;
        cfg.seed = t.seed;
        cfg.time_batch = match &t.batch {
            Batch::Named(s) if s == "full" => None,
            Batch::Named(s) => return Err(bad(format!("train.batch: expected \"full\" or a size, got `{s}`"))),
            Batch::Size(n) => Some(*n),
        };
        cfg.include_ic_pair = t.include_ic_pair.unwrap_or(self.architecture()?.is_causal());
        cfg.reg = RegConfig {
            l2_branch: t.l2_branch,
            l2_trunk: t.l2_trunk,
            dropout_branch: t.dropout_branch,
            dropout_trunk: t.dropout_trunk,
        };
        cfg.eval_every = t.eval_every;
        cfg.validate().map_err(|e| bad(format!("train: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn module_example_parses() {
        let text = include_str!("config.rs");
        let body: String = text
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start().to_string() + "\n")
            .collect();
        let cfg: ExperimentConfig = toml::from_str(&body).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.name, "causality-60");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "unknown = 1",
            "[model]\narchitecture = \"fno\"",
            "[model]\nbranch = [400, 60, 60]",
            "[train]\nepochs = 0",
            "[train]\nbatch = \"half\"",
            "[signals]\nduration = 10.01\ndt = 0.02",
            "[train]\nloss = \"l1\"",
        ] {
            let cfg: Result<ExperimentConfig, _> = toml::from_str(text);
            assert!(cfg.map_or(true, |c| c.validate().is_err()), "{text}");
        }
    }
}
