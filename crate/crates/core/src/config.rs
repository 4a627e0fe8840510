//! Experiment configuration file and seed derivation.
//!
//! The file is TOML; every section and key is optional and falls back to
//! the reference setup (Table-style vehicle parameters, class-D road at
//! 20 m/s, 0.02 m step at 2 s). Run `quartercar default-config` for the
//! complete document.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{PIGains, TuneConfig};
use crate::error::{Error, Result};
use crate::metrics::CostWeights;
use crate::model::SuspensionParams;
use crate::optimizer::{ESConfig, ParamBounds};
use crate::road::{
    generate_random_road, generate_step_road, IsoRoadClass, RandomRoadSpec, RoadTrace, StepRoadSpec,
};
use crate::simulate::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadKind {
    Random,
    Step,
}

impl std::fmt::Display for RoadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoadKind::Random => "random",
            RoadKind::Step => "step",
        })
    }
}

impl FromStr for RoadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(RoadKind::Random),
            "step" => Ok(RoadKind::Step),
            other => Err(Error::invalid("road", format!("expected `random` or `step`, got {other:?}"))),
        }
    }
}

/// Random road options; the seed is derived from the master seed and the
/// sample interval is the simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomRoadSection {
    /// ISO class label A–H.
    pub class: String,
    /// Overrides the class PSD level [m³].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gq_n0: Option<f64>,
    pub v: f64,
    pub n0: f64,
    pub f0: f64,
    pub waviness: f64,
}

impl Default for RandomRoadSection {
    fn default() -> Self {
        let d = RandomRoadSpec::default();
        Self {
            class: d.class.to_string(),
            gq_n0: d.gq_n0,
            v: d.v,
            n0: d.n0,
            f0: d.f0,
            waviness: d.waviness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    /// Horizon for random-road runs [s].
    pub random_duration: f64,
    /// Horizon for step runs [s].
    pub step_duration: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { dt: 1e-3, random_duration: 100.0, step_duration: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsSection {
    pub mu: usize,
    pub lambda: usize,
    pub iterations: usize,
    pub sigma0: f64,
}

impl Default for EsSection {
    fn default() -> Self {
        let d = ESConfig::default();
        Self { mu: d.mu, lambda: d.lambda, iterations: d.iterations, sigma0: d.sigma0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Run the optimizer inside `compare`; otherwise read the `optimize` result.
    pub inline_optimize: bool,
    /// Run the gain search inside `compare`; otherwise read the `tune` result.
    pub inline_tune: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { inline_optimize: true, inline_tune: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stochastic stage derives its own seed from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub road: RoadKind,
    pub params: SuspensionParams,
    pub random_road: RandomRoadSection,
    pub step_road: StepRoadSpec,
    pub sim: SimSection,
    pub weights: CostWeights,
    pub bounds: ParamBounds,
    pub es: EsSection,
    pub tune: TuneConfig,
    /// Gains for `simulate --model active`. Unset means 1904 (random) or
    /// 800 (step) integral gain with no proportional action.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<PIGains>,
    pub compare: CompareSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2019,
            out_dir: PathBuf::from("out"),
            road: RoadKind::Random,
            params: SuspensionParams::default(),
            random_road: RandomRoadSection::default(),
            step_road: StepRoadSpec::default(),
            sim: SimSection::default(),
            weights: CostWeights::default(),
            bounds: ParamBounds::default(),
            es: EsSection::default(),
            tune: TuneConfig::default(),
            gains: None,
            compare: CompareSection::default(),
        }
    }
}

/// Derives an independent 64-bit seed for a named stage.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    /// Short digest of the effective configuration.
    /// Short digest of the experiment settings. The output directory is
    /// left out so relocated runs carry the same provenance.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.random_spec()?.validate()?;
        let step = &self.step_road;
        if !(step.t_start >= 0.0 && step.t_start.is_finite() && step.height.is_finite()) {
            return Err(Error::invalid("step_road", "need finite height and t_start >= 0"));
        }
        if !(step.t_start < self.sim.step_duration) {
            return Err(Error::invalid("sim.step_duration", "must exceed step_road.t_start"));
        }
        self.sim_config(RoadKind::Random).samples()?;
        self.sim_config(RoadKind::Step).samples()?;
        self.weights.validate()?;
        for b in self.bounds.as_box() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
                return Err(Error::invalid("bounds", "each interval needs lower < upper"));
            }
            if b.lower <= 0.0 {
                return Err(Error::invalid("bounds", "suspension elements must stay positive"));
            }
        }
        self.es_config().validate()?;
        self.tune.validate()?;
        if let Some(g) = &self.gains {
            g.validate_for(&self.params)?;
        }
        Ok(())
    }

    pub fn road_class(&self) -> Result<IsoRoadClass> {
        self.random_road.class.parse()
    }

    pub fn random_spec(&self) -> Result<RandomRoadSpec> {
        let r = &self.random_road;
        Ok(RandomRoadSpec {
            class: self.road_class()?,
            gq_n0: r.gq_n0,
            v: r.v,
            n0: r.n0,
            f0: r.f0,
            waviness: r.waviness,
            seed: derive_seed(self.seed, "road"),
            dt: self.sim.dt,
        })
    }

    pub fn sim_config(&self, kind: RoadKind) -> SimConfig {
        let duration = match kind {
            RoadKind::Random => self.sim.random_duration,
            RoadKind::Step => self.sim.step_duration,
        };
        SimConfig { dt: self.sim.dt, duration }
    }

    pub fn es_config(&self) -> ESConfig {
        ESConfig {
            mu: self.es.mu,
            lambda: self.es.lambda,
            iterations: self.es.iterations,
            sigma0: self.es.sigma0,
            seed: derive_seed(self.seed, "optimize"),
        }
    }

    /// The road realization shared by every stage of this configuration.
    pub fn road_trace(&self) -> Result<RoadTrace> {
        let sim = self.sim_config(self.road);
        match self.road {
            RoadKind::Random => generate_random_road(&self.random_spec()?, sim.duration),
            RoadKind::Step => generate_step_road(&self.step_road, sim.duration, sim.dt),
        }
    }

    pub fn active_gains(&self) -> PIGains {
        self.gains.unwrap_or(match self.road {
            RoadKind::Random => PIGains::new(0.0, 1904.0),
            RoadKind::Step => PIGains::new(0.0, 800.0),
        })
    }
}
