//! Experiment configuration files.
//!
//! One TOML file describes the reservoir, the input signal and the settings
//! of every analysis. Unknown keys are errors. Only the master seed and the
//! output directory can be overridden from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity::CapacityOptions;
use crate::error::{Error, Result};
use crate::reservoir::Activation;
use crate::rng::derive_seed;
use crate::signals::{SignalKind, SignalSpec};
use crate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

pub const SCHEMA_VERSION: u32 = 1;

// Stream indices under the master seed.
pub(crate) const SIGNAL_STREAM: u64 = 1_000;
pub(crate) const ESP_STREAM: u64 = 1_001;
pub(crate) const LYAPUNOV_STREAM: u64 = 1_002;
pub(crate) const FMP_STREAM: u64 = 1_003;
pub(crate) const SWEEP_STREAM: u64 = 1_004;
pub(crate) const APPROX_STREAM: u64 = 1_005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Excluded from the config hash so outputs do not depend on where they
    /// are written.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub reservoir: ReservoirSection,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub esp_test: EspSection,
    #[serde(default)]
    pub fmp_test: FmpSection,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub ipc: IpcSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub approx: ApproxSection,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSection {
    pub n: usize,
    pub activation: Activation,
    pub topology: TopologyKind,
    #[serde(default = "default_scale")]
    pub scale: ScaleTarget,
    #[serde(default = "one")]
    pub leak_rate: f64,
    #[serde(default = "one")]
    pub input_scaling: f64,
    #[serde(default)]
    pub bias_scaling: f64,
}

fn default_scale() -> ScaleTarget {
    ScaleTarget::SpectralRadius(0.9)
}

fn one() -> f64 {
    1.0
}

impl ReservoirSection {
    pub fn design(&self, seed: u64) -> ReservoirDesign {
        ReservoirDesign {
            topology: TopologySpec::new(self.topology, self.n, seed, self.scale),
            activation: self.activation,
            leak_rate: self.leak_rate,
            input_scaling: self.input_scaling,
            bias_scaling: self.bias_scaling,
            input_dim: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKindName {
    UniformIid,
    Constant,
    Impulse,
}

/// Flat form of a signal; only the keys belonging to `kind` may be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub kind: SignalKindName,
    pub length: usize,
    /// Defaults to a stream derived from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            kind: SignalKindName::UniformIid,
            length: 5_000,
            seed: None,
            lo: Some(-1.0),
            hi: Some(1.0),
            value: None,
            t0: None,
            amplitude: None,
        }
    }
}

impl SignalSection {
    pub fn spec(&self, master: u64) -> Result<SignalSpec> {
        let seed = self
            .seed
            .unwrap_or_else(|| derive_seed(master, SIGNAL_STREAM));
        let stray = |names: &[(&str, bool)]| -> Result<()> {
            match names.iter().find(|(_, set)| *set) {
                Some((name, _)) => Err(Error::Config(format!(
                    "signal key `{name}` does not apply to kind {:?}",
                    self.kind
                ))),
                None => Ok(()),
            }
        };
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("signal kind {:?} needs `{name}`", self.kind)))
        };
        let kind = match self.kind {
            SignalKindName::UniformIid => {
                stray(&[
                    ("value", self.value.is_some()),
                    ("t0", self.t0.is_some()),
                    ("amplitude", self.amplitude.is_some()),
                ])?;
                SignalKind::UniformIid {
                    lo: self.lo.unwrap_or(-1.0),
                    hi: self.hi.unwrap_or(1.0),
                }
            }
            SignalKindName::Constant => {
                stray(&[
                    ("lo", self.lo.is_some()),
                    ("hi", self.hi.is_some()),
                    ("t0", self.t0.is_some()),
                    ("amplitude", self.amplitude.is_some()),
                ])?;
                SignalKind::Constant {
                    value: need(self.value, "value")?,
                }
            }
            SignalKindName::Impulse => {
                stray(&[
                    ("lo", self.lo.is_some()),
                    ("hi", self.hi.is_some()),
                    ("value", self.value.is_some()),
                ])?;
                SignalKind::Impulse {
                    t0: self
                        .t0
                        .ok_or_else(|| Error::Config("signal kind Impulse needs `t0`".into()))?,
                    amplitude: need(self.amplitude, "amplitude")?,
                }
            }
        };
        let spec = SignalSpec {
            kind,
            length: self.length,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub washout: usize,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { washout: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EspSection {
    pub pairs: usize,
    pub horizon: usize,
    pub tol: f64,
}

impl Default for EspSection {
    fn default() -> Self {
        Self {
            pairs: 10,
            horizon: 2_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FmpSection {
    pub lambda: f64,
    pub horizon: usize,
    pub pairs: usize,
    pub ensemble_size: usize,
    pub init_box_radius: f64,
    pub tol: f64,
}

impl Default for FmpSection {
    fn default() -> Self {
        Self {
            lambda: 0.95,
            horizon: 200,
            pairs: 100,
            ensemble_size: 32,
            init_box_radius: 1.0,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitySection {
    pub washout: usize,
    /// Defaults to `2n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub train_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Default for CapacitySection {
    fn default() -> Self {
        let o = CapacityOptions::default();
        Self {
            washout: o.washout,
            tau_max: None,
            mu: o.mu,
            train_fraction: o.train_fraction,
            threshold: o.threshold,
        }
    }
}

impl CapacitySection {
    pub fn options(&self) -> CapacityOptions {
        CapacityOptions {
            washout: self.washout,
            mu: self.mu,
            train_fraction: self.train_fraction,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IpcSection {
    pub max_degree: usize,
    pub max_delay: usize,
    pub washout: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub train_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Default for IpcSection {
    fn default() -> Self {
        Self {
            max_degree: 3,
            max_delay: 10,
            washout: 500,
            mu: None,
            train_fraction: crate::capacity::DEFAULT_TRAIN_FRACTION,
            threshold: None,
        }
    }
}

impl IpcSection {
    pub fn options(&self) -> CapacityOptions {
        CapacityOptions {
            washout: self.washout,
            mu: self.mu,
            train_fraction: self.train_fraction,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    /// Defaults to `n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub reorth_interval: usize,
    pub washout: usize,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self {
            k: None,
            reorth_interval: 1,
            washout: 500,
        }
    }
}

/// Grid for `sweep`. Each point is run for `seeds` replicate reservoirs;
/// replicate `j` uses the same base matrix at every grid point so that a
/// column of the grid rescales one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub rho: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub leak: Vec<f64>,
    pub seeds: usize,
    /// Exponents per point; defaults to `min(n, 10)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_k: Option<usize>,
    pub lyapunov_washout: usize,
    pub capacity_washout: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            rho: vec![0.5, 0.9, 1.2],
            input_scale: vec![0.1, 0.5, 1.0],
            leak: vec![1.0],
            seeds: 2,
            lyapunov_k: None,
            lyapunov_washout: 500,
            capacity_washout: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxTask {
    Narma,
    Delay,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxSection {
    pub sizes: Vec<usize>,
    pub seeds: usize,
    pub tasks: Vec<ApproxTask>,
    pub narma_order: usize,
    pub delay: usize,
    pub product_delays: Vec<usize>,
    pub washout: usize,
    pub length: usize,
}

impl Default for ApproxSection {
    fn default() -> Self {
        Self {
            sizes: vec![25, 50, 100, 200],
            seeds: 5,
            tasks: vec![ApproxTask::Narma, ApproxTask::Product],
            narma_order: 10,
            delay: 5,
            product_delays: vec![1, 2],
            washout: 200,
            length: 6_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.signal.spec(cfg.seed)?;
        cfg.reservoir.design(cfg.seed).topology.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }

    /// Hex SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canon);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn signal_spec(&self) -> Result<SignalSpec> {
        self.signal.spec(self.seed)
    }

    pub fn design(&self) -> ReservoirDesign {
        self.reservoir.design(self.seed)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
