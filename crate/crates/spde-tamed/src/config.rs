//! Experiment configuration: strict JSON/TOML parsing, canonical defaults,
//! and builders turning a config into runtime objects.
//!
//! Parsing rejects unknown keys so no option is ever silently ignored. Every
//! field except the model kind and the seed has a default; `resolved` fills
//! all defaults in, and serializing a resolved config yields a canonical
//! form that parses back to itself. Seeds come only from the config or the
//! command line, never from entropy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{BoundParams, InitialCondition};
use crate::models::{DiffusionKind, DiscreteModel, ModelSpec};
use crate::noise::CovarianceSpec;
use crate::spectral::{BasisId, Modes, ModelKind, SpectralBasis};
use crate::timegrid::Partition;
use crate::verify::VerifyOptions;

/// Complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default = "ModeSetConfig::default_spatial")]
    pub modes: ModeSetConfig,
    #[serde(default)]
    pub noise_modes: ModeSetConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default = "default_batches")]
    pub batches: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<f64>,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub covariance: CovarianceConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionConfig {
    #[default]
    AdditiveIdentity,
    AdditiveMatrix { matrix: [[f64; 2]; 2] },
    NemytskiiRational { amp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceConfig {
    /// q_i = scale * (i+1)^{-rate} along the canonical noise-mode order.
    Polynomial {
        #[serde(default = "default_cov_scale")]
        scale: f64,
        #[serde(default = "default_cov_rate")]
        rate: f64,
        #[serde(default)]
        tail: f64,
    },
    /// One eigenvalue per noise mode, canonical order.
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        tail: f64,
    },
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig::Polynomial {
            scale: default_cov_scale(),
            rate: default_cov_rate(),
            tail: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub steps: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            horizon: default_horizon(),
            steps: default_steps(),
        }
    }
}

/// A mode set: either a frequency cutoff or an explicit sorted list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<ModeListConfig>,
}

impl ModeSetConfig {
    fn default_spatial() -> Self {
        ModeSetConfig {
            cutoff: Some(default_cutoff()),
            list: None,
        }
    }
}

/// Scalar indices for 1d bases, [k, l, component] triples for 2d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeListConfig {
    Scalars(Vec<i64>),
    Triples(Vec<[i64; 3]>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Zero,
    /// Coefficients in the canonical order of the spatial mode set.
    Deterministic { coefficients: Vec<f64> },
    /// Independent centered Gaussian coefficients with these variances.
    Gaussian { variances: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Mesh widths, strictly descending; empty means the partition's mesh.
    #[serde(default)]
    pub meshes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_verify_states")]
    pub states: u64,
    #[serde(default = "default_verify_trials")]
    pub trials: u64,
    #[serde(default = "default_verify_taming_states")]
    pub taming_states: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            states: default_verify_states(),
            trials: default_verify_trials(),
            taming_states: default_verify_taming_states(),
        }
    }
}

fn default_epsilon() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    1.0 / 36.0
}
fn default_cov_scale() -> f64 {
    0.5
}
fn default_cov_rate() -> f64 {
    2.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_steps() -> u64 {
    64
}
fn default_cutoff() -> u32 {
    16
}
fn default_paths() -> u64 {
    1000
}
fn default_batches() -> u64 {
    20
}
fn default_out_dir() -> String {
    "out".to_string()
}
fn default_verify_states() -> u64 {
    200
}
fn default_verify_trials() -> u64 {
    500
}
fn default_verify_taming_states() -> u64 {
    100
}

fn default_gamma(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Burgers => 0.5,
        ModelKind::KuramotoSivashinsky => 0.25,
        ModelKind::NavierStokes2d => 0.75,
    }
}

fn default_eta(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Burgers => 0.0,
        _ => 1.0,
    }
}

impl Config {
    /// Parses a config document; `toml` selects the TOML front-end.
    pub fn parse_str(text: &str, toml: bool) -> Result<Config> {
        if toml {
            ::toml::from_str(text).map_err(|e| Error::config(format!("TOML config: {e}")))
        } else {
            serde_json::from_str(text).map_err(|e| Error::config(format!("JSON config: {e}")))
        }
    }

    /// Loads a config file, dispatching on the `.json` / `.toml` extension.
    pub fn load(path: &Path) -> Result<Config> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let toml = match ext.as_str() {
            "json" => false,
            "toml" => true,
            other => {
                return Err(Error::config(format!(
                    "config file must end in .json or .toml, got {other:?}"
                )))
            }
        };
        let text = std::fs::read_to_string(path)?;
        Config::parse_str(&text, toml)
    }

    /// Returns a copy with every optional field resolved to its default,
    /// so that serialization yields the canonical form.
    pub fn resolved(&self) -> Result<Config> {
        let mut cfg = self.clone();
        let kind = cfg.model.kind;
        cfg.model.gamma.get_or_insert(default_gamma(kind));
        cfg.model.eta.get_or_insert(default_eta(kind));
        cfg.model.varsigma.get_or_insert(cfg.model.delta);
        if cfg.modes.cutoff.is_none() && cfg.modes.list.is_none() {
            cfg.modes = ModeSetConfig::default_spatial();
        }
        if cfg.noise_modes.cutoff.is_none() && cfg.noise_modes.list.is_none() {
            cfg.noise_modes = cfg.modes.clone();
        }
        if cfg.model.c.is_none() {
            let spec = cfg.build_model_spec()?;
            cfg.model.c = Some(spec.c());
        }
        Ok(cfg)
    }

    /// Canonical JSON form (pretty, stable field order, trailing newline).
    pub fn to_canonical_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::config(format!("serializing config: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        let eta = self.model.eta.unwrap_or(default_eta(self.model.kind));
        SpectralBasis::new(self.model.kind, eta)
    }

    fn build_mode_set(&self, which: &ModeSetConfig, field: &str) -> Result<Modes> {
        let basis = self.basis()?;
        match (&which.cutoff, &which.list) {
            (Some(_), Some(_)) => Err(Error::config(format!(
                "{field}: cutoff and list are mutually exclusive"
            ))),
            (Some(n), None) => basis.modes_up_to(*n),
            (None, Some(list)) => {
                let ids = mode_ids_from_list(self.model.kind, list, field)?;
                Modes::new(basis, ids)
            }
            (None, None) => basis.modes_up_to(default_cutoff()),
        }
    }

    pub fn spatial_modes(&self) -> Result<Modes> {
        self.build_mode_set(&self.modes, "modes")
    }

    pub fn noise_mode_set(&self) -> Result<Modes> {
        if self.noise_modes.cutoff.is_none() && self.noise_modes.list.is_none() {
            self.spatial_modes()
        } else {
            self.build_mode_set(&self.noise_modes, "noise_modes")
        }
    }

    fn build_covariance(&self) -> Result<CovarianceSpec> {
        let noise = self.noise_mode_set()?;
        let (values, tail) = match &self.model.covariance {
            CovarianceConfig::Polynomial { scale, rate, tail } => {
                if !(*scale >= 0.0) || !rate.is_finite() {
                    return Err(Error::config(
                        "model.covariance: scale must be >= 0 and rate finite",
                    ));
                }
                let q = (0..noise.len())
                    .map(|i| scale * ((i + 1) as f64).powf(-rate))
                    .collect();
                (q, *tail)
            }
            CovarianceConfig::Explicit { values, tail } => {
                if values.len() != noise.len() {
                    return Err(Error::config(format!(
                        "model.covariance: {} values for {} noise modes",
                        values.len(),
                        noise.len()
                    )));
                }
                (values.clone(), *tail)
            }
        };
        CovarianceSpec::new(noise, values, tail)
    }

    fn build_diffusion(&self) -> DiffusionKind {
        match &self.model.diffusion {
            DiffusionConfig::AdditiveIdentity => DiffusionKind::AdditiveIdentity,
            DiffusionConfig::AdditiveMatrix { matrix } => {
                DiffusionKind::AdditiveMatrix { matrix: *matrix }
            }
            DiffusionConfig::NemytskiiRational { amp } => {
                DiffusionKind::NemytskiiRational { amp: *amp }
            }
        }
    }

    pub fn build_model_spec(&self) -> Result<ModelSpec> {
        let kind = self.model.kind;
        ModelSpec::new(
            kind,
            self.model.gamma.unwrap_or(default_gamma(kind)),
            self.model.eta.unwrap_or(default_eta(kind)),
            self.model.epsilon,
            self.model.delta,
            self.model.c,
            self.build_diffusion(),
            self.build_covariance()?,
        )
    }

    pub fn build_discrete_model(&self) -> Result<DiscreteModel> {
        DiscreteModel::new(self.build_model_spec()?, self.spatial_modes()?)
    }

    pub fn build_partition(&self) -> Result<Partition> {
        if self.partition.steps == 0 || self.partition.steps > u32::MAX as u64 {
            return Err(Error::config("partition.steps: must be in 1..=2^32-1"));
        }
        Partition::uniform(self.partition.horizon, self.partition.steps as u32)
    }

    pub fn build_initial(&self, dm: &DiscreteModel) -> Result<InitialCondition> {
        let modes = dm.modes().clone();
        match &self.initial {
            InitialConfig::Zero => Ok(InitialCondition::Deterministic(dm.zero_state())),
            InitialConfig::Deterministic { coefficients } => {
                if coefficients.len() != modes.len() {
                    return Err(Error::config(format!(
                        "initial.coefficients: {} values for {} modes",
                        coefficients.len(),
                        modes.len()
                    )));
                }
                Ok(InitialCondition::Deterministic(
                    crate::spectral::GalerkinState::from_coeffs(modes, coefficients.clone())?,
                ))
            }
            InitialConfig::Gaussian { variances } => {
                if variances.len() != modes.len() {
                    return Err(Error::config(format!(
                        "initial.variances: {} values for {} modes",
                        variances.len(),
                        modes.len()
                    )));
                }
                if variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::config(
                        "initial.variances: entries must be finite and >= 0",
                    ));
                }
                let sigmas = variances.iter().map(|v| v.sqrt()).collect();
                InitialCondition::gaussian(modes, sigmas)
            }
        }
    }

    pub fn build_bound_params(&self) -> Result<BoundParams> {
        let spec = self.build_model_spec()?;
        let mut params = BoundParams::from_model(&spec, self.partition.horizon);
        if let Some(vs) = self.model.varsigma {
            params.varsigma = vs;
        }
        Ok(params)
    }

    /// Sweep meshes, descending; defaults to the partition's own mesh.
    pub fn sweep_meshes(&self) -> Result<Vec<f64>> {
        if self.sweep.meshes.is_empty() {
            return Ok(vec![self.build_partition()?.mesh()]);
        }
        let meshes = self.sweep.meshes.clone();
        for pair in meshes.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(Error::config("sweep.meshes: must be strictly descending"));
            }
        }
        if meshes.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::config("sweep.meshes: entries must be finite and > 0"));
        }
        Ok(meshes)
    }

    /// A uniform partition of the configured horizon with mesh <= `mesh`.
    pub fn partition_for_mesh(&self, mesh: f64) -> Result<Partition> {
        let t = self.partition.horizon;
        if !(mesh > 0.0) || !mesh.is_finite() {
            return Err(Error::config("mesh: must be finite and > 0"));
        }
        let steps = (t / mesh).ceil().max(1.0);
        if steps > 1e9 {
            return Err(Error::config(format!("mesh {mesh}: over 1e9 steps")));
        }
        Partition::uniform(t, steps as u32)
    }

    pub fn verify_options(&self, seed: u64) -> VerifyOptions {
        VerifyOptions {
            states: self.verify.states as usize,
            trials: self.verify.trials as usize,
            taming_states: self.verify.taming_states as usize,
            seed,
        }
    }
}

fn mode_ids_from_list(
    kind: ModelKind,
    list: &ModeListConfig,
    field: &str,
) -> Result<Vec<BasisId>> {
    match (kind, list) {
        (ModelKind::Burgers, ModeListConfig::Scalars(ns)) => ns
            .iter()
            .map(|&n| {
                if n < 1 || n > u32::MAX as i64 {
                    Err(Error::config(format!("{field}: sine index {n} out of range")))
                } else {
                    Ok(BasisId::Sine { n: n as u32 })
                }
            })
            .collect(),
        (ModelKind::KuramotoSivashinsky, ModeListConfig::Scalars(ks)) => ks
            .iter()
            .map(|&k| {
                if k < i32::MIN as i64 || k > i32::MAX as i64 {
                    Err(Error::config(format!(
                        "{field}: frequency {k} out of range"
                    )))
                } else {
                    Ok(BasisId::Fourier { k: k as i32 })
                }
            })
            .collect(),
        (ModelKind::NavierStokes2d, ModeListConfig::Triples(kls)) => kls
            .iter()
            .map(|&[k, l, sigma]| {
                let in_range = |v: i64| v >= i32::MIN as i64 && v <= i32::MAX as i64;
                if !in_range(k) || !in_range(l) || !(0..=1).contains(&sigma) {
                    Err(Error::config(format!(
                        "{field}: invalid mode triple [{k}, {l}, {sigma}]"
                    )))
                } else {
                    Ok(BasisId::Mode2d {
                        k: k as i32,
                        l: l as i32,
                        sigma: sigma as u8,
                    })
                }
            })
            .collect(),
        (ModelKind::NavierStokes2d, ModeListConfig::Scalars(_)) => Err(Error::config(format!(
            "{field}: this model needs [k, l, component] triples"
        ))),
        (_, ModeListConfig::Triples(_)) => Err(Error::config(format!(
            "{field}: this model needs scalar mode indices"
        ))),
    }
}
