//! Experiment configuration: a single JSON document that pins everything a
//! run depends on — kernel, strengths, iteration knobs, measurement knobs —
//! so that identical configs reproduce identical output bytes.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use tmodes::{
    build_gaussian_jsf, build_nli_jsf, AttenuationPolicy, FeedbackMode, FrequencyGrid,
    GvdParameters, IterationConfig, JointSpectralKernel, NliSpec, PumpSpec,
};

use crate::CliError;

/// Schema tag every config must carry and every output directory records.
pub const SCHEMA_VERSION: &str = "tmodes-experiment/1";

/// Embedded ready-to-run configurations, addressable via `--preset`.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2_chirped_gaussian", include_str!("../presets/fig2_chirped_gaussian.json")),
    ("supp_nli_fiber", include_str!("../presets/supp_nli_fiber.json")),
    ("paper_gains_measurement", include_str!("../presets/paper_gains_measurement.json")),
];

/// Top-level config document. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: String,
    /// Kernel model and its parameters.
    pub kernel: KernelSection,
    /// Kernel strengths; more than one entry makes the run a sweep.
    pub strength_g: Vec<f64>,
    /// How many modes to extract / decompose / measure.
    pub mode_count: usize,
    /// Feedback-loop knobs (defaults when omitted).
    #[serde(default)]
    pub iteration: IterationSection,
    /// Homodyne measurement knobs; required by the measure stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
    /// Output directory; `--out` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// `{"model": "...", "params": {...}}` — params are validated against the
/// model-specific schema below.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub model: KernelModel,
    #[serde(default = "empty_params")]
    pub params: Value,
}

fn empty_params() -> Value {
    Value::Object(serde_json::Map::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelModel {
    Gaussian,
    Nli,
}

/// Two-Gaussian kernel: pump envelope + chirp × rotated phase-matching
/// Gaussian. Defaults reproduce the chirp-free preset geometry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianKernelCfg {
    pub center_detuning: f64,
    pub bandwidth_sigma_p: f64,
    pub chirp_coefficient: f64,
    pub correlation_angle_deg: f64,
    pub sigma_m: f64,
    pub grid_half_span: f64,
    pub grid_points: usize,
}

impl Default for GaussianKernelCfg {
    fn default() -> Self {
        GaussianKernelCfg {
            center_detuning: 0.0,
            bandwidth_sigma_p: 1.0,
            chirp_coefficient: 0.0,
            correlation_angle_deg: 45.0,
            sigma_m: 32.0f64.sqrt().recip(),
            grid_half_span: 8.0,
            grid_points: 257,
        }
    }
}

impl GaussianKernelCfg {
    pub fn build(&self, strength_g: f64) -> tmodes::Result<JointSpectralKernel<f64>> {
        let pump = PumpSpec::new(
            self.center_detuning,
            self.bandwidth_sigma_p,
            self.chirp_coefficient,
        );
        let grid = FrequencyGrid::symmetric(self.grid_half_span, self.grid_points)?;
        build_gaussian_jsf(
            &pump,
            self.correlation_angle_deg.to_radians(),
            self.sigma_m,
            strength_g,
            grid,
            grid,
        )
    }
}

/// Two-stage fiber kernel with a dispersive spacer. Defaults reproduce the
/// bundled fiber preset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NliKernelCfg {
    pub center_detuning: f64,
    pub bandwidth_sigma_p: f64,
    pub chirp_coefficient: f64,
    pub dsf_length: f64,
    pub smf_length: f64,
    pub beta2_dsf: f64,
    pub beta3_dsf: f64,
    pub beta2_smf: f64,
    /// Signal band sits at `+band_center`, idler at `−band_center`.
    pub band_center: f64,
    pub grid_half_span: f64,
    pub grid_points: usize,
    /// Inner edge of the WDM pass bands, measured from `band_center`.
    pub cwdm_cut: f64,
}

impl Default for NliKernelCfg {
    fn default() -> Self {
        NliKernelCfg {
            center_detuning: 0.0,
            bandwidth_sigma_p: 1.0,
            chirp_coefficient: 0.0,
            dsf_length: 150.0,
            smf_length: 3.4,
            beta2_dsf: -6.82309e-7,
            beta3_dsf: 9.89427e-8,
            beta2_smf: -1.886113e-4,
            band_center: 155.92,
            grid_half_span: 8.0,
            grid_points: 257,
            cwdm_cut: 1.3,
        }
    }
}

impl NliKernelCfg {
    pub fn build(&self, strength_g: f64) -> tmodes::Result<JointSpectralKernel<f64>> {
        let pump = PumpSpec::new(
            self.center_detuning,
            self.bandwidth_sigma_p,
            self.chirp_coefficient,
        );
        let nli = NliSpec {
            dsf_length: self.dsf_length,
            smf_length: self.smf_length,
            gvd_parameters: GvdParameters {
                beta2_dsf: self.beta2_dsf,
                beta3_dsf: self.beta3_dsf,
                beta2_smf: self.beta2_smf,
            },
        };
        let signal_grid = FrequencyGrid::new(
            self.band_center - self.grid_half_span,
            self.band_center + self.grid_half_span,
            self.grid_points,
        )?;
        let idler_grid = FrequencyGrid::new(
            -self.band_center - self.grid_half_span,
            -self.band_center + self.grid_half_span,
            self.grid_points,
        )?;
        build_nli_jsf(&pump, &nli, strength_g, signal_grid, idler_grid)
    }

    pub fn cwdm_signal_band(&self) -> (f64, f64) {
        (self.band_center + self.cwdm_cut, self.band_center + self.grid_half_span)
    }

    pub fn cwdm_idler_band(&self) -> (f64, f64) {
        (-self.band_center - self.grid_half_span, -self.band_center - self.cwdm_cut)
    }
}

/// Parsed kernel params.
#[derive(Debug, Clone, Copy)]
pub enum KernelChoice {
    Gaussian(GaussianKernelCfg),
    Nli(NliKernelCfg),
}

impl KernelChoice {
    pub fn build(&self, strength_g: f64) -> tmodes::Result<JointSpectralKernel<f64>> {
        match self {
            KernelChoice::Gaussian(cfg) => cfg.build(strength_g),
            KernelChoice::Nli(cfg) => cfg.build(strength_g),
        }
    }
}

/// Feedback-loop section, mirroring [`IterationConfig`] field for field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationSection {
    pub max_iterations: usize,
    pub convergence_overlap: f64,
    pub feedback_mode: FeedbackMode,
    pub zero_detection_threshold: f64,
    pub attenuation_policy: AttenuationPolicy,
}

impl Default for IterationSection {
    fn default() -> Self {
        let lib = IterationConfig::<f64>::default();
        IterationSection {
            max_iterations: lib.max_iterations,
            convergence_overlap: lib.convergence_overlap,
            feedback_mode: lib.feedback_mode,
            zero_detection_threshold: lib.zero_detection_threshold,
            attenuation_policy: lib.attenuation_policy,
        }
    }
}

impl IterationSection {
    pub fn to_config(self) -> IterationConfig<f64> {
        IterationConfig {
            max_iterations: self.max_iterations,
            convergence_overlap: self.convergence_overlap,
            feedback_mode: self.feedback_mode,
            zero_detection_threshold: self.zero_detection_threshold,
            attenuation_policy: self.attenuation_policy,
        }
    }
}

/// Homodyne measurement section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    /// Per-mode power gains; omitted means "take them from the kernel".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_gains: Option<Vec<f64>>,
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    /// Per-mode LO overlaps; omitted means perfect matching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_overlap: Option<Vec<f64>>,
    /// Monte Carlo sample count.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Monte Carlo seed (sweep point index is added on top).
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
}

fn default_samples() -> usize {
    300_000
}

fn default_rng_seed() -> u64 {
    1
}

/// Fully validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub kernel_model: KernelModel,
    pub kernel: KernelChoice,
    pub strength_g: Vec<f64>,
    pub mode_count: usize,
    pub iteration: IterationSection,
    pub measurement: Option<MeasurementSection>,
    pub output_dir: Option<String>,
}

impl ResolvedConfig {
    /// The config document with every default materialized, as written to
    /// `resolved_config.json`.
    pub fn to_document(&self, strength_override: Option<&[f64]>) -> ExperimentConfig {
        let params = match self.kernel {
            KernelChoice::Gaussian(cfg) => {
                serde_json::to_value(cfg).expect("kernel cfg serializes")
            }
            KernelChoice::Nli(cfg) => serde_json::to_value(cfg).expect("kernel cfg serializes"),
        };
        ExperimentConfig {
            schema_version: SCHEMA_VERSION.to_string(),
            kernel: KernelSection { model: self.kernel_model, params },
            strength_g: strength_override.unwrap_or(&self.strength_g).to_vec(),
            mode_count: self.mode_count,
            iteration: self.iteration,
            measurement: self.measurement.clone(),
            output_dir: self.output_dir.clone(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parse and validate a config document.
pub fn parse_config(text: &str, origin: &str) -> Result<ResolvedConfig, CliError> {
    let raw: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| config_err(format!("{origin}: {e}")))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(config_err(format!(
            "{origin}: schema_version {:?} not supported (expected {SCHEMA_VERSION:?})",
            raw.schema_version
        )));
    }
    let kernel = match raw.kernel.model {
        KernelModel::Gaussian => {
            let cfg: GaussianKernelCfg = serde_json::from_value(raw.kernel.params.clone())
                .map_err(|e| config_err(format!("{origin}: kernel.params: {e}")))?;
            KernelChoice::Gaussian(cfg)
        }
        KernelModel::Nli => {
            let cfg: NliKernelCfg = serde_json::from_value(raw.kernel.params.clone())
                .map_err(|e| config_err(format!("{origin}: kernel.params: {e}")))?;
            KernelChoice::Nli(cfg)
        }
    };
    if raw.strength_g.is_empty() {
        return Err(config_err(format!("{origin}: strength_g must list at least one value")));
    }
    if raw.strength_g.iter().any(|g| !g.is_finite() || *g <= 0.0) {
        return Err(config_err(format!("{origin}: strength_g entries must be finite and > 0")));
    }
    if raw.mode_count == 0 {
        return Err(config_err(format!("{origin}: mode_count must be at least 1")));
    }
    raw.iteration
        .to_config()
        .validate()
        .map_err(|e| config_err(format!("{origin}: iteration: {e}")))?;
    if let Some(m) = &raw.measurement {
        if m.samples < 100 {
            return Err(config_err(format!("{origin}: measurement.samples must be ≥ 100")));
        }
        if !(0.0..=1.0).contains(&m.efficiency_signal)
            || !(0.0..=1.0).contains(&m.efficiency_idler)
        {
            return Err(config_err(format!("{origin}: efficiencies must lie in [0, 1]")));
        }
        if let Some(gains) = &m.power_gains {
            if gains.is_empty() {
                return Err(config_err(format!("{origin}: measurement.power_gains is empty")));
            }
            if gains.iter().any(|g| !g.is_finite() || *g < 1.0) {
                return Err(config_err(format!(
                    "{origin}: measurement.power_gains must be finite and ≥ 1"
                )));
            }
        }
        if let Some(lo) = &m.lo_overlap {
            if lo.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(config_err(format!(
                    "{origin}: measurement.lo_overlap entries must lie in [0, 1]"
                )));
            }
        }
    }
    Ok(ResolvedConfig {
        kernel_model: raw.kernel.model,
        kernel,
        strength_g: raw.strength_g,
        mode_count: raw.mode_count,
        iteration: raw.iteration,
        measurement: raw.measurement,
        output_dir: raw.output_dir,
    })
}

/// Look up an embedded preset by name.
pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            config_err(format!("unknown preset {name:?}; available: {}", names.join(", ")))
        })
}
