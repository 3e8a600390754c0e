//! JSON run configuration: strict parsing, validation with key paths, and
//! the one-time Hz -> rad/s unit conversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hz_to_rad, DisorderKind, DisorderSpec, ModelParams};
use crate::ode::{IntegratorConfig, Method};
use crate::threelevel::ThreeLevelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Meanfield2,
    MeanfieldAdiabatic,
    Meanfield3,
    Cumulant,
    ReducedWxyz,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Meanfield2 => "meanfield2",
            ModelKind::MeanfieldAdiabatic => "meanfield_adiabatic",
            ModelKind::Meanfield3 => "meanfield3",
            ModelKind::Cumulant => "cumulant",
            ModelKind::ReducedWxyz => "reduced_wxyz",
        }
    }
}

/// On-disk config; every frequency-like key carries an `_hz` suffix and every
/// time-like key an `_s` suffix, other quantities are dimensionless. Unknown
/// keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelKind,
    pub params: ParamsHz,
    #[serde(default)]
    pub three_level: Option<ThreeLevelHz>,
    pub disorder: DisorderHz,
    #[serde(default)]
    pub integrator: IntegratorHz,
    #[serde(default)]
    pub initial: InitialHz,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Grid for the `phase-diagram` command; the reduced-model rates are
    /// derived from `params` (`gamma_s = kappa_s/2`, `gamma_+- = D +-
    /// gamma_1`).
    #[serde(default)]
    pub phase_diagram: Option<PhaseDiagramBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramBlock {
    pub g_norm_min: f64,
    pub g_norm_max: f64,
    pub g_norm_count: usize,
    pub disorder_min: f64,
    pub disorder_max: f64,
    pub disorder_count: usize,
    /// Fold the `sqrt(gamma_-/gamma_+)` population factor into the coupling
    /// axis (off by default, matching the usual presentation).
    #[serde(default)]
    pub include_relaxation_factor: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsHz {
    #[serde(default)]
    pub cavity_freq_hz: f64,
    pub kappa_hz: f64,
    pub g_hz: f64,
    #[serde(default)]
    pub gamma_hz: f64,
    #[serde(default)]
    pub gamma1_hz: f64,
    #[serde(default)]
    pub pump_hz: f64,
    pub ensemble_size: f64,
    #[serde(default)]
    pub thermal_photons: f64,
    #[serde(default)]
    pub ensemble_detuning_hz: f64,
    pub inhomogeneous_fwhm_hz: f64,
    #[serde(default)]
    pub spin_center_freq_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeLevelHz {
    pub kappa_optical_hz: f64,
    pub g_optical_hz: f64,
    pub gamma_optical_hz: f64,
    pub gamma_spin_hz: f64,
    pub gamma1_hz: f64,
    pub pump_rabi_hz: f64,
    #[serde(default)]
    pub cavity_drive_hz: f64,
    #[serde(default)]
    pub pump_detuning_hz: f64,
    #[serde(default)]
    pub optical_cavity_detuning_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum DisorderHz {
    Gaussian {
        /// Overrides `params.inhomogeneous_fwhm_hz` when present.
        #[serde(default)]
        fwhm_hz: Option<f64>,
        bins: usize,
        #[serde(default)]
        seed: u64,
    },
    TwoDelta {
        delta_hz: f64,
        #[serde(default)]
        seed: u64,
    },
    Table {
        /// `(detuning_hz, weight)` pairs.
        entries: Vec<(f64, f64)>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorHz {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step_s: f64,
    #[serde(default = "default_fixed_step")]
    pub fixed_step_s: f64,
    #[serde(default)]
    pub t_start_s: f64,
    #[serde(default = "default_t_end")]
    pub t_end_s: f64,
    #[serde(default = "default_output_dt")]
    pub output_dt_s: f64,
}

fn default_method() -> Method {
    Method::AdaptiveRk45
}
fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_max_step() -> f64 {
    5e-8
}
fn default_fixed_step() -> f64 {
    1e-9
}
fn default_t_end() -> f64 {
    1e-3
}
fn default_output_dt() -> f64 {
    1e-8
}

impl Default for IntegratorHz {
    fn default() -> Self {
        IntegratorHz {
            method: default_method(),
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_step_s: default_max_step(),
            fixed_step_s: default_fixed_step(),
            t_start_s: 0.0,
            t_end_s: default_t_end(),
            output_dt_s: default_output_dt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Ground state with a uniform coherence seed (mean-field) or zero
    /// correlations (cumulant).
    Ground,
    /// Fully inverted with the coherence seed.
    Inverted,
    /// Bloch vector tipped by `tip_angle_rad`.
    Tipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialHz {
    #[serde(default = "default_initial_kind")]
    pub kind: InitialKind,
    #[serde(default = "default_tip_angle")]
    pub tip_angle_rad: f64,
    /// Deterministic per-spin coherence seed for the mean-field models.
    #[serde(default = "default_seed_coherence")]
    pub seed_coherence: f64,
    /// Optional seeded random kicks for onset-phase studies.
    #[serde(default)]
    pub kick: Option<KickHz>,
}

fn default_initial_kind() -> InitialKind {
    InitialKind::Ground
}
fn default_tip_angle() -> f64 {
    0.1
}
fn default_seed_coherence() -> f64 {
    1e-3
}

impl Default for InitialHz {
    fn default() -> Self {
        InitialHz {
            kind: default_initial_kind(),
            tip_angle_rad: default_tip_angle(),
            seed_coherence: default_seed_coherence(),
            kick: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickHz {
    pub amplitude: f64,
    /// Mean interval of the Poisson kick train (s); zero or absent means a
    /// single kick at t = 0.
    #[serde(default)]
    pub mean_interval_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    #[serde(default = "default_true")]
    pub detect_bursts: bool,
    #[serde(default = "default_threshold_factor")]
    pub threshold_factor: f64,
    /// Use a fraction of the settled-window peak instead of a median
    /// multiple (robust against afterpulse ringing).
    #[serde(default)]
    pub threshold_peak_fraction: Option<f64>,
    #[serde(default = "default_true")]
    pub psd: bool,
    #[serde(default = "default_window_start")]
    pub window_start_fraction: f64,
    #[serde(default = "default_exclusion_bins")]
    pub sideband_exclusion_bins: usize,
    #[serde(default)]
    pub decomposition: bool,
    #[serde(default)]
    pub store_amplitude: bool,
}

fn default_true() -> bool {
    true
}
fn default_threshold_factor() -> f64 {
    3.0
}
fn default_window_start() -> f64 {
    0.2
}
fn default_exclusion_bins() -> usize {
    crate::analysis::SIDEBAND_EXCLUSION_BINS
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            detect_bursts: true,
            threshold_factor: default_threshold_factor(),
            threshold_peak_fraction: None,
            psd: true,
            window_start_fraction: default_window_start(),
            sideband_exclusion_bins: default_exclusion_bins(),
            decomposition: false,
            store_amplitude: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Dotted path of the swept parameter, e.g. `params.ensemble_size`.
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

/// Parameter paths a sweep may address.
pub const SWEEP_AXES: &[&str] = &[
    "params.ensemble_size",
    "params.pump_hz",
    "params.g_hz",
    "params.thermal_photons",
    "params.ensemble_detuning_hz",
    "disorder.fwhm_hz",
    "initial.tip_angle_rad",
    "three_level.pump_rabi_hz",
    "three_level.pump_detuning_hz",
];

/// Fully resolved run configuration in internal (rad/s) units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub params: ModelParams,
    pub three_level: Option<ThreeLevelParams>,
    pub disorder: DisorderSpec,
    pub bins: usize,
    pub integrator: IntegratorConfig,
    pub initial: InitialHz,
    pub analysis: AnalysisOptions,
    pub sweep: Option<SweepBlock>,
    pub output_dir: Option<String>,
    pub rng_seed: u64,
    /// The raw (Hz-space) file this run was resolved from; content-hashed
    /// for the output directory name.
    pub source: ConfigFile,
}

fn ensure_nonneg(path: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) {
        return Err(Error::config(path, format!("must be non-negative, got {v}")));
    }
    Ok(())
}

/// Parse and validate a JSON config document (strict: unknown keys are
/// rejected with the offending key named by serde).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile = serde_json::from_str(text)
        .map_err(|e| Error::config("<config>", e.to_string()))?;
    resolve_config(file)
}

/// Validate and unit-convert an already-deserialized config.
pub fn resolve_config(file: ConfigFile) -> Result<RunConfig> {
    let p = &file.params;
    if !(p.kappa_hz > 0.0) {
        return Err(Error::config("params.kappa_hz", format!("must be positive, got {}", p.kappa_hz)));
    }
    ensure_nonneg("params.g_hz", p.g_hz)?;
    ensure_nonneg("params.gamma_hz", p.gamma_hz)?;
    ensure_nonneg("params.gamma1_hz", p.gamma1_hz)?;
    ensure_nonneg("params.pump_hz", p.pump_hz)?;
    ensure_nonneg("params.thermal_photons", p.thermal_photons)?;
    ensure_nonneg("params.inhomogeneous_fwhm_hz", p.inhomogeneous_fwhm_hz)?;
    if !(p.ensemble_size >= 1.0) {
        return Err(Error::config(
            "params.ensemble_size",
            format!("must be >= 1, got {}", p.ensemble_size),
        ));
    }

    let params = ModelParams {
        cavity_freq: hz_to_rad(p.cavity_freq_hz),
        cavity_decay: hz_to_rad(p.kappa_hz),
        coupling: hz_to_rad(p.g_hz),
        dephasing: hz_to_rad(p.gamma_hz),
        relaxation: hz_to_rad(p.gamma1_hz),
        pump: hz_to_rad(p.pump_hz),
        ensemble_size: p.ensemble_size,
        thermal_photons: p.thermal_photons,
        ensemble_detuning: hz_to_rad(p.ensemble_detuning_hz),
        inhom_linewidth: hz_to_rad(p.inhomogeneous_fwhm_hz),
        spin_center_freq: hz_to_rad(p.spin_center_freq_hz),
    };

    let (disorder, bins) = match &file.disorder {
        DisorderHz::Gaussian { fwhm_hz, bins, seed } => {
            let fwhm = fwhm_hz.unwrap_or(p.inhomogeneous_fwhm_hz);
            if !(fwhm > 0.0) {
                return Err(Error::config("disorder.fwhm_hz", "gaussian width must be positive"));
            }
            (
                DisorderSpec { kind: DisorderKind::Gaussian { fwhm: hz_to_rad(fwhm) }, rng_seed: *seed },
                *bins,
            )
        }
        DisorderHz::TwoDelta { delta_hz, seed } => (
            DisorderSpec {
                kind: DisorderKind::TwoDelta { half_splitting: hz_to_rad(*delta_hz) },
                rng_seed: *seed,
            },
            2,
        ),
        DisorderHz::Table { entries, seed } => {
            let conv: Vec<(f64, f64)> =
                entries.iter().map(|(d, w)| (hz_to_rad(*d), *w)).collect();
            let n = conv.len();
            (DisorderSpec { kind: DisorderKind::Table { entries: conv }, rng_seed: *seed }, n)
        }
    };

    let i = &file.integrator;
    let integrator = IntegratorConfig {
        method: i.method,
        rel_tol: i.rel_tol,
        abs_tol: i.abs_tol,
        max_step: i.max_step_s,
        fixed_step: i.fixed_step_s,
        t_start: i.t_start_s,
        t_end: i.t_end_s,
        output_dt: i.output_dt_s,
    };
    integrator.validate()?;

    let three_level = match (&file.model, &file.three_level) {
        (ModelKind::Meanfield3, None) => {
            return Err(Error::config("three_level", "meanfield3 requires the three_level block"));
        }
        (_, Some(t)) => {
            ensure_nonneg("three_level.gamma_optical_hz", t.gamma_optical_hz)?;
            ensure_nonneg("three_level.gamma_spin_hz", t.gamma_spin_hz)?;
            ensure_nonneg("three_level.gamma1_hz", t.gamma1_hz)?;
            if !(t.kappa_optical_hz > 0.0) {
                return Err(Error::config("three_level.kappa_optical_hz", "must be positive"));
            }
            Some(ThreeLevelParams {
                mw_decay: params.cavity_decay,
                mw_coupling: params.coupling,
                spin_dephasing: hz_to_rad(t.gamma_spin_hz),
                relaxation: hz_to_rad(t.gamma1_hz),
                opt_decay: hz_to_rad(t.kappa_optical_hz),
                opt_coupling: hz_to_rad(t.g_optical_hz),
                opt_dephasing: hz_to_rad(t.gamma_optical_hz),
                pump_rabi: hz_to_rad(t.pump_rabi_hz),
                cavity_drive: hz_to_rad(t.cavity_drive_hz),
                ensemble_size: params.ensemble_size,
                mw_detuning: params.ensemble_detuning,
                pump_detuning: hz_to_rad(t.pump_detuning_hz),
                opt_cavity_detuning: hz_to_rad(t.optical_cavity_detuning_hz),
            })
        }
        _ => None,
    };

    if let Some(sw) = &file.sweep {
        if !SWEEP_AXES.contains(&sw.axis.as_str()) {
            return Err(Error::config(
                format!("sweep.axis ({})", sw.axis),
                format!("unknown parameter path; known: {}", SWEEP_AXES.join(", ")),
            ));
        }
        if sw.values.is_empty() {
            return Err(Error::config("sweep.values", "sweep needs at least one value"));
        }
        if sw.workers == 0 {
            return Err(Error::config("sweep.workers", "worker count must be at least 1"));
        }
    }

    if let Some(k) = &file.initial.kick {
        ensure_nonneg("initial.kick.amplitude", k.amplitude)?;
        ensure_nonneg("initial.kick.mean_interval_s", k.mean_interval_s)?;
    }
    if let Some(pd) = &file.phase_diagram {
        if pd.g_norm_count == 0 || pd.disorder_count == 0 {
            return Err(Error::config("phase_diagram", "grid counts must be positive"));
        }
        if !(pd.g_norm_max >= pd.g_norm_min) || !(pd.disorder_max >= pd.disorder_min) {
            return Err(Error::config("phase_diagram", "grid bounds are inverted"));
        }
        if pd.disorder_min < 0.0 {
            return Err(Error::config("phase_diagram.disorder_min", "must be non-negative"));
        }
    }
    if !(0.0..1.0).contains(&file.analysis.window_start_fraction) {
        return Err(Error::config("analysis.window_start_fraction", "must be in [0, 1)"));
    }

    params.validate().map_err(|e| Error::config("params", e.to_string()))?;

    Ok(RunConfig {
        model: file.model,
        params,
        three_level,
        disorder,
        bins,
        integrator,
        initial: file.initial.clone(),
        analysis: file.analysis.clone(),
        sweep: file.sweep.clone(),
        output_dir: file.output_dir.clone(),
        rng_seed: file.rng_seed,
        source: file,
    })
}

/// Set one swept parameter on the Hz-space file; the path must be a member
/// of [`SWEEP_AXES`].
pub fn apply_sweep_value(file: &mut ConfigFile, axis: &str, value: f64) -> Result<()> {
    match axis {
        "params.ensemble_size" => file.params.ensemble_size = value,
        "params.pump_hz" => file.params.pump_hz = value,
        "params.g_hz" => file.params.g_hz = value,
        "params.thermal_photons" => file.params.thermal_photons = value,
        "params.ensemble_detuning_hz" => file.params.ensemble_detuning_hz = value,
        "disorder.fwhm_hz" => match &mut file.disorder {
            DisorderHz::Gaussian { fwhm_hz, .. } => *fwhm_hz = Some(value),
            _ => {
                return Err(Error::config(
                    "sweep.axis (disorder.fwhm_hz)",
                    "disorder is not gaussian",
                ))
            }
        },
        "initial.tip_angle_rad" => file.initial.tip_angle_rad = value,
        "three_level.pump_rabi_hz" => {
            match &mut file.three_level {
                Some(t) => t.pump_rabi_hz = value,
                None => {
                    return Err(Error::config(
                        "sweep.axis (three_level.pump_rabi_hz)",
                        "config has no three_level block",
                    ))
                }
            }
        }
        "three_level.pump_detuning_hz" => match &mut file.three_level {
            Some(t) => t.pump_detuning_hz = value,
            None => {
                return Err(Error::config(
                    "sweep.axis (three_level.pump_detuning_hz)",
                    "config has no three_level block",
                ))
            }
        },
        other => {
            return Err(Error::config(
                format!("sweep.axis ({other})"),
                "unknown parameter path",
            ))
        }
    }
    Ok(())
}
