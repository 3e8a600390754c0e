//! Physical parameters, derived dimensionless quantities, and the frequency
//! binning of the disordered ensemble.

use serde::Serialize;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Convert a linear frequency in Hz to an angular rate in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

/// Convert an angular rate in rad/s back to linear Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TWO_PI
}

/// All rates and counts of the two-level model, in angular units (rad/s).
///
/// The total spin decoherence rate `kappa_s = gamma + gamma1 + pump` is
/// always derived, never stored.
#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    /// Cavity resonance frequency `omega_e` (rad/s).
    pub cavity_freq: f64,
    /// Cavity energy decay rate `kappa` (rad/s).
    pub cavity_decay: f64,
    /// Single-spin coupling `g` (rad/s).
    pub coupling: f64,
    /// Homogeneous (pure) dephasing rate `gamma` (rad/s).
    pub dephasing: f64,
    /// Spin relaxation rate `gamma1` (rad/s).
    pub relaxation: f64,
    /// Incoherent pump rate into the upper state `D` (rad/s).
    pub pump: f64,
    /// Number of participating spins; real-valued so that spectrally
    /// selective pumping can feed in fractional effective sizes.
    pub ensemble_size: f64,
    /// Thermal occupancy of the cavity mode (quanta).
    pub thermal_photons: f64,
    /// Detuning of the ensemble center from the cavity, `omega_s - omega_e`
    /// (rad/s).
    pub ensemble_detuning: f64,
    /// Inhomogeneous (FWHM) linewidth `Gamma` of the ensemble (rad/s).
    pub inhom_linewidth: f64,
    /// Ensemble center frequency `omega_s` (rad/s).
    pub spin_center_freq: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cavity_decay > 0.0) {
            return Err(Error::Domain("cavity decay rate must be positive".into()));
        }
        for (name, v) in [
            ("dephasing", self.dephasing),
            ("relaxation", self.relaxation),
            ("pump", self.pump),
            ("thermal_photons", self.thermal_photons),
            ("inhom_linewidth", self.inhom_linewidth),
            ("coupling", self.coupling),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.ensemble_size >= 1.0) {
            return Err(Error::Domain(format!(
                "ensemble size must be >= 1, got {}",
                self.ensemble_size
            )));
        }
        Ok(())
    }

    /// Total spin decoherence rate `kappa_s = gamma + gamma1 + D` (rad/s).
    #[inline]
    pub fn spin_decay(&self) -> f64 {
        self.dephasing + self.relaxation + self.pump
    }

    /// Effective cavity decay seen by a detuned ensemble,
    /// `kappa / (1 + (2 Delta_e / kappa)^2)`.
    #[inline]
    pub fn kappa_tot(&self) -> f64 {
        let r = 2.0 * self.ensemble_detuning / self.cavity_decay;
        self.cavity_decay / (1.0 + r * r)
    }

    /// Collective coupling `sqrt(N) g` (rad/s).
    #[inline]
    pub fn collective_coupling(&self) -> f64 {
        self.ensemble_size.sqrt() * self.coupling
    }
}

/// Ensemble cooperativity `C = 4 N g^2 / (kappa_tot Gamma)`.
///
/// Uses the detuning-corrected cavity decay; `C = 1` marks the onset of
/// continuous superradiance.
pub fn cooperativity(p: &ModelParams) -> Result<f64> {
    if p.cavity_decay <= 0.0 {
        return Err(Error::Domain("cooperativity needs kappa > 0".into()));
    }
    if p.inhom_linewidth <= 0.0 {
        return Err(Error::Domain("cooperativity needs Gamma > 0".into()));
    }
    Ok(4.0 * p.ensemble_size * p.coupling * p.coupling / (p.kappa_tot() * p.inhom_linewidth))
}

/// Normalized collective coupling `g_norm = sqrt(N) g / (kappa / 2)`.
pub fn normalized_coupling(p: &ModelParams) -> f64 {
    assert!(p.cavity_decay > 0.0, "normalized_coupling needs kappa > 0");
    p.collective_coupling() / (0.5 * p.cavity_decay)
}

/// Population participating at pump detuning `delta_pump` for a Gaussian
/// optical line of FWHM `gamma_op`: `N exp(-4 ln2 (delta/Gamma_op)^2)`.
pub fn effective_ensemble_size(delta_pump: f64, gamma_op: f64, n_tot: f64) -> f64 {
    assert!(gamma_op > 0.0, "effective_ensemble_size needs Gamma_op > 0");
    let x = delta_pump / gamma_op;
    n_tot * (-4.0 * std::f64::consts::LN_2 * x * x).exp()
}

/// How the spin frequency disorder is specified.
#[derive(Debug, Clone)]
pub enum DisorderKind {
    /// Gaussian line of the given FWHM (rad/s).
    Gaussian { fwhm: f64 },
    /// Two sub-ensembles at detunings +-delta (rad/s), weights 1/2 each.
    TwoDelta { half_splitting: f64 },
    /// Explicit (detuning, weight) pairs.
    Table { entries: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub rng_seed: u64,
}

/// The disordered ensemble reduced to `M` frequency bins.
///
/// Detunings are sorted ascending and measured from the ensemble center;
/// weights sum to one.
#[derive(Debug, Clone)]
pub struct BinnedEnsemble {
    pub detunings: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_n: f64,
}

/// Half-width of the gaussian binning span, in units of the FWHM. The span
/// `+-2 Gamma` leaves < 1e-5 of the line mass outside; the leftover mass is
/// folded into the edge bins.
pub const GAUSSIAN_SPAN_FWHM: f64 = 2.0;

impl BinnedEnsemble {
    pub fn bin_count(&self) -> usize {
        self.detunings.len()
    }

    /// Spins in bin `m`, `N rho_m`.
    #[inline]
    pub fn population(&self, m: usize) -> f64 {
        self.total_n * self.weights[m]
    }

    /// All per-bin populations.
    pub fn populations(&self) -> Vec<f64> {
        self.weights.iter().map(|w| self.total_n * w).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() != self.weights.len() || self.detunings.is_empty() {
            return Err(Error::Contract("binned ensemble shape mismatch".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Numerics(format!("bin weights sum to {sum}, expected 1")));
        }
        if self.weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Config {
                path: "disorder".into(),
                msg: "negative bin weight".into(),
            });
        }
        if self.detunings.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::Contract("bin detunings not sorted".into()));
        }
        Ok(())
    }
}

/// Standard normal CDF via `erf`.
fn normal_cdf(x: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / (sigma * std::f64::consts::SQRT_2)))
}

/// Group `n` spins into `m` frequency bins according to `spec`.
///
/// Deterministic for a given `(spec, n, m)`. For a Gaussian line the bins are
/// equal width over `+-2 Gamma` (FWHM units) and carry the Gaussian
/// probability mass of their interval, with the tail mass folded into the
/// edge bins; `m` must be odd so one bin sits at zero detuning.
pub fn build_bins(spec: &DisorderSpec, n: f64, m: usize) -> Result<BinnedEnsemble> {
    if m < 1 {
        return Err(Error::config("disorder.bins", "need at least one bin"));
    }
    let ens = match &spec.kind {
        DisorderKind::Gaussian { fwhm } => {
            if m % 2 == 0 {
                return Err(Error::config(
                    "disorder.bins",
                    format!("gaussian binning needs an odd bin count, got {m}"),
                ));
            }
            if !(*fwhm > 0.0) {
                return Err(Error::config("disorder.fwhm_hz", "gaussian width must be positive"));
            }
            let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
            let span = GAUSSIAN_SPAN_FWHM * fwhm;
            let width = 2.0 * span / m as f64;
            let mut detunings = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            for k in 0..m {
                let lo = -span + k as f64 * width;
                let hi = lo + width;
                detunings.push(0.5 * (lo + hi));
                let mut w = normal_cdf(hi, sigma) - normal_cdf(lo, sigma);
                if k == 0 {
                    w += normal_cdf(lo, sigma);
                }
                if k == m - 1 {
                    w += 1.0 - normal_cdf(hi, sigma);
                }
                weights.push(w);
            }
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            BinnedEnsemble { detunings, weights, total_n: n }
        }
        DisorderKind::TwoDelta { half_splitting } => {
            if m != 2 {
                return Err(Error::config(
                    "disorder.bins",
                    format!("two_delta disorder has exactly 2 bins, got {m}"),
                ));
            }
            let d = half_splitting.abs();
            BinnedEnsemble {
                detunings: vec![-d, d],
                weights: vec![0.5, 0.5],
                total_n: n,
            }
        }
        DisorderKind::Table { entries } => {
            if entries.len() != m {
                return Err(Error::config(
                    "disorder.bins",
                    format!("table has {} entries but {m} bins requested", entries.len()),
                ));
            }
            let mut entries = entries.clone();
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            if entries.iter().any(|(_, w)| *w < 0.0) {
                return Err(Error::config("disorder.entries", "negative weight"));
            }
            let sum: f64 = entries.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::config(
                    "disorder.entries",
                    format!("weights sum to {sum}, expected 1 within 1e-12"),
                ));
            }
            BinnedEnsemble {
                detunings: entries.iter().map(|(d, _)| *d).collect(),
                weights: entries.iter().map(|(_, w)| *w).collect(),
                total_n: n,
            }
        }
    };
    ens.validate()?;
    Ok(ens)
}
