//! Time-series and spectral analysis of emission traces: burst detection,
//! periodicity, onset-phase statistics, order parameters, scaling fits, data
//! collapse, and the closed-form burst and linewidth formulas.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Uniformly sampled emission-power trace, optionally with the complex field
/// amplitude retained for phase analysis.
#[derive(Debug, Clone)]
pub struct EmissionTrace {
    pub t0: f64,
    pub dt: f64,
    pub power: Vec<f64>,
    pub amplitude: Option<Vec<Complex64>>,
}

impl EmissionTrace {
    pub fn new(t0: f64, dt: f64, power: Vec<f64>) -> Self {
        assert!(dt > 0.0 && power.len() >= 2, "trace needs dt > 0 and >= 2 samples");
        EmissionTrace { t0, dt, power, amplitude: None }
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }
}

/// Detected bursts: onset times, peak powers, settled flags, and the median
/// period over settled bursts (when at least three are settled).
#[derive(Debug, Clone, Default)]
pub struct BurstTrain {
    pub onsets: Vec<f64>,
    pub peaks: Vec<f64>,
    pub settled: Vec<bool>,
    pub period: Option<f64>,
}

impl BurstTrain {
    pub fn settled_onsets(&self) -> Vec<f64> {
        self.onsets
            .iter()
            .zip(&self.settled)
            .filter(|(_, s)| **s)
            .map(|(o, _)| *o)
            .collect()
    }

    pub fn first_settled_onset(&self) -> Option<f64> {
        self.onsets.iter().zip(&self.settled).find(|(_, s)| **s).map(|(o, _)| *o)
    }
}

/// How the burst threshold is set: a multiple of the trace median, or a
/// fraction of the settled-window peak (robust against decaying afterpulses
/// that ring after each main burst).
#[derive(Debug, Clone, Copy)]
pub enum BurstThreshold {
    MedianFactor(f64),
    PeakFraction(f64),
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fraction of the trace treated as transient; bursts in it are flagged
/// unsettled and excluded from the period estimate.
pub const SETTLE_FRACTION: f64 = 0.2;

/// Detect bursts as maximal intervals with `power > threshold_factor x
/// median(power)`; onset is the first up-crossing sample, peak the maximum
/// inside the interval. Traces with no up-crossing give an empty train.
pub fn detect_bursts(trace: &EmissionTrace, threshold_factor: f64) -> BurstTrain {
    detect_bursts_with(trace, BurstThreshold::MedianFactor(threshold_factor), SETTLE_FRACTION)
}

/// Burst detection with an explicit threshold rule and settle fraction.
pub fn detect_bursts_with(
    trace: &EmissionTrace,
    threshold: BurstThreshold,
    settle_fraction: f64,
) -> BurstTrain {
    assert!(trace.len() >= 16, "burst detection needs at least 16 samples");
    let n = trace.len();
    let settle_idx = ((settle_fraction * n as f64) as usize).min(n - 1);
    let thr = match threshold {
        BurstThreshold::MedianFactor(f) => f * median(&trace.power),
        BurstThreshold::PeakFraction(f) => {
            let peak = trace.power[settle_idx..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            f * peak
        }
    };
    let t_settle = trace.time(settle_idx);

    let mut train = BurstTrain::default();
    let mut in_burst = trace.power[0] > thr;
    let mut peak = if in_burst { trace.power[0] } else { 0.0 };
    let mut onset = trace.t0;
    for i in 1..n {
        let above = trace.power[i] > thr;
        if above && !in_burst {
            in_burst = true;
            onset = trace.time(i);
            peak = trace.power[i];
        } else if above {
            peak = peak.max(trace.power[i]);
        } else if in_burst {
            in_burst = false;
            train.onsets.push(onset);
            train.peaks.push(peak);
            train.settled.push(onset >= t_settle);
        }
    }
    if in_burst && !train.onsets.contains(&onset) {
        train.onsets.push(onset);
        train.peaks.push(peak);
        train.settled.push(onset >= t_settle);
    }

    let settled = train.settled_onsets();
    if settled.len() >= 3 {
        let diffs: Vec<f64> = settled.windows(2).map(|w| w[1] - w[0]).collect();
        let t = median(&diffs);
        if t > 0.0 {
            train.period = Some(t);
        }
    }
    train
}

/// Onset phases and their circular-uniformity statistic.
#[derive(Debug, Clone)]
pub struct OnsetPhases {
    /// `theta_k = 2 pi tau_k / T mod 2 pi`, one per train (first settled
    /// onset).
    pub phases: Vec<f64>,
    /// Mean resultant length of the phase distribution.
    pub resultant_length: f64,
    /// Rayleigh-test p-value for uniformity on the circle.
    pub p_value: f64,
}

/// Map each train's first settled onset to a phase of the reference period
/// and run the Rayleigh uniformity test.
pub fn onset_phases(trains: &[BurstTrain], t_ref: f64) -> Result<OnsetPhases> {
    if !(t_ref > 0.0) {
        return Err(Error::Domain("onset_phases needs a positive reference period".into()));
    }
    let mut phases = Vec::with_capacity(trains.len());
    for (i, tr) in trains.iter().enumerate() {
        let onset = tr
            .first_settled_onset()
            .ok_or_else(|| Error::Domain(format!("train {i} has no settled burst")))?;
        phases.push((std::f64::consts::TAU * onset / t_ref).rem_euclid(std::f64::consts::TAU));
    }
    if phases.is_empty() {
        return Err(Error::Domain("onset_phases needs at least one train".into()));
    }
    let n = phases.len() as f64;
    let (mut cs, mut sn) = (0.0, 0.0);
    for th in &phases {
        cs += th.cos();
        sn += th.sin();
    }
    let r = (cs * cs + sn * sn).sqrt() / n;
    let z = n * r * r;
    // standard small-sample correction to the Rayleigh p-value
    let p = (-z).exp()
        * (1.0 + (2.0 * z - z * z) / (4.0 * n)
            - (24.0 * z - 132.0 * z * z + 76.0 * z.powi(3) - 9.0 * z.powi(4)) / (288.0 * n * n));
    Ok(OnsetPhases { phases, resultant_length: r, p_value: p.clamp(0.0, 1.0) })
}

/// One-sided periodogram of an emission trace with the order parameters of
/// the periodic phase.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Non-negative frequency grid in Hz; the mirror half of the real
    /// signal's spectrum is folded in.
    pub freq_hz: Vec<f64>,
    /// Power spectral density, Parseval-normalized: `sum psd * df` equals the
    /// mean square of the windowed signal.
    pub psd: Vec<f64>,
    /// Frequency of the largest PSD bin (Hz).
    pub peak_freq_hz: f64,
    /// Total integrated spectral power.
    pub a_tot: f64,
    /// Integrated power outside the central-peak exclusion window.
    pub a_sb: f64,
    /// `a_sb / a_tot`, the time-crystalline order parameter.
    pub crystalline_fraction: f64,
}

/// Default width (in grid bins) of the window excluded around the spectral
/// peak when integrating the sideband power.
pub const SIDEBAND_EXCLUSION_BINS: usize = 4;

/// Rectangular-window periodogram of the trace after dropping the leading
/// `window_start_fraction` transient.
pub fn psd(trace: &EmissionTrace, window_start_fraction: f64) -> Result<Spectrum> {
    psd_with(trace, window_start_fraction, SIDEBAND_EXCLUSION_BINS)
}

pub fn psd_with(
    trace: &EmissionTrace,
    window_start_fraction: f64,
    exclusion_bins: usize,
) -> Result<Spectrum> {
    if !(0.0..1.0).contains(&window_start_fraction) {
        return Err(Error::Domain("window start fraction must be in [0, 1)".into()));
    }
    let start = (window_start_fraction * trace.len() as f64) as usize;
    let seg = &trace.power[start..];
    let n = seg.len();
    if n < 16 {
        return Err(Error::Domain(format!("PSD segment too short ({n} samples)")));
    }

    let mut buf: Vec<Complex64> = seg.iter().map(|p| Complex64::new(*p, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = 1.0 / (n as f64 * trace.dt);
    // |X_k|^2 dt / n makes sum(psd) * df equal the mean square of the signal
    let norm = trace.dt / n as f64;

    // fold the mirror half of the real-signal spectrum onto 0..n/2
    let nh = n / 2;
    let mut psd_v = vec![0.0; nh + 1];
    let mut freq = vec![0.0; nh + 1];
    for k in 0..=nh {
        let mut v = buf[k].norm_sqr() * norm;
        let mirror = (n - k) % n;
        if mirror != k {
            v += buf[mirror].norm_sqr() * norm;
        }
        psd_v[k] = v;
        freq[k] = k as f64 * df;
    }

    let mut k_peak = 0;
    for (k, v) in psd_v.iter().enumerate() {
        if *v > psd_v[k_peak] {
            k_peak = k;
        }
    }
    let a_tot: f64 = psd_v.iter().sum::<f64>() * df;
    let mut a_excl = 0.0;
    let hw = exclusion_bins / 2;
    for k in k_peak.saturating_sub(hw)..=(k_peak + hw).min(nh) {
        a_excl += psd_v[k] * df;
    }
    let a_sb = (a_tot - a_excl).max(0.0);
    let frac = if a_tot > 0.0 { a_sb / a_tot } else { 0.0 };
    Ok(Spectrum {
        peak_freq_hz: freq[k_peak],
        freq_hz: freq,
        psd: psd_v,
        a_tot,
        a_sb,
        crystalline_fraction: frac,
    })
}

/// Closed-form delayed superradiant burst from a tipped collective state.
///
/// `theta` is the tip angle from the fully inverted pole, so small angles
/// give long positive delays. The trajectory is `u(t) = -tanh(rate (t -
/// tau_d))` with `rate = 2 N g^2 / kappa` (equivalently the collective `S_z`
/// runs from `-N/2` to `+N/2` in the lower-state-minus-upper-state sign
/// convention).
#[derive(Debug, Clone, Copy)]
pub struct AnalyticBurst {
    /// Delay of the emission peak (s); negative past `theta = pi/2`.
    pub tau_d: f64,
    /// FWHM of the emitted power pulse (s).
    pub tau_w: f64,
    /// Collective decay rate `2 N g^2 / kappa` (1/s).
    pub rate: f64,
}

impl AnalyticBurst {
    /// Per-spin inversion `u(t)`; +1 inverted, -1 ground.
    pub fn inversion(&self, t: f64) -> f64 {
        -((self.rate * (t - self.tau_d)).tanh())
    }

    /// Emitted power profile up to normalization, `sech^2(rate (t - tau_d))`.
    pub fn power_profile(&self, t: f64) -> f64 {
        let c = (self.rate * (t - self.tau_d)).cosh();
        1.0 / (c * c)
    }
}

/// Delay, width and trajectory of the transient superradiant burst.
pub fn analytic_burst(params: &ModelParams, theta: f64) -> Result<AnalyticBurst> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::Domain(format!("tip angle must lie in (0, pi), got {theta}")));
    }
    let rate = 2.0 * params.ensemble_size * params.coupling * params.coupling / params.cavity_decay;
    if !(rate > 0.0) {
        return Err(Error::Domain("analytic burst needs N g^2 / kappa > 0".into()));
    }
    Ok(AnalyticBurst {
        tau_d: -(theta / 2.0).tan().ln() / rate,
        tau_w: 2.0 * (std::f64::consts::SQRT_2 + 1.0).ln() / rate,
        rate,
    })
}

/// Period of the repumped burst train.
#[derive(Debug, Clone, Copy)]
pub enum BurstPeriod {
    Periodic {
        /// `(1/D) ln((N_f - N_i) / (N_f - kappa Gamma / 4 g^2))`.
        exact: f64,
        /// The cooperativity-dominated limit `1 / (D C_f)`.
        approx: f64,
    },
    /// The saturated population never reaches the emission threshold.
    NoBurst,
}

/// Classical-repumping estimate of the pulse-train period. `d_pump` is the
/// repumping rate, `n_i`/`n_f` the initial and saturated populations.
pub fn burst_period_formula(
    d_pump: f64,
    n_i: f64,
    n_f: f64,
    g: f64,
    kappa: f64,
    gamma: f64,
) -> BurstPeriod {
    assert!(d_pump > 0.0 && g > 0.0 && kappa > 0.0 && gamma > 0.0, "rates must be positive");
    let n_threshold = kappa * gamma / (4.0 * g * g);
    if n_f <= n_threshold || n_f <= n_i {
        return BurstPeriod::NoBurst;
    }
    let exact = ((n_f - n_i) / (n_f - n_threshold)).ln() / d_pump;
    let c_f = n_f / n_threshold;
    BurstPeriod::Periodic { exact, approx: 1.0 / (d_pump * c_f) }
}

/// Least-squares power-law fit `observable = prefactor * N^exponent`.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub rms_residual: f64,
}

pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Domain("scaling fit needs at least 3 points".into()));
    }
    if points.iter().any(|(n, y)| *n <= 0.0 || *y <= 0.0) {
        return Err(Error::Domain("scaling fit needs positive values".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(n, y)| (n.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Domain("scaling fit is degenerate (all N equal)".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (logs
        .iter()
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ScalingFit { exponent: slope, prefactor: intercept.exp(), rms_residual: rms })
}

/// Result of rescaling pulse trains by their ensemble size.
#[derive(Debug, Clone)]
pub struct DataCollapse {
    /// Traces on the rescaled axes: time in `(t - t_first_burst) * N`,
    /// power in `P / N^2`, resampled on the common grid.
    pub collapsed: Vec<EmissionTrace>,
    /// Max over trace pairs of the RMS difference on the overlapping grid,
    /// normalized by the pair's peak amplitude.
    pub metric: f64,
}

/// Rescale time by `N` and power by `1/N^2`, align at the first settled
/// burst, and measure the residual spread between the curves.
pub fn data_collapse(traces: &[(EmissionTrace, f64)]) -> Result<DataCollapse> {
    data_collapse_with(traces, BurstThreshold::PeakFraction(0.25))
}

pub fn data_collapse_with(
    traces: &[(EmissionTrace, f64)],
    threshold: BurstThreshold,
) -> Result<DataCollapse> {
    if traces.len() < 2 {
        return Err(Error::Domain("data collapse needs at least 2 traces".into()));
    }
    // rescaled support of each trace, aligned to its first settled burst
    let mut aligned: Vec<(f64, f64, f64, &EmissionTrace)> = Vec::new(); // (s_start, s_end, n, trace)
    for (tr, n) in traces {
        if !(*n > 0.0) {
            return Err(Error::Domain("data collapse needs positive ensemble sizes".into()));
        }
        let train = detect_bursts_with(tr, threshold, SETTLE_FRACTION);
        let t_burst = train
            .first_settled_onset()
            .ok_or_else(|| Error::Domain("a trace has no settled burst to align to".into()))?;
        let s_start = (tr.t0 - t_burst) * n;
        let s_end = (tr.t0 + tr.duration() - t_burst) * n;
        aligned.push((s_start, s_end, *n, tr));
    }
    let lo = aligned.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = aligned.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Domain("rescaled traces do not overlap".into()));
    }
    // coarsest rescaled sampling sets the common grid
    let ds = aligned.iter().map(|a| a.3.dt * a.2).fold(0.0, f64::max);
    let n_grid = (((hi - lo) / ds).floor() as usize).max(2);

    let mut collapsed = Vec::with_capacity(aligned.len());
    for (s_start, _, n, tr) in &aligned {
        let inv_n2 = 1.0 / (n * n);
        let mut power = Vec::with_capacity(n_grid);
        for k in 0..n_grid {
            let s = lo + k as f64 * ds;
            // linear interpolation on the rescaled time axis
            let x = (s - s_start) / (tr.dt * n);
            let i = (x.floor() as usize).min(tr.len() - 2);
            let frac = (x - i as f64).clamp(0.0, 1.0);
            power.push((tr.power[i] * (1.0 - frac) + tr.power[i + 1] * frac) * inv_n2);
        }
        collapsed.push(EmissionTrace { t0: lo, dt: ds, power, amplitude: None });
    }

    let mut metric = 0.0f64;
    for i in 0..collapsed.len() {
        for j in i + 1..collapsed.len() {
            let peak = collapsed[i]
                .power
                .iter()
                .chain(&collapsed[j].power)
                .cloned()
                .fold(0.0, f64::max);
            if peak <= 0.0 {
                continue;
            }
            let ms: f64 = collapsed[i]
                .power
                .iter()
                .zip(&collapsed[j].power)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n_grid as f64;
            metric = metric.max(ms.sqrt() / peak);
        }
    }
    Ok(DataCollapse { collapsed, metric })
}

/// Schawlow-Townes-type emission linewidth (Hz) with thermal and
/// spontaneous-emission noise:
/// `(1/(4 pi n_c kappa_c)) (kappa_a kappa_c / (kappa_a + kappa_c))^2 (n_th +
/// n_sp + 1)`.
pub fn st_linewidth(n_c: f64, kappa_c: f64, kappa_a: f64, n_th: f64, n_sp: f64) -> f64 {
    assert!(n_c > 0.0 && kappa_c > 0.0 && kappa_a > 0.0, "st_linewidth needs positive inputs");
    let pooled = kappa_a * kappa_c / (kappa_a + kappa_c);
    pooled * pooled / (4.0 * std::f64::consts::PI * n_c * kappa_c) * (n_th + n_sp + 1.0)
}
