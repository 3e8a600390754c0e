//! Experiment orchestration: building models from a [`RunConfig`], running
//! them (with optional seeded kicks), analyzing the traces, and serializing
//! every artifact to its run directory.
//!
//! One directory per run, named by a content hash of the resolved config, so
//! repeated and parallel invocations are reproducible and cache-friendly.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    detect_bursts_with, psd_with, BurstThreshold, BurstTrain, EmissionTrace, Spectrum,
};
use crate::bifurcation::{self, CouplingAxis, PhaseGrid, ReducedParams, ReducedState};
use crate::config::{
    apply_sweep_value, resolve_config, InitialKind, KickHz, ModelKind, RunConfig,
};
use crate::cumulant::{CumulantModel, CumulantState};
use crate::error::{Error, Result};
use crate::meanfield::{AdiabaticMeanField, CavityMeanField, MeanFieldState};
use crate::model::{build_bins, cooperativity, normalized_coupling, BinnedEnsemble};
use crate::ode::{integrate_with, EmissionModel, IntegratorConfig};
use crate::presets;
use crate::threelevel::{ThreeLevel, ThreeLevelState};

/// Per-run analysis summary serialized as `fits.json`.
#[derive(Debug, Clone, Serialize, Default)]
pub struct FitsSummary {
    pub period_s: Option<f64>,
    pub n_bursts: usize,
    pub n_settled_bursts: usize,
    pub peak_power: f64,
    pub mean_power: f64,
    pub crystalline_fraction: Option<f64>,
    pub a_tot: Option<f64>,
    pub a_sb: Option<f64>,
    pub peak_freq_hz: Option<f64>,
    /// Time-averaged superradiant / stimulated ratio, when the decomposition
    /// is enabled on a cumulant run.
    pub sr_stim_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub trace: EmissionTrace,
    pub bursts: Option<BurstTrain>,
    pub spectrum: Option<Spectrum>,
    pub fits: FitsSummary,
    pub swept_value: Option<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    model: &'static str,
    config_hash: &'a str,
    rng_seed: u64,
    bins: usize,
    cooperativity: Option<f64>,
    normalized_coupling: f64,
    kappa_s_rad_per_s: f64,
    kappa_tot_rad_per_s: f64,
    params_rad_per_s: &'a crate::model::ModelParams,
    integrator: &'a IntegratorConfig,
}

fn config_hash(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(&cfg.source).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(16);
    for b in &digest[..8] {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn write_trace_csv(path: &Path, tr: &EmissionTrace) -> Result<()> {
    let mut out = String::with_capacity(tr.len() * 32);
    if tr.amplitude.is_some() {
        out.push_str("t_s,power,re_amp,im_amp\n");
    } else {
        out.push_str("t_s,power\n");
    }
    for i in 0..tr.len() {
        match &tr.amplitude {
            Some(amps) => {
                let a = amps[i];
                out.push_str(&format!("{},{},{},{}\n", tr.time(i), tr.power[i], a.re, a.im));
            }
            None => out.push_str(&format!("{},{}\n", tr.time(i), tr.power[i])),
        }
    }
    write_file(path, &out)
}

/// Parse a `trace.csv` back into an [`EmissionTrace`]; exact for files we
/// wrote ourselves (shortest round-trip float formatting).
pub fn read_trace_csv(path: &Path) -> Result<EmissionTrace> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Domain("empty trace file".into()))?;
    let has_amp = header.trim() == "t_s,power,re_amp,im_amp";
    if !has_amp && header.trim() != "t_s,power" {
        return Err(Error::Domain(format!("unrecognized trace header `{header}`")));
    }
    let mut times = Vec::new();
    let mut power = Vec::new();
    let mut amps = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let need = if has_amp { 4 } else { 2 };
        if cols.len() != need {
            return Err(Error::Domain(format!("trace line {} malformed", ln + 2)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Domain(format!("line {}: {e}", ln + 2)))
        };
        times.push(parse(cols[0])?);
        power.push(parse(cols[1])?);
        if has_amp {
            amps.push(Complex64::new(parse(cols[2])?, parse(cols[3])?));
        }
    }
    if times.len() < 2 {
        return Err(Error::Domain("trace needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    let mut tr = EmissionTrace::new(times[0], dt, power);
    if has_amp {
        tr.amplitude = Some(amps);
    }
    Ok(tr)
}

enum BuiltModel {
    Mf2(CavityMeanField),
    MfAd(AdiabaticMeanField),
    Mf3(ThreeLevel),
    Cum(CumulantModel),
    Wxyz(WxyzModel),
}

/// The reduced (w, x, y, z) system run as a simulation model; emission power
/// is `kappa N w^2` since `w = Im(b)/sqrt(N)` up to the Z2 sign.
pub struct WxyzModel {
    pub p: ReducedParams,
    pub n: f64,
}

impl crate::ode::OdeRhs for WxyzModel {
    fn dim(&self) -> usize {
        4
    }
    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let s = ReducedState { w: y[0], x: y[1], y: y[2], z: y[3] };
        let d = bifurcation::reduced_derivs(&s, &self.p);
        dydt[0] = d.w;
        dydt[1] = d.x;
        dydt[2] = d.y;
        dydt[3] = d.z;
    }
}

impl EmissionModel for WxyzModel {
    fn emission_power(&self, y: &[f64]) -> f64 {
        self.p.cavity_decay * self.n * y[0] * y[0]
    }
}

fn build_model(cfg: &RunConfig, ens: BinnedEnsemble) -> Result<BuiltModel> {
    Ok(match cfg.model {
        ModelKind::Meanfield2 => BuiltModel::Mf2(CavityMeanField::new(cfg.params.clone(), ens)?),
        ModelKind::MeanfieldAdiabatic => {
            BuiltModel::MfAd(AdiabaticMeanField::new(cfg.params.clone(), ens)?)
        }
        ModelKind::Meanfield3 => {
            let mut p3 = cfg
                .three_level
                .clone()
                .ok_or_else(|| Error::config("three_level", "missing block for meanfield3"))?;
            p3.ensemble_size = cfg.params.ensemble_size;
            BuiltModel::Mf3(ThreeLevel::new(p3, ens)?)
        }
        ModelKind::Cumulant => BuiltModel::Cum(CumulantModel::new(cfg.params.clone(), ens)?),
        ModelKind::ReducedWxyz => {
            let delta = match &cfg.disorder.kind {
                crate::model::DisorderKind::TwoDelta { half_splitting } => *half_splitting,
                _ => {
                    return Err(Error::config(
                        "disorder.kind",
                        "reduced_wxyz requires two_delta disorder",
                    ))
                }
            };
            BuiltModel::Wxyz(WxyzModel {
                p: ReducedParams {
                    delta,
                    ..presets::reduced_from_params(&cfg.params)
                },
                n: cfg.params.ensemble_size,
            })
        }
    })
}

fn initial_flat(cfg: &RunConfig, model: &BuiltModel, m: usize) -> Vec<f64> {
    let init = &cfg.initial;
    match model {
        BuiltModel::Mf2(_) => mf_initial(init, m).pack_cavity(),
        BuiltModel::MfAd(_) => mf_initial(init, m).pack_spins_only(),
        BuiltModel::Mf3(_) => ThreeLevelState::all_ground(m).pack(),
        BuiltModel::Cum(model) => {
            let mut st = model.initial_state();
            if init.kind == InitialKind::Inverted {
                st.inversions.iter_mut().for_each(|u| *u = 1.0);
            }
            st.pack()
        }
        BuiltModel::Wxyz(_) => {
            let z0 = match init.kind {
                InitialKind::Ground => -1.0,
                InitialKind::Inverted => 1.0,
                InitialKind::Tipped => init.tip_angle_rad.cos(),
            };
            vec![0.0, init.seed_coherence, 0.0, z0]
        }
    }
}

fn mf_initial(init: &crate::config::InitialHz, m: usize) -> MeanFieldState {
    match init.kind {
        InitialKind::Ground => MeanFieldState::ground_with_seed(m, init.seed_coherence),
        InitialKind::Inverted => {
            let mut s = MeanFieldState::ground_with_seed(m, init.seed_coherence);
            s.inversions.iter_mut().for_each(|u| *u = 1.0);
            s
        }
        InitialKind::Tipped => MeanFieldState::tipped(m, init.tip_angle_rad),
    }
}

fn apply_kick(model: &BuiltModel, y: &mut [f64], amplitude: f64, rng: &mut ChaCha8Rng) {
    match model {
        BuiltModel::Mf2(m) => {
            let mb = m.ens.bin_count();
            for k in 0..mb {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y[2 + k] += amplitude * re / std::f64::consts::SQRT_2;
                y[2 + mb + k] += amplitude * im / std::f64::consts::SQRT_2;
            }
        }
        BuiltModel::MfAd(m) => {
            let mb = m.ens.bin_count();
            for k in 0..mb {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y[k] += amplitude * re / std::f64::consts::SQRT_2;
                y[mb + k] += amplitude * im / std::f64::consts::SQRT_2;
            }
        }
        BuiltModel::Mf3(m) => {
            let mb = m.ens.bin_count();
            // kick the microwave coherence block
            for k in 0..mb {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y[4 + 2 * mb + k] += amplitude * re / std::f64::consts::SQRT_2;
                y[4 + 3 * mb + k] += amplitude * im / std::f64::consts::SQRT_2;
            }
        }
        BuiltModel::Cum(m) => {
            let mb = m.bin_count();
            let mut st = CumulantState::unpack(y, mb);
            st.seed_correlations(amplitude, rng);
            y.copy_from_slice(&st.pack());
        }
        BuiltModel::Wxyz(_) => {
            let re: f64 = rng.sample(StandardNormal);
            y[1] += amplitude * re;
        }
    }
}

fn emission_of(model: &BuiltModel, y: &[f64]) -> f64 {
    match model {
        BuiltModel::Mf2(m) => m.emission_power(y),
        BuiltModel::MfAd(m) => m.emission_power(y),
        BuiltModel::Mf3(m) => m.emission_power(y),
        BuiltModel::Cum(m) => m.emission_power(y),
        BuiltModel::Wxyz(m) => m.emission_power(y),
    }
}

fn amplitude_of(model: &BuiltModel, y: &[f64]) -> Option<Complex64> {
    match model {
        BuiltModel::Mf2(m) => m.cavity_amplitude(y),
        BuiltModel::MfAd(m) => m.cavity_amplitude(y),
        BuiltModel::Mf3(m) => m.cavity_amplitude(y),
        BuiltModel::Cum(_) | BuiltModel::Wxyz(_) => None,
    }
}

fn integrate_model<F>(model: &BuiltModel, y0: &[f64], cfg: &IntegratorConfig, f: F) -> Result<()>
where
    F: FnMut(f64, &[f64]),
{
    match model {
        BuiltModel::Mf2(m) => integrate_with(m, y0, cfg, f),
        BuiltModel::MfAd(m) => integrate_with(m, y0, cfg, f),
        BuiltModel::Mf3(m) => integrate_with(m, y0, cfg, f),
        BuiltModel::Cum(m) => integrate_with(m, y0, cfg, f),
        BuiltModel::Wxyz(m) => integrate_with(m, y0, cfg, f),
    }
}

struct SimOutput {
    trace: EmissionTrace,
    decomposition: Option<Vec<[f64; 4]>>, // t, spont, stim, sr
    optical: Option<Vec<f64>>,
}

fn simulate(cfg: &RunConfig, model: &BuiltModel, m: usize) -> Result<SimOutput> {
    let mut y0 = initial_flat(cfg, model, m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let n_samples = cfg.integrator.n_output() + 1;
    let mut power = Vec::with_capacity(n_samples);
    let mut amps = if cfg.analysis.store_amplitude { Some(Vec::with_capacity(n_samples)) } else { None };
    let mut decomp = if cfg.analysis.decomposition && matches!(model, BuiltModel::Cum(_)) {
        Some(Vec::with_capacity(n_samples))
    } else {
        None
    };
    let mut optical = if matches!(model, BuiltModel::Mf3(_)) {
        Some(Vec::with_capacity(n_samples))
    } else {
        None
    };

    let mut on_sample = |t: f64, y: &[f64]| {
        power.push(emission_of(model, y));
        if let Some(a) = &mut amps {
            a.push(amplitude_of(model, y).unwrap_or(Complex64::new(0.0, 0.0)));
        }
        if let Some(d) = &mut decomp {
            if let BuiltModel::Cum(mc) = model {
                let dec = mc.decomposition_from_flat(y);
                d.push([t, dec.spontaneous, dec.stimulated, dec.superradiant]);
            }
        }
        if let Some(o) = &mut optical {
            if let BuiltModel::Mf3(m3) = model {
                o.push(m3.optical_power(y));
            }
        }
    };

    match &cfg.initial.kick {
        None => integrate_model(model, &y0, &cfg.integrator, on_sample)?,
        Some(kick) if kick.mean_interval_s <= 0.0 => {
            apply_kick(model, &mut y0, kick.amplitude, &mut rng);
            integrate_model(model, &y0, &cfg.integrator, on_sample)?;
        }
        Some(kick) => {
            integrate_kicked(cfg, model, &mut y0, kick, &mut rng, &mut on_sample)?;
        }
    }

    let mut trace = EmissionTrace::new(cfg.integrator.t_start, cfg.integrator.output_dt, power);
    if let Some(a) = amps {
        trace.amplitude = Some(a);
    }
    Ok(SimOutput { trace, decomposition: decomp, optical })
}

/// Integrate with a Poisson train of seeded kicks, snapped to the output
/// grid so sampling stays uniform.
fn integrate_kicked<F>(
    cfg: &RunConfig,
    model: &BuiltModel,
    y0: &mut Vec<f64>,
    kick: &KickHz,
    rng: &mut ChaCha8Rng,
    on_sample: &mut F,
) -> Result<()>
where
    F: FnMut(f64, &[f64]),
{
    let ic = &cfg.integrator;
    let n_out = ic.n_output();
    // draw kick arrival grid indices ahead of time
    let mut kick_indices = Vec::new();
    let mut t = ic.t_start;
    loop {
        let u: f64 = rng.gen_range(0.0_f64..1.0).max(1e-300);
        t += -kick.mean_interval_s * u.ln();
        if t >= ic.t_end {
            break;
        }
        let idx = (((t - ic.t_start) / ic.output_dt).round() as usize).clamp(1, n_out);
        kick_indices.push(idx);
    }
    kick_indices.dedup();

    let mut y = y0.clone();
    let mut prev_idx = 0usize;
    let mut first = true;
    for &ki in kick_indices.iter().chain(std::iter::once(&n_out)) {
        if ki > prev_idx {
            let seg = IntegratorConfig {
                t_start: ic.t_start + prev_idx as f64 * ic.output_dt,
                t_end: ic.t_start + ki as f64 * ic.output_dt,
                ..ic.clone()
            };
            let mut skip_first = !first;
            let mut y_last: Vec<f64> = y.clone();
            integrate_model(model, &y, &seg, |t, s| {
                if skip_first {
                    skip_first = false;
                } else {
                    on_sample(t, s);
                }
                y_last.clear();
                y_last.extend_from_slice(s);
            })?;
            y = y_last;
            first = false;
            prev_idx = ki;
        }
        if ki < n_out {
            apply_kick(model, &mut y, kick.amplitude, rng);
        }
    }
    *y0 = y;
    Ok(())
}

fn analyze(cfg: &RunConfig, trace: &EmissionTrace) -> (Option<BurstTrain>, Option<Spectrum>, FitsSummary) {
    let a = &cfg.analysis;
    let mut fits = FitsSummary {
        peak_power: trace.power.iter().cloned().fold(0.0, f64::max),
        mean_power: trace.power.iter().sum::<f64>() / trace.len() as f64,
        ..Default::default()
    };
    let bursts = if a.detect_bursts && trace.len() >= 16 {
        let threshold = match a.threshold_peak_fraction {
            Some(f) => BurstThreshold::PeakFraction(f),
            None => BurstThreshold::MedianFactor(a.threshold_factor),
        };
        let train = detect_bursts_with(trace, threshold, a.window_start_fraction.max(crate::analysis::SETTLE_FRACTION));
        fits.period_s = train.period;
        fits.n_bursts = train.onsets.len();
        fits.n_settled_bursts = train.settled.iter().filter(|s| **s).count();
        Some(train)
    } else {
        None
    };
    let spectrum = if a.psd && trace.len() >= 32 {
        match psd_with(trace, a.window_start_fraction, a.sideband_exclusion_bins) {
            Ok(sp) => {
                fits.crystalline_fraction = Some(sp.crystalline_fraction);
                fits.a_tot = Some(sp.a_tot);
                fits.a_sb = Some(sp.a_sb);
                fits.peak_freq_hz = Some(sp.peak_freq_hz);
                Some(sp)
            }
            Err(_) => None,
        }
    } else {
        None
    };
    (bursts, spectrum, fits)
}

/// Run a single resolved configuration into `out_root/<hash>/`.
pub fn run_single(cfg: &RunConfig, out_root: &Path) -> Result<RunArtifacts> {
    let hash = config_hash(cfg);
    let dir = out_root.join(format!("run-{hash}"));
    std::fs::create_dir_all(&dir)?;

    let ens = build_bins(&cfg.disorder, cfg.params.ensemble_size, cfg.bins)?;
    let m = ens.bin_count();
    let model = build_model(cfg, ens)?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        model: cfg.model.as_str(),
        config_hash: &hash,
        rng_seed: cfg.rng_seed,
        bins: m,
        cooperativity: cooperativity(&cfg.params).ok(),
        normalized_coupling: normalized_coupling(&cfg.params),
        kappa_s_rad_per_s: cfg.params.spin_decay(),
        kappa_tot_rad_per_s: cfg.params.kappa_tot(),
        params_rad_per_s: &cfg.params,
        integrator: &cfg.integrator,
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    write_file(&dir.join("config.json"), &serde_json::to_string_pretty(&cfg.source)?)?;

    let out = simulate(cfg, &model, m)?;
    write_trace_csv(&dir.join("trace.csv"), &out.trace)?;
    if let Some(opt) = &out.optical {
        let mut s = String::from("t_s,optical_power\n");
        for (i, p) in opt.iter().enumerate() {
            s.push_str(&format!("{},{}\n", out.trace.time(i), p));
        }
        write_file(&dir.join("optical_trace.csv"), &s)?;
    }

    let (bursts, spectrum, mut fits) = analyze(cfg, &out.trace);
    if let Some(rows) = &out.decomposition {
        let mut s = String::from("t_s,spontaneous,stimulated,superradiant\n");
        for r in rows {
            s.push_str(&format!("{},{},{},{}\n", r[0], r[1], r[2], r[3]));
        }
        write_file(&dir.join("decomposition.csv"), &s)?;
        // time-averaged ratio over the settled window
        let start = (cfg.analysis.window_start_fraction * rows.len() as f64) as usize;
        let (mut sr, mut stim) = (0.0, 0.0);
        for r in &rows[start.min(rows.len().saturating_sub(1))..] {
            stim += r[2];
            sr += r[3];
        }
        if stim != 0.0 {
            fits.sr_stim_ratio = Some(sr / stim);
        }
    }
    if let Some(train) = &bursts {
        let mut s = String::from("onset_s,peak_power,settled\n");
        for i in 0..train.onsets.len() {
            s.push_str(&format!("{},{},{}\n", train.onsets[i], train.peaks[i], train.settled[i]));
        }
        write_file(&dir.join("bursts.csv"), &s)?;
    }
    if let Some(sp) = &spectrum {
        let mut s = String::from("freq_hz,psd\n");
        for (f, p) in sp.freq_hz.iter().zip(&sp.psd) {
            s.push_str(&format!("{f},{p}\n"));
        }
        write_file(&dir.join("spectrum.csv"), &s)?;
    }
    write_file(&dir.join("fits.json"), &serde_json::to_string_pretty(&fits)?)?;

    Ok(RunArtifacts { dir, trace: out.trace, bursts, spectrum, fits, swept_value: None })
}

/// Run a config, expanding its sweep block if present. At most `workers`
/// runs are in flight; each owns its output directory exclusively.
pub fn run_config(cfg: &RunConfig, out_root: &Path, workers_override: Option<usize>) -> Result<Vec<RunArtifacts>> {
    let Some(sweep) = cfg.sweep.clone() else {
        return Ok(vec![run_single(cfg, out_root)?]);
    };
    let workers = workers_override.unwrap_or(sweep.workers).max(1);

    let mut children = Vec::with_capacity(sweep.values.len());
    for v in &sweep.values {
        let mut file = cfg.source.clone();
        file.sweep = None;
        apply_sweep_value(&mut file, &sweep.axis, *v)?;
        let child = resolve_config(file)?;
        children.push((*v, child));
    }

    let next = AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<RunArtifacts>>>> =
        children.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(children.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= children.len() {
                    break;
                }
                let res = run_single(&children[i].1, out_root);
                *results[i].lock().unwrap() = Some(res);
            });
        }
    });

    let mut artifacts = Vec::with_capacity(children.len());
    for (i, cell) in results.into_iter().enumerate() {
        let mut art = cell
            .into_inner()
            .unwrap()
            .expect("worker finished")?;
        art.swept_value = Some(children[i].0);
        artifacts.push(art);
    }

    #[derive(Serialize)]
    struct SweepRow<'a> {
        value: f64,
        dir: String,
        fits: &'a FitsSummary,
    }
    let rows: Vec<SweepRow> = artifacts
        .iter()
        .map(|a| SweepRow {
            value: a.swept_value.unwrap(),
            dir: a.dir.file_name().unwrap().to_string_lossy().into_owned(),
            fits: &a.fits,
        })
        .collect();
    let summary = serde_json::json!({ "axis": sweep.axis, "runs": rows });
    write_file(&out_root.join("sweep_summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(artifacts)
}

/// Compute and serialize the phase diagram described by the config's
/// `phase_diagram` block.
pub fn run_phase_diagram(cfg: &RunConfig, out_root: &Path) -> Result<PathBuf> {
    let block = cfg
        .source
        .phase_diagram
        .as_ref()
        .ok_or_else(|| Error::config("phase_diagram", "missing block"))?;
    let base = ReducedParams {
        delta: 0.0,
        ..presets::reduced_from_params(&cfg.params)
    };
    let grid = PhaseGrid::linspace(
        (block.g_norm_min, block.g_norm_max, block.g_norm_count),
        (block.disorder_min, block.disorder_max, block.disorder_count),
    );
    let axis = if block.include_relaxation_factor {
        CouplingAxis::EffectivePopulation
    } else {
        CouplingAxis::Bare
    };
    let diagram = bifurcation::phase_diagram(grid, &base, axis)?;

    let hash = config_hash(cfg);
    let dir = out_root.join(format!("run-{hash}"));
    std::fs::create_dir_all(&dir)?;

    let mut csv = String::from("g_norm,normalized_disorder,label\n");
    let ng = diagram.grid.g_norm.len();
    for (i_d, d) in diagram.grid.disorder.iter().enumerate() {
        for (i_g, g) in diagram.grid.g_norm.iter().enumerate() {
            csv.push_str(&format!("{g},{d},{}\n", diagram.labels[i_d * ng + i_g].as_str()));
        }
    }
    write_file(&dir.join("phase_diagram.csv"), &csv)?;

    let boundaries = serde_json::json!({
        "axis": match axis { CouplingAxis::Bare => "bare", CouplingAxis::EffectivePopulation => "effective_population" },
        "c_equals_1": diagram.c1_boundary,
        "hopf": diagram.hopf_boundary,
    });
    write_file(&dir.join("boundaries.json"), &serde_json::to_string_pretty(&boundaries)?)?;
    write_file(&dir.join("config.json"), &serde_json::to_string_pretty(&cfg.source)?)?;
    Ok(dir)
}

/// Execute a packaged `reproduce` target.
pub fn reproduce(id: &str, out_root: &Path, workers: Option<usize>) -> Result<Vec<RunArtifacts>> {
    let parts = presets::preset(id)
        .ok_or_else(|| Error::Domain(format!("unknown figure id `{id}`; known: {:?}", presets::list())))?;
    let mut all = Vec::new();
    for (name, text) in parts {
        let cfg = crate::config::parse_config(&text)?;
        let sub = out_root.join(&name);
        std::fs::create_dir_all(&sub)?;
        if cfg.source.phase_diagram.is_some() {
            run_phase_diagram(&cfg, &sub)?;
        } else {
            let mut arts = run_config(&cfg, &sub, workers)?;
            all.append(&mut arts);
        }
    }
    Ok(all)
}
