//! Acceptance suite: one test per criterion, each printing a labeled
//! PASS/FAIL line (visible with `--nocapture`). The pulsed-superradiance
//! operating point (Regime III) is shared as a lazily computed fixture.

use std::sync::OnceLock;
use std::time::Instant;

use superburst::analysis::{
    analytic_burst, burst_period_formula, data_collapse, detect_bursts_with, onset_phases, psd_with,
    scaling_fit, BurstPeriod, BurstThreshold, BurstTrain, EmissionTrace,
};
use superburst::bifurcation::{
    char_coeffs, classify, critical_disorder, jacobian, nontrivial_eigenvalues, phase_diagram,
    reduced_derivs, steady_states, CouplingAxis, PhaseGrid, PhaseLabel, ReducedParams, ReducedState,
};
use superburst::cumulant::CumulantModel;
use superburst::meanfield::{CavityMeanField, MeanFieldState};
use superburst::model::{build_bins, hz_to_rad, BinnedEnsemble, DisorderKind, DisorderSpec, ModelParams};
use superburst::ode::{integrate_with, EmissionModel, IntegratorConfig, Method, OdeRhs};
use superburst::presets::{reduced_reference, regime_iii_params, regime_iii_three_level};
use superburst::threelevel::{ThreeLevel, ThreeLevelState};

const SETTLE: f64 = 0.35;
const QUARTER_PEAK: BurstThreshold = BurstThreshold::PeakFraction(0.25);

fn gaussian_ens(n: f64, m: usize) -> BinnedEnsemble {
    build_bins(
        &DisorderSpec { kind: DisorderKind::Gaussian { fwhm: hz_to_rad(160e3) }, rng_seed: 1 },
        n,
        m,
    )
    .unwrap()
}

fn single_bin(n: f64) -> BinnedEnsemble {
    build_bins(
        &DisorderSpec { kind: DisorderKind::Table { entries: vec![(0.0, 1.0)] }, rng_seed: 1 },
        n,
        1,
    )
    .unwrap()
}

/// Simulate a cumulant model and record power plus per-sample decomposition.
fn run_cumulant_trace(
    params: &ModelParams,
    m: usize,
    t_end: f64,
) -> (EmissionTrace, Vec<[f64; 3]>) {
    let ens = gaussian_ens(params.ensemble_size, m);
    run_cumulant_trace_with_ens(params, ens, t_end)
}

fn run_cumulant_trace_with_ens(
    params: &ModelParams,
    ens: BinnedEnsemble,
    t_end: f64,
) -> (EmissionTrace, Vec<[f64; 3]>) {
    let model = CumulantModel::new(params.clone(), ens).unwrap();
    let y0 = model.initial_state().pack();
    let cfg = IntegratorConfig {
        t_end,
        output_dt: 2.5e-7,
        rel_tol: 1e-7,
        abs_tol: 1e-9,
        ..Default::default()
    };
    let mut power = Vec::with_capacity(cfg.n_output() + 1);
    let mut decomp = Vec::with_capacity(cfg.n_output() + 1);
    integrate_with(&model, &y0, &cfg, |_t, y| {
        power.push(model.emission_power(y));
        let d = model.decomposition_from_flat(y);
        decomp.push([d.spontaneous, d.stimulated, d.superradiant]);
    })
    .unwrap();
    (EmissionTrace::new(0.0, cfg.output_dt, power), decomp)
}

struct RegimeIii {
    trace: EmissionTrace,
    decomposition: Vec<[f64; 3]>,
    period: f64,
}

static REGIME_III: OnceLock<RegimeIii> = OnceLock::new();

/// The shared M = 129 pulsed-phase trajectory at the reference rates.
fn regime_iii() -> &'static RegimeIii {
    REGIME_III.get_or_init(|| {
        let (trace, decomposition) = run_cumulant_trace(&regime_iii_params(), 129, 1.2e-3);
        let train = detect_bursts_with(&trace, QUARTER_PEAK, SETTLE);
        let period = train.period.expect("regime III produces a settled pulse train");
        RegimeIii { trace, decomposition, period }
    })
}

fn crystalline_fraction(trace: &EmissionTrace) -> f64 {
    psd_with(trace, SETTLE, 4).unwrap().crystalline_fraction
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..xs.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    cov / (vx * vy).sqrt()
}

#[test]
fn acceptance_01_hopf_critical_disorder() {
    let started = Instant::now();
    let base = reduced_reference();
    let dc = critical_disorder(&base, hz_to_rad(10.0), hz_to_rad(20e3)).unwrap();
    let gc = base.with_delta(dc).effective_linewidth();

    let dc_ref = hz_to_rad(5e3);
    let gc_ref = hz_to_rad(35e3);
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 01 (Hopf critical disorder): delta_c = 2pi x {:.3} kHz (target 5 +- 25%), \
         Gamma_c = 2pi x {:.3} kHz (target 35 +- 25%), runtime {:?}",
        dc / hz_to_rad(1e3),
        gc / hz_to_rad(1e3),
        elapsed
    );
    assert!((dc - dc_ref).abs() <= 0.25 * dc_ref, "delta_c out of band");
    assert!((gc - gc_ref).abs() <= 0.25 * gc_ref, "Gamma_c out of band");
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");

    // eigenvalue oracle at the root: one conjugate pair on the axis
    let ev = nontrivial_eigenvalues(&base.with_delta(dc)).unwrap();
    let pair: Vec<_> = ev.iter().filter(|l| l.im.abs() > 1.0).collect();
    assert_eq!(pair.len(), 2);
    for l in pair {
        assert!(l.re.abs() <= 1e-6 * l.im.abs());
    }
    println!("ACCEPTANCE 01: PASS");
}

#[test]
fn acceptance_02_phase_diagram_topology() {
    let started = Instant::now();
    let base = reduced_reference();
    // the coupling axis folds in the sqrt(gamma_-/gamma_+) population factor
    // so the zero-disorder onset can be compared against unity
    let axis = CouplingAxis::EffectivePopulation;
    let grid = PhaseGrid::linspace((0.02, 2.5, 100), (0.0, 30.0, 100));
    let diagram = phase_diagram(grid, &base, axis).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(diagram.labels.len(), 10_000);

    // zero-disorder onset of the periodic phase, refined by bisection
    let (mut lo, mut hi) = (0.02, 2.5);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if classify(mid, 0.0, &base, axis) == PhaseLabel::PeriodicSr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let onset0 = 0.5 * (lo + hi);

    // onset at the experimental disorder Gamma = 2pi x 160 kHz:
    // normalized disorder = Gamma/gamma_0 - 1 with gamma_0 = 2 gamma_s
    let d_exp = hz_to_rad(160e3) / (2.0 * base.gamma_s) - 1.0;
    let (mut lo, mut hi) = (0.02, 2.5);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if classify(mid, d_exp, &base, axis) == PhaseLabel::PeriodicSr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let onset_exp = 0.5 * (lo + hi);

    println!(
        "ACCEPTANCE 02 (phase diagram): zero-disorder periodic onset at g_norm = {onset0:.3} \
         (target [0.9, 1.1]); onset at Gamma = 160 kHz disorder (d = {d_exp:.1}): {onset_exp:.3} \
         (target < 0.7); 100x100 grid in {elapsed:?}"
    );
    assert!((0.9..=1.1).contains(&onset0), "zero-disorder onset {onset0}");
    assert!(onset_exp < 0.7, "disordered onset {onset_exp}");
    assert!(elapsed.as_secs_f64() < 10.0, "grid runtime {elapsed:?}");
    assert!(!diagram.hopf_boundary.is_empty() && !diagram.c1_boundary.is_empty());
    println!("ACCEPTANCE 02: PASS");
}

#[test]
fn acceptance_03_periodicity_cumulant_vs_three_level() {
    // cumulant, M = 129
    let fx = regime_iii();
    let t_cum = fx.period;

    // three-level mean field, M = 101
    let p3 = regime_iii_three_level();
    let ens = gaussian_ens(p3.ensemble_size, 101);
    let model = ThreeLevel::new(p3, ens).unwrap();
    let y0 = ThreeLevelState::all_ground(101).pack();
    let cfg = IntegratorConfig {
        t_end: 2.0e-3,
        output_dt: 2.5e-7,
        rel_tol: 1e-7,
        abs_tol: 1e-9,
        ..Default::default()
    };
    let mut power = Vec::new();
    let mut optical = Vec::new();
    integrate_with(&model, &y0, &cfg, |_t, y| {
        power.push(model.emission_power(y));
        optical.push(model.optical_power(y));
    })
    .unwrap();
    let tr3 = EmissionTrace::new(0.0, cfg.output_dt, power);
    let train3 = detect_bursts_with(&tr3, QUARTER_PEAK, 0.4);
    let t_mf3 = train3.period.expect("three-level pulse train");

    println!(
        "ACCEPTANCE 03 (periodicity): cumulant T = {:.1} us (target 80 +- 15%), \
         three-level mean field T = {:.1} us (target 60 +- 15%)",
        t_cum * 1e6,
        t_mf3 * 1e6
    );
    assert!((t_cum - 80e-6).abs() <= 0.15 * 80e-6, "cumulant period {t_cum}");
    assert!((t_mf3 - 60e-6).abs() <= 0.15 * 60e-6, "three-level period {t_mf3}");

    // the transferred optical pulse train is time-synchronized with the
    // microwave one: cross-correlation peaks at a small lag
    let i0 = (0.4 * tr3.len() as f64) as usize;
    let mw: Vec<f64> = tr3.power[i0..].to_vec();
    let op: Vec<f64> = optical[i0..].to_vec();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mw_m, op_m) = (mean(&mw), mean(&op));
    let max_lag = (0.5 * t_mf3 / cfg.output_dt) as isize;
    let mut best = (0isize, f64::NEG_INFINITY);
    for lag in -max_lag..=max_lag {
        let mut acc = 0.0;
        for i in 0..mw.len() {
            let j = i as isize + lag;
            if j >= 0 && (j as usize) < op.len() {
                acc += (mw[i] - mw_m) * (op[j as usize] - op_m);
            }
        }
        if acc > best.1 {
            best = (lag, acc);
        }
    }
    let lag = best.0 as f64 * cfg.output_dt;
    println!("  optical-microwave pulse lag: {:.2} us ({:.0}% of the period)", lag * 1e6, 100.0 * lag.abs() / t_mf3);
    assert!(lag.abs() <= 0.15 * t_mf3, "optical lag {lag} vs period {t_mf3}");
    println!("ACCEPTANCE 03: PASS");
}

#[test]
fn acceptance_04_emission_decomposition_ratio() {
    let fx = regime_iii();
    let start = (SETTLE * fx.decomposition.len() as f64) as usize;
    let (mut stim, mut sr) = (0.0, 0.0);
    for row in &fx.decomposition[start..] {
        stim += row[1];
        sr += row[2];
    }
    let ratio = sr / stim;
    println!(
        "ACCEPTANCE 04 (emission decomposition): time-averaged superradiant/stimulated = {ratio:.1} \
         (target > 10)"
    );
    assert!(ratio > 10.0, "ratio {ratio}");
    println!("ACCEPTANCE 04: PASS");
}

#[test]
fn acceptance_05_disorder_necessity() {
    let fx = regimes_disorder();
    println!(
        "ACCEPTANCE 05 (disorder necessity): crystalline fraction {:.3} with disorder \
         (target > 0.3), {:.4} without (target < 0.05)",
        fx.0, fx.1
    );
    assert!(fx.0 > 0.3, "disordered fraction {}", fx.0);
    assert!(fx.1 < 0.05, "homogeneous fraction {}", fx.1);
    println!("ACCEPTANCE 05: PASS");
}

fn regimes_disorder() -> (f64, f64) {
    let with = crystalline_fraction(&regime_iii().trace);
    // identical rates, single zero-detuning bin; longer window so the
    // relaxation-oscillation transient (damping ~3.4e3 1/s) has died away
    let (trace, _) = run_cumulant_trace_with_ens(
        &regime_iii_params(),
        single_bin(regime_iii_params().ensemble_size),
        3.0e-3,
    );
    (with, crystalline_fraction(&trace))
}

#[test]
fn acceptance_06_scaling_laws() {
    // One-decade sweep of the participating ensemble size at fixed g,
    // anchored at the experimental point; every point sits inside the
    // periodic phase.
    let base = regime_iii_params();
    let values = [4.0e9, 6.3e9, 1.0e10, 1.6e10, 2.5e10, 4.0e10];
    let mut t_points = Vec::new();
    let mut pk_points = Vec::new();
    let mut pbar_points = Vec::new();
    let mut traces = Vec::new();
    for &n in &values {
        let mut p = base.clone();
        p.ensemble_size = n;
        let t_guess = 80e-6 * 1e10 / n;
        let t_end = 0.45e-3 + 8.0 * t_guess.max(20e-6);
        let (trace, _) = run_cumulant_trace(&p, 65, t_end);
        let settle = 0.45e-3 / t_end;
        let train = detect_bursts_with(&trace, QUARTER_PEAK, settle);
        let period = train.period.unwrap_or(f64::NAN);
        let settled_peaks: Vec<f64> = train
            .peaks
            .iter()
            .zip(&train.settled)
            .filter(|(_, s)| **s)
            .map(|(p, _)| *p)
            .collect();
        let peak = median(&settled_peaks);
        let i0 = (settle * trace.len() as f64) as usize;
        let pbar = trace.power[i0..].iter().sum::<f64>() / (trace.len() - i0) as f64;
        println!(
            "  N = {n:.2e}: T = {:.2} us, P_peak = {:.3e}, P_bar = {:.3e} ({} settled bursts)",
            period * 1e6,
            peak,
            pbar,
            settled_peaks.len()
        );
        t_points.push((n, period));
        pk_points.push((n, peak));
        pbar_points.push((n, pbar));
        traces.push((trace, n));
    }

    let t_fit = scaling_fit(&t_points).unwrap();
    let pk_fit = scaling_fit(&pk_points).unwrap();
    let pbar_fit = scaling_fit(&pbar_points).unwrap();

    // collapse over the experiment's detuning-tuned range (~1.5x in N),
    // trimmed to a few rescaled periods past settling
    let collapse_traces: Vec<(EmissionTrace, f64)> = traces
        .iter()
        .filter(|(_, n)| (6.0e9..=2.6e10).contains(n))
        .map(|(tr, n)| {
            let t_guess = 80e-6 * 1e10 / n;
            let keep = ((0.45e-3 + 4.0 * t_guess) / tr.dt) as usize;
            let power = tr.power[..keep.min(tr.len())].to_vec();
            (EmissionTrace::new(tr.t0, tr.dt, power), *n)
        })
        .collect();
    let metric = data_collapse(&collapse_traces).map(|c| c.metric);

    println!(
        "ACCEPTANCE 06 (scaling laws over one decade): T exponent {:+.3} (target -1 +- 0.1), \
         P_peak exponent {:+.3} (target 2 +- 0.15), P_bar exponent {:+.3} (target 2 +- 0.15), \
         collapse metric {:?} over {} traces (target < 0.15)",
        t_fit.exponent,
        pk_fit.exponent,
        pbar_fit.exponent,
        metric,
        collapse_traces.len()
    );
    // the classical-repumping route over the same grid, for reference
    let formula_t: Vec<(f64, f64)> = values
        .iter()
        .map(|&n| {
            let t = match burst_period_formula(
                base.pump,
                0.0,
                n,
                base.coupling,
                base.cavity_decay,
                base.inhom_linewidth,
            ) {
                BurstPeriod::Periodic { approx, .. } => approx,
                BurstPeriod::NoBurst => f64::NAN,
            };
            (n, t)
        })
        .collect();
    let formula_fit = scaling_fit(&formula_t).unwrap();
    println!(
        "  NOTE: the classical repumping formula gives T exponent {:+.3} over the same grid \
         (proportional to 1/N by construction); the simulated limit cycle follows the ideal \
         laws only near threshold (C ~ 3..8, about 0.4 decade), because each burst only \
         partially dumps the inversion at larger C.",
        formula_fit.exponent
    );

    let t_ok = (t_fit.exponent + 1.0).abs() <= 0.1;
    let pk_ok = (pk_fit.exponent - 2.0).abs() <= 0.15;
    let pbar_ok = (pbar_fit.exponent - 2.0).abs() <= 0.15;
    let col_ok = metric.as_ref().map(|m| *m < 0.15).unwrap_or(false);
    if t_ok && pk_ok && pbar_ok && col_ok {
        println!("ACCEPTANCE 06: PASS");
    } else {
        println!("ACCEPTANCE 06: FAIL (simulation-level exponents deviate from the idealized laws; see note)");
    }
    assert!(t_ok, "T exponent {:+.3} outside -1 +- 0.1", t_fit.exponent);
    assert!(pk_ok, "P_peak exponent {:+.3} outside 2 +- 0.15", pk_fit.exponent);
    assert!(pbar_ok, "P_bar exponent {:+.3} outside 2 +- 0.15", pbar_fit.exponent);
    assert!(col_ok, "collapse metric {metric:?} not below 0.15");
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn acceptance_07_transient_burst_oracle() {
    // bad-cavity mean field from a tipped state vs the closed-form delay
    // and width; N spans one decade
    let kappa = hz_to_rad(3.6e6);
    let g = kappa / (10.0 * (4.0e10f64).sqrt());
    let theta = 0.05;
    let mut tau_d_n = Vec::new();
    for &n in &[4.0e9, 1.0e10, 2.0e10, 4.0e10] {
        let params = ModelParams {
            cavity_freq: 0.0,
            cavity_decay: kappa,
            coupling: g,
            dephasing: 0.0,
            relaxation: 0.0,
            pump: 0.0,
            ensemble_size: n,
            thermal_photons: 0.0,
            ensemble_detuning: 0.0,
            inhom_linewidth: hz_to_rad(160e3),
            spin_center_freq: 0.0,
        };
        let reference = analytic_burst(&params, theta).unwrap();
        let model = CavityMeanField::new(params, single_bin(n)).unwrap();
        let y0 = MeanFieldState::tipped(1, theta).pack_cavity();
        let t_end = reference.tau_d + 8.0 / reference.rate;
        let cfg = IntegratorConfig {
            t_end,
            output_dt: t_end / 16_384.0,
            max_step: 0.2 / kappa,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let mut ts = Vec::new();
        let mut ps = Vec::new();
        integrate_with(&model, &y0, &cfg, |t, y| {
            ts.push(t);
            ps.push(model.emission_power(y));
        })
        .unwrap();
        let ipk = ps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let tau_d_sim = ts[ipk];
        // FWHM around the peak by linear interpolation
        let half = 0.5 * ps[ipk];
        let mut left = ipk;
        while left > 0 && ps[left] > half {
            left -= 1;
        }
        let mut right = ipk;
        while right + 1 < ps.len() && ps[right] > half {
            right += 1;
        }
        let frac_l = (half - ps[left]) / (ps[left + 1] - ps[left]);
        let t_l = ts[left] + frac_l * (ts[left + 1] - ts[left]);
        let frac_r = (half - ps[right - 1]) / (ps[right] - ps[right - 1]);
        let t_r = ts[right - 1] + frac_r * (ts[right] - ts[right - 1]);
        let tau_w_sim = t_r - t_l;

        let derr = (tau_d_sim - reference.tau_d).abs() / reference.tau_d;
        let werr = (tau_w_sim - reference.tau_w).abs() / reference.tau_w;
        println!(
            "  N = {n:.1e}: tau_d {:.3} us vs analytic {:.3} us ({:.1}%), \
             tau_w {:.3} us vs {:.3} us ({:.1}%)",
            tau_d_sim * 1e6,
            reference.tau_d * 1e6,
            100.0 * derr,
            tau_w_sim * 1e6,
            reference.tau_w * 1e6,
            100.0 * werr
        );
        assert!(derr <= 0.10, "tau_d off by {:.1}% at N = {n:.1e}", 100.0 * derr);
        assert!(werr <= 0.10, "tau_w off by {:.1}% at N = {n:.1e}", 100.0 * werr);
        tau_d_n.push(tau_d_sim * n);
    }
    let max = tau_d_n.iter().cloned().fold(f64::MIN, f64::max);
    let min = tau_d_n.iter().cloned().fold(f64::MAX, f64::min);
    println!(
        "ACCEPTANCE 07 (transient burst): tau_d * N spread {:.1}% (target < 10%)",
        100.0 * (max - min) / min
    );
    assert!(max / min - 1.0 <= 0.10, "tau_d N not constant: {tau_d_n:?}");
    println!("ACCEPTANCE 07: PASS");
}

#[test]
fn acceptance_08_algebra_transcription_suite() {
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut branch_draws = 0;
    for _ in 0..10_000 {
        let gamma1 = rng.gen_range(1.0..1e4);
        let pump = gamma1 + rng.gen_range(1.0..1e4);
        let p = ReducedParams {
            collective_coupling: rng.gen_range(1e4..1e7),
            cavity_decay: rng.gen_range(1e5..1e8),
            gamma_s: rng.gen_range(1e2..1e6),
            gamma_plus: pump + gamma1,
            gamma_minus: pump - gamma1,
            delta: rng.gen_range(0.0..1e5),
        };
        let ss = steady_states(&p);

        // steady-state residuals
        let scale = (0.5 * p.cavity_decay + p.collective_coupling + p.gamma_plus + p.gamma_s)
            * (1.0 + ss.trivial.z.abs());
        let d = reduced_derivs(&ss.trivial, &p);
        for v in [d.w, d.x, d.y, d.z] {
            assert!(v.abs() <= 1e-12 * scale);
        }
        let Some(sp) = ss.nontrivial_plus else { continue };
        branch_draws += 1;
        let sm = ss.nontrivial_minus.unwrap();
        let scale = (0.5 * p.cavity_decay + p.collective_coupling + p.gamma_plus + p.gamma_s)
            * (1.0 + sp.w.abs().max(sp.x.abs()).max(sp.y.abs()).max(sp.z.abs()));
        for s in [&sp, &sm] {
            let d = reduced_derivs(s, &p);
            for v in [d.w, d.x, d.y, d.z] {
                assert!(v.abs() <= 1e-12 * scale, "residual {v:e}");
            }
        }
        // exact Z2 pairing
        assert_eq!(sm.w, -sp.w);
        assert_eq!(sm.x, -sp.x);
        assert_eq!(sm.y, -sp.y);
        assert_eq!(sm.z, sp.z);

        // closed-form coefficients vs the numeric polynomial through the
        // quartic roots of the Jacobian route: evaluate both quartics on a
        // probe circle
        let (c3, c2, c1, c0) = char_coeffs(&p).unwrap();
        let jac = jacobian(&sp, &p);
        // direct minor-expansion coefficients of det(lI - J)
        let (n3, n2, n1, n0) = charpoly4(jac);
        let g2 = p.collective_coupling * p.collective_coupling;
        let d2 = p.delta * p.delta;
        let t3 = p.gamma_plus + 2.0 * p.gamma_s + 0.5 * p.cavity_decay;
        let t2 = d2
            + 2.0 * g2 * p.gamma_minus / p.cavity_decay
            + 0.5
                * ((p.gamma_plus + p.gamma_s) * (2.0 * p.gamma_s + p.cavity_decay)
                    + d2 / p.gamma_s * (2.0 * p.gamma_plus + p.cavity_decay));
        let t1 = 2.0 * g2 * p.gamma_minus * (p.gamma_s + p.cavity_decay) / p.cavity_decay
            + p.gamma_plus * p.cavity_decay * (p.gamma_s * p.gamma_s + 3.0 * d2) / (2.0 * p.gamma_s);
        let t0 = 2.0 * g2 * p.gamma_minus * p.gamma_s
            + p.gamma_plus * p.cavity_decay * (p.gamma_s * p.gamma_s + d2);
        for (a, b, floor) in [(c3, n3, t3), (c2, n2, t2), (c1, n1, t1), (c0, n0, t0)] {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(floor),
                "charpoly mismatch {a:e} vs {b:e}"
            );
        }

        // Jacobian vs central finite differences
        let vars = |s: &ReducedState| [s.w, s.x, s.y, s.z];
        for j in 0..4 {
            let h = 1e-6 * (1.0 + vars(&sp)[j].abs());
            let mut up = sp;
            let mut dn = sp;
            match j {
                0 => {
                    up.w += h;
                    dn.w -= h;
                }
                1 => {
                    up.x += h;
                    dn.x -= h;
                }
                2 => {
                    up.y += h;
                    dn.y -= h;
                }
                _ => {
                    up.z += h;
                    dn.z -= h;
                }
            }
            let fu = vars(&reduced_derivs(&up, &p));
            let fd = vars(&reduced_derivs(&dn, &p));
            for i in 0..4 {
                let fd_ij = (fu[i] - fd[i]) / (2.0 * h);
                let scale = jac[i][j].abs().max(1e-6 * (p.cavity_decay + p.collective_coupling));
                assert!(
                    (fd_ij - jac[i][j]).abs() <= 1e-6 * scale.max(1.0),
                    "FD mismatch at ({i},{j})"
                );
            }
        }
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 08 (algebra transcription): 10^4 draws, {branch_draws} with the non-trivial \
         branch, all residual/charpoly/FD/Z2 checks passed in {elapsed:?} (target < 10 s)"
    );
    assert!(branch_draws > 500);
    assert!(elapsed.as_secs_f64() < 10.0);
    println!("ACCEPTANCE 08: PASS");
}

/// Characteristic polynomial of a 4x4 matrix by cofactor expansion with
/// polynomial arithmetic (independent of the closed forms under test).
fn charpoly4(a: [[f64; 4]; 4]) -> (f64, f64, f64, f64) {
    type Poly = [f64; 5];
    fn pmul(x: &Poly, y: &Poly) -> Poly {
        let mut r = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 - i {
                r[i + j] += x[i] * y[j];
            }
        }
        r
    }
    let entry = |i: usize, j: usize| -> Poly {
        let mut p = [0.0; 5];
        p[0] = -a[i][j];
        if i == j {
            p[1] = 1.0;
        }
        p
    };
    let mut acc: Poly = [0.0; 5];
    for p0 in 0..4usize {
        for p1 in 0..4usize {
            for p2 in 0..4usize {
                for p3 in 0..4usize {
                    let perm = [p0, p1, p2, p3];
                    if p1 == p0 || p2 == p0 || p2 == p1 || p3 == p0 || p3 == p1 || p3 == p2 {
                        continue;
                    }
                    let mut inv = 0;
                    for i in 0..4 {
                        for j in i + 1..4 {
                            if perm[i] > perm[j] {
                                inv += 1;
                            }
                        }
                    }
                    let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
                    let mut term: Poly = [0.0; 5];
                    term[0] = 1.0;
                    for (i, &j) in perm.iter().enumerate() {
                        term = pmul(&term, &entry(i, j));
                    }
                    for k in 0..5 {
                        acc[k] += sign * term[k];
                    }
                }
            }
        }
    }
    (acc[3], acc[2], acc[1], acc[0])
}

#[test]
fn acceptance_09_binning_invariance_and_small_instance() {
    // Regime-III period must be insensitive to the bin count
    let t_129 = regime_iii().period;
    let (trace_257, _) = run_cumulant_trace(&regime_iii_params(), 257, 1.0e-3);
    let train = detect_bursts_with(&trace_257, QUARTER_PEAK, 0.42);
    let t_257 = train.period.expect("M = 257 pulse train");
    let drift = (t_257 - t_129).abs() / t_129;
    println!(
        "ACCEPTANCE 09 (binning invariance): T(129) = {:.2} us, T(257) = {:.2} us, drift {:.2}% \
         (target < 5%)",
        t_129 * 1e6,
        t_257 * 1e6,
        100.0 * drift
    );
    assert!(drift < 0.05, "binning drift {drift}");

    // small-instance oracle: 8 spins in two bins vs the per-spin equations
    let diff = small_instance_max_diff();
    println!("ACCEPTANCE 09 (small instance): max |<b'b>| deviation {diff:.3e} (target < 1e-8)");
    assert!(diff < 1e-8, "small-instance deviation {diff}");
    println!("ACCEPTANCE 09: PASS");
}

/// Direct per-spin second-order cumulant equations for N spins (no binning),
/// used as the independent oracle for the binned model.
struct PerSpinCumulant {
    n: usize,
    kappa: f64,
    g: f64,
    kappa_s: f64,
    gamma1: f64,
    pump: f64,
    nth: f64,
    det: Vec<f64>,
}

impl PerSpinCumulant {
    // layout: [n, ReX(n), ImX(n), ReC(n*n), ImC(n*n), u(n)] with C_kk unused
    fn dim(&self) -> usize {
        1 + 2 * self.n + 2 * self.n * self.n + self.n
    }
}

impl OdeRhs for PerSpinCumulant {
    fn dim(&self) -> usize {
        PerSpinCumulant::dim(self)
    }
    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let n = self.n;
        let (xr0, xi0, cr0, ci0, u0) =
            (1, 1 + n, 1 + 2 * n, 1 + 2 * n + n * n, 1 + 2 * n + 2 * n * n);
        let mut flux = 0.0;
        for k in 0..n {
            flux += y[xi0 + k];
        }
        dydt[0] = -self.kappa * y[0] + self.kappa * self.nth + 2.0 * self.g * flux;
        for k in 0..n {
            let (xr, xi) = (y[xr0 + k], y[xi0 + k]);
            let u = y[u0 + k];
            // sum_{j != k} C_jk
            let mut sr = 0.0;
            let mut si = 0.0;
            for j in 0..n {
                if j != k {
                    sr += y[cr0 + j * n + k];
                    si += y[ci0 + j * n + k];
                }
            }
            let src_re = 0.5 * (1.0 + u) + sr + u * y[0];
            let src_im = si;
            let half = 0.5 * (self.kappa + self.kappa_s);
            dydt[xr0 + k] = self.det[k] * xi - half * xr - self.g * src_im;
            dydt[xi0 + k] = -self.det[k] * xr - half * xi + self.g * src_re;
            dydt[u0 + k] = self.pump * (1.0 - u) - self.gamma1 * (1.0 + u) - 4.0 * self.g * xi;
        }
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                if i == j {
                    dydt[cr0 + idx] = 0.0;
                    dydt[ci0 + idx] = 0.0;
                    continue;
                }
                let (cr, ci) = (y[cr0 + idx], y[ci0 + idx]);
                let dd = self.det[i] - self.det[j];
                let (ui, uj) = (y[u0 + i], y[u0 + j]);
                let (xri, xii) = (y[xr0 + i], y[xi0 + i]);
                let (xrj, xij) = (y[xr0 + j], y[xi0 + j]);
                dydt[cr0 + idx] = -dd * ci - self.kappa_s * cr + self.g * (ui * xij + uj * xii);
                dydt[ci0 + idx] = dd * cr - self.kappa_s * ci + self.g * (uj * xri - ui * xrj);
            }
        }
    }
}

fn small_instance_max_diff() -> f64 {
    let kappa = hz_to_rad(3.6e6);
    let g = hz_to_rad(2.0e5);
    let gamma = hz_to_rad(2.0e4);
    let gamma1 = hz_to_rad(1.0e4);
    let pump = hz_to_rad(5.0e4);
    let nth = 0.5;
    let d1 = -hz_to_rad(3.0e4);
    let d2 = hz_to_rad(3.0e4);

    // per-spin system: 8 spins, 5 at d1 and 3 at d2
    let mut det = vec![d1; 5];
    det.extend(vec![d2; 3]);
    let per = PerSpinCumulant {
        n: 8,
        kappa,
        g,
        kappa_s: gamma + gamma1 + pump,
        gamma1,
        pump,
        nth,
        det,
    };
    let mut y0 = vec![0.0; OdeRhs::dim(&per)];
    y0[0] = nth;
    for k in 0..8 {
        y0[1 + 2 * 8 + 2 * 64 + k] = -1.0;
    }

    // binned system: two bins with weights 5/8, 3/8
    let params = ModelParams {
        cavity_freq: 0.0,
        cavity_decay: kappa,
        coupling: g,
        dephasing: gamma,
        relaxation: gamma1,
        pump,
        ensemble_size: 8.0,
        thermal_photons: nth,
        ensemble_detuning: 0.0,
        inhom_linewidth: hz_to_rad(60e3),
        spin_center_freq: 0.0,
    };
    let ens = build_bins(
        &DisorderSpec {
            kind: DisorderKind::Table { entries: vec![(d1, 5.0 / 8.0), (d2, 3.0 / 8.0)] },
            rng_seed: 0,
        },
        8.0,
        2,
    )
    .unwrap();
    let binned = CumulantModel::new(params, ens).unwrap();
    let z0 = binned.initial_state().pack();

    let cfg = IntegratorConfig {
        method: Method::FixedRk4,
        fixed_step: 1e-9,
        t_end: 2.0e-5,
        output_dt: 1e-7,
        ..Default::default()
    };
    let mut n_per = Vec::new();
    integrate_with(&per, &y0, &cfg, |_t, y| n_per.push(y[0])).unwrap();
    let mut n_bin = Vec::new();
    integrate_with(&binned, &z0, &cfg, |_t, y| n_bin.push(y[0])).unwrap();

    let mut maxdiff = 0.0f64;
    for (a, b) in n_per.iter().zip(&n_bin) {
        maxdiff = maxdiff.max((a - b).abs() / b.abs().max(1.0));
    }
    maxdiff
}

#[test]
fn acceptance_10_noise_robustness() {
    let base = regime_iii_params();
    let nths = [3.2, 1e3, 1e4, 3e4, 1e5, 3e5];
    let mut fractions = Vec::new();
    let mut mean_n_low = 0.0;
    for (i, &nth) in nths.iter().enumerate() {
        let mut p = base.clone();
        p.thermal_photons = nth;
        let (trace, _) = run_cumulant_trace(&p, 65, 1.0e-3);
        let frac = crystalline_fraction(&trace);
        let i0 = (SETTLE * trace.len() as f64) as usize;
        let mean_n = trace.power[i0..].iter().sum::<f64>()
            / ((trace.len() - i0) as f64 * base.cavity_decay);
        if i == 0 {
            mean_n_low = mean_n;
        }
        println!("  N_th = {nth:9.3e}: crystalline fraction {frac:.3}, mean photon number {mean_n:.3e}");
        fractions.push(frac);
    }
    let rho = spearman(&nths, &fractions);
    println!(
        "ACCEPTANCE 10 (noise robustness): rank correlation {rho:.3} (target < -0.9); \
         pulse train collapses as N_th approaches the mean photon number {mean_n_low:.2e}"
    );
    assert!(rho < -0.9, "rank correlation {rho}");
    // degradation brackets the mean photon number
    assert!(fractions[0] > 0.3, "noiseless fraction {}", fractions[0]);
    assert!(*fractions.last().unwrap() < 0.05 * fractions[0], "no collapse at N_th >= mean n");
    assert!(*nths.last().unwrap() >= mean_n_low, "sweep does not reach the mean photon number");
    println!("ACCEPTANCE 10: PASS");
}

#[test]
fn acceptance_11_onset_phase_uniformity() {
    use rand::SeedableRng;
    let base = regime_iii_params();
    let ens = gaussian_ens(base.ensemble_size, 65);
    let model = CavityMeanField::new(base.clone(), ens).unwrap();
    let cfg = IntegratorConfig {
        t_end: 2.6e-3,
        output_dt: 2.5e-7,
        rel_tol: 1e-7,
        abs_tol: 1e-9,
        ..Default::default()
    };

    // Poisson kick train: memoryless arrivals make the train onset phase
    // uniform; the kick amplitude is far below the macroscopic coherence
    let kick_amp = 1e-4;
    let mean_interval = 3e-4;

    let run_one = |seed: u64| -> Option<BurstTrain> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // ground state with NO deterministic seed: only kicks ignite
        let state = MeanFieldState::ground_with_seed(65, 0.0);
        let mut y = state.pack_cavity();
        let mut power = Vec::with_capacity(cfg.n_output() + 1);
        // draw kick times, snapped to the sample grid
        let mut kick_at = Vec::new();
        let mut t = 0.0;
        loop {
            let u: f64 = rand::Rng::gen_range(&mut rng, 0.0f64..1.0).max(1e-300);
            t += -mean_interval * u.ln();
            if t >= cfg.t_end {
                break;
            }
            kick_at.push(((t / cfg.output_dt).round() as usize).max(1));
        }
        kick_at.dedup();
        let mut prev = 0usize;
        let mut first = true;
        for &ki in kick_at.iter().chain(std::iter::once(&cfg.n_output())) {
            if ki > prev {
                let seg = IntegratorConfig {
                    t_start: prev as f64 * cfg.output_dt,
                    t_end: ki as f64 * cfg.output_dt,
                    ..cfg.clone()
                };
                let mut skip = !first;
                let mut y_last = y.clone();
                integrate_with(&model, &y, &seg, |_t, s| {
                    if skip {
                        skip = false;
                    } else {
                        power.push(model.emission_power(s));
                    }
                    y_last.clear();
                    y_last.extend_from_slice(s);
                })
                .unwrap();
                y = y_last;
                first = false;
                prev = ki;
            }
            if ki < cfg.n_output() {
                let mut st = MeanFieldState::unpack_cavity(&y);
                st.kick_coherences(kick_amp, &mut rng);
                y = st.pack_cavity();
            }
        }
        let trace = EmissionTrace::new(0.0, cfg.output_dt, power);
        let train = detect_bursts_with(&trace, QUARTER_PEAK, 0.25);
        train.first_settled_onset().map(|_| train)
    };

    let mut random_trains = Vec::new();
    for seed in 0..50u64 {
        if let Some(tr) = run_one(1000 + seed) {
            random_trains.push(tr);
        }
    }
    let periods: Vec<f64> = random_trains.iter().filter_map(|t| t.period).collect();
    let t_ref = median(&periods);
    let random = onset_phases(&random_trains, t_ref).unwrap();

    let mut locked_trains = Vec::new();
    for _ in 0..50 {
        if let Some(tr) = run_one(4242) {
            locked_trains.push(tr);
        }
    }
    let locked = onset_phases(&locked_trains, t_ref).unwrap();

    println!(
        "ACCEPTANCE 11 (onset phases): {} random-kick runs, Rayleigh p = {:.3} (target > 0.05, \
         resultant length {:.3}); {} phase-locked runs, p = {:.2e} (target < 0.01)",
        random_trains.len(),
        random.p_value,
        random.resultant_length,
        locked_trains.len(),
        locked.p_value
    );
    assert!(random_trains.len() >= 45, "{} runs ignited", random_trains.len());
    assert!(random.p_value > 0.05, "random-kick phases not uniform (p = {})", random.p_value);
    assert!(locked.p_value < 0.01, "locked control not rejected (p = {})", locked.p_value);
    println!("ACCEPTANCE 11: PASS");
}
