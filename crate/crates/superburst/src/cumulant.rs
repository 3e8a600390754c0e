//! Second-order cumulant dynamics in the frequency-binned representation,
//! the emission-rate decomposition, and the rescaled homogeneous system with
//! its ensemble-size threshold.
//!
//! The state keeps the cavity photon number `<b'b>`, the cavity-spin cross
//! correlations `X_m = <b' sigma-_m>`, the bin-pair spin correlations
//! `C_mn = <sigma+_m sigma-_n>` and the per-bin inversions `u_m`. Hermiticity
//! of `C` is structural: only the diagonal (real) and the upper triangle are
//! evolved, the lower triangle is the conjugate by construction.
//!
//! Flat layout: `[n, Re X (M), Im X (M), diag C (M), upper C as (re, im)
//! pairs row-major (M(M-1)), u (M)]`, dimension `M^2 + 3M + 1`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{BinnedEnsemble, ModelParams};
use crate::ode::{EmissionModel, OdeRhs};

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// Worker pool for the correlation-matrix rows, sized by the
/// `SUPERBURST_THREADS` environment variable (default: available cores).
fn thread_pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let n = std::env::var("SUPERBURST_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build worker pool")
    })
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    m: usize,
}

impl Layout {
    fn new(m: usize) -> Self {
        Layout { m }
    }
    fn dim(&self) -> usize {
        self.m * self.m + 3 * self.m + 1
    }
    fn x_re(&self, k: usize) -> usize {
        1 + k
    }
    fn x_im(&self, k: usize) -> usize {
        1 + self.m + k
    }
    fn diag(&self, k: usize) -> usize {
        1 + 2 * self.m + k
    }
    fn tri_base(&self) -> usize {
        1 + 3 * self.m
    }
    /// Start of row `r` in the packed upper triangle (pairs with col > row).
    fn tri_row_start(&self, r: usize) -> usize {
        self.tri_base() + r * (2 * self.m - r - 1)
    }
    /// Index of the (re, im) pair for entry (r, c) with r < c.
    fn tri(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < c && c < self.m);
        self.tri_row_start(r) + 2 * (c - r - 1)
    }
    fn u(&self, k: usize) -> usize {
        1 + 3 * self.m + self.m * (self.m - 1) + k
    }
}

/// Typed cumulant state; `spin_corr_upper` is row-major over pairs `(m, n)`
/// with `m < n`.
#[derive(Debug, Clone)]
pub struct CumulantState {
    pub photon_number: f64,
    pub cross_corr: Vec<Complex64>,
    pub spin_corr_diag: Vec<f64>,
    pub spin_corr_upper: Vec<Complex64>,
    pub inversions: Vec<f64>,
}

/// Tolerance on state bounds along trajectories.
pub const TOL_STATE: f64 = 1e-6;

impl CumulantState {
    /// All spins in the ground state, zero correlations, thermal photons in
    /// the cavity — the continuous-pump turn-on condition.
    pub fn ground(m: usize, thermal_photons: f64) -> Self {
        CumulantState {
            photon_number: thermal_photons,
            cross_corr: vec![Complex64::new(0.0, 0.0); m],
            spin_corr_diag: vec![0.0; m],
            spin_corr_upper: vec![Complex64::new(0.0, 0.0); m * (m - 1) / 2],
            inversions: vec![-1.0; m],
        }
    }

    pub fn bin_count(&self) -> usize {
        self.inversions.len()
    }

    /// Full correlation-matrix entry; the lower triangle is the conjugate of
    /// the stored upper triangle.
    pub fn spin_corr(&self, m: usize, n: usize) -> Complex64 {
        use std::cmp::Ordering;
        let mm = self.bin_count();
        let pair = |r: usize, c: usize| r * mm - r * (r + 1) / 2 + (c - r - 1);
        match m.cmp(&n) {
            Ordering::Equal => Complex64::new(self.spin_corr_diag[m], 0.0),
            Ordering::Less => self.spin_corr_upper[pair(m, n)],
            Ordering::Greater => self.spin_corr_upper[pair(n, m)].conj(),
        }
    }

    /// Seed the same-bin correlations with a non-negative random kick; used
    /// for onset-phase studies where the deterministic start must be broken.
    pub fn seed_correlations<R: Rng>(&mut self, amplitude: f64, rng: &mut R) {
        for d in &mut self.spin_corr_diag {
            let xi: f64 = rng.sample(StandardNormal);
            *d = (*d + amplitude * xi * xi).min(1.0);
        }
    }

    pub fn pack(&self) -> Vec<f64> {
        let m = self.bin_count();
        let l = Layout::new(m);
        let mut y = vec![0.0; l.dim()];
        y[0] = self.photon_number;
        for k in 0..m {
            y[l.x_re(k)] = self.cross_corr[k].re;
            y[l.x_im(k)] = self.cross_corr[k].im;
            y[l.diag(k)] = self.spin_corr_diag[k];
            y[l.u(k)] = self.inversions[k];
        }
        let mut p = 0;
        for r in 0..m {
            for c in r + 1..m {
                let i = l.tri(r, c);
                y[i] = self.spin_corr_upper[p].re;
                y[i + 1] = self.spin_corr_upper[p].im;
                p += 1;
            }
        }
        y
    }

    pub fn unpack(y: &[f64], m: usize) -> Self {
        let l = Layout::new(m);
        assert_eq!(y.len(), l.dim(), "flat state length mismatch");
        let mut upper = Vec::with_capacity(m * (m - 1) / 2);
        for r in 0..m {
            for c in r + 1..m {
                let i = l.tri(r, c);
                upper.push(Complex64::new(y[i], y[i + 1]));
            }
        }
        CumulantState {
            photon_number: y[0],
            cross_corr: (0..m).map(|k| Complex64::new(y[l.x_re(k)], y[l.x_im(k)])).collect(),
            spin_corr_diag: (0..m).map(|k| y[l.diag(k)]).collect(),
            spin_corr_upper: upper,
            inversions: (0..m).map(|k| y[l.u(k)]).collect(),
        }
    }
}

/// Binned second-order cumulant model in the cavity rotating frame.
#[derive(Debug, Clone)]
pub struct CumulantModel {
    pub params: ModelParams,
    pub ens: BinnedEnsemble,
    pops: Vec<f64>,
    dets: Vec<f64>,
    layout: Layout,
}

impl CumulantModel {
    pub fn new(params: ModelParams, ens: BinnedEnsemble) -> Result<Self> {
        params.validate()?;
        ens.validate()?;
        let pops = ens.populations();
        let dets = ens
            .detunings
            .iter()
            .map(|d| params.ensemble_detuning + d)
            .collect();
        let layout = Layout::new(ens.bin_count());
        Ok(CumulantModel { params, ens, pops, dets, layout })
    }

    pub fn bin_count(&self) -> usize {
        self.ens.bin_count()
    }

    pub fn initial_state(&self) -> CumulantState {
        CumulantState::ground(self.bin_count(), self.params.thermal_photons)
    }

    pub fn state_from_flat(&self, y: &[f64]) -> CumulantState {
        CumulantState::unpack(y, self.bin_count())
    }

    /// Collective inversion `sum_m W_m u_m` (range `[-N, N]`).
    pub fn collective_inversion(&self, y: &[f64]) -> f64 {
        let l = &self.layout;
        (0..l.m).map(|k| self.pops[k] * y[l.u(k)]).sum()
    }

    /// Collective spin-spin correlation `<S+ S->` assembled from the bins:
    /// `sum_m W_m (W_m - 1) C_mm + sum_{m != n} W_m W_n C_nm`.
    pub fn spin_spin_correlation_flat(&self, y: &[f64]) -> f64 {
        let l = &self.layout;
        let mut s = 0.0;
        for k in 0..l.m {
            s += self.pops[k] * (self.pops[k] - 1.0) * y[l.diag(k)];
        }
        for r in 0..l.m {
            for c in r + 1..l.m {
                s += 2.0 * self.pops[r] * self.pops[c] * y[l.tri(r, c)];
            }
        }
        s
    }

    /// The three terms of the photon-emission decomposition, each scaled by
    /// `4 g^2 / kappa_tot`.
    pub fn decomposition_from_flat(&self, y: &[f64]) -> EmissionDecomposition {
        let l = &self.layout;
        let p = &self.params;
        let pref = 4.0 * p.coupling * p.coupling / p.kappa_tot();
        let mut excited = 0.0;
        let mut inv = 0.0;
        for k in 0..l.m {
            excited += self.pops[k] * 0.5 * (1.0 + y[l.u(k)]);
            inv += self.pops[k] * y[l.u(k)];
        }
        EmissionDecomposition {
            spontaneous: pref * excited,
            stimulated: pref * inv * y[0],
            superradiant: pref * self.spin_spin_correlation_flat(y),
        }
    }

    /// Coherent photon source rate assembled in one pass (the bracket of the
    /// emission decomposition, without splitting into terms). Used as the
    /// independent consistency route for [`emission_decomposition`].
    pub fn photon_source_rate(&self, y: &[f64]) -> f64 {
        let l = &self.layout;
        let p = &self.params;
        let pref = 4.0 * p.coupling * p.coupling / p.kappa_tot();
        let mut bracket = 0.0;
        for k in 0..l.m {
            let w = self.pops[k];
            let u = y[l.u(k)];
            bracket += w * (0.5 * (1.0 + u) + u * y[0] + (w - 1.0) * y[l.diag(k)]);
        }
        for r in 0..l.m {
            for c in r + 1..l.m {
                bracket += 2.0 * self.pops[r] * self.pops[c] * y[l.tri(r, c)];
            }
        }
        pref * bracket
    }

    fn eval_serial(&self, y: &[f64], dydt: &mut [f64], s_re: &mut [f64], s_im: &mut [f64]) {
        let l = self.layout;
        let m = l.m;
        let p = &self.params;
        let g = p.coupling;
        let kappa = p.cavity_decay;
        let ks = p.spin_decay();
        let half_kks = 0.5 * (kappa + ks);

        // cross-bin correlation drive S_m = sum_{n != m} W_n C_nm, one pass
        // over the stored upper triangle in fixed row-major order
        s_re.fill(0.0);
        s_im.fill(0.0);
        for r in 0..m {
            let base = l.tri_row_start(r);
            let wr = self.pops[r];
            for c in r + 1..m {
                let i = base + 2 * (c - r - 1);
                let (cr, ci) = (y[i], y[i + 1]);
                // C_rc contributes to S_c; conj(C_rc) = C_cr contributes to S_r
                s_re[c] += wr * cr;
                s_im[c] += wr * ci;
                s_re[r] += self.pops[c] * cr;
                s_im[r] -= self.pops[c] * ci;
            }
        }

        let n_ph = y[0];
        let mut flux = 0.0;
        for k in 0..m {
            let (xr, xi) = (y[l.x_re(k)], y[l.x_im(k)]);
            let u = y[l.u(k)];
            let det = self.dets[k];
            // source bracket: (1+u)/2 + (W-1) C_kk + S_k + u n
            let src_re = 0.5 * (1.0 + u) + (self.pops[k] - 1.0) * y[l.diag(k)] + s_re[k] + u * n_ph;
            let src_im = s_im[k];
            // dX = (i(omega_e - omega_k) - (kappa+ks)/2) X + i g src
            dydt[l.x_re(k)] = det * xi - half_kks * xr - g * src_im;
            dydt[l.x_im(k)] = -det * xr - half_kks * xi + g * src_re;
            dydt[l.diag(k)] = -ks * y[l.diag(k)] + 2.0 * g * u * xi;
            dydt[l.u(k)] = p.pump * (1.0 - u) - p.relaxation * (1.0 + u) - 4.0 * g * xi;
            flux += self.pops[k] * xi;
        }
        dydt[0] = -kappa * n_ph + kappa * p.thermal_photons + 2.0 * g * flux;
    }

    fn eval_tri_row(&self, y: &[f64], r: usize, row: &mut [f64]) {
        let l = self.layout;
        let m = l.m;
        let g = self.params.coupling;
        let ks = self.params.spin_decay();
        let u_r = y[l.u(r)];
        let (xr_r, xi_r) = (y[l.x_re(r)], y[l.x_im(r)]);
        let det_r = self.dets[r];
        let base = l.tri_row_start(r);
        for c in r + 1..m {
            let i = base + 2 * (c - r - 1);
            let (cr, ci) = (y[i], y[i + 1]);
            let dd = det_r - self.dets[c];
            let (xr_c, xi_c) = (y[l.x_re(c)], y[l.x_im(c)]);
            let u_c = y[l.u(c)];
            // dC_rc = (i(w_r - w_c) - ks) C_rc - i g u_r X_c + i g u_c conj(X_r)
            let j = i - base;
            row[j] = -dd * ci - ks * cr + g * (u_r * xi_c + u_c * xi_r);
            row[j + 1] = dd * cr - ks * ci + g * (u_c * xr_r - u_r * xr_c);
        }
    }
}

impl OdeRhs for CumulantModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let l = self.layout;
        let m = l.m;
        debug_assert_eq!(y.len(), l.dim());
        let mut s_re = vec![0.0; m];
        let mut s_im = vec![0.0; m];
        self.eval_serial(y, dydt, &mut s_re, &mut s_im);

        if m < 2 {
            return;
        }
        let pool = thread_pool();
        if pool.current_num_threads() <= 1 || m < 24 {
            for r in 0..m - 1 {
                let start = l.tri_row_start(r);
                let len = 2 * (m - 1 - r);
                // split away the row so the borrow checker sees disjoint use
                let (_, rest) = dydt.split_at_mut(start);
                self.eval_tri_row(y, r, &mut rest[..len]);
            }
        } else {
            let tri = &mut dydt[l.tri_base()..l.tri_base() + m * (m - 1)];
            let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(m - 1);
            let mut rest = tri;
            for r in 0..m - 1 {
                let (row, next) = rest.split_at_mut(2 * (m - 1 - r));
                rows.push((r, row));
                rest = next;
            }
            pool.install(|| {
                rows.into_par_iter().for_each(|(r, row)| self.eval_tri_row(y, r, row));
            });
        }
    }
}

impl EmissionModel for CumulantModel {
    /// Output photon flux `kappa <b'b>`.
    fn emission_power(&self, y: &[f64]) -> f64 {
        self.params.cavity_decay * y[0]
    }
}

/// The spontaneous / stimulated / superradiant split of the photon emission
/// rate, each term scaled by `4 g^2 / kappa_tot`.
#[derive(Debug, Clone, Copy)]
pub struct EmissionDecomposition {
    pub spontaneous: f64,
    pub stimulated: f64,
    pub superradiant: f64,
}

impl EmissionDecomposition {
    pub fn total(&self) -> f64 {
        self.spontaneous + self.stimulated + self.superradiant
    }
}

/// Collective spin-spin correlation `<S+ S->` from a typed state.
///
/// The imaginary part vanishes by Hermiticity; a residual beyond
/// `1e-9 |result|` reports numerical degradation.
pub fn spin_spin_correlation(state: &CumulantState, ens: &BinnedEnsemble) -> Result<f64> {
    let m = state.bin_count();
    assert_eq!(m, ens.bin_count(), "state/bin mismatch");
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..m {
        let w = ens.population(r);
        acc += w * (w - 1.0) * Complex64::new(state.spin_corr_diag[r], 0.0);
        for c in 0..m {
            if c != r {
                acc += w * ens.population(c) * state.spin_corr(c, r);
            }
        }
    }
    if acc.im.abs() > 1e-9 * acc.re.abs().max(1e-300) {
        return Err(Error::Numerics(format!(
            "spin-spin correlation lost Hermiticity: im/re = {:e}",
            acc.im / acc.re
        )));
    }
    Ok(acc.re)
}

/// Emission decomposition from a typed state.
pub fn emission_decomposition(
    state: &CumulantState,
    params: &ModelParams,
    ens: &BinnedEnsemble,
) -> Result<EmissionDecomposition> {
    let m = state.bin_count();
    assert_eq!(m, ens.bin_count(), "state/bin mismatch");
    let pref = 4.0 * params.coupling * params.coupling / params.kappa_tot();
    let mut excited = 0.0;
    let mut inv = 0.0;
    for k in 0..m {
        let w = ens.population(k);
        excited += w * 0.5 * (1.0 + state.inversions[k]);
        inv += w * state.inversions[k];
    }
    Ok(EmissionDecomposition {
        spontaneous: pref * excited,
        stimulated: pref * inv * state.photon_number,
        superradiant: pref * spin_spin_correlation(state, ens)?,
    })
}

/// Rescaled homogeneous (disorder-free) cumulant variables: photons per atom
/// `n`, cavity-spin correlation `x`, inversion `z`, spin-spin correlation `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedHomogeneousState {
    pub n: f64,
    pub x: f64,
    pub z: f64,
    pub c: f64,
}

/// Rates of the rescaled homogeneous system. `gamma_plus/minus` are the sum
/// and difference of the pump-up and decay-down rates.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousParams {
    pub collective_coupling: f64,
    pub cavity_decay: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_s: f64,
    pub ensemble_size: f64,
}

/// Right-hand side of the rescaled homogeneous system, including the
/// `(1+z)/2N` spontaneous term that vanishes in the thermodynamic limit.
pub fn homogeneous_reduced_derivs(
    s: &ReducedHomogeneousState,
    p: &HomogeneousParams,
) -> ReducedHomogeneousState {
    let g = p.collective_coupling;
    ReducedHomogeneousState {
        n: 2.0 * g * s.x - p.cavity_decay * s.n,
        x: g * (s.z * s.n + s.c + (1.0 + s.z) / (2.0 * p.ensemble_size))
            - (p.gamma_s + 0.5 * p.cavity_decay) * s.x,
        z: p.gamma_minus - p.gamma_plus * s.z - 4.0 * g * s.x,
        c: 2.0 * g * s.z * s.x - 2.0 * p.gamma_s * s.c,
    }
}

/// Non-trivial steady state of the homogeneous system in the large-`N` limit
/// (the `(1+z)/2N` term dropped).
///
/// With the collective rate defined as `Gamma_c = 4 g^2 / kappa` the branch
/// reads `z = 2 gamma_s / Gamma_c`, `n = (gamma_- / 2 kappa)(1 - z
/// gamma_+/gamma_-)`, `x = (gamma_- / 2 sqrt(Gamma_c kappa))(...)`, `c =
/// (gamma_- / 2 Gamma_c)(...)`; this is the unique choice that zeroes the
/// derivatives. (Reading the same expressions with `Gamma_c = 2 g^2 / kappa`
/// doubles `z` to ~0.06 for the reference rates but does not satisfy the
/// equations.)
pub fn homogeneous_nontrivial_steady_state(p: &HomogeneousParams) -> ReducedHomogeneousState {
    let g = p.collective_coupling;
    let gamma_c = 4.0 * g * g / p.cavity_decay;
    let z = 2.0 * p.gamma_s / gamma_c;
    let dep = 1.0 - p.gamma_plus / p.gamma_minus * z;
    ReducedHomogeneousState {
        n: 0.5 * p.gamma_minus / p.cavity_decay * dep,
        x: 0.5 * p.gamma_minus / (gamma_c * p.cavity_decay).sqrt() * dep,
        z,
        c: 0.5 * p.gamma_minus / gamma_c * dep,
    }
}

/// Ensemble-size threshold `g^2 / (gamma_s gamma_-)` above which the
/// collective steady state is self-consistent. This is `Gamma kappa / (2
/// gamma_s gamma_-)` with the collective rate read as `Gamma = 2 g^2 /
/// kappa`; the `4 g^2 / kappa` reading doubles it.
pub fn ensemble_threshold(collective_coupling: f64, kappa: f64, gamma_s: f64, gamma_minus: f64) -> f64 {
    assert!(
        collective_coupling > 0.0 && kappa > 0.0 && gamma_s > 0.0 && gamma_minus > 0.0,
        "ensemble_threshold needs positive rates"
    );
    collective_coupling * collective_coupling / (gamma_s * gamma_minus)
}
