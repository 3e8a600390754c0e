//! First-order (mean-field) dynamics of the binned two-level ensemble, with
//! an explicit cavity mode or with the cavity adiabatically eliminated.
//!
//! State layout on the flat vector: `[Re b, Im b, Re sigma_0..M, Im
//! sigma_0..M, u_0..M]` for the cavity model; the adiabatic model drops the
//! leading field pair. `sigma_m` is the lowering-operator expectation of one
//! spin in bin `m` and `u_m` its inversion (+1 fully excited).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{BinnedEnsemble, ModelParams};
use crate::ode::{EmissionModel, OdeRhs};

/// Typed view of the mean-field state.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    pub cavity: Complex64,
    pub coherences: Vec<Complex64>,
    pub inversions: Vec<f64>,
}

/// State-bound tolerance on `|u| <= 1` along trajectories.
pub const TOL_STATE: f64 = 1e-6;

impl MeanFieldState {
    /// All spins in the ground state with a uniform real coherence seed.
    pub fn ground_with_seed(m: usize, seed_coherence: f64) -> Self {
        MeanFieldState {
            cavity: Complex64::new(0.0, 0.0),
            coherences: vec![Complex64::new(seed_coherence, 0.0); m],
            inversions: vec![-1.0; m],
        }
    }

    /// Bloch vector tipped by `theta` from the fully inverted pole:
    /// `u = cos(theta)`, `|sigma| = sin(theta)/2`.
    pub fn tipped(m: usize, theta: f64) -> Self {
        MeanFieldState {
            cavity: Complex64::new(0.0, 0.0),
            coherences: vec![Complex64::new(0.5 * theta.sin(), 0.0); m],
            inversions: vec![theta.cos(); m],
        }
    }

    /// Add a seeded complex Gaussian kick to every bin coherence.
    pub fn kick_coherences<R: Rng>(&mut self, amplitude: f64, rng: &mut R) {
        for s in &mut self.coherences {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += amplitude * Complex64::new(re, im) / std::f64::consts::SQRT_2;
        }
    }

    pub fn pack_cavity(&self) -> Vec<f64> {
        let m = self.coherences.len();
        let mut y = Vec::with_capacity(2 + 3 * m);
        y.push(self.cavity.re);
        y.push(self.cavity.im);
        y.extend(self.coherences.iter().map(|c| c.re));
        y.extend(self.coherences.iter().map(|c| c.im));
        y.extend(&self.inversions);
        y
    }

    pub fn unpack_cavity(y: &[f64]) -> Self {
        let m = (y.len() - 2) / 3;
        MeanFieldState {
            cavity: Complex64::new(y[0], y[1]),
            coherences: (0..m).map(|i| Complex64::new(y[2 + i], y[2 + m + i])).collect(),
            inversions: y[2 + 2 * m..].to_vec(),
        }
    }

    pub fn pack_spins_only(&self) -> Vec<f64> {
        let m = self.coherences.len();
        let mut y = Vec::with_capacity(3 * m);
        y.extend(self.coherences.iter().map(|c| c.re));
        y.extend(self.coherences.iter().map(|c| c.im));
        y.extend(&self.inversions);
        y
    }

    pub fn unpack_spins_only(y: &[f64]) -> Self {
        let m = y.len() / 3;
        MeanFieldState {
            cavity: Complex64::new(0.0, 0.0),
            coherences: (0..m).map(|i| Complex64::new(y[i], y[m + i])).collect(),
            inversions: y[2 * m..].to_vec(),
        }
    }
}

/// Two-level mean field with an explicit cavity amplitude, in the frame
/// rotating at the cavity frequency.
#[derive(Debug, Clone)]
pub struct CavityMeanField {
    pub params: ModelParams,
    pub ens: BinnedEnsemble,
    pops: Vec<f64>,
}

impl CavityMeanField {
    pub fn new(params: ModelParams, ens: BinnedEnsemble) -> Result<Self> {
        params.validate()?;
        ens.validate()?;
        let pops = ens.populations();
        Ok(CavityMeanField { params, ens, pops })
    }

    /// Typed derivative, mirroring [`OdeRhs::eval`].
    pub fn derivs(&self, state: &MeanFieldState) -> MeanFieldState {
        assert_eq!(state.coherences.len(), self.ens.bin_count(), "state/bin mismatch");
        let y = state.pack_cavity();
        let mut dy = vec![0.0; y.len()];
        self.eval(0.0, &y, &mut dy);
        MeanFieldState::unpack_cavity(&dy)
    }
}

impl OdeRhs for CavityMeanField {
    fn dim(&self) -> usize {
        2 + 3 * self.ens.bin_count()
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let m = self.ens.bin_count();
        debug_assert_eq!(y.len(), 2 + 3 * m);
        let p = &self.params;
        let g = p.coupling;
        let half_kappa = 0.5 * p.cavity_decay;
        let half_ks = 0.5 * p.spin_decay();
        let (br, bi) = (y[0], y[1]);
        let (sr, rest) = y[2..].split_at(m);
        let (si, u) = rest.split_at(m);

        // cavity: db = -kappa/2 b - i g sum W_m sigma_m
        let mut wr = 0.0;
        let mut wi = 0.0;
        for k in 0..m {
            wr += self.pops[k] * sr[k];
            wi += self.pops[k] * si[k];
        }
        dydt[0] = -half_kappa * br + g * wi;
        dydt[1] = -half_kappa * bi - g * wr;

        let (dsr, drest) = dydt[2..].split_at_mut(m);
        let (dsi, du) = drest.split_at_mut(m);
        for k in 0..m {
            let det = p.ensemble_detuning + self.ens.detunings[k];
            // d sigma = (-i det - kappa_s/2) sigma + i g u b
            dsr[k] = det * si[k] - half_ks * sr[k] - g * u[k] * bi;
            dsi[k] = -det * sr[k] - half_ks * si[k] + g * u[k] * br;
            // du = D(1-u) - gamma1(1+u) - 4 g Im(conj(b) sigma)
            let im_bs = br * si[k] - bi * sr[k];
            du[k] = p.pump * (1.0 - u[k]) - p.relaxation * (1.0 + u[k]) - 4.0 * g * im_bs;
        }
    }
}

impl EmissionModel for CavityMeanField {
    fn emission_power(&self, y: &[f64]) -> f64 {
        self.params.cavity_decay * (y[0] * y[0] + y[1] * y[1])
    }

    fn cavity_amplitude(&self, y: &[f64]) -> Option<Complex64> {
        Some(Complex64::new(y[0], y[1]))
    }
}

/// Spin-only mean field with the cavity slaved to the collective coherence,
/// valid in the bad-cavity regime `kappa >> sqrt(N) g`. Written in the frame
/// rotating at the ensemble center.
#[derive(Debug, Clone)]
pub struct AdiabaticMeanField {
    pub params: ModelParams,
    pub ens: BinnedEnsemble,
    pops: Vec<f64>,
    /// 1 / (kappa/2 - i Delta_e)
    resp: Complex64,
}

impl AdiabaticMeanField {
    pub fn new(params: ModelParams, ens: BinnedEnsemble) -> Result<Self> {
        params.validate()?;
        ens.validate()?;
        let pops = ens.populations();
        let resp = Complex64::new(0.5 * params.cavity_decay, -params.ensemble_detuning).inv();
        Ok(AdiabaticMeanField { params, ens, pops, resp })
    }

    /// Slaved cavity amplitude `b = -i g S / (kappa/2 - i Delta_e)` with
    /// `S = sum W_m sigma_m`.
    pub fn slaved_cavity(&self, y: &[f64]) -> Complex64 {
        let m = self.ens.bin_count();
        let (sr, rest) = y.split_at(m);
        let (si, _) = rest.split_at(m);
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..m {
            s += self.pops[k] * Complex64::new(sr[k], si[k]);
        }
        -Complex64::i() * self.params.coupling * s * self.resp
    }

    pub fn derivs(&self, state: &MeanFieldState) -> MeanFieldState {
        assert_eq!(state.coherences.len(), self.ens.bin_count(), "state/bin mismatch");
        let y = state.pack_spins_only();
        let mut dy = vec![0.0; y.len()];
        self.eval(0.0, &y, &mut dy);
        MeanFieldState::unpack_spins_only(&dy)
    }
}

impl OdeRhs for AdiabaticMeanField {
    fn dim(&self) -> usize {
        3 * self.ens.bin_count()
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let m = self.ens.bin_count();
        debug_assert_eq!(y.len(), 3 * m);
        let p = &self.params;
        let g = p.coupling;
        let half_ks = 0.5 * p.spin_decay();
        let b = self.slaved_cavity(y);
        let (sr, rest) = y.split_at(m);
        let (si, u) = rest.split_at(m);
        let (dsr, drest) = dydt.split_at_mut(m);
        let (dsi, du) = drest.split_at_mut(m);
        for k in 0..m {
            let det = self.ens.detunings[k];
            let drive = Complex64::i() * g * u[k] * b;
            dsr[k] = det * si[k] - half_ks * sr[k] + drive.re;
            dsi[k] = -det * sr[k] - half_ks * si[k] + drive.im;
            let im_bs = b.re * si[k] - b.im * sr[k];
            du[k] = p.pump * (1.0 - u[k]) - p.relaxation * (1.0 + u[k]) - 4.0 * g * im_bs;
        }
    }
}

impl EmissionModel for AdiabaticMeanField {
    fn emission_power(&self, y: &[f64]) -> f64 {
        self.params.cavity_decay * self.slaved_cavity(y).norm_sqr()
    }

    fn cavity_amplitude(&self, y: &[f64]) -> Option<Complex64> {
        Some(self.slaved_cavity(y))
    }
}

/// Steady emission frequency of identical atoms,
/// `(kappa_s omega_c + kappa omega_s) / (kappa + kappa_s)` — the cavity
/// pulling is suppressed by `kappa_s / kappa` in the bad-cavity limit.
pub fn steady_emission_frequency(p: &ModelParams) -> f64 {
    let ks = p.spin_decay();
    assert!(p.cavity_decay + ks > 0.0, "need kappa + kappa_s > 0");
    (ks * p.cavity_freq + p.cavity_decay * p.spin_center_freq) / (p.cavity_decay + ks)
}
