//! Mean-field dynamics of the full three-level system: a ground state `g`
//! optically pumped to the upper spin state, the `down <-> up` microwave
//! transition coupled to the lossy microwave resonator, and the `g <-> down`
//! optical transition read out through a weak optical mode.
//!
//! Written in the co-rotating frame of the pump laser and the microwave
//! cavity, so all frequencies appear as detunings. State layout: `[Re a, Im
//! a, Re b, Im b, coh_gd (2M), coh_du (2M), coh_gu (2M), p_g (M), p_d (M),
//! p_u (M)]`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::BinnedEnsemble;
use crate::ode::{EmissionModel, OdeRhs};

#[derive(Debug, Clone, Serialize)]
pub struct ThreeLevelParams {
    /// Microwave cavity decay `kappa_e` (rad/s).
    pub mw_decay: f64,
    /// Single-spin microwave coupling `g_e` (rad/s).
    pub mw_coupling: f64,
    /// Microwave coherence decay `gamma_s` (the `down-up` coherence is damped
    /// at `gamma_s / 2`); plays the role of `gamma + gamma1 + D` of the
    /// two-level model.
    pub spin_dephasing: f64,
    /// Population decay of both spin levels back to `g` (rad/s).
    pub relaxation: f64,
    /// Optical cavity decay `kappa_o` (rad/s).
    pub opt_decay: f64,
    /// Single-spin optical coupling `g_o` (rad/s).
    pub opt_coupling: f64,
    /// Optical coherence decay `gamma_o` (coherences damped at `gamma_o/2`).
    pub opt_dephasing: f64,
    /// Pump Rabi frequency on `g <-> up` (rad/s).
    pub pump_rabi: f64,
    /// Constant microwave cavity drive standing in for field noise (rad/s).
    pub cavity_drive: f64,
    /// Number of spins.
    pub ensemble_size: f64,
    /// Spin-center vs microwave-cavity detuning (rad/s).
    pub mw_detuning: f64,
    /// Pump laser detuning from the `g -> up` line center (rad/s).
    pub pump_detuning: f64,
    /// Optical cavity detuning in the co-rotating frame (rad/s).
    pub opt_cavity_detuning: f64,
}

impl ThreeLevelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mw_decay", self.mw_decay),
            ("opt_decay", self.opt_decay),
        ] {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("spin_dephasing", self.spin_dephasing),
            ("relaxation", self.relaxation),
            ("opt_dephasing", self.opt_dephasing),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be non-negative")));
            }
        }
        if !(self.ensemble_size >= 1.0) {
            return Err(Error::Domain("ensemble size must be >= 1".into()));
        }
        Ok(())
    }

    /// Collective microwave coupling `sqrt(N) g_e`.
    pub fn collective_coupling(&self) -> f64 {
        self.ensemble_size.sqrt() * self.mw_coupling
    }
}

/// Typed three-level state.
#[derive(Debug, Clone)]
pub struct ThreeLevelState {
    pub opt_amp: Complex64,
    pub mw_amp: Complex64,
    /// `<sigma_{g,down}>` per bin.
    pub coh_gd: Vec<Complex64>,
    /// `<sigma_{down,up}>` per bin.
    pub coh_du: Vec<Complex64>,
    /// `<sigma_{g,up}>` per bin.
    pub coh_gu: Vec<Complex64>,
    pub pop_g: Vec<f64>,
    pub pop_d: Vec<f64>,
    pub pop_u: Vec<f64>,
}

impl ThreeLevelState {
    /// Everything in the optical ground state.
    pub fn all_ground(m: usize) -> Self {
        ThreeLevelState {
            opt_amp: Complex64::new(0.0, 0.0),
            mw_amp: Complex64::new(0.0, 0.0),
            coh_gd: vec![Complex64::new(0.0, 0.0); m],
            coh_du: vec![Complex64::new(0.0, 0.0); m],
            coh_gu: vec![Complex64::new(0.0, 0.0); m],
            pop_g: vec![1.0; m],
            pop_d: vec![0.0; m],
            pop_u: vec![0.0; m],
        }
    }

    pub fn pack(&self) -> Vec<f64> {
        let m = self.pop_g.len();
        let mut y = Vec::with_capacity(4 + 9 * m);
        y.extend([self.opt_amp.re, self.opt_amp.im, self.mw_amp.re, self.mw_amp.im]);
        for block in [&self.coh_gd, &self.coh_du, &self.coh_gu] {
            y.extend(block.iter().map(|c| c.re));
            y.extend(block.iter().map(|c| c.im));
        }
        y.extend(&self.pop_g);
        y.extend(&self.pop_d);
        y.extend(&self.pop_u);
        y
    }

    pub fn unpack(y: &[f64]) -> Self {
        let m = (y.len() - 4) / 9;
        let cplx = |off: usize| -> Vec<Complex64> {
            (0..m).map(|i| Complex64::new(y[off + i], y[off + m + i])).collect()
        };
        ThreeLevelState {
            opt_amp: Complex64::new(y[0], y[1]),
            mw_amp: Complex64::new(y[2], y[3]),
            coh_gd: cplx(4),
            coh_du: cplx(4 + 2 * m),
            coh_gu: cplx(4 + 4 * m),
            pop_g: y[4 + 6 * m..4 + 7 * m].to_vec(),
            pop_d: y[4 + 7 * m..4 + 8 * m].to_vec(),
            pop_u: y[4 + 8 * m..4 + 9 * m].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThreeLevel {
    pub params: ThreeLevelParams,
    pub ens: BinnedEnsemble,
    pops: Vec<f64>,
}

impl ThreeLevel {
    pub fn new(params: ThreeLevelParams, ens: BinnedEnsemble) -> Result<Self> {
        params.validate()?;
        ens.validate()?;
        let pops = ens.populations();
        Ok(ThreeLevel { params, ens, pops })
    }

    pub fn derivs(&self, state: &ThreeLevelState) -> ThreeLevelState {
        assert_eq!(state.pop_g.len(), self.ens.bin_count(), "state/bin mismatch");
        let y = state.pack();
        let mut dy = vec![0.0; y.len()];
        self.eval(0.0, &y, &mut dy);
        ThreeLevelState::unpack(&dy)
    }

    /// Optical output photon flux `kappa_o |a|^2`.
    pub fn optical_power(&self, y: &[f64]) -> f64 {
        self.params.opt_decay * (y[0] * y[0] + y[1] * y[1])
    }
}

impl OdeRhs for ThreeLevel {
    fn dim(&self) -> usize {
        4 + 9 * self.ens.bin_count()
    }

    fn eval(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let m = self.ens.bin_count();
        debug_assert_eq!(y.len(), 4 + 9 * m);
        let p = &self.params;
        let a = Complex64::new(y[0], y[1]);
        let b = Complex64::new(y[2], y[3]);
        let at = a.conj();
        let bt = b.conj();
        let c64 = |off: usize, i: usize| Complex64::new(y[off + i], y[off + m + i]);
        let o_gd = 4;
        let o_du = 4 + 2 * m;
        let o_gu = 4 + 4 * m;
        let o_pg = 4 + 6 * m;
        let o_pd = 4 + 7 * m;
        let o_pu = 4 + 8 * m;

        let mut sum_gd = Complex64::new(0.0, 0.0);
        let mut sum_du = Complex64::new(0.0, 0.0);
        for k in 0..m {
            sum_gd += self.pops[k] * c64(o_gd, k);
            sum_du += self.pops[k] * c64(o_du, k);
        }
        let da = -(Complex64::i() * p.opt_cavity_detuning + 0.5 * p.opt_decay) * a
            - Complex64::i() * p.opt_coupling * sum_gd;
        let db = -0.5 * p.mw_decay * b
            - Complex64::i() * p.mw_coupling * sum_du
            - Complex64::i() * p.cavity_drive;
        dydt[0] = da.re;
        dydt[1] = da.im;
        dydt[2] = db.re;
        dydt[3] = db.im;

        for k in 0..m {
            let d_du = p.mw_detuning + self.ens.detunings[k];
            let d_gu = p.pump_detuning;
            let d_gd = d_gu - d_du;
            let gd = c64(o_gd, k);
            let du = c64(o_du, k);
            let gu = c64(o_gu, k);
            let pg = y[o_pg + k];
            let pd = y[o_pd + k];
            let pu = y[o_pu + k];

            let dgd = -(Complex64::i() * d_gd + 0.5 * p.opt_dephasing) * gd
                + Complex64::i() * p.pump_rabi * du.conj()
                - Complex64::i() * p.opt_coupling * (pg - pd) * a
                - Complex64::i() * p.mw_coupling * bt * gu;
            let ddu = -(Complex64::i() * d_du + 0.5 * p.spin_dephasing) * du
                - Complex64::i() * p.mw_coupling * (pd - pu) * b
                + Complex64::i() * p.opt_coupling * at * gu
                - Complex64::i() * p.pump_rabi * gd.conj();
            let dgu = -(Complex64::i() * d_gu + 0.5 * p.opt_dephasing) * gu
                - Complex64::i() * p.mw_coupling * gd * b
                - Complex64::i() * p.pump_rabi * (pg - pu)
                + Complex64::i() * p.opt_coupling * du * a;

            let im_as = (at * gd).im;
            let im_bs = (bt * du).im;
            let im_gu = gu.im;
            let dpg = p.relaxation * (pd + pu) + 2.0 * p.pump_rabi * im_gu
                + 2.0 * p.opt_coupling * im_as;
            let dpd = -p.relaxation * pd + 2.0 * p.mw_coupling * im_bs
                - 2.0 * p.opt_coupling * im_as;
            let dpu = -p.relaxation * pu - 2.0 * p.pump_rabi * im_gu
                - 2.0 * p.mw_coupling * im_bs;

            dydt[o_gd + k] = dgd.re;
            dydt[o_gd + m + k] = dgd.im;
            dydt[o_du + k] = ddu.re;
            dydt[o_du + m + k] = ddu.im;
            dydt[o_gu + k] = dgu.re;
            dydt[o_gu + m + k] = dgu.im;
            dydt[o_pg + k] = dpg;
            dydt[o_pd + k] = dpd;
            dydt[o_pu + k] = dpu;
        }
    }
}

impl EmissionModel for ThreeLevel {
    fn emission_power(&self, y: &[f64]) -> f64 {
        self.params.mw_decay * (y[2] * y[2] + y[3] * y[3])
    }

    fn cavity_amplitude(&self, y: &[f64]) -> Option<Complex64> {
        Some(Complex64::new(y[2], y[3]))
    }
}
