//! Deterministic ODE integration: fixed-step RK4 and adaptive
//! Dormand-Prince 5(4), both sampling on a uniform output grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side of an autonomous-in-form ODE system over a flat `f64`
/// state vector. Complex components are stored as (re, im) pairs by the
/// models.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// A dynamical model whose state carries a cavity emission observable.
pub trait EmissionModel: OdeRhs {
    /// Instantaneous output photon flux.
    fn emission_power(&self, y: &[f64]) -> f64;
    /// Cavity field amplitude, when the model tracks one.
    fn cavity_amplitude(&self, _y: &[f64]) -> Option<Complex64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedRk4,
    AdaptiveRk45,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the internal adaptive step (s).
    pub max_step: f64,
    /// Step used by the fixed RK4 method (s).
    pub fixed_step: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Spacing of the uniform output grid (s).
    pub output_dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk45,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 5e-8,
            fixed_step: 1e-9,
            t_start: 0.0,
            t_end: 1e-3,
            output_dt: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::config("integrator", "tolerances must be positive"));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::config("integrator.t_end_s", "t_end must exceed t_start"));
        }
        if !(self.max_step > 0.0 && self.fixed_step > 0.0 && self.output_dt > 0.0) {
            return Err(Error::config("integrator", "step sizes must be positive"));
        }
        Ok(())
    }

    /// Number of grid intervals; samples are emitted at `t_start + k dt` for
    /// `k = 0..=n`.
    pub fn n_output(&self) -> usize {
        (((self.t_end - self.t_start) / self.output_dt) + 1e-9).floor() as usize
    }
}

/// Densely sampled solution (small systems only; large models stream through
/// [`integrate_with`] instead).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

fn check_finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            t_fail: t,
            msg: "non-finite state component".into(),
        });
    }
    Ok(())
}

/// Integrate `rhs` from `y0`, invoking `on_sample(t, y)` at every output grid
/// point (including `t_start`). Bit-deterministic for identical inputs.
pub fn integrate_with<R, F>(rhs: &R, y0: &[f64], cfg: &IntegratorConfig, mut on_sample: F) -> Result<()>
where
    R: OdeRhs + ?Sized,
    F: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    assert_eq!(y0.len(), rhs.dim(), "initial state dimension mismatch");
    match cfg.method {
        Method::FixedRk4 => integrate_rk4(rhs, y0, cfg, &mut on_sample),
        Method::AdaptiveRk45 => integrate_dp45(rhs, y0, cfg, &mut on_sample),
    }
}

/// Integrate and collect all grid samples.
pub fn integrate<R: OdeRhs + ?Sized>(rhs: &R, y0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    let n = cfg.n_output() + 1;
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    integrate_with(rhs, y0, cfg, |t, y| {
        times.push(t);
        states.push(y.to_vec());
    })?;
    Ok(Trajectory { times, states })
}

fn integrate_rk4<R, F>(rhs: &R, y0: &[f64], cfg: &IntegratorConfig, on_sample: &mut F) -> Result<()>
where
    R: OdeRhs + ?Sized,
    F: FnMut(f64, &[f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    on_sample(cfg.t_start, &y);
    let n_out = cfg.n_output();
    for k in 1..=n_out {
        let t_a = cfg.t_start + (k - 1) as f64 * cfg.output_dt;
        let t_b = cfg.t_start + k as f64 * cfg.output_dt;
        let seg = t_b - t_a;
        let nsub = (seg / cfg.fixed_step - 1e-12).ceil().max(1.0) as usize;
        let h = seg / nsub as f64;
        let mut t = t_a;
        for _ in 0..nsub {
            rhs.eval(t, &y, &mut k1);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs.eval(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs.eval(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs.eval(t + h, &tmp, &mut k4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
        check_finite(t_b, &y)?;
        on_sample(t_b, &y);
    }
    Ok(())
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// y5 - y4 error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn integrate_dp45<R, F>(rhs: &R, y0: &[f64], cfg: &IntegratorConfig, on_sample: &mut F) -> Result<()>
where
    R: OdeRhs + ?Sized,
    F: FnMut(f64, &[f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut ynew = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();

    let span = cfg.t_end - cfg.t_start;
    let h_min = 16.0 * f64::EPSILON * span;
    let mut h = cfg.max_step.min(span);
    let mut t = cfg.t_start;
    let mut k1_valid = false;

    on_sample(t, &y);
    let n_out = cfg.n_output();
    for kk in 1..=n_out {
        let t_b = cfg.t_start + kk as f64 * cfg.output_dt;
        loop {
            let remaining = t_b - t;
            if remaining <= h_min {
                break; // snap to the grid point
            }
            let h_try = h.min(cfg.max_step).min(remaining);
            if h_try < h_min {
                return Err(Error::Integration {
                    t_fail: t,
                    msg: format!("step size underflow (h = {h_try:.3e} s)"),
                });
            }
            if !k1_valid {
                rhs.eval(t, &y, &mut k[0]);
                k1_valid = true;
            }
            // stages 2..7
            for i in 0..dim {
                tmp[i] = y[i] + h_try * A21 * k[0][i];
            }
            rhs.eval(t + C2 * h_try, &tmp, &mut k[1]);
            for i in 0..dim {
                tmp[i] = y[i] + h_try * (A31 * k[0][i] + A32 * k[1][i]);
            }
            rhs.eval(t + C3 * h_try, &tmp, &mut k[2]);
            for i in 0..dim {
                tmp[i] = y[i] + h_try * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            rhs.eval(t + C4 * h_try, &tmp, &mut k[3]);
            for i in 0..dim {
                tmp[i] =
                    y[i] + h_try * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            rhs.eval(t + C5 * h_try, &tmp, &mut k[4]);
            for i in 0..dim {
                tmp[i] = y[i]
                    + h_try
                        * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i]
                            + A65 * k[4][i]);
            }
            rhs.eval(t + h_try, &tmp, &mut k[5]);
            for i in 0..dim {
                ynew[i] = y[i]
                    + h_try * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            rhs.eval(t + h_try, &ynew, &mut k[6]);

            // scaled error norm
            let mut err_sq = 0.0;
            for i in 0..dim {
                let e = h_try
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
                let r = e / sc;
                err_sq += r * r;
            }
            let err = (err_sq / dim as f64).sqrt();

            if !err.is_finite() {
                // blow-up inside the step; retry smaller
                h = h_try * 0.25;
                k1_valid = true; // (t, y) unchanged
                if h < h_min {
                    return Err(Error::Integration {
                        t_fail: t,
                        msg: "non-finite error estimate".into(),
                    });
                }
                continue;
            }

            if err <= 1.0 {
                t += h_try;
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6); // FSAL
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                h = h_try * fac;
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h = h_try * fac;
                k1_valid = true;
            }
        }
        t = t_b;
        check_finite(t, &y)?;
        on_sample(t, &y);
    }
    Ok(())
}
