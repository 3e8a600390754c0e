//! Reduced two-sub-ensemble model of the disordered superradiant transition:
//! steady states, linear stability, the closed-form characteristic
//! coefficients, the Hopf condition locating the critical disorder, and the
//! three-phase diagram.
//!
//! The real variables `(w, x, y, z)` are the rescaled cavity quadrature, the
//! symmetric and antisymmetric sub-ensemble coherences, and the rescaled
//! inversion (`z = +1` fully inverted). The two sub-ensembles sit at
//! detunings `+-delta`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of the reduced model. `gamma_plus = D + gamma1` and
/// `gamma_minus = D - gamma1` combine the pump and relaxation rates;
/// `gamma_s` is the coherence decay (half the homogeneous linewidth).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducedParams {
    /// Collective coupling `sqrt(N) g` (rad/s).
    pub collective_coupling: f64,
    /// Cavity decay `kappa` (rad/s).
    pub cavity_decay: f64,
    /// Coherence decay `gamma_s` (rad/s).
    pub gamma_s: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Sub-ensemble half-splitting `delta` (rad/s).
    pub delta: f64,
}

impl ReducedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cavity_decay > 0.0) {
            return Err(Error::Domain("kappa must be positive".into()));
        }
        if !(self.gamma_s > 0.0) {
            return Err(Error::Domain("gamma_s must be positive".into()));
        }
        if !(self.gamma_plus >= self.gamma_minus.abs()) {
            return Err(Error::Domain("need gamma_plus >= |gamma_minus|".into()));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        ReducedParams { delta, ..*self }
    }

    /// Normalized coupling `sqrt(N) g / (kappa/2)`.
    pub fn g_norm(&self) -> f64 {
        self.collective_coupling / (0.5 * self.cavity_decay)
    }

    /// Normalized disorder strength `delta^2 / gamma_s^2`, the excess
    /// linewidth `Gamma/gamma_0 - 1` of the two-point distribution.
    pub fn normalized_disorder(&self) -> f64 {
        let r = self.delta / self.gamma_s;
        r * r
    }

    /// Effective linewidth of the two-point distribution,
    /// `gamma_0 (1 + 4 delta^2 / gamma_0^2)` with `gamma_0 = 2 gamma_s`.
    pub fn effective_linewidth(&self) -> f64 {
        let gamma0 = 2.0 * self.gamma_s;
        gamma0 * (1.0 + 4.0 * self.delta * self.delta / (gamma0 * gamma0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// The fixed points of the reduced flow. The non-trivial pair exists only
/// when `x0^2 > 0` (cooperativity above one); its two members are the Z2
/// images of each other.
#[derive(Debug, Clone)]
pub struct SteadyStateSet {
    pub trivial: ReducedState,
    pub nontrivial_plus: Option<ReducedState>,
    pub nontrivial_minus: Option<ReducedState>,
    /// The sign discriminant `x0^2` of the non-trivial branch (may be
    /// negative when the branch is absent).
    pub x0_squared: f64,
}

impl SteadyStateSet {
    pub fn has_nontrivial(&self) -> bool {
        self.nontrivial_plus.is_some()
    }
}

/// Right-hand side of the reduced flow.
pub fn reduced_derivs(s: &ReducedState, p: &ReducedParams) -> ReducedState {
    let g = p.collective_coupling;
    ReducedState {
        w: -0.5 * p.cavity_decay * s.w + g * s.x,
        x: -p.delta * s.y - p.gamma_s * s.x + g * s.w * s.z,
        y: p.delta * s.x - p.gamma_s * s.y,
        z: p.gamma_minus - p.gamma_plus * s.z - 4.0 * g * s.w * s.x,
    }
}

/// Both steady-state branches.
pub fn steady_states(p: &ReducedParams) -> SteadyStateSet {
    let g = p.collective_coupling;
    let trivial = ReducedState { w: 0.0, x: 0.0, y: 0.0, z: p.gamma_minus / p.gamma_plus };
    if g == 0.0 {
        return SteadyStateSet {
            trivial,
            nontrivial_plus: None,
            nontrivial_minus: None,
            x0_squared: f64::NEG_INFINITY,
        };
    }
    let z0 = p.cavity_decay * (p.gamma_s * p.gamma_s + p.delta * p.delta)
        / (2.0 * g * g * p.gamma_s);
    let x0_squared = p.cavity_decay / (8.0 * g * g) * (p.gamma_minus - p.gamma_plus * z0);
    if x0_squared <= 0.0 {
        return SteadyStateSet { trivial, nontrivial_plus: None, nontrivial_minus: None, x0_squared };
    }
    let x0 = x0_squared.sqrt();
    let plus = ReducedState {
        w: 2.0 * g / p.cavity_decay * x0,
        x: x0,
        y: p.delta / p.gamma_s * x0,
        z: z0,
    };
    let minus = ReducedState { w: -plus.w, x: -plus.x, y: -plus.y, z: plus.z };
    SteadyStateSet {
        trivial,
        nontrivial_plus: Some(plus),
        nontrivial_minus: Some(minus),
        x0_squared,
    }
}

/// Jacobian of the reduced flow at a steady state.
///
/// Panics if `ss` is not a fixed point of `reduced_derivs` to within a
/// scaled residual of 1e-9 (contract violation).
pub fn jacobian(ss: &ReducedState, p: &ReducedParams) -> [[f64; 4]; 4] {
    let d = reduced_derivs(ss, p);
    let rate_scale = 0.5 * p.cavity_decay
        + p.collective_coupling
        + p.gamma_s
        + p.gamma_plus
        + p.delta.abs();
    let state_scale = 1.0 + ss.w.abs().max(ss.x.abs()).max(ss.y.abs()).max(ss.z.abs());
    let res = d.w.abs().max(d.x.abs()).max(d.y.abs()).max(d.z.abs());
    assert!(
        res <= 1e-9 * rate_scale * state_scale,
        "jacobian called off a steady state (residual {res:e})"
    );
    let g = p.collective_coupling;
    [
        [-0.5 * p.cavity_decay, g, 0.0, 0.0],
        [g * ss.z, -p.gamma_s, -p.delta, g * ss.w],
        [0.0, p.delta, -p.gamma_s, 0.0],
        [-4.0 * g * ss.x, -4.0 * g * ss.w, 0.0, -p.gamma_plus],
    ]
}

/// Closed-form coefficients `(c3, c2, c1, c0)` of the characteristic
/// polynomial `l^4 + c3 l^3 + c2 l^2 + c1 l + c0` at the non-trivial branch.
pub fn char_coeffs(p: &ReducedParams) -> Result<(f64, f64, f64, f64)> {
    if !steady_states(p).has_nontrivial() {
        return Err(Error::Domain(
            "characteristic coefficients need the non-trivial branch (C > 1)".into(),
        ));
    }
    Ok(char_coeffs_unchecked(p))
}

fn char_coeffs_unchecked(p: &ReducedParams) -> (f64, f64, f64, f64) {
    let g2 = p.collective_coupling * p.collective_coupling;
    let k = p.cavity_decay;
    let gs = p.gamma_s;
    let gp = p.gamma_plus;
    let gm = p.gamma_minus;
    let d2 = p.delta * p.delta;
    let c3 = gp + 2.0 * gs + 0.5 * k;
    let c2 = d2 + 2.0 * g2 * gm / k
        + 0.5 * ((gp + gs) * (2.0 * gs + k) - d2 / gs * (2.0 * gp + k));
    let c1 = 2.0 * g2 * gm * (gs + k) / k - gp * k * (gs * gs + 3.0 * d2) / (2.0 * gs);
    let c0 = 2.0 * g2 * gm * gs - gp * k * (gs * gs + d2);
    (c3, c2, c1, c0)
}

/// Roots of a quartic via Durand-Kerner iteration on the rescaled monic
/// polynomial (the substitution `l = s mu` keeps every coefficient of order
/// one, so the iteration is well conditioned for rad/s-scale rates).
pub fn quartic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> [Complex64; 4] {
    let s = c3
        .abs()
        .max(c2.abs().sqrt())
        .max(c1.abs().cbrt())
        .max(c0.abs().powf(0.25))
        .max(1e-300);
    let d = [c0 / (s * s * s * s), c1 / (s * s * s), c2 / (s * s), c3 / s]; // low to high
    let eval = |z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for c in d.iter().rev() {
            p = p * z + c;
        }
        p
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut r = [seed, seed * seed, seed * seed * seed, seed * seed * seed * seed];
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if j != i {
                    denom *= r[i] - r[j];
                }
            }
            let step = eval(r[i]) / denom;
            r[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= 1e-15 {
            break;
        }
    }
    [s * r[0], s * r[1], s * r[2], s * r[3]]
}

/// Eigenvalues of the linearization at the non-trivial branch.
pub fn nontrivial_eigenvalues(p: &ReducedParams) -> Result<[Complex64; 4]> {
    let (c3, c2, c1, c0) = char_coeffs(p)?;
    Ok(quartic_roots(c3, c2, c1, c0))
}

/// Hopf-condition residual `c0 c3 / c1 - c2 + c1 / c3`; its root in `delta`
/// is the bifurcation point. Returns `None` at a pole (`c1` or `c3` zero),
/// where the caller must split the bracket.
pub fn hopf_residual(delta: f64, p: &ReducedParams) -> Option<f64> {
    hopf_residual_with_c1(delta, p).map(|(r, _)| r)
}

fn hopf_residual_with_c1(delta: f64, p: &ReducedParams) -> Option<(f64, f64)> {
    let pd = p.with_delta(delta);
    if !steady_states(&pd).has_nontrivial() {
        return None;
    }
    let (c3, c2, c1, c0) = char_coeffs_unchecked(&pd);
    if c1 == 0.0 || c3 == 0.0 {
        return None;
    }
    Some((c0 * c3 / c1 - c2 + c1 / c3, c1))
}

/// Instability condition of the incoherent (trivial) steady state:
/// `gamma_s^2 + delta^2 < 2 g~^2 gamma_s gamma_- / (kappa gamma_+)`.
pub fn trivial_instability(p: &ReducedParams) -> bool {
    let g2 = p.collective_coupling * p.collective_coupling;
    p.gamma_s * p.gamma_s + p.delta * p.delta
        < 2.0 * g2 * p.gamma_s * p.gamma_minus / (p.cavity_decay * p.gamma_plus)
}

/// Absolute tolerance of the critical-disorder root (rad/s).
pub const DELTA_TOL: f64 = std::f64::consts::TAU * 1.0;

/// Locate the critical disorder `delta_c`: the first sign change of the Hopf
/// residual scanned upward from `delta_lo`, refined by bisection with secant
/// acceleration to [`DELTA_TOL`]. Pole-safe: brackets containing a pole of
/// the residual are discarded.
pub fn critical_disorder(p: &ReducedParams, delta_lo: f64, delta_hi: f64) -> Result<f64> {
    if !(delta_hi > delta_lo && delta_lo >= 0.0) {
        return Err(Error::Domain("invalid critical-disorder search interval".into()));
    }
    const SCAN: usize = 512;
    let step = (delta_hi - delta_lo) / SCAN as f64;
    let mut prev: Option<(f64, f64, f64)> = None;
    for i in 0..=SCAN {
        let d = delta_lo + i as f64 * step;
        let r = hopf_residual_with_c1(d, p);
        if let (Some((d0, r0, c1_0)), Some((r1, c1_1))) = (prev, r) {
            if r0 == 0.0 {
                return Ok(d0);
            }
            // a sign flip of c1 inside the bracket is a pole of the
            // residual, not a root
            if r0 * r1 < 0.0 && c1_0 * c1_1 > 0.0 {
                return refine_root(p, d0, d, r0, r1);
            }
        }
        prev = r.map(|(r1, c1_1)| (d, r1, c1_1));
    }
    Err(Error::Domain(format!(
        "no Hopf point in [{:.3e}, {:.3e}] rad/s",
        delta_lo, delta_hi
    )))
}

fn refine_root(p: &ReducedParams, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    // refine far below the contract tolerance so that the eigenvalue pair at
    // the returned point sits on the imaginary axis to high accuracy
    let tol = (1e-9 * DELTA_TOL).max(4.0 * f64::EPSILON * b.abs());
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        // secant proposal, safeguarded by the bracket midpoint
        let mut m = b - fb * (b - a) / (fb - fa);
        if !m.is_finite() || m <= a || m >= b {
            m = 0.5 * (a + b);
        }
        let fm = match hopf_residual(m, p) {
            Some(v) => v,
            None => {
                // pole inside: fall back to pure bisection on the half that
                // still brackets
                m = 0.5 * (a + b);
                match hopf_residual(m, p) {
                    Some(v) => v,
                    None => return Err(Error::Domain("Hopf residual pole at bracket midpoint".into())),
                }
            }
        };
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Phase labels of the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    NoSr,
    CwSr,
    PeriodicSr,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::NoSr => "no_SR",
            PhaseLabel::CwSr => "CW_SR",
            PhaseLabel::PeriodicSr => "periodic_SR",
        }
    }
}

/// Which coupling is plotted on the diagram axis: the bare `g_norm`, or the
/// relaxation-corrected `sqrt(gamma_-/gamma_+) g_norm` that accounts for the
/// reduced steady-state population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingAxis {
    /// Plot `sqrt(N) g / (kappa/2)` directly (figure-parity default).
    Bare,
    /// Fold in the `sqrt(gamma_-/gamma_+)` population factor.
    EffectivePopulation,
}

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    /// Coupling-axis values (interpretation set by [`CouplingAxis`]).
    pub g_norm: Vec<f64>,
    /// Normalized disorder values `delta^2 / gamma_s^2`.
    pub disorder: Vec<f64>,
}

impl PhaseGrid {
    pub fn linspace(g: (f64, f64, usize), d: (f64, f64, usize)) -> Self {
        let lin = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
            if n <= 1 {
                return vec![lo];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        PhaseGrid { g_norm: lin(g), disorder: lin(d) }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub grid: PhaseGrid,
    pub axis: CouplingAxis,
    /// Row-major over disorder rows: `labels[i_d * n_g + i_g]`.
    pub labels: Vec<PhaseLabel>,
    /// The cooperativity-one existence boundary as (g_axis, disorder) points.
    pub c1_boundary: Vec<[f64; 2]>,
    /// The Hopf boundary as (g_axis, disorder) points.
    pub hopf_boundary: Vec<[f64; 2]>,
}

fn axis_to_gtilde(g_axis: f64, base: &ReducedParams, axis: CouplingAxis) -> f64 {
    let raw = g_axis * 0.5 * base.cavity_decay;
    match axis {
        CouplingAxis::Bare => raw,
        CouplingAxis::EffectivePopulation => {
            raw * (base.gamma_plus / base.gamma_minus).sqrt()
        }
    }
}

/// Classify one point of the diagram.
pub fn classify(g_axis: f64, disorder: f64, base: &ReducedParams, axis: CouplingAxis) -> PhaseLabel {
    let p = ReducedParams {
        collective_coupling: axis_to_gtilde(g_axis, base, axis),
        delta: base.gamma_s * disorder.max(0.0).sqrt(),
        ..*base
    };
    let ss = steady_states(&p);
    if !ss.has_nontrivial() {
        return PhaseLabel::NoSr;
    }
    let (c3, c2, c1, c0) = char_coeffs_unchecked(&p);
    let max_re = quartic_roots(c3, c2, c1, c0)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re > 0.0 {
        PhaseLabel::PeriodicSr
    } else {
        PhaseLabel::CwSr
    }
}

/// Compute the full phase diagram plus the two boundary polylines. Boundary
/// points are located per grid column with one bisection refinement per cell
/// edge crossing.
pub fn phase_diagram(grid: PhaseGrid, base: &ReducedParams, axis: CouplingAxis) -> Result<PhaseDiagram> {
    base.validate()?;
    if grid.g_norm.is_empty() || grid.disorder.is_empty() {
        return Err(Error::Domain("phase diagram needs a non-empty grid".into()));
    }
    let ng = grid.g_norm.len();
    let mut labels = Vec::with_capacity(ng * grid.disorder.len());
    for d in &grid.disorder {
        for g in &grid.g_norm {
            labels.push(classify(*g, *d, base, axis));
        }
    }

    // closed-form C = 1 curve: x0^2 = 0 at
    // g~^2 = kappa gamma_+ (gamma_s^2 + delta^2) / (2 gamma_s gamma_-)
    let mut c1_boundary = Vec::with_capacity(grid.disorder.len());
    for d in &grid.disorder {
        let delta = base.gamma_s * d.max(0.0).sqrt();
        let gt2 = base.cavity_decay * base.gamma_plus
            * (base.gamma_s * base.gamma_s + delta * delta)
            / (2.0 * base.gamma_s * base.gamma_minus);
        let mut g_axis = gt2.sqrt() / (0.5 * base.cavity_decay);
        if axis == CouplingAxis::EffectivePopulation {
            g_axis *= (base.gamma_minus / base.gamma_plus).sqrt();
        }
        c1_boundary.push([g_axis, *d]);
    }

    // Hopf curve: scan each disorder row for the CW -> periodic flip
    let mut hopf_boundary = Vec::new();
    for (i_d, d) in grid.disorder.iter().enumerate() {
        let row = &labels[i_d * ng..(i_d + 1) * ng];
        for i_g in 1..ng {
            let flips = (row[i_g - 1] == PhaseLabel::CwSr && row[i_g] == PhaseLabel::PeriodicSr)
                || (row[i_g - 1] == PhaseLabel::PeriodicSr && row[i_g] == PhaseLabel::CwSr);
            if flips {
                let (lo, hi) = (grid.g_norm[i_g - 1], grid.g_norm[i_g]);
                let mid = 0.5 * (lo + hi);
                let at_mid = classify(mid, *d, base, axis);
                let g_b = if at_mid == row[i_g - 1] { 0.5 * (mid + hi) } else { 0.5 * (lo + mid) };
                hopf_boundary.push([g_b, *d]);
            }
        }
    }
    Ok(PhaseDiagram { grid, axis, labels, c1_boundary, hopf_boundary })
}
