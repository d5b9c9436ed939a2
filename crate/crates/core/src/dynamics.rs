//! Truncated nonlinearity and the time steppers.
//!
//! The equation is `i∂_t u + Δu = θ_m(A + ‖u‖⁵_{X₂(0,t)}) N^ε(u) + u∘Ẇ`,
//! `N^ε(u) = ±μ|u|^{4-ε}u`. The truncation coefficient is evaluated from the
//! accumulator at the start of each step, so within a step both the
//! nonlinearity and the real noise act as pointwise phase rotations.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlsError};
use crate::grid::{l2_l10, Field, SpatialGrid};
use crate::noise::{CovarianceOperator, NoiseStream, RealField, WienerIncrement};
use crate::norms::StrichartzAccumulator;
use crate::serde_util::extended_f64;

/// `‖Q‖₂` for the ground state `Q(x) = 3^{1/4} sech^{1/2}(2x)`, i.e. `(√3 π / 2)^{1/2}`.
pub fn ground_state_mass() -> f64 {
    (3f64.sqrt() * std::f64::consts::PI / 2.0).sqrt()
}

/// Ground state of `-Q'' + Q = Q⁵`.
pub fn ground_state(x: f64) -> f64 {
    3f64.powf(0.25) / (2.0 * x).cosh().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Strang splitting with an exact phase step for nonlinearity and noise.
    Stratonovich,
    /// Exponential Euler–Maruyama on the Itô form.
    Ito,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Subcriticality `ε ∈ [0, 1]`; the nonlinearity is `|u|^{4-ε}u`.
    pub epsilon: f64,
    /// Truncation level `m`; infinite disables truncation.
    #[serde(with = "extended_f64")]
    pub m_trunc: f64,
    /// Coupling `μ ∈ [0, 1]` in front of the nonlinearity.
    pub mu: f64,
    pub sign: Sign,
    /// Offset `A` inside the cutoff, `θ_m(A + ‖u‖⁵_{X₂})`.
    pub trunc_offset: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 0.0,
            m_trunc: f64::INFINITY,
            mu: 1.0,
            sign: Sign::Defocusing,
            trunc_offset: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(SnlsError::Config(format!("epsilon must be in [0,1], got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(SnlsError::Config(format!("mu must be in [0,1], got {}", self.mu)));
        }
        if self.m_trunc.is_nan() || self.m_trunc <= 0.0 {
            return Err(SnlsError::Config(format!("m_trunc must be > 0, got {}", self.m_trunc)));
        }
        if !(self.trunc_offset >= 0.0 && self.trunc_offset.is_finite()) {
            return Err(SnlsError::Config(format!(
                "trunc_offset must be finite and >= 0, got {}",
                self.trunc_offset
            )));
        }
        Ok(())
    }

    /// `θ_m(A + x2_fifth)`.
    pub fn truncation(&self, x2_fifth: f64) -> f64 {
        theta_m(self.trunc_offset + x2_fifth, self.m_trunc)
    }

    /// Signed coefficient `±μ θ_m(A + x2_fifth)` of `|u|^{4-ε}u`.
    pub fn coefficient(&self, x2_fifth: f64) -> f64 {
        self.sign.value() * self.mu * self.truncation(x2_fifth)
    }
}

/// Smooth cutoff: 1 on `[-1, 1]`, 0 outside `(-2, 2)`, monotone in between.
///
/// The bridge on `1 < |x| < 2` is `ψ(2-|x|) / (ψ(2-|x|) + ψ(|x|-1))` with
/// `ψ(s) = e^{-1/s}` for `s > 0`, which is `C^∞` and has `sup|θ'| ≈ 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutoffProfile;

impl CutoffProfile {
    pub fn eval(&self, x: f64) -> f64 {
        theta(x)
    }
}

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

pub fn theta(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let p = psi(2.0 - a);
        p / (p + psi(a - 1.0))
    }
}

/// `θ_m(x) = θ(x/m)`; identically 1 when `m` is infinite.
pub fn theta_m(x: f64, m: f64) -> f64 {
    if m.is_infinite() {
        1.0
    } else {
        theta(x / m)
    }
}

/// Pointwise `sign |u|^{4-ε} u`.
pub fn nonlinearity(f: &Field, epsilon: f64, sign: Sign) -> Field {
    let half_power = 0.5 * (4.0 - epsilon);
    let s = sign.value();
    let values = f
        .values()
        .iter()
        .map(|&u| u * (s * u.norm_sqr().powf(half_power)))
        .collect();
    Field::from_raw(Arc::clone(f.grid()), values)
}

/// Fixed-`dt` stepper with cached propagator multipliers.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<SpatialGrid>,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    correction: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Arc<SpatialGrid>, dt: f64, correction: &RealField) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SnlsError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if correction.grid().spec() != grid.spec() {
            return Err(SnlsError::Config("correction lives on a different grid".into()));
        }
        Ok(Stepper {
            grid: Arc::clone(grid),
            dt,
            half: grid.propagator(0.5 * dt),
            full: grid.propagator(dt),
            correction: correction.values().to_vec(),
        })
    }

    pub fn for_operator(op: &CovarianceOperator, dt: f64) -> Result<Self> {
        Self::new(op.grid(), dt, &crate::noise::ito_correction(op))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    /// `S(dt/2) ∘ phase ∘ S(dt/2)` where the phase step is
    /// `u ↦ u exp(-i[coef |u|^{4-ε} dt + ΔW])`.
    pub fn stratonovich_in_place(&self, u: &mut [Complex64], delta_w: &[f64], coef: f64, epsilon: f64) {
        self.grid.apply_multiplier(u, &self.half);
        let half_power = 0.5 * (4.0 - epsilon);
        let cdt = coef * self.dt;
        for (v, &w) in u.iter_mut().zip(delta_w) {
            let phase = cdt * v.norm_sqr().powf(half_power) + w;
            *v *= Complex64::cis(-phase);
        }
        self.grid.apply_multiplier(u, &self.half);
    }

    /// `u ↦ S(dt)[u - i dt coef N^ε(u) - i u ΔW - (dt/2) F_Φ u]`.
    pub fn ito_in_place(&self, u: &mut [Complex64], delta_w: &[f64], coef: f64, epsilon: f64) {
        let half_power = 0.5 * (4.0 - epsilon);
        let cdt = coef * self.dt;
        let hdt = 0.5 * self.dt;
        for ((v, &w), &f) in u.iter_mut().zip(delta_w).zip(&self.correction) {
            let factor = Complex64::new(1.0 - hdt * f, -(cdt * v.norm_sqr().powf(half_power) + w));
            *v *= factor;
        }
        self.grid.apply_multiplier(u, &self.full);
    }

    pub fn step_in_place(
        &self,
        integrator: Integrator,
        u: &mut [Complex64],
        delta_w: &[f64],
        coef: f64,
        epsilon: f64,
    ) {
        match integrator {
            Integrator::Stratonovich => self.stratonovich_in_place(u, delta_w, coef, epsilon),
            Integrator::Ito => self.ito_in_place(u, delta_w, coef, epsilon),
        }
    }

    /// Explicit Duhamel update `y ↦ S(dt)(y + G(v))` with
    /// `G(v) = -i dt coef N^ε(v) - i v ΔW - (dt/2) F_Φ v`.
    fn duhamel_in_place(&self, y: &mut [Complex64], v: &[Complex64], delta_w: &[f64], coef: f64, epsilon: f64) {
        let half_power = 0.5 * (4.0 - epsilon);
        let cdt = coef * self.dt;
        let hdt = 0.5 * self.dt;
        for (((yj, &vj), &w), &f) in y.iter_mut().zip(v).zip(delta_w).zip(&self.correction) {
            let g = Complex64::new(-hdt * f, -(cdt * vj.norm_sqr().powf(half_power) + w));
            *yj += vj * g;
        }
        self.grid.apply_multiplier(y, &self.full);
    }
}

fn check_step(f: &Field, dt: f64, dw: &WienerIncrement) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SnlsError::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if dw.delta_w.grid().spec() != f.grid().spec() {
        return Err(SnlsError::Config("increment lives on a different grid".into()));
    }
    Ok(())
}

fn finish_step(out: Field) -> Result<Field> {
    if out.is_finite() {
        Ok(out)
    } else {
        Err(SnlsError::NonFinite {
            step: 0,
            what: "integrator produced NaN/Inf".into(),
        })
    }
}

/// One Strang step of the Stratonovich equation. Preserves `‖u‖₂` up to roundoff.
pub fn strat_split_step(
    f: &Field,
    dt: f64,
    dw: &WienerIncrement,
    acc: &StrichartzAccumulator,
    p: &ModelParams,
) -> Result<Field> {
    check_step(f, dt, dw)?;
    let stepper = Stepper::new(f.grid(), dt, &RealField::zeros(Arc::clone(f.grid())))?;
    let mut out = f.clone();
    stepper.stratonovich_in_place(out.values_mut(), dw.delta_w.values(), p.coefficient(acc.x2_fifth), p.epsilon);
    finish_step(out)
}

/// One exponential Euler–Maruyama step of the Itô form.
pub fn ito_em_step(
    f: &Field,
    dt: f64,
    dw: &WienerIncrement,
    correction: &RealField,
    acc: &StrichartzAccumulator,
    p: &ModelParams,
) -> Result<Field> {
    check_step(f, dt, dw)?;
    let stepper = Stepper::new(f.grid(), dt, correction)?;
    let mut out = f.clone();
    stepper.ito_in_place(out.values_mut(), dw.delta_w.values(), p.coefficient(acc.x2_fifth), p.epsilon);
    finish_step(out)
}

/// Frozen noise increments on a uniform time grid.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub dt: f64,
    pub increments: Vec<WienerIncrement>,
}

impl NoisePath {
    pub fn sample(op: &CovarianceOperator, dt: f64, steps: usize, stream: &mut NoiseStream) -> Result<Self> {
        let increments = (0..steps)
            .map(|_| crate::noise::sample_increment(op, dt, stream))
            .collect::<Result<Vec<_>>>()?;
        Ok(NoisePath { dt, increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    /// Stop when successive iterates are closer than this in `X(a, b)`.
    pub tol: f64,
    pub max_iters: usize,
    pub max_depth: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-10,
            max_iters: 60,
            max_depth: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    /// Fields at `a, a + dt, …, b`.
    pub trajectory: Vec<Field>,
    /// Total Duhamel-map applications over all subintervals.
    pub iterations: usize,
    /// Successive `X`-distances of the top-level attempt.
    pub distances: Vec<f64>,
    pub bisections: usize,
}

impl PicardSolution {
    /// Ratios of successive iterate distances.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// `sup_n ‖a_n - b_n‖₂ + (Σ_{n<N} ‖a_n - b_n‖₁₀⁵ dt)^{1/5}`.
pub fn x_distance(a: &[Field], b: &[Field], dt: f64) -> f64 {
    let mut acc = StrichartzAccumulator::from_initial_l2(0.0);
    let n = a.len().min(b.len());
    for (j, (fa, fb)) in a.iter().zip(b).enumerate() {
        let diff: Vec<Complex64> = fa.values().iter().zip(fb.values()).map(|(x, y)| x - y).collect();
        let (l2, l10) = l2_l10(&diff, fa.grid().dx());
        if j + 1 < n {
            // norms are finite for finite fields
            let _ = acc.update_with_norms(l2, l10, dt);
        } else {
            acc.observe_l2(l2);
        }
    }
    acc.x_norm()
}

/// Picard iteration of the discrete Duhamel map on `[a, a + N dt]`.
///
/// The map propagates spectrally and integrates the nonlinear, noise and
/// correction terms with the left rectangle rule; its fixed point is the
/// exponential Euler–Maruyama trajectory. When iterates stop contracting or
/// `max_iters` is reached, the interval is bisected and the halves solved in
/// sequence, carrying `x2_offset` forward.
pub fn picard_solve(
    u_start: &Field,
    noise: &NoisePath,
    correction: &RealField,
    params: &ModelParams,
    x2_offset: f64,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    params.validate()?;
    let stepper = Stepper::new(u_start.grid(), noise.dt, correction)?;
    let mut stats = PicardSolution {
        trajectory: Vec::new(),
        iterations: 0,
        distances: Vec::new(),
        bisections: 0,
    };
    let traj = solve_interval(&stepper, u_start, &noise.increments, params, x2_offset, opts, 0, 0, &mut stats)?;
    stats.trajectory = traj;
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn solve_interval(
    stepper: &Stepper,
    u_start: &Field,
    incs: &[WienerIncrement],
    params: &ModelParams,
    x2_offset: f64,
    opts: &PicardOptions,
    first_step: usize,
    depth: usize,
    stats: &mut PicardSolution,
) -> Result<Vec<Field>> {
    let dt = stepper.dt();
    let grid = Arc::clone(u_start.grid());
    // initial guess: free evolution
    let mut current = Vec::with_capacity(incs.len() + 1);
    let mut y = u_start.clone();
    current.push(y.clone());
    for _ in incs {
        y.free_propagate_in_place(dt);
        current.push(y.clone());
    }
    let mut distances = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let next = duhamel_map(stepper, u_start, &current, incs, params, x2_offset);
        stats.iterations += 1;
        if next.iter().any(|f| !f.is_finite()) {
            break;
        }
        let d = x_distance(&next, &current, dt);
        distances.push(d);
        current = next;
        if d < opts.tol {
            converged = true;
            break;
        }
        let k = distances.len();
        if k >= 3 && distances[k - 1] > distances[k - 2] && distances[k - 2] > distances[k - 3] {
            break;
        }
    }
    if depth == 0 {
        stats.distances = distances;
    }
    if converged {
        return Ok(current);
    }
    let t0 = first_step as f64 * dt;
    let t1 = (first_step + incs.len()) as f64 * dt;
    if depth >= opts.max_depth || incs.len() < 2 {
        return Err(SnlsError::IntervalTooRough {
            start: t0,
            end: t1,
            depth,
        });
    }
    stats.bisections += 1;
    let mid = incs.len() / 2;
    let mut left = solve_interval(stepper, u_start, &incs[..mid], params, x2_offset, opts, first_step, depth + 1, stats)?;
    let mut offset = x2_offset;
    for f in &left[..mid] {
        let (_, l10) = l2_l10(f.values(), grid.dx());
        offset += l10.powi(5) * dt;
    }
    let mid_field = left.pop().expect("nonempty trajectory");
    let right = solve_interval(stepper, &mid_field, &incs[mid..], params, offset, opts, first_step + mid, depth + 1, stats)?;
    left.extend(right);
    Ok(left)
}

fn duhamel_map(
    stepper: &Stepper,
    u_start: &Field,
    v: &[Field],
    incs: &[WienerIncrement],
    params: &ModelParams,
    x2_offset: f64,
) -> Vec<Field> {
    let dt = stepper.dt();
    let dx = u_start.grid().dx();
    let mut out = Vec::with_capacity(v.len());
    let mut y = u_start.clone();
    out.push(y.clone());
    let mut x2 = x2_offset;
    for (vn, inc) in v.iter().zip(incs) {
        let coef = params.coefficient(x2);
        stepper.duhamel_in_place(y.values_mut(), vn.values(), inc.delta_w.values(), coef, params.epsilon);
        let (_, l10) = l2_l10(vn.values(), dx);
        x2 += l10.powi(5) * dt;
        out.push(y.clone());
    }
    out
}
