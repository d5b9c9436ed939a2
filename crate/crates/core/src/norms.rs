//! Running Strichartz norms along a trajectory and `L^ρ_ω` ensemble moments.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlsError};
use crate::grid::{l2_l10, Field};

/// Default moment order `ρ₀`; anything above 5 is admissible.
pub const DEFAULT_RHO0: f64 = 6.0;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;
/// Fixed so that summaries are reproducible byte for byte.
pub const BOOTSTRAP_SEED: u64 = 0x5eed_b007_5a3b_1e00;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// Start of the step whose field was sampled.
    pub t: f64,
    pub l2: f64,
    pub l10: f64,
    /// `‖u‖⁵_{X₂(0, t+dt)}` after the update.
    pub x2_fifth: f64,
}

/// `X₁ = L^∞_t L²_x` and fifth power of `X₂ = L⁵_t L¹⁰_x` on `[0, t_now]`.
///
/// `X₂` uses left-Riemann time quadrature, so after `update(u_n, dt)` the
/// accumulator only depends on fields at times strictly before `t_now`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzAccumulator {
    pub sup_l2: f64,
    pub x2_fifth: f64,
    pub t_now: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step_log: Option<Vec<StepLog>>,
}

impl StrichartzAccumulator {
    pub fn new(initial: &Field) -> Self {
        Self::from_initial_l2(initial.l2_norm())
    }

    pub fn from_initial_l2(l2: f64) -> Self {
        StrichartzAccumulator {
            sup_l2: l2,
            x2_fifth: 0.0,
            t_now: 0.0,
            per_step_log: None,
        }
    }

    pub fn with_log(mut self) -> Self {
        self.per_step_log = Some(Vec::new());
        self
    }

    pub fn update(&mut self, f: &Field, dt: f64) -> Result<()> {
        let (l2, l10) = l2_l10(f.values(), f.grid().dx());
        self.update_with_norms(l2, l10, dt)
    }

    /// Same as [`update`](Self::update) with precomputed `‖f‖₂`, `‖f‖₁₀`.
    pub fn update_with_norms(&mut self, l2: f64, l10: f64, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SnlsError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if !(l2.is_finite() && l10.is_finite()) {
            return Err(SnlsError::NonFinite {
                step: self.per_step_log.as_ref().map_or(0, Vec::len),
                what: format!("norms at t = {}", self.t_now),
            });
        }
        let t = self.t_now;
        self.sup_l2 = self.sup_l2.max(l2);
        let l10_sq = l10 * l10;
        self.x2_fifth += l10_sq * l10_sq * l10 * dt;
        self.t_now += dt;
        if let Some(log) = self.per_step_log.as_mut() {
            log.push(StepLog {
                t,
                l2,
                l10,
                x2_fifth: self.x2_fifth,
            });
        }
        Ok(())
    }

    /// Folds an `L²` value into `X₁` without advancing time (final field).
    pub fn observe_l2(&mut self, l2: f64) {
        self.sup_l2 = self.sup_l2.max(l2);
    }

    pub fn x2_norm(&self) -> f64 {
        self.x2_fifth.powf(0.2)
    }

    /// `‖u‖_{X(0,t)} = ‖u‖_{X₁} + ‖u‖_{X₂}`.
    pub fn x_norm(&self) -> f64 {
        self.sup_l2 + self.x2_norm()
    }

    /// CSV with columns `t,l2,l10,x2_fifth`.
    pub fn write_log_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,l2,l10,x2_fifth")?;
        for s in self.per_step_log.iter().flatten() {
            writeln!(out, "{},{},{},{}", s.t, s.l2, s.l10, s.x2_fifth)?;
        }
        Ok(())
    }
}

/// `‖f‖₂ + ‖∂_x f‖₂` with the spectral derivative.
pub fn h1_norm(f: &Field) -> f64 {
    f.l2_norm() + f.derivative().l2_norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub rho: f64,
    /// `(mean sᵖ)^{1/ρ}`.
    pub value: f64,
    /// Bootstrap standard error of `value`.
    pub stderr: f64,
    pub n_paths: usize,
}

pub fn omega_moment(samples: &[f64], rho: f64) -> Result<EnsembleSummary> {
    omega_moment_with(samples, rho, DEFAULT_BOOTSTRAP_RESAMPLES)
}

pub fn omega_moment_with(samples: &[f64], rho: f64, resamples: usize) -> Result<EnsembleSummary> {
    if samples.is_empty() {
        return Err(SnlsError::InvalidParameter("omega_moment needs samples".into()));
    }
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(SnlsError::InvalidParameter(format!("rho must be >= 1, got {rho}")));
    }
    if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(SnlsError::InvalidParameter(
            "omega_moment samples must be finite and nonnegative".into(),
        ));
    }
    let value = moment(samples.iter().copied(), samples.len(), rho);
    let stderr = if resamples < 2 || samples.len() < 2 {
        0.0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
        let n = samples.len();
        let reps: Vec<f64> = (0..resamples)
            .map(|_| moment((0..n).map(|_| samples[rng.random_range(0..n)]), n, rho))
            .collect();
        if reps.iter().all(|&r| r == reps[0]) {
            return Ok(EnsembleSummary {
                rho,
                value,
                stderr: 0.0,
                n_paths: n,
            });
        }
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let var = reps.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (reps.len() - 1) as f64;
        var.sqrt()
    };
    Ok(EnsembleSummary {
        rho,
        value,
        stderr,
        n_paths: samples.len(),
    })
}

fn moment(samples: impl Iterator<Item = f64>, n: usize, rho: f64) -> f64 {
    let s: f64 = if rho == 1.0 {
        samples.sum()
    } else {
        samples.map(|v| v.powf(rho)).sum()
    };
    (s / n as f64).powf(1.0 / rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn gaussian(g: &Arc<SpatialGrid>) -> Field {
        Field::from_fn(Arc::clone(g), |x| Complex64::new((-x * x).exp(), 0.0)).unwrap()
    }

    #[test]
    fn zero_stream_keeps_initial_state() {
        let g = SpatialGrid::shared(64, 10.0).unwrap();
        let u0 = gaussian(&g);
        let mut acc = StrichartzAccumulator::new(&u0);
        let zero = Field::zeros(Arc::clone(&g));
        for _ in 0..10 {
            acc.update(&zero, 0.1).unwrap();
        }
        assert_eq!(acc.sup_l2, u0.l2_norm());
        assert_eq!(acc.x2_fifth, 0.0);
        assert!((acc.t_now - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_riemann_sum() {
        let g = SpatialGrid::shared(64, 10.0).unwrap();
        let c = gaussian(&g);
        let l10 = c.lp_norm(10.0).unwrap();
        let mut acc = StrichartzAccumulator::new(&c);
        for _ in 0..8 {
            acc.update(&c, 0.125).unwrap();
        }
        assert!((acc.x2_fifth - l10.powi(5)).abs() < 1e-14);
    }

    #[test]
    fn x_norm_arithmetic() {
        let acc = StrichartzAccumulator {
            sup_l2: 1.0,
            x2_fifth: 32.0,
            t_now: 1.0,
            per_step_log: None,
        };
        assert!((acc.x_norm() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dt_and_nonfinite() {
        let mut acc = StrichartzAccumulator::from_initial_l2(1.0);
        assert!(acc.update_with_norms(1.0, 1.0, 0.0).is_err());
        assert!(matches!(
            acc.update_with_norms(f64::NAN, 1.0, 0.1),
            Err(SnlsError::NonFinite { .. })
        ));
    }

    #[test]
    fn log_csv_columns() {
        let mut acc = StrichartzAccumulator::from_initial_l2(1.0).with_log();
        acc.update_with_norms(1.0, 2.0, 0.5).unwrap();
        let mut buf = Vec::new();
        acc.write_log_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,l2,l10,x2_fifth\n0,1,2,16\n");
    }

    #[test]
    fn h1_of_constant_and_plane_wave() {
        let g = SpatialGrid::shared(128, 2.0 * std::f64::consts::PI).unwrap();
        let c = Field::from_fn(Arc::clone(&g), |_| Complex64::new(2.0, 0.0)).unwrap();
        assert!((h1_norm(&c) - c.l2_norm()).abs() < 1e-13);
        let k = g.wavenumbers()[5];
        let w = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, k * x)).unwrap();
        let l2 = w.l2_norm();
        assert!((h1_norm(&w) - (1.0 + k.abs()) * l2).abs() < 1e-11);
    }

    #[test]
    fn moments_of_simple_samples() {
        for rho in [1.0, 2.0, 6.0] {
            let s = omega_moment(&[1.5; 7], rho).unwrap();
            assert!((s.value - 1.5).abs() < 1e-14);
            assert!(s.stderr < 1e-14);
        }
        let s = omega_moment(&[0.0, 2.0], 1.0).unwrap();
        assert_eq!(s.value, 1.0);
        assert!(omega_moment(&[], 2.0).is_err());
        assert!(omega_moment(&[1.0], 0.5).is_err());
        assert!(omega_moment(&[-1.0], 2.0).is_err());
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let samples: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let a = omega_moment(&samples, 6.0).unwrap();
        let b = omega_moment(&samples, 6.0).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr > 0.0);
    }
}
