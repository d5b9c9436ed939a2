//! Invariant checks behind `snls validate`: unitarity, Parseval, mass
//! conservation, dispersive slope, ground state, soliton regression,
//! Itô/Stratonovich weak order and `X₂` quadrature order.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{ground_state, Integrator, ModelParams, Sign, Stepper};
use crate::error::{Result, SnlsError};
use crate::grid::{dispersive_decay_probe, loglog_slope, Field, GridSpec, SpatialGrid};
use crate::noise::RealField;
use crate::norms::StrichartzAccumulator;
use crate::pathsim::{run_coupled, PathConfig, Variant};

pub const CHECK_NAMES: [&str; 8] = [
    "unitarity",
    "parseval",
    "mass",
    "dispersion",
    "ground_state",
    "soliton",
    "ito_strat",
    "quadrature",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, f64, f64, String)>) -> Result<CheckResult> {
    let t0 = Instant::now();
    let (passed, value, threshold, detail) = f()?;
    Ok(CheckResult {
        name: name.to_string(),
        passed,
        value,
        threshold,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn random_field(grid: &Arc<SpatialGrid>, rng: &mut ChaCha8Rng) -> Result<Field> {
    let values = (0..grid.n_points())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Field::new(Arc::clone(grid), values)
}

/// `‖S(t)f‖ = ‖f‖` and `S(t)S(s)f = S(t+s)f` on random fields, `t, s ∈ [-1, 1]`.
pub fn check_unitarity(n_fields: usize, n_points: usize, tol: f64) -> Result<CheckResult> {
    timed("unitarity", || {
        let grid = SpatialGrid::shared(n_points, 50.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut norm_err, mut group_err) = (0.0f64, 0.0f64);
        for _ in 0..n_fields {
            let f = random_field(&grid, &mut rng)?;
            let t = rng.random_range(-1.0..1.0);
            let s = rng.random_range(-1.0..1.0);
            let n0 = f.l2_norm();
            let ft = f.free_propagate(t);
            norm_err = norm_err.max((ft.l2_norm() - n0).abs() / n0);
            let two = ft.free_propagate(s);
            let one = f.free_propagate(t + s);
            group_err = group_err.max(two.difference(&one)?.l2_norm() / n0);
        }
        let worst = norm_err.max(group_err);
        Ok((
            worst <= tol,
            worst,
            tol,
            format!("{n_fields} fields, N={n_points}: norm {norm_err:.2e}, group law {group_err:.2e}"),
        ))
    })
}

/// `Σ|u|² dx = (dx/N) Σ|û|²`.
pub fn check_parseval(n_fields: usize, n_points: usize, tol: f64) -> Result<CheckResult> {
    timed("parseval", || {
        let grid = SpatialGrid::shared(n_points, 50.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        for _ in 0..n_fields {
            let f = random_field(&grid, &mut rng)?;
            let a = f.l2_norm();
            worst = worst.max((f.to_spectrum().l2_norm() - a).abs() / a);
        }
        Ok((worst <= tol, worst, tol, format!("{n_fields} fields, N={n_points}")))
    })
}

/// Largest Stratonovich mass drift over every `(ε, m)` pair, all driven by
/// one noise path.
pub fn check_mass(
    n_points: usize,
    dt: f64,
    amplitude: f64,
    eps_list: &[f64],
    m_list: &[f64],
    seed: u64,
    tol: f64,
) -> Result<CheckResult> {
    timed("mass", || {
        let mut cfg = PathConfig {
            grid: GridSpec {
                n_points,
                ..GridSpec::default()
            },
            dt,
            seed,
            store_series: false,
            ..PathConfig::default()
        };
        cfg.noise.amplitude = amplitude;
        let (_, _, u0) = cfg.setup()?;
        let mut variants = Vec::new();
        for &epsilon in eps_list {
            for &m_trunc in m_list {
                variants.push(Variant {
                    label: None,
                    params: ModelParams {
                        epsilon,
                        m_trunc,
                        ..ModelParams::default()
                    },
                    initial: u0.clone(),
                });
            }
        }
        let n = variants.len();
        let recs = run_coupled(&cfg, variants, &[])?.records;
        if let Some(r) = recs.iter().find(|r| !r.completed()) {
            return Err(SnlsError::Runtime(format!("mass check path aborted: {:?}", r.status)));
        }
        let worst = recs.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
        Ok((
            worst <= tol,
            worst,
            tol,
            format!("{n} (eps, m) pairs, N={n_points}, dt={dt}, amplitude {amplitude}"),
        ))
    })
}

/// Fitted log–log slope of `sup|S(t) e^{-x²}|` over `t ∈ [1, 10]`, keeping
/// only times before mass reaches the boundary layer.
pub fn check_dispersion(n_points: usize, domain_length: f64, window: (f64, f64)) -> Result<CheckResult> {
    timed("dispersion", || {
        let grid = SpatialGrid::shared(n_points, domain_length)?;
        let f = Field::from_fn(Arc::clone(&grid), |x| Complex64::new((-x * x).exp(), 0.0))?;
        let times: Vec<f64> = (0..=20).map(|i| 10f64.powf(i as f64 / 20.0)).collect();
        let mut kept = Vec::new();
        for &t in &times {
            let probe = dispersive_decay_probe(&f, &[t], 1e-8)?;
            if probe.boundary_warning {
                break;
            }
            kept.extend(probe.samples);
        }
        let t_max = kept.last().map_or(0.0, |s| s.0);
        let slope = loglog_slope(&kept)?;
        let (lo, hi) = window;
        Ok((
            (lo..=hi).contains(&slope),
            slope,
            hi,
            format!("N={n_points}, L={domain_length}, {} times up to t={t_max:.3}, window [{lo}, {hi}]", kept.len()),
        ))
    })
}

/// Tenth-order central second difference on a uniform grid.
pub fn second_difference_10(f: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 6] = [-5269.0 / 1800.0, 5.0 / 3.0, -5.0 / 21.0, 5.0 / 126.0, -5.0 / 1008.0, 1.0 / 3150.0];
    let n = f.len();
    let mut out = vec![f64::NAN; n];
    for i in 5..n.saturating_sub(5) {
        let mut s = C[0] * f[i];
        for (k, c) in C.iter().enumerate().skip(1) {
            s += c * (f[i + k] + f[i - k]);
        }
        out[i] = s / (h * h);
    }
    out
}

/// Sup of the finite-difference residual `−Q'' + Q − Q⁵` on the interior.
pub fn check_ground_state(n_points: usize, domain_length: f64, tol: f64) -> Result<CheckResult> {
    timed("ground_state", || {
        let grid = SpatialGrid::new(n_points, domain_length)?;
        let q: Vec<f64> = grid.points().iter().map(|&x| ground_state(x)).collect();
        let d2 = second_difference_10(&q, grid.dx());
        let worst = (5..n_points - 5)
            .map(|i| (-d2[i] + q[i] - q[i].powi(5)).abs())
            .fold(0.0, f64::max);
        Ok((worst <= tol, worst, tol, format!("10th-order stencil, N={n_points}, L={domain_length}")))
    })
}

/// Focusing deterministic run from `Q`: `max_t ‖|u(t)| − Q‖₂ / ‖Q‖₂`.
pub fn check_soliton(n_points: usize, domain_length: f64, dt: f64, tol: f64) -> Result<CheckResult> {
    timed("soliton", || {
        let grid = SpatialGrid::shared(n_points, domain_length)?;
        let q = Field::from_fn(Arc::clone(&grid), |x| Complex64::new(ground_state(x), 0.0))?;
        let stepper = Stepper::new(&grid, dt, &RealField::zeros(Arc::clone(&grid)))?;
        let params = ModelParams {
            sign: Sign::Focusing,
            ..ModelParams::default()
        };
        let coef = params.coefficient(0.0);
        let zero = vec![0.0; n_points];
        let steps = (1.0 / dt).round() as usize;
        let stride = (steps / 100).max(1);
        let qn = q.l2_norm();
        let mut u = q.clone();
        let mut worst = 0.0f64;
        for s in 0..steps {
            stepper.step_in_place(Integrator::Stratonovich, u.values_mut(), &zero, coef, 0.0);
            if (s + 1) % stride == 0 || s + 1 == steps {
                let err: f64 = u
                    .values()
                    .iter()
                    .zip(q.values())
                    .map(|(a, b)| (a.norm() - b.re).powi(2))
                    .sum::<f64>()
                    * grid.dx();
                worst = worst.max(err.sqrt() / qn);
            }
        }
        let phase = u.values()[n_points / 2].arg();
        Ok((
            worst <= tol && u.is_finite(),
            worst,
            tol,
            format!("N={n_points}, L={domain_length}, dt={dt}, phase at x=0 after t=1: {phase:.9}"),
        ))
    })
}

/// Settings of the weak-consistency check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakOrderSettings {
    pub n_paths: usize,
    pub dts: Vec<f64>,
    pub noise_amplitude: f64,
    pub initial_mass: f64,
    pub n_points: usize,
    pub seed_base: u64,
    pub min_order: f64,
}

impl Default for WeakOrderSettings {
    fn default() -> Self {
        WeakOrderSettings {
            n_paths: 500,
            dts: vec![4e-3, 2e-3, 1e-3],
            noise_amplitude: 0.1,
            initial_mass: 2.0,
            n_points: 1024,
            seed_base: 0,
            min_order: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakOrderReport {
    /// Per `dt`: `|E mass_Itô − E mass_Strat|`.
    pub mass_gap: Vec<f64>,
    /// Per `dt`: `|E ‖u(1)‖₁₀ (Itô) − E ‖u(1)‖₁₀ (Strat)|`.
    pub l10_gap: Vec<f64>,
    pub mass_order: f64,
    pub l10_order: f64,
}

/// Ensemble means of mass and `‖u(1)‖₁₀` under both integrators on common
/// increments; the gap between them should shrink like `dt`.
pub fn weak_order(settings: &WeakOrderSettings, workers: usize) -> Result<WeakOrderReport> {
    let seeds: Vec<u64> = (0..settings.n_paths as u64).map(|i| settings.seed_base + i).collect();
    let mut mass_gap = Vec::new();
    let mut l10_gap = Vec::new();
    for &dt in &settings.dts {
        let per_seed = crate::ensemble::map_seeds(&seeds, workers, |seed| {
            let mut cfg = PathConfig {
                grid: GridSpec {
                    n_points: settings.n_points,
                    ..GridSpec::default()
                },
                dt,
                seed,
                initial_mass: Some(settings.initial_mass),
                store_series: false,
                store_final_field: true,
                ..PathConfig::default()
            };
            cfg.noise.amplitude = settings.noise_amplitude;
            let (grid, _, u0) = cfg.setup()?;
            let mut out = [(0.0, 0.0); 2];
            for (slot, integ) in [Integrator::Ito, Integrator::Stratonovich].into_iter().enumerate() {
                cfg.integrator = integ;
                let v = Variant {
                    label: None,
                    params: cfg.params,
                    initial: u0.clone(),
                };
                let rec = run_coupled(&cfg, vec![v], &[])?.records.remove(0);
                let f = rec
                    .final_field
                    .ok_or_else(|| SnlsError::Runtime(format!("seed {seed} aborted at dt={dt}")))?
                    .to_field(&grid)?;
                let l2 = f.l2_norm();
                out[slot] = (l2 * l2, f.lp_norm(10.0)?);
            }
            Ok((out[0].0 - out[1].0, out[0].1 - out[1].1))
        })?;
        let n = per_seed.len() as f64;
        mass_gap.push((per_seed.iter().map(|p| p.0).sum::<f64>() / n).abs());
        l10_gap.push((per_seed.iter().map(|p| p.1).sum::<f64>() / n).abs());
    }
    let fit = |gaps: &[f64]| {
        let pts: Vec<(f64, f64)> = settings.dts.iter().copied().zip(gaps.iter().copied()).collect();
        loglog_slope(&pts)
    };
    Ok(WeakOrderReport {
        mass_order: fit(&mass_gap)?,
        l10_order: fit(&l10_gap)?,
        mass_gap,
        l10_gap,
    })
}

pub fn check_ito_strat(settings: &WeakOrderSettings, workers: usize) -> Result<CheckResult> {
    timed("ito_strat", || {
        let r = weak_order(settings, workers)?;
        let order = r.mass_order.min(r.l10_order);
        Ok((
            order >= settings.min_order,
            order,
            settings.min_order,
            format!(
                "{} paths, dt {:?}: mass order {:.3}, L10 order {:.3}",
                settings.n_paths, settings.dts, r.mass_order, r.l10_order
            ),
        ))
    })
}

/// Closed form of `∫₀¹ ‖S(t)e^{-x²}‖₁₀⁵ dt = (π/10)^{1/4} arctan(4) / 4`.
pub fn gaussian_x2_fifth_exact() -> f64 {
    (std::f64::consts::PI / 10.0).powf(0.25) * 4f64.atan() / 4.0
}

/// Observed order of the left-Riemann `X₂` accumulator on free Gaussian flow.
pub fn check_quadrature(n_points: usize) -> Result<CheckResult> {
    timed("quadrature", || {
        let grid = SpatialGrid::shared(n_points, 50.0)?;
        let f = Field::from_fn(Arc::clone(&grid), |x| Complex64::new((-x * x).exp(), 0.0))?;
        let exact = gaussian_x2_fifth_exact();
        let mut pts = Vec::new();
        for steps in [10usize, 20, 40, 80] {
            let dt = 1.0 / steps as f64;
            let mut acc = StrichartzAccumulator::new(&f);
            let mut u = f.clone();
            for _ in 0..steps {
                acc.update(&u, dt)?;
                u.free_propagate_in_place(dt);
            }
            pts.push((dt, (acc.x2_fifth - exact).abs()));
        }
        let order = loglog_slope(&pts)?;
        Ok((
            (0.9..=1.1).contains(&order),
            order,
            1.0,
            format!("errors {:?}", pts.iter().map(|p| p.1).collect::<Vec<_>>()),
        ))
    })
}

/// How hard to push the slower checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Full,
    /// Fewer weak-order paths; everything else unchanged.
    Quick,
}

pub fn run_check(name: &str, profile: Profile, workers: usize) -> Result<CheckResult> {
    match name {
        "unitarity" => check_unitarity(100, 1024, 1e-12),
        "parseval" => check_parseval(100, 1024, 1e-12),
        "mass" => check_mass(
            1024,
            1e-3,
            0.5,
            &[0.8, 0.4, 0.2, 0.1, 0.05, 0.0],
            &[0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY],
            0,
            1e-10,
        ),
        "dispersion" => check_dispersion(4096, 400.0, (-0.55, -0.45)),
        "ground_state" => check_ground_state(4096, 60.0, 1e-8),
        "soliton" => check_soliton(4096, 60.0, 1e-4, 1e-6),
        "ito_strat" => {
            let mut s = WeakOrderSettings::default();
            if profile == Profile::Quick {
                s.n_paths = 100;
            }
            check_ito_strat(&s, workers)
        }
        "quadrature" => check_quadrature(1024),
        other => Err(SnlsError::Config(format!(
            "unknown check {other:?}; known: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

pub fn run_checks(only: &[String], profile: Profile, workers: usize) -> Result<Vec<CheckResult>> {
    let names: Vec<&str> = if only.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        for n in only {
            if !CHECK_NAMES.contains(&n.as_str()) {
                return Err(SnlsError::Config(format!(
                    "unknown check {n:?}; known: {}",
                    CHECK_NAMES.join(", ")
                )));
            }
        }
        only.iter().map(String::as_str).collect()
    };
    names.into_iter().map(|n| run_check(n, profile, workers)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_is_exact_on_polynomials() {
        let h = 0.1;
        let f: Vec<f64> = (0..30).map(|i| (i as f64 * h).powi(4)).collect();
        let d2 = second_difference_10(&f, h);
        for (i, d) in d2.iter().enumerate().take(25).skip(5) {
            let x = i as f64 * h;
            assert!((d - 12.0 * x * x).abs() < 1e-9);
        }
        assert!(d2[0].is_nan());
    }

    #[test]
    fn cheap_checks_pass() {
        assert!(check_unitarity(5, 256, 1e-12).unwrap().passed);
        assert!(check_parseval(5, 256, 1e-12).unwrap().passed);
        assert!(check_quadrature(256).unwrap().passed);
    }

    #[test]
    fn unknown_check_is_config_error() {
        assert!(matches!(
            run_checks(&["energy".into()], Profile::Quick, 1),
            Err(SnlsError::Config(_))
        ));
    }
}
