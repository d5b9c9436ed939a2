//! Finite-rank spatially coloured Wiener noise.
//!
//! `W(t, x) = Σ_k B_k(t) φ_k(x)` with `φ_k = amplitude · profile_k`. Each
//! profile is real, smooth and localised, so the covariance is trace class
//! and `F_Φ = Σ_k φ_k²` is bounded with bounded derivatives.
//!
//! Random numbers come from ChaCha20 with a fixed stream-splitting scheme:
//! the key is expanded from the path seed with `seed_from_u64`, the stream id
//! is the step index, and the `rank` standard normals of a step are the first
//! draws on that stream. Any increment can therefore be regenerated from
//! `(seed, step)` alone, independently of how many steps came before.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlsError};
use crate::grid::{lp_norm_of_moduli, Field, SpatialGrid};

/// Profiles must fall below this fraction of their maximum outside the
/// central part of the domain.
pub const DECAY_TOLERANCE: f64 = 1e-10;
/// Half-width, as a fraction of the domain length, of the central part.
pub const DECAY_HALF_WIDTH: f64 = 0.3;

/// Real-valued samples on a grid (noise profiles, increments, `F_Φ`).
#[derive(Debug, Clone)]
pub struct RealField {
    values: Vec<f64>,
    grid: Arc<SpatialGrid>,
}

impl PartialEq for RealField {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.grid.spec() == other.grid.spec()
    }
}

impl RealField {
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(SnlsError::Config(format!(
                "profile has {} values but grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SnlsError::InvalidParameter(
                "profile contains non-finite values".into(),
            ));
        }
        Ok(RealField { values, grid })
    }

    pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
        RealField {
            values: vec![0.0; grid.n_points()],
            grid,
        }
    }

    pub fn from_fn(grid: Arc<SpatialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        RealField::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of_moduli(self.values.iter().map(|v| v.abs()), self.grid.dx(), p)
    }

    pub fn derivative(&self) -> RealField {
        let as_complex = Field::from_raw(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        );
        let d = as_complex.derivative();
        RealField {
            values: d.values().iter().map(|v| v.re).collect(),
            grid: Arc::clone(&self.grid),
        }
    }

    pub fn to_complex(&self) -> Field {
        Field::from_raw(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

/// Serializable noise description used by run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Number of Hermite–Gaussian modes (ignored when `profile_files` is set).
    pub rank: usize,
    pub amplitude: f64,
    /// Gaussian envelope width `w` of the profiles `H_k(x/w) e^{-x²/2w²}`.
    pub mode_width: f64,
    /// Two-column `(x, value)` files, one mode each.
    pub profile_files: Vec<String>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            rank: 4,
            amplitude: 0.5,
            mode_width: 1.5,
            profile_files: Vec::new(),
        }
    }
}

impl NoiseSpec {
    pub fn build(&self, grid: &Arc<SpatialGrid>) -> Result<CovarianceOperator> {
        if self.profile_files.is_empty() {
            CovarianceOperator::hermite(grid, self.rank, self.amplitude, self.mode_width)
        } else {
            let profiles = self
                .profile_files
                .iter()
                .map(|p| load_profile(grid, Path::new(p)))
                .collect::<Result<Vec<_>>>()?;
            CovarianceOperator::from_profiles(profiles, self.amplitude)
        }
    }
}

/// Finite-rank description of `Φ` through its mode images `φ_k = Φe_k`.
#[derive(Debug, Clone)]
pub struct CovarianceOperator {
    grid: Arc<SpatialGrid>,
    profiles: Vec<RealField>,
    amplitude: f64,
}

impl CovarianceOperator {
    /// Operator without modes; every increment vanishes.
    pub fn empty(grid: &Arc<SpatialGrid>) -> Self {
        CovarianceOperator {
            grid: Arc::clone(grid),
            profiles: Vec::new(),
            amplitude: 0.0,
        }
    }

    /// Hermite–Gaussian modes of orders `0..rank`, each scaled to unit maximum.
    pub fn hermite(grid: &Arc<SpatialGrid>, rank: usize, amplitude: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(SnlsError::Config(format!(
                "mode_width must be positive, got {width}"
            )));
        }
        let profiles = (0..rank)
            .map(|order| {
                let raw: Vec<f64> = grid
                    .points()
                    .iter()
                    .map(|&x| {
                        let y = x / width;
                        hermite(order, y) * (-0.5 * y * y).exp()
                    })
                    .collect();
                let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
                RealField::new(Arc::clone(grid), raw.into_iter().map(|v| v * scale).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_profiles_on(grid, profiles, amplitude)
    }

    pub fn from_profiles(profiles: Vec<RealField>, amplitude: f64) -> Result<Self> {
        let grid = profiles
            .first()
            .map(|p| Arc::clone(p.grid()))
            .ok_or_else(|| SnlsError::Config("from_profiles needs at least one profile".into()))?;
        Self::from_profiles_on(&grid, profiles, amplitude)
    }

    fn from_profiles_on(grid: &Arc<SpatialGrid>, profiles: Vec<RealField>, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(SnlsError::Config(format!(
                "noise amplitude must be finite, got {amplitude}"
            )));
        }
        for (k, p) in profiles.iter().enumerate() {
            if p.grid().spec() != grid.spec() {
                return Err(SnlsError::Config(format!("profile {k} lives on a different grid")));
            }
            check_decay(p).map_err(|msg| SnlsError::Config(format!("profile {k}: {msg}")))?;
        }
        Ok(CovarianceOperator {
            grid: Arc::clone(grid),
            profiles,
            amplitude,
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.profiles.len()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Mode images `φ_k = amplitude · profile_k`.
    pub fn modes(&self) -> Vec<RealField> {
        self.profiles
            .iter()
            .map(|p| RealField {
                values: p.values.iter().map(|v| v * self.amplitude).collect(),
                grid: Arc::clone(&self.grid),
            })
            .collect()
    }

    /// `ΔW = Σ_k √dt z_k φ_k`, summed in mode order.
    pub fn increment_from_gaussians(&self, dt: f64, gaussians: &[f64]) -> Result<WienerIncrement> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SnlsError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if gaussians.len() != self.rank() {
            return Err(SnlsError::InvalidParameter(format!(
                "expected {} gaussians, got {}",
                self.rank(),
                gaussians.len()
            )));
        }
        let sqrt_dt = dt.sqrt();
        let mut delta_w = vec![0.0; self.grid.n_points()];
        for (p, &z) in self.profiles.iter().zip(gaussians) {
            let coef = self.amplitude * sqrt_dt * z;
            for (w, v) in delta_w.iter_mut().zip(&p.values) {
                *w += coef * v;
            }
        }
        Ok(WienerIncrement {
            delta_w: RealField {
                values: delta_w,
                grid: Arc::clone(&self.grid),
            },
            dt,
            gaussians: gaussians.to_vec(),
        })
    }
}

fn check_decay(p: &RealField) -> std::result::Result<(), String> {
    let l = p.grid().domain_length();
    let peak = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let tail = p
        .grid()
        .points()
        .iter()
        .zip(&p.values)
        .filter(|(x, _)| x.abs() > DECAY_HALF_WIDTH * l)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if tail > DECAY_TOLERANCE * peak {
        Err(format!(
            "does not decay below {DECAY_TOLERANCE:e} of its maximum within the central {}% of the domain (tail/peak = {:e})",
            200.0 * DECAY_HALF_WIDTH,
            tail / peak
        ))
    } else {
        Ok(())
    }
}

/// Physicists' Hermite polynomial by three-term recurrence.
fn hermite(order: usize, y: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * y);
    if order == 0 {
        return prev;
    }
    for k in 1..order {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Reads one mode from a whitespace- or comma-separated `(x, value)` file and
/// interpolates it linearly onto the grid; zero outside the tabulated range.
pub fn load_profile(grid: &Arc<SpatialGrid>, path: &Path) -> Result<RealField> {
    let text = std::fs::read_to_string(path).map_err(|e| SnlsError::io(path, e))?;
    let table = parse_two_columns(&text)
        .map_err(|msg| SnlsError::Config(format!("{}: {msg}", path.display())))?;
    let values = grid.points().iter().map(|&x| interpolate(&table, x)).collect();
    RealField::new(Arc::clone(grid), values)
}

pub(crate) fn parse_two_columns(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() < 2 {
            return Err(format!("line {}: expected two columns", lineno + 1));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| format!("line {}: {e}", lineno + 1))
        };
        rows.push((parse(cols[0])?, parse(cols[1])?));
    }
    if rows.len() < 2 {
        return Err("need at least two rows".into());
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("x column must be strictly increasing".into());
    }
    Ok(rows)
}

pub fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let first = table[0].0;
    let last = table[table.len() - 1].0;
    if x < first || x > last {
        return 0.0;
    }
    let idx = table.partition_point(|(xi, _)| *xi <= x);
    if idx >= table.len() {
        return table[table.len() - 1].1;
    }
    let (x0, y0) = table[idx - 1];
    let (x1, y1) = table[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// One time step of the noise, piecewise constant in time.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrement {
    pub delta_w: RealField,
    pub dt: f64,
    /// Standard normals `z_k = ΔB_k / √dt`.
    pub gaussians: Vec<f64>,
}

/// Deterministic source of per-step standard normals for one path.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    next_step: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { seed, next_step: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_step(&self) -> u64 {
        self.next_step
    }

    /// The `rank` normals consumed at `step` of the path seeded with `seed`.
    pub fn gaussians_at(seed: u64, step: u64, rank: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(step);
        (0..rank).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    pub fn next_gaussians(&mut self, rank: usize) -> Vec<f64> {
        let g = Self::gaussians_at(self.seed, self.next_step, rank);
        self.next_step += 1;
        g
    }
}

/// Draws the next increment of `op` from `stream` and advances it.
pub fn sample_increment(op: &CovarianceOperator, dt: f64, stream: &mut NoiseStream) -> Result<WienerIncrement> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SnlsError::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let g = stream.next_gaussians(op.rank());
    op.increment_from_gaussians(dt, &g)
}

/// Itô–Stratonovich correction `F_Φ = Σ_k φ_k²`.
pub fn ito_correction(op: &CovarianceOperator) -> RealField {
    let mut f = vec![0.0; op.grid.n_points()];
    let a2 = op.amplitude * op.amplitude;
    for p in &op.profiles {
        for (acc, v) in f.iter_mut().zip(&p.values) {
            *acc += a2 * v * v;
        }
    }
    RealField {
        values: f,
        grid: Arc::clone(&op.grid),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRegularity {
    /// `‖φ‖_{L^p} + ‖φ'‖_{L^p}` for `p = 1, 2, ∞`.
    pub w1p_1: f64,
    pub w1p_2: f64,
    pub w1p_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub modes: Vec<ModeRegularity>,
    pub correction_sup: f64,
    pub correction_l5_2: f64,
    pub correction_w1_inf: f64,
}

pub fn regularity_report(op: &CovarianceOperator) -> RegularityReport {
    let w1p = |f: &RealField, p: f64| {
        let d = f.derivative();
        f.lp_norm(p).expect("p >= 1") + d.lp_norm(p).expect("p >= 1")
    };
    let modes = op
        .modes()
        .iter()
        .map(|m| ModeRegularity {
            w1p_1: w1p(m, 1.0),
            w1p_2: w1p(m, 2.0),
            w1p_inf: w1p(m, f64::INFINITY),
        })
        .collect();
    let f = ito_correction(op);
    RegularityReport {
        modes,
        correction_sup: f.lp_norm(f64::INFINITY).expect("p >= 1"),
        correction_l5_2: f.lp_norm(2.5).expect("p >= 1"),
        correction_w1_inf: w1p(&f, f64::INFINITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<SpatialGrid> {
        SpatialGrid::shared(512, 50.0).unwrap()
    }

    fn gaussian_mode(g: &Arc<SpatialGrid>) -> RealField {
        RealField::from_fn(Arc::clone(g), |x| (-x * x).exp()).unwrap()
    }

    #[test]
    fn hermite_recurrence() {
        assert_eq!(hermite(0, 0.7), 1.0);
        assert_eq!(hermite(1, 0.7), 1.4);
        let y: f64 = 0.7;
        assert!((hermite(2, y) - (4.0 * y * y - 2.0)).abs() < 1e-14);
        assert!((hermite(3, y) - (8.0 * y.powi(3) - 12.0 * y)).abs() < 1e-14);
    }

    #[test]
    fn zero_amplitude_gives_zero_increment() {
        let g = grid();
        let op = CovarianceOperator::hermite(&g, 4, 0.0, 1.5).unwrap();
        let mut s = NoiseStream::new(3);
        let inc = sample_increment(&op, 1e-3, &mut s).unwrap();
        assert!(inc.delta_w.values().iter().all(|&v| v == 0.0));
        assert_eq!(inc.gaussians.len(), 4);
    }

    #[test]
    fn single_mode_increment_is_multiple_of_profile() {
        let g = grid();
        let v = gaussian_mode(&g);
        let op = CovarianceOperator::from_profiles(vec![v.clone()], 1.0).unwrap();
        let mut s = NoiseStream::new(11);
        let inc = sample_increment(&op, 0.01, &mut s).unwrap();
        let db = 0.1 * inc.gaussians[0];
        for (w, p) in inc.delta_w.values().iter().zip(v.values()) {
            assert_eq!(*w, db * p);
        }
    }

    #[test]
    fn nonpositive_dt_rejected() {
        let g = grid();
        let op = CovarianceOperator::hermite(&g, 2, 1.0, 1.5).unwrap();
        let mut s = NoiseStream::new(0);
        assert!(matches!(
            sample_increment(&op, 0.0, &mut s),
            Err(SnlsError::InvalidParameter(_))
        ));
        assert!(sample_increment(&op, -1.0, &mut s).is_err());
    }

    #[test]
    fn increments_regenerate_from_seed_and_step() {
        let g = grid();
        let op = CovarianceOperator::hermite(&g, 4, 0.5, 1.5).unwrap();
        let mut s = NoiseStream::new(42);
        let incs: Vec<_> = (0..5).map(|_| sample_increment(&op, 1e-3, &mut s).unwrap()).collect();
        let again = op
            .increment_from_gaussians(1e-3, &NoiseStream::gaussians_at(42, 3, 4))
            .unwrap();
        assert_eq!(incs[3], again);
        let rebuilt = op.increment_from_gaussians(1e-3, &incs[1].gaussians).unwrap();
        assert_eq!(rebuilt.delta_w, incs[1].delta_w);
        assert_ne!(incs[0].gaussians, incs[1].gaussians);
    }

    #[test]
    fn correction_of_empty_and_single_mode() {
        let g = grid();
        let empty = CovarianceOperator::empty(&g);
        assert!(ito_correction(&empty).values().iter().all(|&v| v == 0.0));
        let v = gaussian_mode(&g);
        let op = CovarianceOperator::from_profiles(vec![v.clone()], 1.0).unwrap();
        let f = ito_correction(&op);
        for (a, b) in f.values().iter().zip(v.values()) {
            assert_eq!(*a, b * b);
        }
    }

    #[test]
    fn correction_is_rotation_invariant() {
        let g = grid();
        let a = gaussian_mode(&g);
        let b = RealField::from_fn(Arc::clone(&g), |x| x * (-x * x).exp()).unwrap();
        let angle: f64 = 0.83;
        let (c, s) = (angle.cos(), angle.sin());
        let ra = RealField::new(
            Arc::clone(&g),
            a.values().iter().zip(b.values()).map(|(p, q)| c * p - s * q).collect(),
        )
        .unwrap();
        let rb = RealField::new(
            Arc::clone(&g),
            a.values().iter().zip(b.values()).map(|(p, q)| s * p + c * q).collect(),
        )
        .unwrap();
        let f1 = ito_correction(&CovarianceOperator::from_profiles(vec![a, b], 0.7).unwrap());
        let f2 = ito_correction(&CovarianceOperator::from_profiles(vec![ra, rb], 0.7).unwrap());
        for (x, y) in f1.values().iter().zip(f2.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn wide_profiles_are_rejected() {
        let g = grid();
        let err = CovarianceOperator::hermite(&g, 2, 1.0, 8.0).unwrap_err();
        assert!(matches!(err, SnlsError::Config(_)));
    }

    #[test]
    fn default_profiles_satisfy_decay() {
        let g = grid();
        let op = CovarianceOperator::hermite(&g, 4, 0.5, 1.5).unwrap();
        assert_eq!(op.rank(), 4);
        for m in op.modes() {
            let peak = m.lp_norm(f64::INFINITY).unwrap();
            assert!((peak - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn regularity_of_zero_and_gaussian() {
        let g = grid();
        let zero = CovarianceOperator::hermite(&g, 3, 0.0, 1.5).unwrap();
        let r = regularity_report(&zero);
        assert_eq!(r.correction_sup, 0.0);
        assert_eq!(r.correction_l5_2, 0.0);
        assert!(r.modes.iter().all(|m| m.w1p_1 == 0.0 && m.w1p_inf == 0.0));

        let op = CovarianceOperator::from_profiles(vec![gaussian_mode(&g)], 1.0).unwrap();
        let r = regularity_report(&op);
        assert!((r.correction_sup - 1.0).abs() < 1e-15);
        assert!(r.modes[0].w1p_2.is_finite());
    }

    #[test]
    fn two_column_parser() {
        let t = parse_two_columns("# header\n0 1\n1, 3\n\n2 5\n").unwrap();
        assert_eq!(t, vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert_eq!(interpolate(&t, 0.5), 2.0);
        assert_eq!(interpolate(&t, 2.0), 5.0);
        assert_eq!(interpolate(&t, -0.1), 0.0);
        assert!(parse_two_columns("0 1\n0 2\n").is_err());
        assert!(parse_two_columns("0 1\n").is_err());
        assert!(parse_two_columns("0 a\n1 2\n").is_err());
    }
}
