//! Uniform periodic grid, spectral transforms and the free Schrödinger group.
//!
//! The physical line is replaced by the torus `[-L/2, L/2)` sampled at `N`
//! points. Transforms follow one convention everywhere: the forward
//! transform is the unnormalised DFT, the inverse carries the `1/N`, so a
//! round trip is the identity and Parseval reads
//! `Σ|u_j|² dx = (dx/N) Σ|û_k|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlsError};

/// Fraction of the domain length, at each end, treated as the boundary layer.
pub const BOUNDARY_LAYER: f64 = 0.05;

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub domain_length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_points: 1024,
            domain_length: 50.0,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<SpatialGrid>> {
        SpatialGrid::shared(self.n_points, self.domain_length)
    }
}

pub struct SpatialGrid {
    n_points: usize,
    domain_length: f64,
    dx: f64,
    x: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("n_points", &self.n_points)
            .field("domain_length", &self.domain_length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl SpatialGrid {
    pub fn new(n_points: usize, domain_length: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(SnlsError::Config(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(SnlsError::Config(format!(
                "domain_length must be positive and finite, got {domain_length}"
            )));
        }
        let dx = domain_length / n_points as f64;
        let x = (0..n_points)
            .map(|j| -0.5 * domain_length + j as f64 * dx)
            .collect();
        let half = n_points / 2;
        let wavenumbers = (0..n_points)
            .map(|j| {
                let signed = if j < half {
                    j as f64
                } else {
                    j as f64 - n_points as f64
                };
                2.0 * PI * signed / domain_length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(SpatialGrid {
            n_points,
            domain_length,
            dx,
            x,
            wavenumbers,
            forward,
            inverse,
        })
    }

    pub fn shared(n_points: usize, domain_length: f64) -> Result<Arc<Self>> {
        Self::new(n_points, domain_length).map(Arc::new)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_points: self.n_points,
            domain_length: self.domain_length,
        }
    }

    /// Sample points `x_j = -L/2 + j dx`.
    pub fn points(&self) -> &[f64] {
        &self.x
    }

    /// Angular wavenumbers in standard FFT ordering.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_points);
        self.forward.process(buf);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_points);
        self.inverse.process(buf);
        let scale = 1.0 / self.n_points as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Spectral multiplier of `S(t) = e^{itΔ}`, i.e. `e^{-i k² t}`.
    pub fn propagator(&self, t: f64) -> Vec<Complex64> {
        self.wavenumbers
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -k * k * t))
            .collect()
    }

    /// Applies a spectral multiplier to physical-space data in place.
    pub fn apply_multiplier(&self, buf: &mut [Complex64], multiplier: &[Complex64]) {
        self.forward_in_place(buf);
        for (v, m) in buf.iter_mut().zip(multiplier) {
            *v *= m;
        }
        self.inverse_in_place(buf);
    }

    fn same_as(&self, other: &SpatialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.n_points == other.n_points && self.domain_length == other.domain_length)
    }
}

/// Discrete `L^p` norm `(Σ|v_j|^p dx)^{1/p}` of moduli, `p = ∞` gives the max.
pub fn lp_norm_of_moduli<I>(moduli: I, dx: f64, p: f64) -> Result<f64>
where
    I: Iterator<Item = f64>,
{
    if p.is_nan() || p < 1.0 {
        return Err(SnlsError::InvalidParameter(format!(
            "Lp exponent must be >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(moduli.fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        moduli.map(|a| a * a).sum()
    } else {
        moduli.map(|a| a.powf(p)).sum()
    };
    Ok((sum * dx).powf(1.0 / p))
}

/// `L²` and `L¹⁰` norms in one pass.
pub fn l2_l10(values: &[Complex64], dx: f64) -> (f64, f64) {
    let mut s2 = 0.0;
    let mut s10 = 0.0;
    for v in values {
        let a2 = v.norm_sqr();
        let a4 = a2 * a2;
        s2 += a2;
        s10 += a4 * a4 * a2;
    }
    ((s2 * dx).sqrt(), (s10 * dx).powf(0.1))
}

/// Complex field sampled on a [`SpatialGrid`].
#[derive(Clone)]
pub struct Field {
    values: Vec<Complex64>,
    grid: Arc<SpatialGrid>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("n_points", &self.values.len())
            .field("l2", &self.l2_norm())
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(SnlsError::Config(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.n_points
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SnlsError::InvalidParameter(
                "field contains non-finite values".into(),
            ));
        }
        Ok(Field { values, grid })
    }

    /// Wraps values without the finiteness scan; the length is still checked.
    pub(crate) fn from_raw(grid: Arc<SpatialGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.n_points);
        Field { values, grid }
    }

    pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
        let n = grid.n_points;
        Field {
            values: vec![Complex64::new(0.0, 0.0); n],
            grid,
        }
    }

    pub fn from_fn(grid: Arc<SpatialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of_moduli(self.values.iter().map(|v| v.norm()), self.grid.dx, p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.dx).sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_spectrum(&self) -> SpectralField {
        let mut coeffs = self.values.clone();
        self.grid.forward_in_place(&mut coeffs);
        SpectralField {
            coeffs,
            grid: Arc::clone(&self.grid),
        }
    }

    /// `S(t) f`, any sign of `t`.
    pub fn free_propagate(&self, t: f64) -> Field {
        let mut out = self.clone();
        out.free_propagate_in_place(t);
        out
    }

    pub fn free_propagate_in_place(&mut self, t: f64) {
        if t == 0.0 {
            return;
        }
        let mult = self.grid.propagator(t);
        self.grid.apply_multiplier(&mut self.values, &mult);
    }

    /// Spectral derivative `∂_x f` (multiplication by `ik`).
    pub fn derivative(&self) -> Field {
        let mut buf = self.values.clone();
        self.grid.forward_in_place(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.grid.wavenumbers()) {
            *v *= Complex64::new(0.0, k);
        }
        self.grid.inverse_in_place(&mut buf);
        Field::from_raw(Arc::clone(&self.grid), buf)
    }

    pub fn scaled(&self, factor: Complex64) -> Field {
        Field::from_raw(
            Arc::clone(&self.grid),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn difference(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field::from_raw(
            Arc::clone(&self.grid),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn sum(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field::from_raw(
            Arc::clone(&self.grid),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(SnlsError::Config("fields live on different grids".into()))
        }
    }

    /// Fraction of the mass lying within [`BOUNDARY_LAYER`] of either edge.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let l = self.grid.domain_length;
        let lo = -0.5 * l + BOUNDARY_LAYER * l;
        let hi = 0.5 * l - BOUNDARY_LAYER * l;
        let mut edge = 0.0;
        let mut total = 0.0;
        for (v, &x) in self.values.iter().zip(self.grid.points()) {
            let a = v.norm_sqr();
            total += a;
            if x < lo || x > hi {
                edge += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }
}

/// Unnormalised DFT coefficients of a [`Field`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
    grid: Arc<SpatialGrid>,
}

impl SpectralField {
    pub fn new(grid: Arc<SpatialGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points {
            return Err(SnlsError::Config(format!(
                "spectrum has {} coefficients but grid has {} points",
                coeffs.len(),
                grid.n_points
            )));
        }
        Ok(SpectralField { coeffs, grid })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    /// Parseval side of the discrete `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.dx / self.grid.n_points as f64).sqrt()
    }

    pub fn to_field(&self) -> Field {
        let mut values = self.coeffs.clone();
        self.grid.inverse_in_place(&mut values);
        Field::from_raw(Arc::clone(&self.grid), values)
    }
}

/// Sup-norm samples of `S(t) f` for the dispersive-decay check.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProbe {
    pub samples: Vec<(f64, f64)>,
    /// Largest boundary-layer mass fraction over the sampled times.
    pub max_boundary_fraction: f64,
    /// Set when `max_boundary_fraction` exceeded the threshold.
    pub boundary_warning: bool,
}

pub fn dispersive_decay_probe(f: &Field, times: &[f64], boundary_threshold: f64) -> Result<DecayProbe> {
    let mut samples = Vec::with_capacity(times.len());
    let mut max_boundary = f.boundary_mass_fraction();
    for &t in times {
        if !(t.is_finite() && t > 0.0) {
            return Err(SnlsError::InvalidParameter(format!(
                "decay probe times must be positive, got {t}"
            )));
        }
        let evolved = f.free_propagate(t);
        max_boundary = max_boundary.max(evolved.boundary_mass_fraction());
        samples.push((t, evolved.max_modulus()));
    }
    Ok(DecayProbe {
        samples,
        max_boundary_fraction: max_boundary,
        boundary_warning: max_boundary > boundary_threshold,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(SnlsError::InvalidParameter(
            "need at least two positive points for a log-log fit".into(),
        ));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(SnlsError::InvalidParameter(
            "log-log fit needs distinct abscissae".into(),
        ));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> Arc<SpatialGrid> {
        SpatialGrid::shared(n, l).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(1000, 10.0).is_err());
        assert!(SpatialGrid::new(1024, 0.0).is_err());
        assert!(SpatialGrid::new(1024, f64::NAN).is_err());
    }

    #[test]
    fn spacing_and_wavenumbers() {
        let g = grid(16, 8.0);
        assert!((g.dx() * 16.0 - 8.0).abs() < 1e-15);
        let k = g.wavenumbers();
        let k1 = 2.0 * PI / 8.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - k1).abs() < 1e-15);
        assert!((k[15] + k1).abs() < 1e-15);
        assert!((k[8] + 8.0 * k1).abs() < 1e-12);
        for j in 1..8 {
            assert!((k[j] + k[16 - j]).abs() < 1e-14);
        }
    }

    #[test]
    fn length_mismatch_is_config_error() {
        let g = grid(8, 1.0);
        let err = Field::new(g.clone(), vec![Complex64::new(0.0, 0.0); 7]).unwrap_err();
        assert!(matches!(err, SnlsError::Config(_)));
        assert!(SpectralField::new(g, vec![Complex64::new(0.0, 0.0); 9]).is_err());
    }

    #[test]
    fn constant_field_lives_in_zero_mode() {
        let g = grid(32, 4.0);
        let c = Complex64::new(0.3, -1.2);
        let f = Field::from_fn(g, |_| c).unwrap();
        let s = f.to_spectrum();
        assert!((s.coeffs()[0] - c * 32.0).norm() < 1e-12);
        assert!(s.coeffs()[1..].iter().all(|v| v.norm() < 1e-12));
        let back = s.to_field();
        assert!(back.values().iter().all(|v| (v - c).norm() < 1e-14));
    }

    #[test]
    fn single_mode_has_one_coefficient() {
        let g = grid(64, 10.0);
        let k1 = g.wavenumbers()[1];
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, k1 * x)).unwrap();
        let s = f.to_spectrum();
        let big: Vec<usize> = (0..64).filter(|&j| s.coeffs()[j].norm() > 1e-9).collect();
        assert_eq!(big, vec![1]);
    }

    #[test]
    fn propagating_by_zero_is_identity() {
        let g = grid(32, 6.0);
        let f = Field::from_fn(g, |x| Complex64::new((-x * x).exp(), x.sin())).unwrap();
        assert_eq!(f.free_propagate(0.0), f);
    }

    #[test]
    fn lp_norm_basics() {
        let g = grid(256, 8.0);
        let zero = Field::zeros(g.clone());
        for p in [1.0, 2.0, 5.0, f64::INFINITY] {
            assert_eq!(zero.lp_norm(p).unwrap(), 0.0);
        }
        // height 1 on exactly 2 length units -> L2 = sqrt(2)
        let ind = Field::from_fn(g.clone(), |x| {
            if (-1.0..1.0).contains(&x) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        assert!((ind.lp_norm(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-13);
        assert_eq!(ind.lp_norm(f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(
            ind.lp_norm(0.5),
            Err(SnlsError::InvalidParameter(_))
        ));
    }

    #[test]
    fn l2_l10_matches_generic_norm() {
        let g = grid(128, 12.0);
        let f = Field::from_fn(g.clone(), |x| Complex64::new(1.3 * (-x * x).exp(), 0.2 * x.cos())).unwrap();
        let (l2, l10) = l2_l10(f.values(), g.dx());
        assert!((l2 - f.lp_norm(2.0).unwrap()).abs() < 1e-14);
        assert!((l10 - f.lp_norm(10.0).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn pure_mode_does_not_disperse() {
        let g = grid(128, 2.0 * PI);
        let k = g.wavenumbers()[3];
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, k * x)).unwrap();
        let probe = dispersive_decay_probe(&f, &[0.5, 1.0, 2.0, 4.0], 1e-8).unwrap();
        for (_, sup) in &probe.samples {
            assert!((sup - 1.0).abs() < 1e-12);
        }
        // plane wave fills the boundary layer
        assert!(probe.boundary_warning);
    }

    #[test]
    fn decay_probe_rejects_nonpositive_time() {
        let g = grid(64, 10.0);
        let f = Field::zeros(g);
        assert!(dispersive_decay_probe(&f, &[0.0], 1e-8).is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * (i as f64).powf(-0.7))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.7).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_err());
    }

    #[test]
    fn boundary_fraction_of_centered_gaussian_is_tiny() {
        let g = grid(512, 40.0);
        let f = Field::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        assert!(f.boundary_mass_fraction() < 1e-100);
    }
}
