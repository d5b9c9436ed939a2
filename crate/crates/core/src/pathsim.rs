//! Evolution of one noise realisation, optionally several coupled variants
//! driven by the same increments.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ground_state, ground_state_mass, Integrator, ModelParams, Sign, Stepper};
use crate::error::{Result, SnlsError};
use crate::grid::{l2_l10, Field, GridSpec, SpatialGrid};
use crate::noise::{CovarianceOperator, NoiseSpec, NoiseStream};
use crate::norms::{h1_norm, StrichartzAccumulator};

/// Stratonovich records with a larger relative mass drift are flagged.
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianData {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    /// Carrier wavenumber, `e^{i v x}`.
    pub velocity: f64,
}

impl Default for GaussianData {
    fn default() -> Self {
        GaussianData {
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
            velocity: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolitonData {
    pub center: f64,
}

impl Default for SolitonData {
    fn default() -> Self {
        SolitonData { center: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoBumpData {
    pub amplitude: f64,
    pub width: f64,
    pub separation: f64,
}

impl Default for TwoBumpData {
    fn default() -> Self {
        TwoBumpData {
            amplitude: 1.0,
            width: 0.7,
            separation: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileData {
    /// Columns `x re [im]`, linearly interpolated onto the grid.
    pub path: String,
}

/// Named initial-data generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Gaussian(GaussianData),
    Soliton(SolitonData),
    TwoBump(TwoBumpData),
    File(FileData),
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Gaussian(GaussianData::default())
    }
}

impl InitialData {
    pub fn sample(&self, grid: &Arc<SpatialGrid>) -> Result<Field> {
        match self {
            InitialData::Gaussian(g) => {
                if !(g.width > 0.0) {
                    return Err(SnlsError::Config("gaussian width must be > 0".into()));
                }
                Field::from_fn(Arc::clone(grid), |x| {
                    let y = (x - g.center) / g.width;
                    Complex64::from_polar(g.amplitude * (-y * y).exp(), g.velocity * x)
                })
            }
            InitialData::Soliton(s) => {
                Field::from_fn(Arc::clone(grid), |x| Complex64::new(ground_state(x - s.center), 0.0))
            }
            InitialData::TwoBump(b) => {
                if !(b.width > 0.0) {
                    return Err(SnlsError::Config("two_bump width must be > 0".into()));
                }
                Field::from_fn(Arc::clone(grid), |x| {
                    let l = (x + 0.5 * b.separation) / b.width;
                    let r = (x - 0.5 * b.separation) / b.width;
                    Complex64::new(b.amplitude * ((-l * l).exp() + (-r * r).exp()), 0.0)
                })
            }
            InitialData::File(f) => load_complex_profile(grid, Path::new(&f.path)),
        }
    }
}

fn load_complex_profile(grid: &Arc<SpatialGrid>, path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path).map_err(|e| SnlsError::io(path, e))?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SnlsError::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        match cols.as_slice() {
            [x, re] => rows.push((*x, *re, 0.0)),
            [x, re, im, ..] => rows.push((*x, *re, *im)),
            _ => {
                return Err(SnlsError::Config(format!(
                    "{}:{}: expected `x re [im]`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if rows.len() < 2 || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(SnlsError::Config(format!(
            "{}: need at least two rows with increasing x",
            path.display()
        )));
    }
    let re: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let im: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2)).collect();
    Field::from_fn(Arc::clone(grid), |x| {
        Complex64::new(crate::noise::interpolate(&re, x), crate::noise::interpolate(&im, x))
    })
}

/// Everything needed to reproduce one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    pub grid: GridSpec,
    pub noise: NoiseSpec,
    pub params: ModelParams,
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Norm samples are recorded every `output_stride` steps.
    pub output_stride: usize,
    pub initial: InitialData,
    /// Rescale the initial data to this `L²` norm.
    pub initial_mass: Option<f64>,
    /// Boundary-layer mass fraction above which a warning is raised.
    pub boundary_threshold: f64,
    /// Restart the truncation accumulator every this many time units
    /// (iterated unit-interval flow); `None` keeps one accumulator.
    pub restart_interval: Option<f64>,
    pub store_final_field: bool,
    pub store_series: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            grid: GridSpec::default(),
            noise: NoiseSpec::default(),
            params: ModelParams::default(),
            integrator: Integrator::Stratonovich,
            dt: 1e-3,
            t_end: 1.0,
            seed: 0,
            output_stride: 10,
            initial: InitialData::default(),
            initial_mass: Some(1.0),
            boundary_threshold: 1e-8,
            restart_interval: None,
            store_final_field: false,
            store_series: true,
        }
    }
}

impl PathConfig {
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SnlsError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SnlsError::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        let steps = (self.t_end / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(SnlsError::Config(format!(
                "dt = {} does not divide t_end = {}",
                self.dt, self.t_end
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.n_steps()?;
        self.params.validate()?;
        if self.output_stride == 0 {
            return Err(SnlsError::Config("output_stride must be >= 1".into()));
        }
        if let Some(m) = self.initial_mass {
            if !(m.is_finite() && m >= 0.0) {
                return Err(SnlsError::Config(format!("initial_mass must be >= 0, got {m}")));
            }
        }
        if let Some(r) = self.restart_interval {
            if !(r.is_finite() && r > 0.0) {
                return Err(SnlsError::Config(format!("restart_interval must be > 0, got {r}")));
            }
        }
        Ok(())
    }

    /// Grid, covariance operator and initial field.
    pub fn setup(&self) -> Result<(Arc<SpatialGrid>, CovarianceOperator, Field)> {
        self.validate()?;
        let grid = self.grid.build()?;
        let op = self.noise.build(&grid)?;
        let u0 = self.initial_field(&grid)?;
        Ok((grid, op, u0))
    }

    pub fn initial_field(&self, grid: &Arc<SpatialGrid>) -> Result<Field> {
        let u0 = self.initial.sample(grid)?;
        match self.initial_mass {
            None => Ok(u0),
            Some(mass) => {
                let l2 = u0.l2_norm();
                if l2 == 0.0 {
                    if mass == 0.0 {
                        Ok(u0)
                    } else {
                        Err(SnlsError::Config("cannot rescale zero initial data".into()))
                    }
                } else {
                    Ok(u0.scaled(Complex64::new(mass / l2, 0.0)))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub l2: f64,
    pub l10: f64,
    pub x2_fifth: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PathStatus {
    Completed,
    Aborted { step: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldData {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FieldData {
    pub fn from_field(f: &Field) -> Self {
        FieldData {
            re: f.values().iter().map(|v| v.re).collect(),
            im: f.values().iter().map(|v| v.im).collect(),
        }
    }

    pub fn to_field(&self, grid: &Arc<SpatialGrid>) -> Result<Field> {
        if self.re.len() != self.im.len() {
            return Err(SnlsError::Config("re/im length mismatch".into()));
        }
        Field::new(
            Arc::clone(grid),
            self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect(),
        )
    }
}

/// Outcome of one path. Times are `None` when the threshold was never hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub seed: u64,
    pub variant: Option<String>,
    pub status: PathStatus,
    pub steps_completed: usize,
    pub t_final: f64,
    pub initial_l2: f64,
    pub sup_l2: f64,
    pub x2_fifth: f64,
    pub x_norm: f64,
    /// First time with `‖u‖⁵_{X₂(0,t)} ≥ m − 1`.
    pub stopping_time_m: Option<f64>,
    /// First time with `‖u‖⁵_{X₂(0,t)} ≥ m`.
    pub stopping_time_m_eps: Option<f64>,
    /// First time the cutoff argument exceeded `m` (truncation engaged).
    pub truncation_onset: Option<f64>,
    /// First time the cutoff argument reached `2m` (nonlinearity off).
    pub saturation_time: Option<f64>,
    pub mass_drift: f64,
    pub mass_flag: bool,
    pub boundary_mass: f64,
    pub boundary_warning: bool,
    /// Focusing run started at or above the ground-state mass.
    pub above_ground_state: bool,
    pub max_h1: f64,
    pub series: Vec<NormSample>,
    pub final_field: Option<FieldData>,
    pub config: PathConfig,
}

impl PathRecord {
    pub fn completed(&self) -> bool {
        matches!(self.status, PathStatus::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffSample {
    pub t: f64,
    /// `‖u_a − u_b‖_{X₁(0,t)}`.
    pub x1: f64,
    /// `‖u_a − u_b‖_{X₂(0,t)}`.
    pub x2: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub a: usize,
    pub b: usize,
    pub samples: Vec<DiffSample>,
    /// `‖u_a − u_b‖_{X(0,t_end)}`; `None` when either path aborted.
    pub final_x_norm: Option<f64>,
}

/// One member of a coupled run.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: Option<String>,
    pub params: ModelParams,
    pub initial: Field,
}

#[derive(Debug, Clone)]
pub struct CoupledOutcome {
    pub records: Vec<PathRecord>,
    pub diffs: Vec<DiffSeries>,
}

struct Trajectory {
    u: Field,
    params: ModelParams,
    acc: StrichartzAccumulator,
    trunc_x2: f64,
    initial_l2: f64,
    mass_drift: f64,
    boundary: f64,
    max_h1: f64,
    tau_m: Option<f64>,
    tau_m_eps: Option<f64>,
    onset: Option<f64>,
    saturation: Option<f64>,
    series: Vec<NormSample>,
    aborted: Option<(usize, String)>,
    steps: usize,
}

impl Trajectory {
    fn new(initial: Field, params: ModelParams) -> Self {
        let l2 = initial.l2_norm();
        Trajectory {
            acc: StrichartzAccumulator::from_initial_l2(l2),
            trunc_x2: 0.0,
            initial_l2: l2,
            mass_drift: 0.0,
            boundary: initial.boundary_mass_fraction(),
            max_h1: 0.0,
            tau_m: None,
            tau_m_eps: None,
            onset: None,
            saturation: None,
            series: Vec::new(),
            aborted: None,
            steps: 0,
            params,
            u: initial,
        }
    }

    fn alive(&self) -> bool {
        self.aborted.is_none()
    }

    fn track_drift(&mut self, l2: f64) {
        if self.initial_l2 > 0.0 {
            self.mass_drift = self.mass_drift.max((l2 - self.initial_l2).abs() / self.initial_l2);
        }
    }

    fn sample(&mut self, t: f64, store: bool) {
        let (l2, l10) = l2_l10(self.u.values(), self.u.grid().dx());
        let h1 = h1_norm(&self.u);
        self.max_h1 = self.max_h1.max(h1);
        self.boundary = self.boundary.max(self.u.boundary_mass_fraction());
        if store {
            self.series.push(NormSample {
                t,
                l2,
                l10,
                x2_fifth: self.acc.x2_fifth,
                h1,
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(&mut self, stepper: &Stepper, integrator: Integrator, delta_w: &[f64], n: usize, dt: f64, restart_at: bool) {
        let (l2, l10) = l2_l10(self.u.values(), self.u.grid().dx());
        self.track_drift(l2);
        if restart_at {
            self.trunc_x2 = 0.0;
        }
        let coef = self.params.coefficient(self.trunc_x2);
        if let Err(e) = self.acc.update_with_norms(l2, l10, dt) {
            self.aborted = Some((n, e.to_string()));
            return;
        }
        let fifth = {
            let sq = l10 * l10;
            sq * sq * l10 * dt
        };
        self.trunc_x2 += fifth;
        let t = (n + 1) as f64 * dt;
        let m = self.params.m_trunc;
        if m.is_finite() {
            let x2 = self.trunc_x2;
            if self.tau_m.is_none() && x2 >= m - 1.0 {
                self.tau_m = Some(t);
            }
            if self.tau_m_eps.is_none() && x2 >= m {
                self.tau_m_eps = Some(t);
            }
            let arg = self.params.trunc_offset + x2;
            if self.onset.is_none() && arg > m {
                self.onset = Some(t);
            }
            if self.saturation.is_none() && arg >= 2.0 * m {
                self.saturation = Some(t);
            }
        }
        stepper.step_in_place(integrator, self.u.values_mut(), delta_w, coef, self.params.epsilon);
        if !self.u.is_finite() {
            self.aborted = Some((n, format!("non-finite field after step {n} (t = {t})")));
            return;
        }
        self.steps = n + 1;
    }

    fn finish(mut self, cfg: &PathConfig, label: Option<String>, dt: f64) -> PathRecord {
        let status = match self.aborted.take() {
            None => {
                let l2 = self.u.l2_norm();
                self.track_drift(l2);
                self.acc.observe_l2(l2);
                PathStatus::Completed
            }
            Some((step, reason)) => PathStatus::Aborted { step, reason },
        };
        let completed = matches!(status, PathStatus::Completed);
        let mut config = cfg.clone();
        config.params = self.params;
        PathRecord {
            seed: cfg.seed,
            variant: label,
            status,
            steps_completed: self.steps,
            t_final: self.steps as f64 * dt,
            initial_l2: self.initial_l2,
            sup_l2: self.acc.sup_l2,
            x2_fifth: self.acc.x2_fifth,
            x_norm: self.acc.x_norm(),
            stopping_time_m: self.tau_m,
            stopping_time_m_eps: self.tau_m_eps,
            truncation_onset: self.onset,
            saturation_time: self.saturation,
            mass_drift: self.mass_drift,
            mass_flag: cfg.integrator == Integrator::Stratonovich && self.mass_drift > MASS_DRIFT_TOLERANCE,
            boundary_mass: self.boundary,
            boundary_warning: self.boundary > cfg.boundary_threshold,
            above_ground_state: self.params.sign == Sign::Focusing && self.initial_l2 >= ground_state_mass(),
            max_h1: self.max_h1,
            series: std::mem::take(&mut self.series),
            final_field: (cfg.store_final_field && completed).then(|| FieldData::from_field(&self.u)),
            config,
        }
    }
}

struct DiffTracker {
    a: usize,
    b: usize,
    acc: StrichartzAccumulator,
    samples: Vec<DiffSample>,
    valid: bool,
}

impl DiffTracker {
    fn diff_norms(ta: &Trajectory, tb: &Trajectory) -> (f64, f64) {
        let diff: Vec<Complex64> = ta.u.values().iter().zip(tb.u.values()).map(|(x, y)| x - y).collect();
        l2_l10(&diff, ta.u.grid().dx())
    }

    fn sample(&mut self, t: f64) {
        if self.valid {
            let x1 = self.acc.sup_l2;
            let x2 = self.acc.x2_norm();
            self.samples.push(DiffSample { t, x1, x2, x: x1 + x2 });
        }
    }
}

/// Runs a single path.
pub fn run_path(cfg: &PathConfig) -> Result<PathRecord> {
    let (_, _, u0) = cfg.setup()?;
    let variant = Variant {
        label: None,
        params: cfg.params,
        initial: u0,
    };
    let mut out = run_coupled(cfg, vec![variant], &[])?;
    Ok(out.records.remove(0))
}

/// Runs `cfg` under two parameter sets with common noise.
pub fn run_pair(cfg: &PathConfig, params_a: ModelParams, params_b: ModelParams) -> Result<(PathRecord, PathRecord, DiffSeries)> {
    let (_, _, u0) = cfg.setup()?;
    let variants = vec![
        Variant {
            label: Some("a".into()),
            params: params_a,
            initial: u0.clone(),
        },
        Variant {
            label: Some("b".into()),
            params: params_b,
            initial: u0,
        },
    ];
    let mut out = run_coupled(cfg, variants, &[(0, 1)])?;
    let diff = out.diffs.remove(0);
    let b = out.records.remove(1);
    let a = out.records.remove(0);
    Ok((a, b, diff))
}

/// Runs several variants in lockstep on the noise path of `cfg.seed`,
/// tracking `X`-norm differences for each requested pair of variants.
///
/// Grid, noise, `dt` and seed come from `cfg`; each variant brings its own
/// parameters and initial field. A variant that produces NaN/Inf is recorded
/// as aborted and drops out; pairs involving it lose their final value.
pub fn run_coupled(cfg: &PathConfig, variants: Vec<Variant>, pairs: &[(usize, usize)]) -> Result<CoupledOutcome> {
    cfg.validate()?;
    let steps = cfg.n_steps()?;
    let grid = cfg.grid.build()?;
    let op = cfg.noise.build(&grid)?;
    let dt = cfg.dt;
    let stepper = Stepper::for_operator(&op, dt)?;
    let restart_every = cfg
        .restart_interval
        .map(|r| ((r / dt).round() as usize).max(1));

    for v in &variants {
        v.params.validate()?;
        if v.initial.grid().spec() != grid.spec() {
            return Err(SnlsError::Config("variant initial data lives on a different grid".into()));
        }
    }
    for &(a, b) in pairs {
        if a >= variants.len() || b >= variants.len() {
            return Err(SnlsError::Config(format!("pair ({a}, {b}) out of range")));
        }
    }

    let labels: Vec<Option<String>> = variants.iter().map(|v| v.label.clone()).collect();
    let mut trajs: Vec<Trajectory> = variants.into_iter().map(|v| Trajectory::new(v.initial, v.params)).collect();
    let mut trackers: Vec<DiffTracker> = pairs
        .iter()
        .map(|&(a, b)| {
            let (l2, _) = DiffTracker::diff_norms(&trajs[a], &trajs[b]);
            DiffTracker {
                a,
                b,
                acc: StrichartzAccumulator::from_initial_l2(l2),
                samples: Vec::new(),
                valid: true,
            }
        })
        .collect();

    for t in trajs.iter_mut() {
        t.sample(0.0, cfg.store_series);
    }
    for d in trackers.iter_mut() {
        d.sample(0.0);
    }

    let mut stream = NoiseStream::new(cfg.seed);
    for n in 0..steps {
        let gaussians = stream.next_gaussians(op.rank());
        let inc = op.increment_from_gaussians(dt, &gaussians)?;
        for d in trackers.iter_mut() {
            if d.valid {
                let (l2, l10) = DiffTracker::diff_norms(&trajs[d.a], &trajs[d.b]);
                d.valid = d.acc.update_with_norms(l2, l10, dt).is_ok();
            }
        }
        let restart_at = matches!(restart_every, Some(r) if n > 0 && n % r == 0);
        for t in trajs.iter_mut().filter(|t| t.alive()) {
            t.advance(&stepper, cfg.integrator, inc.delta_w.values(), n, dt, restart_at);
        }
        for d in trackers.iter_mut() {
            if !(trajs[d.a].alive() && trajs[d.b].alive()) {
                d.valid = false;
            }
        }
        let due = (n + 1) % cfg.output_stride == 0 || n + 1 == steps;
        if due {
            let t_now = (n + 1) as f64 * dt;
            for t in trajs.iter_mut().filter(|t| t.alive()) {
                t.sample(t_now, cfg.store_series);
            }
        }
        if n + 1 == steps {
            for d in trackers.iter_mut().filter(|d| d.valid) {
                let (l2, _) = DiffTracker::diff_norms(&trajs[d.a], &trajs[d.b]);
                d.acc.observe_l2(l2);
            }
        }
        if due {
            let t_now = (n + 1) as f64 * dt;
            for d in trackers.iter_mut() {
                d.sample(t_now);
            }
        }
        if trajs.iter().all(|t| !t.alive()) {
            break;
        }
    }

    let diffs = trackers
        .into_iter()
        .map(|d| DiffSeries {
            a: d.a,
            b: d.b,
            final_x_norm: d.valid.then(|| d.acc.x_norm()),
            samples: d.samples,
        })
        .collect();
    let records = trajs
        .into_iter()
        .zip(labels)
        .map(|(t, label)| t.finish(cfg, label, dt))
        .collect();
    Ok(CoupledOutcome { records, diffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> PathConfig {
        PathConfig {
            grid: GridSpec {
                n_points: 256,
                domain_length: 40.0,
            },
            dt: 2e-3,
            t_end: 0.2,
            output_stride: 5,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_dt_not_dividing_t_end() {
        let cfg = PathConfig {
            dt: 0.3,
            ..small_cfg()
        };
        assert!(matches!(cfg.validate(), Err(SnlsError::Config(_))));
        let cfg = PathConfig {
            output_stride: 0,
            ..small_cfg()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn initial_mass_rescaling() {
        let cfg = PathConfig {
            initial_mass: Some(0.7),
            ..small_cfg()
        };
        let g = cfg.grid.build().unwrap();
        let u = cfg.initial_field(&g).unwrap();
        assert!((u.l2_norm() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn free_evolution_record() {
        let mut cfg = small_cfg();
        cfg.noise.amplitude = 0.0;
        cfg.params.mu = 0.0;
        let r = run_path(&cfg).unwrap();
        assert!(r.completed());
        assert!(r.mass_drift <= 1e-12);
        assert_eq!(r.steps_completed, 100);
        assert_eq!(r.series.len(), 21);
        assert!(r.stopping_time_m.is_none());
        assert!(!r.mass_flag);
    }

    #[test]
    fn identical_configs_give_identical_records() {
        let cfg = small_cfg();
        let a = run_path(&cfg).unwrap();
        let b = run_path(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let other = run_path(&PathConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.x2_fifth, other.x2_fifth);
    }

    #[test]
    fn small_m_saturates_and_orders_stopping_times() {
        let mut cfg = small_cfg();
        cfg.params.m_trunc = 0.01;
        cfg.initial_mass = Some(1.5);
        let r = run_path(&cfg).unwrap();
        let tm = r.stopping_time_m.unwrap();
        let tme = r.stopping_time_m_eps.unwrap();
        assert!(tm <= tme);
        assert!(r.saturation_time.is_some());
        assert!(r.truncation_onset.unwrap() <= r.saturation_time.unwrap());
        assert!(r.mass_drift <= MASS_DRIFT_TOLERANCE);
    }

    #[test]
    fn equal_params_pair_has_zero_difference() {
        let cfg = small_cfg();
        let p = ModelParams {
            epsilon: 0.1,
            ..Default::default()
        };
        let (a, b, d) = run_pair(&cfg, p, p).unwrap();
        assert_eq!(a.x2_fifth, b.x2_fifth);
        assert!(d.samples.iter().all(|s| s.x == 0.0));
        assert_eq!(d.final_x_norm, Some(0.0));
    }

    #[test]
    fn focusing_above_ground_state_is_flagged() {
        let mut cfg = small_cfg();
        cfg.params.sign = Sign::Focusing;
        cfg.initial_mass = Some(2.0);
        cfg.t_end = 0.02;
        let r = run_path(&cfg).unwrap();
        assert!(r.above_ground_state);
    }

    #[test]
    fn nan_data_cannot_enter() {
        let cfg = PathConfig {
            initial: InitialData::Gaussian(GaussianData {
                amplitude: f64::NAN,
                ..Default::default()
            }),
            initial_mass: None,
            ..small_cfg()
        };
        assert!(run_path(&cfg).is_err());
    }

    #[test]
    fn restart_resets_truncation_accumulator() {
        let mut cfg = small_cfg();
        cfg.noise.amplitude = 0.0;
        cfg.params.m_trunc = 1e-4;
        let plain = run_path(&cfg).unwrap();
        cfg.restart_interval = Some(0.05);
        let restarted = run_path(&cfg).unwrap();
        assert!(plain.saturation_time.is_some());
        assert_ne!(plain.x2_fifth, restarted.x2_fifth);
    }

    #[test]
    fn config_json_defaults() {
        let cfg: PathConfig = serde_json::from_str(r#"{"seed": 9, "initial": {"kind": "soliton"}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.initial, InitialData::Soliton(SolitonData { center: 0.0 }));
        assert_eq!(cfg.grid, GridSpec::default());
    }
}
