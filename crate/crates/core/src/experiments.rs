//! Ladder studies over `ε`, `m`, perturbation size `κ`, and coupling `μ`.
//!
//! Each study runs coupled paths on common seeds, reduces them to an
//! `L^ρ_ω` table and writes `<study>.csv` (metadata on `#` lines) plus a
//! manifest.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::ensemble::{check_aborts, map_seeds, write_outputs, RunManifest};
use crate::error::{Result, SnlsError};
use crate::grid::{Field, SpatialGrid};
use crate::norms::{h1_norm, omega_moment, DEFAULT_RHO0};
use crate::pathsim::{run_coupled, run_path, PathConfig, PathRecord, Variant};
use crate::serde_util::{extended_f64, extended_f64_vec, fmt_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Eps,
    M,
    Stability,
    Regularity,
    Dodson,
}

impl Study {
    pub const ALL: [Study; 5] = [Study::Eps, Study::M, Study::Stability, Study::Regularity, Study::Dodson];

    pub fn name(self) -> &'static str {
        match self {
            Study::Eps => "eps",
            Study::M => "m",
            Study::Stability => "stability",
            Study::Regularity => "regularity",
            Study::Dodson => "dodson",
        }
    }

    pub fn manifest_kind(self) -> String {
        format!("ladder_{}", self.name())
    }

    pub fn from_manifest_kind(kind: &str) -> Option<Study> {
        kind.strip_prefix("ladder_").and_then(|s| s.parse().ok())
    }
}

impl std::str::FromStr for Study {
    type Err = SnlsError;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| SnlsError::Config(format!("unknown study {s:?}")))
    }
}

/// Parameter ladders shared by all studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderSpec {
    /// Grid, noise, `dt`, initial-data shape; `initial_mass` is replaced by `mass`.
    pub base: PathConfig,
    /// Decreasing, ending at 0.
    pub epsilon_list: Vec<f64>,
    /// Increasing; may end at `inf`.
    #[serde(with = "extended_f64_vec")]
    pub m_list: Vec<f64>,
    /// Decreasing perturbation sizes.
    pub kappa_list: Vec<f64>,
    /// Initial `L²` mass `M`.
    pub mass: f64,
    pub n_paths: usize,
    pub seed_base: u64,
    pub rho: f64,
    /// Truncation level for the `ε` and regularity ladders.
    #[serde(with = "extended_f64")]
    pub fixed_m: f64,
    /// Allowed growth of the `H¹` norm over its initial value.
    pub h1_growth_factor: f64,
    pub mu_list: Vec<f64>,
    pub mass_list: Vec<f64>,
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec {
            base: PathConfig {
                store_series: false,
                ..PathConfig::default()
            },
            epsilon_list: vec![0.8, 0.4, 0.2, 0.1, 0.05, 0.0],
            m_list: vec![0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY],
            kappa_list: vec![0.1, 0.03, 0.01],
            mass: 1.0,
            n_paths: 200,
            seed_base: 0,
            rho: DEFAULT_RHO0,
            fixed_m: 4.0,
            h1_growth_factor: 10.0,
            mu_list: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            mass_list: vec![0.5, 1.0, 1.5, 2.0],
        }
    }
}

fn sorted_by(v: &[f64], ok: impl Fn(f64, f64) -> bool) -> bool {
    v.windows(2).all(|w| ok(w[0], w[1]))
}

impl LadderSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let bad = |m: &str| Err(SnlsError::Config(m.to_string()));
        if self.epsilon_list.is_empty() || !sorted_by(&self.epsilon_list, |a, b| a > b) {
            return bad("epsilon_list must be non-empty and strictly decreasing");
        }
        if self.epsilon_list.last() != Some(&0.0) {
            return bad("epsilon_list must end at 0");
        }
        if self.m_list.is_empty() || !sorted_by(&self.m_list, |a, b| a < b) {
            return bad("m_list must be non-empty and strictly increasing");
        }
        if self.kappa_list.is_empty() || !sorted_by(&self.kappa_list, |a, b| a > b) || self.kappa_list.iter().any(|&k| k < 0.0) {
            return bad("kappa_list must be non-empty, nonnegative and strictly decreasing");
        }
        if !sorted_by(&self.mu_list, |a, b| a < b) || !sorted_by(&self.mass_list, |a, b| a < b) {
            return bad("mu_list and mass_list must be strictly increasing");
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) || self.mass_list.iter().any(|&m| !(m >= 0.0)) {
            return bad("masses must be finite and >= 0");
        }
        if self.n_paths == 0 {
            return bad("n_paths must be >= 1");
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return bad("rho must be >= 1");
        }
        if !(self.h1_growth_factor > 0.0) {
            return bad("h1_growth_factor must be > 0");
        }
        for &eps in &self.epsilon_list {
            self.params(eps, self.fixed_m).validate()?;
        }
        for &m in &self.m_list {
            self.params(0.0, m).validate()?;
        }
        for &mu in &self.mu_list {
            ModelParams { mu, ..self.base.params }.validate()?;
        }
        Ok(())
    }

    fn params(&self, epsilon: f64, m_trunc: f64) -> ModelParams {
        ModelParams {
            epsilon,
            m_trunc,
            ..self.base.params
        }
    }

    fn path_config(&self, seed: u64) -> PathConfig {
        PathConfig {
            seed,
            initial_mass: Some(self.mass),
            ..self.base.clone()
        }
    }

    /// Without noise every seed gives the same path, so one is enough.
    pub fn deterministic(&self) -> bool {
        self.base.noise.amplitude == 0.0 || self.base.noise.rank == 0
    }

    pub fn seeds(&self) -> Vec<u64> {
        let n = if self.deterministic() { 1 } else { self.n_paths };
        (0..n as u64).map(|i| self.seed_base + i).collect()
    }
}

/// A study result: named float columns plus `#` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub study: Study,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl StudyTable {
    fn new(study: Study, columns: &[&str]) -> Self {
        StudyTable {
            study,
            metadata: vec![("study".into(), study.name().into())],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.study.name())
    }
}

/// `v[i+1] < v[i]` for every consecutive pair.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// `(v[i] − v[i+1]) / √(se_i² + se_{i+1}²)`; infinite when both errors vanish
/// and the values differ.
pub fn decrease_z_scores(values: &[f64], stderrs: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .zip(stderrs.windows(2))
        .map(|(v, s)| {
            let d = v[0] - v[1];
            let se = (s[0] * s[0] + s[1] * s[1]).sqrt();
            if se > 0.0 {
                d / se
            } else if d == 0.0 {
                0.0
            } else {
                d.signum() * f64::INFINITY
            }
        })
        .collect()
}

/// Every pair of entries agrees within `k` combined standard errors.
pub fn flat_within(values: &[f64], stderrs: &[f64], k: f64) -> bool {
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let se = (stderrs[i] * stderrs[i] + stderrs[j] * stderrs[j]).sqrt();
            if (values[i] - values[j]).abs() > k * se {
                return false;
            }
        }
    }
    true
}

fn moment_or_nan(values: &[f64], rho: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let s = omega_moment(values, rho)?;
    Ok((s.value, s.stderr))
}

/// Unit-`L²` Gaussian bump used to perturb initial data.
pub fn unit_bump(grid: &Arc<SpatialGrid>) -> Result<Field> {
    let b = Field::from_fn(Arc::clone(grid), |x| {
        let y = (x - 1.0) / 0.5;
        Complex64::new((-y * y).exp(), 0.0)
    })?;
    let n = b.l2_norm();
    Ok(b.scaled(Complex64::new(1.0 / n, 0.0)))
}

/// Convolution with a Gaussian of width `scale` (Fourier multiplier
/// `e^{-(k·scale)²/2}`); never increases the `L²` norm.
pub fn mollify(f: &Field, scale: f64) -> Result<Field> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(SnlsError::InvalidParameter(format!("mollifier scale must be >= 0, got {scale}")));
    }
    let grid = f.grid();
    let mut buf = f.values().to_vec();
    grid.forward_in_place(&mut buf);
    for (c, &k) in buf.iter_mut().zip(grid.wavenumbers()) {
        let ks = k * scale;
        *c *= (-0.5 * ks * ks).exp();
    }
    grid.inverse_in_place(&mut buf);
    Field::new(Arc::clone(grid), buf)
}

fn common_meta(t: &mut StudyTable, spec: &LadderSpec, seeds: &[u64]) {
    t.meta("rho", fmt_f64(spec.rho));
    t.meta("mass", fmt_f64(spec.mass));
    t.meta("n_paths", seeds.len());
    t.meta("seed_base", spec.seed_base);
    t.meta("mode", if spec.deterministic() { "deterministic" } else { "stochastic" });
    t.meta("integrator", serde_json::to_value(spec.base.integrator).unwrap_or_default().as_str().unwrap_or(""));
    t.meta("n_points", spec.base.grid.n_points);
    t.meta("domain_length", fmt_f64(spec.base.grid.domain_length));
    t.meta("dt", fmt_f64(spec.base.dt));
    t.meta("t_end", fmt_f64(spec.base.t_end));
    t.meta("noise_amplitude", fmt_f64(spec.base.noise.amplitude));
}

/// `‖u_{m,εᵢ} − u_{m,εᵢ₊₁}‖_{L^ρ_ω X(0,T)}` down the `ε` ladder at `fixed_m`.
pub fn eps_convergence_study(spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    spec.validate()?;
    let seeds = spec.seeds();
    let eps = &spec.epsilon_list;
    let pairs: Vec<(usize, usize)> = (0..eps.len().saturating_sub(1)).map(|i| (i, i + 1)).collect();
    let per_seed = map_seeds(&seeds, workers, |seed| {
        let cfg = spec.path_config(seed);
        let (_, _, u0) = cfg.setup()?;
        let variants = eps
            .iter()
            .map(|&e| Variant {
                label: Some(format!("eps={e}")),
                params: spec.params(e, spec.fixed_m),
                initial: u0.clone(),
            })
            .collect();
        let out = run_coupled(&cfg, variants, &pairs)?;
        let diffs: Option<Vec<f64>> = out.diffs.iter().map(|d| d.final_x_norm).collect();
        Ok(diffs)
    })?;
    let used: Vec<&Vec<f64>> = per_seed.iter().flatten().collect();
    let n_aborted = per_seed.len() - used.len();
    check_aborts(n_aborted, seeds.len())?;

    let mut t = StudyTable::new(Study::Eps, &["eps_a", "eps_b", "value", "stderr", "n_used", "n_aborted"]);
    common_meta(&mut t, spec, &seeds);
    t.meta("m", fmt_f64(spec.fixed_m));
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let vals: Vec<f64> = used.iter().map(|d| d[p]).collect();
        let (value, stderr) = moment_or_nan(&vals, spec.rho)?;
        t.rows.push(vec![eps[a], eps[b], value, stderr, vals.len() as f64, n_aborted as f64]);
    }
    let values = t.column("value").unwrap_or_default();
    let z = decrease_z_scores(&values, &t.column("stderr").unwrap_or_default());
    t.meta("strictly_decreasing", strictly_decreasing(&values));
    t.meta("min_decrease_z", fmt_f64(z.iter().copied().fold(f64::INFINITY, f64::min)));
    Ok(t)
}

struct MSeed {
    x_norm: Vec<f64>,
    saturated: Vec<bool>,
    truncated: Vec<bool>,
    /// `x2_fifth` stayed below `m − 1`.
    qualifies: Vec<bool>,
    /// Path at `m` equals the path at `m + 1` bit for bit.
    identical: Vec<bool>,
}

fn same_path(a: &PathRecord, b: &PathRecord) -> bool {
    a.final_field == b.final_field && a.x2_fifth.to_bits() == b.x2_fifth.to_bits() && a.sup_l2.to_bits() == b.sup_l2.to_bits()
}

/// `‖u_m‖_{L^ρ_ω X(0,T)}` across `m_list` at `ε = 0`, with saturation counts
/// and an exact check that paths below `m − 1` coincide with `m + 1`.
pub fn m_uniformity_study(spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    spec.validate()?;
    let seeds = spec.seeds();
    let ms = &spec.m_list;
    let per_seed = map_seeds(&seeds, workers, |seed| {
        let mut cfg = spec.path_config(seed);
        cfg.store_final_field = true;
        let (_, _, u0) = cfg.setup()?;
        let mut variants: Vec<Variant> = ms
            .iter()
            .map(|&m| Variant {
                label: Some(format!("m={m}")),
                params: spec.params(0.0, m),
                initial: u0.clone(),
            })
            .collect();
        let mut partner = vec![None; ms.len()];
        for (i, &m) in ms.iter().enumerate() {
            if m.is_finite() {
                partner[i] = Some(variants.len());
                variants.push(Variant {
                    label: Some(format!("m={}", m + 1.0)),
                    params: spec.params(0.0, m + 1.0),
                    initial: u0.clone(),
                });
            }
        }
        let recs = run_coupled(&cfg, variants, &[])?.records;
        if recs.iter().any(|r| !r.completed()) {
            return Ok(None);
        }
        let base = &recs[..ms.len()];
        Ok(Some(MSeed {
            x_norm: base.iter().map(|r| r.x_norm).collect(),
            saturated: base.iter().map(|r| r.saturation_time.is_some()).collect(),
            truncated: base.iter().map(|r| r.truncation_onset.is_some()).collect(),
            qualifies: base.iter().map(|r| r.stopping_time_m.is_none()).collect(),
            identical: (0..ms.len())
                .map(|i| partner[i].is_some_and(|j| same_path(&recs[i], &recs[j])))
                .collect(),
        }))
    })?;
    let used: Vec<&MSeed> = per_seed.iter().flatten().collect();
    let n_aborted = per_seed.len() - used.len();
    check_aborts(n_aborted, seeds.len())?;

    let mut t = StudyTable::new(
        Study::M,
        &[
            "m",
            "value",
            "stderr",
            "saturated_fraction",
            "truncated_fraction",
            "qualifying_paths",
            "identical_to_m_plus_1",
            "n_used",
            "n_aborted",
        ],
    );
    common_meta(&mut t, spec, &seeds);
    let n = used.len().max(1) as f64;
    for (i, &m) in ms.iter().enumerate() {
        let vals: Vec<f64> = used.iter().map(|s| s.x_norm[i]).collect();
        let (value, stderr) = moment_or_nan(&vals, spec.rho)?;
        let sat = used.iter().filter(|s| s.saturated[i]).count() as f64 / n;
        let trunc = used.iter().filter(|s| s.truncated[i]).count() as f64 / n;
        let (q, same) = if m.is_finite() {
            let q = used.iter().filter(|s| s.qualifies[i]).count();
            let same = used.iter().filter(|s| s.qualifies[i] && s.identical[i]).count();
            (q as f64, same as f64)
        } else {
            (f64::NAN, f64::NAN)
        };
        t.rows.push(vec![m, value, stderr, sat, trunc, q, same, vals.len() as f64, n_aborted as f64]);
    }
    let first_free = t.column("saturated_fraction").and_then(|c| c.iter().position(|&s| s == 0.0));
    match first_free {
        Some(i) => {
            let v = t.column("value").unwrap_or_default();
            let se = t.column("stderr").unwrap_or_default();
            t.meta("first_saturation_free_m", fmt_f64(ms[i]));
            t.meta("flat_beyond", flat_within(&v[i..], &se[i..], 3.0));
        }
        None => {
            t.meta("first_saturation_free_m", "none");
            t.meta("flat_beyond", false);
        }
    }
    let inert = t.rows.iter().all(|r| !r[0].is_finite() || r[5] == r[6]);
    t.meta("truncation_inert", inert);
    Ok(t)
}

/// `δ(κ) = ‖u − v‖_{L^ρ_ω X(0,T)}` for `v₀ = u₀ + κ b`, `b` a unit-`L²` bump.
pub fn stability_study(spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    spec.validate()?;
    let seeds = spec.seeds();
    let kappas = &spec.kappa_list;
    let pairs: Vec<(usize, usize)> = (1..=kappas.len()).map(|i| (0, i)).collect();
    let params = spec.params(0.0, spec.base.params.m_trunc);
    let per_seed = map_seeds(&seeds, workers, |seed| {
        let cfg = spec.path_config(seed);
        let (grid, _, u0) = cfg.setup()?;
        let bump = unit_bump(&grid)?;
        let mut variants = vec![Variant {
            label: Some("reference".into()),
            params,
            initial: u0.clone(),
        }];
        for &k in kappas {
            variants.push(Variant {
                label: Some(format!("kappa={k}")),
                params,
                initial: u0.sum(&bump.scaled(Complex64::new(k, 0.0)))?,
            });
        }
        let out = run_coupled(&cfg, variants, &pairs)?;
        let diffs: Option<Vec<f64>> = out.diffs.iter().map(|d| d.final_x_norm).collect();
        Ok(diffs)
    })?;
    let used: Vec<&Vec<f64>> = per_seed.iter().flatten().collect();
    let n_aborted = per_seed.len() - used.len();
    check_aborts(n_aborted, seeds.len())?;

    let mut t = StudyTable::new(Study::Stability, &["kappa", "delta", "stderr", "n_used", "n_aborted"]);
    common_meta(&mut t, spec, &seeds);
    t.meta("m", fmt_f64(params.m_trunc));
    t.meta("perturbation", "unit L2 gaussian bump centred at x=1, width 0.5");
    for (i, &k) in kappas.iter().enumerate() {
        let vals: Vec<f64> = used.iter().map(|d| d[i]).collect();
        let (value, stderr) = moment_or_nan(&vals, spec.rho)?;
        t.rows.push(vec![k, value, stderr, vals.len() as f64, n_aborted as f64]);
    }
    let delta = t.column("delta").unwrap_or_default();
    t.meta("strictly_decreasing", strictly_decreasing(&delta));
    Ok(t)
}

/// Largest `H¹` norm over the output times, per `ε`, relative to the data.
pub fn regularity_persistence_study(spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    spec.validate()?;
    let seeds = spec.seeds();
    let eps = &spec.epsilon_list;
    let per_seed = map_seeds(&seeds, workers, |seed| {
        let cfg = spec.path_config(seed);
        let (_, _, u0) = cfg.setup()?;
        let h0 = h1_norm(&u0);
        let variants = eps
            .iter()
            .map(|&e| Variant {
                label: Some(format!("eps={e}")),
                params: spec.params(e, spec.fixed_m),
                initial: u0.clone(),
            })
            .collect();
        let recs = run_coupled(&cfg, variants, &[])?.records;
        if recs.iter().any(|r| !r.completed()) {
            return Ok(None);
        }
        Ok(Some((h0, recs.iter().map(|r| r.max_h1).collect::<Vec<f64>>())))
    })?;
    let used: Vec<&(f64, Vec<f64>)> = per_seed.iter().flatten().collect();
    let n_aborted = per_seed.len() - used.len();
    check_aborts(n_aborted, seeds.len())?;

    let mut t = StudyTable::new(
        Study::Regularity,
        &["eps", "value", "stderr", "max_growth", "n_used", "n_aborted"],
    );
    common_meta(&mut t, spec, &seeds);
    t.meta("m", fmt_f64(spec.fixed_m));
    t.meta("growth_factor", fmt_f64(spec.h1_growth_factor));
    let mut bounded = true;
    for (i, &e) in eps.iter().enumerate() {
        let vals: Vec<f64> = used.iter().map(|(_, h)| h[i]).collect();
        let growth = used
            .iter()
            .map(|(h0, h)| if *h0 > 0.0 { h[i] / h0 } else if h[i] == 0.0 { 1.0 } else { f64::INFINITY })
            .fold(0.0, f64::max);
        bounded &= growth <= spec.h1_growth_factor;
        let (value, stderr) = moment_or_nan(&vals, spec.rho)?;
        t.rows.push(vec![e, value, stderr, growth, vals.len() as f64, n_aborted as f64]);
    }
    t.meta("bounded", bounded);
    Ok(t)
}

/// Deterministic `X` norms over `mu_list × mass_list`; descriptive only.
pub fn dodson_bound_probe(spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    spec.validate()?;
    let mut base = spec.base.clone();
    base.noise.amplitude = 0.0;
    let grid_points: Vec<(f64, f64)> = spec
        .mu_list
        .iter()
        .flat_map(|&mu| spec.mass_list.iter().map(move |&mass| (mu, mass)))
        .collect();
    let idx: Vec<u64> = (0..grid_points.len() as u64).collect();
    let recs = map_seeds(&idx, workers, |i| {
        let (mu, mass) = grid_points[i as usize];
        let cfg = PathConfig {
            seed: spec.seed_base,
            initial_mass: Some(mass),
            params: ModelParams { mu, ..base.params },
            ..base.clone()
        };
        let h0 = h1_norm(&cfg.setup()?.2);
        Ok((h0, run_path(&cfg)?))
    })?;

    let mut t = StudyTable::new(
        Study::Dodson,
        &[
            "mu",
            "mass",
            "x2_norm",
            "x_norm",
            "x2_fifth",
            "saturated",
            "truncated",
            "above_ground_state",
            "growth_flag",
            "monotone_in_mass",
        ],
    );
    t.meta("noise_amplitude", "0");
    t.meta("sign", serde_json::to_value(base.params.sign).unwrap_or_default().as_str().unwrap_or(""));
    t.meta("epsilon", fmt_f64(base.params.epsilon));
    t.meta("m", fmt_f64(base.params.m_trunc));
    t.meta("n_points", base.grid.n_points);
    t.meta("domain_length", fmt_f64(base.grid.domain_length));
    t.meta("dt", fmt_f64(base.dt));
    t.meta("t_end", fmt_f64(base.t_end));
    t.meta("growth_factor", fmt_f64(spec.h1_growth_factor));
    let per_mu = spec.mass_list.len();
    for (chunk_i, chunk) in recs.chunks(per_mu.max(1)).enumerate() {
        let x2: Vec<f64> = chunk
            .iter()
            .map(|(_, r)| if r.completed() { r.x2_fifth.powf(0.2) } else { f64::INFINITY })
            .collect();
        let monotone = x2.windows(2).all(|w| w[0] <= w[1]);
        for (j, (h0, r)) in chunk.iter().enumerate() {
            let (mu, mass) = grid_points[chunk_i * per_mu + j];
            let growth = !r.completed() || r.max_h1 > spec.h1_growth_factor * h0;
            let b = |x: bool| if x { 1.0 } else { 0.0 };
            t.rows.push(vec![
                mu,
                mass,
                x2[j],
                if r.completed() { r.x_norm } else { f64::INFINITY },
                r.x2_fifth,
                b(r.saturation_time.is_some()),
                b(r.truncation_onset.is_some()),
                b(r.above_ground_state),
                b(growth),
                b(monotone),
            ]);
        }
    }
    Ok(t)
}

pub fn run_study(study: Study, spec: &LadderSpec, workers: usize) -> Result<StudyTable> {
    match study {
        Study::Eps => eps_convergence_study(spec, workers),
        Study::M => m_uniformity_study(spec, workers),
        Study::Stability => stability_study(spec, workers),
        Study::Regularity => regularity_persistence_study(spec, workers),
        Study::Dodson => dodson_bound_probe(spec, workers),
    }
}

/// Writes `<study>.csv` and `manifest.json` into `dir`.
pub fn write_study(dir: &Path, spec: &LadderSpec, table: &StudyTable) -> Result<RunManifest> {
    let seeds = if table.study == Study::Dodson {
        vec![spec.seed_base]
    } else {
        spec.seeds()
    };
    let mut manifest = RunManifest::new(&table.study.manifest_kind(), spec, seeds)?;
    let used = table
        .column("n_used")
        .and_then(|c| c.first().copied())
        .unwrap_or(manifest.n_paths as f64);
    manifest.n_used = used as usize;
    manifest.n_aborted = manifest.n_paths.saturating_sub(manifest.n_used);
    write_outputs(dir, &mut manifest, &[(table.file_name(), table.to_csv_string().into_bytes())])?;
    Ok(manifest)
}
