//! Monte Carlo over seeds, `L^ρ_ω` summaries, tail estimates and the
//! on-disk result layout (`manifest.json`, `records.jsonl`, `summaries.csv`).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{Result, SnlsError};
use crate::norms::{omega_moment, EnsembleSummary, DEFAULT_RHO0};
use crate::pathsim::{run_coupled, run_pair, PathConfig, PathRecord, Variant};
use crate::serde_util::fmt_f64;

/// Largest tolerated fraction of aborted paths.
pub const MAX_ABORT_FRACTION: f64 = 0.01;
pub const MIN_TAIL_RECORDS: usize = 100;
/// Normal quantile used for Wilson intervals (95 %).
pub const WILSON_Z: f64 = 1.959963984540054;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.csv";

/// Path statistic aggregated by an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `‖u‖_{X(0,T)}`.
    XNorm,
    /// `‖u‖_{X₂(0,T)}`.
    X2Norm,
    /// `‖u − v‖_{X(0,T)}` against the partner parameters on common noise.
    DiffXNorm,
    MassDrift,
    /// `τ_m ∧ T`.
    StoppingTime,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::XNorm => "x_norm",
            Functional::X2Norm => "x2_norm",
            Functional::DiffXNorm => "diff_x_norm",
            Functional::MassDrift => "mass_drift",
            Functional::StoppingTime => "stopping_time",
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = SnlsError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| SnlsError::Config(format!("unknown functional {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    /// Path template; its `seed` is replaced by `seed_base + i`.
    pub base: PathConfig,
    pub n_paths: usize,
    pub seed_base: u64,
    pub rho_list: Vec<f64>,
    pub functional: Functional,
    /// Second parameter set for `diff_x_norm`.
    pub partner: Option<ModelParams>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            base: PathConfig::default(),
            n_paths: 16,
            seed_base: 0,
            rho_list: vec![1.0, 2.0, DEFAULT_RHO0],
            functional: Functional::XNorm,
            partner: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_paths == 0 {
            return Err(SnlsError::Config("n_paths must be >= 1".into()));
        }
        if self.seed_base.checked_add(self.n_paths as u64 - 1).is_none() {
            return Err(SnlsError::Config("seed range overflows u64".into()));
        }
        if self.rho_list.is_empty() {
            return Err(SnlsError::Config("rho_list is empty".into()));
        }
        for &rho in &self.rho_list {
            if !(rho.is_finite() && rho >= 1.0) {
                return Err(SnlsError::Config(format!("rho must be >= 1, got {rho}")));
            }
        }
        match (self.functional, &self.partner) {
            (Functional::DiffXNorm, None) => Err(SnlsError::Config("diff_x_norm needs partner parameters".into())),
            (_, Some(p)) => p.validate(),
            _ => Ok(()),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_paths as u64).map(|i| self.seed_base + i).collect()
    }

    pub fn path_config(&self, seed: u64) -> PathConfig {
        PathConfig {
            seed,
            ..self.base.clone()
        }
    }
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub seed: u64,
    /// Functional value; `None` for aborted paths.
    pub value: Option<f64>,
    pub record: PathRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<PathRecord>,
}

impl PathEntry {
    pub fn aborted(&self) -> bool {
        self.value.is_none()
    }
}

/// One row of `summaries.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub functional: String,
    pub rho: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub n_aborted: usize,
}

pub const SUMMARY_HEADER: &str = "functional,rho,value,stderr,n_used,n_aborted";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub entries: Vec<PathEntry>,
    pub summaries: Vec<SummaryRow>,
    pub n_used: usize,
    pub n_aborted: usize,
}

impl EnsembleResult {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.value).collect()
    }

    pub fn records(&self) -> Vec<&PathRecord> {
        self.entries.iter().map(|e| &e.record).collect()
    }
}

/// Thread pool for `workers` threads; 0 means rayon's default.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SnlsError::Runtime(format!("thread pool: {e}")))
}

/// Maps `f` over `seeds` on `workers` threads, returning results in seed order.
pub fn map_seeds<T, F>(seeds: &[u64], workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let pool = worker_pool(workers)?;
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
}

fn functional_value(functional: Functional, r: &PathRecord, diff: Option<f64>) -> Option<f64> {
    if !r.completed() {
        return None;
    }
    Some(match functional {
        Functional::XNorm => r.x_norm,
        Functional::X2Norm => r.x2_fifth.powf(0.2),
        Functional::MassDrift => r.mass_drift,
        Functional::StoppingTime => r.stopping_time_m.unwrap_or(r.t_final).min(r.t_final),
        Functional::DiffXNorm => diff?,
    })
}

fn run_one(cfg: &EnsembleConfig, seed: u64) -> Result<PathEntry> {
    let pc = cfg.path_config(seed);
    match (cfg.functional, cfg.partner) {
        (_, Some(partner)) => {
            let (a, b, d) = run_pair(&pc, pc.params, partner)?;
            let value = if b.completed() {
                functional_value(cfg.functional, &a, d.final_x_norm)
            } else {
                None
            };
            Ok(PathEntry {
                seed,
                value,
                record: a,
                partner: Some(b),
            })
        }
        _ => {
            let (_, _, u0) = pc.setup()?;
            let v = Variant {
                label: None,
                params: pc.params,
                initial: u0,
            };
            let record = run_coupled(&pc, vec![v], &[])?.records.remove(0);
            Ok(PathEntry {
                seed,
                value: functional_value(cfg.functional, &record, None),
                record,
                partner: None,
            })
        }
    }
}

/// Fails when more than [`MAX_ABORT_FRACTION`] of `n_paths` aborted.
pub fn check_aborts(n_aborted: usize, n_paths: usize) -> Result<()> {
    if n_aborted as f64 > MAX_ABORT_FRACTION * n_paths as f64 {
        return Err(SnlsError::Runtime(format!(
            "{n_aborted} of {n_paths} paths aborted (limit {}%)",
            MAX_ABORT_FRACTION * 100.0
        )));
    }
    Ok(())
}

/// Summary rows for `values` at every `rho`.
pub fn summarize(functional: &str, values: &[f64], rho_list: &[f64], n_aborted: usize) -> Result<Vec<SummaryRow>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    rho_list
        .iter()
        .map(|&rho| {
            let EnsembleSummary {
                rho, value, stderr, n_paths, ..
            } = omega_moment(values, rho)?;
            Ok(SummaryRow {
                functional: functional.to_string(),
                rho,
                value,
                stderr,
                n_used: n_paths,
                n_aborted,
            })
        })
        .collect()
}

/// Runs every seed and aggregates in seed order, so the result does not
/// depend on `workers`.
pub fn run_ensemble(cfg: &EnsembleConfig, workers: usize) -> Result<EnsembleResult> {
    cfg.validate()?;
    let entries = map_seeds(&cfg.seeds(), workers, |seed| run_one(cfg, seed))?;
    let n_aborted = entries.iter().filter(|e| e.aborted()).count();
    check_aborts(n_aborted, cfg.n_paths)?;
    let values: Vec<f64> = entries.iter().filter_map(|e| e.value).collect();
    let mut summaries = summarize(cfg.functional.name(), &values, &cfg.rho_list, n_aborted)?;
    if cfg.functional != Functional::MassDrift {
        let drifts: Vec<f64> = entries
            .iter()
            .filter(|e| !e.aborted())
            .map(|e| e.record.mass_drift)
            .collect();
        summaries.extend(summarize("mass_drift", &drifts, &cfg.rho_list, n_aborted)?);
    }
    Ok(EnsembleResult {
        n_used: values.len(),
        n_aborted,
        entries,
        summaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub k: f64,
    /// Number of records with `x2_fifth ≥ k`.
    pub count: usize,
    pub survival: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lower = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lower, upper)
}

/// Empirical `P(x2_fifth(T) ≥ K)` over completed records.
pub fn tail_estimate(records: &[PathRecord], k_list: &[f64]) -> Result<Vec<TailPoint>> {
    let samples: Vec<f64> = records.iter().filter(|r| r.completed()).map(|r| r.x2_fifth).collect();
    tail_from_samples(&samples, k_list)
}

pub fn tail_from_samples(samples: &[f64], k_list: &[f64]) -> Result<Vec<TailPoint>> {
    if samples.len() < MIN_TAIL_RECORDS {
        return Err(SnlsError::InvalidParameter(format!(
            "tail estimate needs at least {MIN_TAIL_RECORDS} records, got {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(k_list
        .iter()
        .map(|&k| {
            let below = sorted.partition_point(|&s| s < k);
            let count = n - below;
            let (lower, upper) = wilson_interval(count, n, WILSON_Z);
            TailPoint {
                k,
                count,
                survival: count as f64 / n as f64,
                lower,
                upper,
            }
        })
        .collect())
}

/// `count` log-spaced thresholds between the sample median and the value
/// still exceeded by `min_exceed` samples, the range where the survival
/// function is resolved.
pub fn resolved_k_grid(samples: &[f64], count: usize, min_exceed: usize) -> Result<Vec<f64>> {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|s| *s > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if count < 2 || n < 2 * min_exceed.max(1) {
        return Err(SnlsError::InvalidParameter("not enough positive samples for a K grid".into()));
    }
    let lo = sorted[n / 2];
    let hi = sorted[n - min_exceed.max(1)];
    if !(hi > lo) {
        return Err(SnlsError::InvalidParameter("degenerate sample range".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Written next to every set of results; enough to rerun them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// What produced the outputs: `simulate` or `ladder_<study>`.
    pub kind: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch; not part of any replayed output.
    pub timestamp: u64,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub n_paths: usize,
    pub n_used: usize,
    pub n_aborted: usize,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new<C: Serialize>(kind: &str, config: &C, seeds: Vec<u64>) -> Result<Self> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(RunManifest {
            kind: kind.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            config: serde_json::to_value(config)?,
            n_paths: seeds.len(),
            seeds,
            n_used: 0,
            n_aborted: 0,
            outputs: Vec::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| SnlsError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes a set of files atomically-ish: everything goes to `*.tmp` first
/// and is renamed at the end; on failure the temporaries are removed.
pub struct OutputBatch {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl OutputBatch {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| SnlsError::io(dir, e))?;
        Ok(OutputBatch {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let final_path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let res = fs::File::create(&tmp).and_then(|file| {
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        });
        self.staged.push((tmp.clone(), final_path));
        res.map_err(|e| {
            self.abandon();
            SnlsError::io(&tmp, e)
        })
    }

    pub fn commit(mut self) -> Result<()> {
        let staged = std::mem::take(&mut self.staged);
        for (i, (tmp, dst)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, dst) {
                for (t, _) in &staged[i..] {
                    let _ = fs::remove_file(t);
                }
                return Err(SnlsError::io(dst, e));
            }
        }
        Ok(())
    }

    fn abandon(&mut self) {
        for (tmp, _) in self.staged.drain(..) {
            let _ = fs::remove_file(tmp);
        }
    }
}

impl Drop for OutputBatch {
    fn drop(&mut self) {
        self.abandon();
    }
}

pub fn write_summaries_csv(out: &mut dyn Write, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.functional,
            fmt_f64(r.rho),
            fmt_f64(r.value),
            fmt_f64(r.stderr),
            r.n_used,
            r.n_aborted
        )?;
    }
    Ok(())
}

pub fn write_records_jsonl(out: &mut dyn Write, entries: &[PathEntry]) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// File names and contents of the ensemble outputs; empty when there is
/// nothing to write.
pub fn output_files(entries: &[PathEntry], summaries: &[SummaryRow]) -> Result<Vec<(String, Vec<u8>)>> {
    if entries.is_empty() && summaries.is_empty() {
        return Ok(Vec::new());
    }
    let mut records = Vec::new();
    write_records_jsonl(&mut records, entries).map_err(|e| SnlsError::Runtime(e.to_string()))?;
    let mut csv = Vec::new();
    write_summaries_csv(&mut csv, summaries).map_err(|e| SnlsError::Runtime(e.to_string()))?;
    Ok(vec![(RECORDS_FILE.into(), records), (SUMMARIES_FILE.into(), csv)])
}

/// Writes the ensemble layout into `dir`. With no entries and no summaries
/// only the manifest is written.
pub fn persist(
    dir: &Path,
    mut manifest: RunManifest,
    entries: &[PathEntry],
    summaries: &[SummaryRow],
) -> Result<RunManifest> {
    let files = output_files(entries, summaries)?;
    manifest.n_aborted = entries.iter().filter(|e| e.aborted()).count();
    manifest.n_used = entries.len() - manifest.n_aborted;
    write_outputs(dir, &mut manifest, &files)?;
    Ok(manifest)
}

/// Writes `files` plus the manifest (whose `outputs` is set to the file names).
pub fn write_outputs(dir: &Path, manifest: &mut RunManifest, files: &[(String, Vec<u8>)]) -> Result<()> {
    let mut batch = OutputBatch::new(dir)?;
    manifest.outputs = files.iter().map(|(n, _)| n.clone()).collect();
    for (name, bytes) in files {
        batch.write_with(name, |w| w.write_all(bytes))?;
    }
    let text = serde_json::to_string_pretty(&*manifest)?;
    batch.write_with(MANIFEST_FILE, |w| writeln!(w, "{text}"))?;
    batch.commit()
}

/// Reads back what [`persist`] wrote.
pub fn load(dir: &Path) -> Result<(RunManifest, Vec<PathEntry>, Vec<SummaryRow>)> {
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let mut entries = Vec::new();
    let mut summaries = Vec::new();
    if manifest.outputs.iter().any(|o| o == RECORDS_FILE) {
        let p = dir.join(RECORDS_FILE);
        let f = fs::File::open(&p).map_err(|e| SnlsError::io(&p, e))?;
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| SnlsError::io(&p, e))?;
            if !line.trim().is_empty() {
                entries.push(serde_json::from_str(&line)?);
            }
        }
    }
    if manifest.outputs.iter().any(|o| o == SUMMARIES_FILE) {
        let p = dir.join(SUMMARIES_FILE);
        let text = fs::read_to_string(&p).map_err(|e| SnlsError::io(&p, e))?;
        summaries = parse_summaries_csv(&text)?;
    }
    Ok((manifest, entries, summaries))
}

pub fn parse_summaries_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(SnlsError::Config("summaries.csv: unexpected header".into()));
    }
    let num = |s: &str| crate::serde_util::parse_extended(s).map_err(SnlsError::Config);
    let int = |s: &str| s.parse::<usize>().map_err(|e| SnlsError::Config(format!("summaries.csv: {e}")));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 6 {
                return Err(SnlsError::Config(format!("summaries.csv: bad row {l:?}")));
            }
            Ok(SummaryRow {
                functional: c[0].to_string(),
                rho: num(c[1])?,
                value: num(c[2])?,
                stderr: num(c[3])?,
                n_used: int(c[4])?,
                n_aborted: int(c[5])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn small(n_paths: usize) -> EnsembleConfig {
        EnsembleConfig {
            base: PathConfig {
                grid: GridSpec {
                    n_points: 128,
                    domain_length: 40.0,
                },
                dt: 5e-3,
                t_end: 0.1,
                store_series: false,
                ..Default::default()
            },
            n_paths,
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_paths_coincide() {
        let mut cfg = small(4);
        cfg.base.noise.amplitude = 0.0;
        let res = run_ensemble(&cfg, 1).unwrap();
        let first = &res.entries[0].record;
        for e in &res.entries {
            assert_eq!(e.record.x2_fifth, first.x2_fifth);
            assert_eq!(e.record.sup_l2, first.sup_l2);
        }
        assert!(res.summaries.iter().all(|s| s.stderr == 0.0));
    }

    #[test]
    fn mass_drift_summary_is_tiny() {
        let mut cfg = small(6);
        cfg.functional = Functional::MassDrift;
        let res = run_ensemble(&cfg, 2).unwrap();
        assert!(res.summaries.iter().all(|s| s.functional == "mass_drift" && s.value <= 1e-10));
    }

    #[test]
    fn moments_grow_with_rho() {
        let res = run_ensemble(&small(8), 1).unwrap();
        let xs: Vec<f64> = res
            .summaries
            .iter()
            .filter(|s| s.functional == "x_norm")
            .map(|s| s.value)
            .collect();
        assert_eq!(xs.len(), 3);
        assert!(xs[0] <= xs[1] && xs[1] <= xs[2]);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = small(6);
        let a = run_ensemble(&cfg, 1).unwrap();
        let b = run_ensemble(&cfg, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diff_functional_needs_partner() {
        let mut cfg = small(2);
        cfg.functional = Functional::DiffXNorm;
        assert!(cfg.validate().is_err());
        cfg.partner = Some(cfg.base.params);
        let res = run_ensemble(&cfg, 1).unwrap();
        assert!(res.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, WILSON_Z);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
    }

    #[test]
    fn tail_edges() {
        let samples: Vec<f64> = (1..=120).map(|i| i as f64).collect();
        let t = tail_from_samples(&samples, &[0.5, 60.5, 1e3]).unwrap();
        assert_eq!(t[0].survival, 1.0);
        assert_eq!(t[1].count, 60);
        assert_eq!(t[2].survival, 0.0);
        assert_eq!(t[2].lower, 0.0);
        assert!(tail_from_samples(&samples[..50], &[1.0]).is_err());
    }

    #[test]
    fn abort_budget() {
        assert!(check_aborts(1, 100).is_ok());
        assert!(check_aborts(2, 100).is_err());
        assert!(check_aborts(0, 1).is_ok());
    }

    #[test]
    fn functional_names_parse() {
        for f in [
            Functional::XNorm,
            Functional::X2Norm,
            Functional::DiffXNorm,
            Functional::MassDrift,
            Functional::StoppingTime,
        ] {
            assert_eq!(f.name().parse::<Functional>().unwrap(), f);
        }
        assert!("energy".parse::<Functional>().is_err());
    }

    #[test]
    fn summaries_csv_round_trip() {
        let rows = vec![SummaryRow {
            functional: "x_norm".into(),
            rho: 6.0,
            value: 0.1 + 0.2,
            stderr: f64::INFINITY,
            n_used: 3,
            n_aborted: 0,
        }];
        let mut buf = Vec::new();
        write_summaries_csv(&mut buf, &rows).unwrap();
        assert_eq!(parse_summaries_csv(std::str::from_utf8(&buf).unwrap()).unwrap(), rows);
    }
}
