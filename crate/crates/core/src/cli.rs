//! `snls` command line: `simulate`, `ladder`, `validate`, `replay`.
//!
//! Exit codes: 0 success, 1 runtime failure (including failed checks and
//! replay mismatches), 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dynamics::{Integrator, Sign};
use crate::ensemble::{self, EnsembleConfig, Functional, RunManifest};
use crate::error::{Result, SnlsError};
use crate::experiments::{self, LadderSpec, Study};
use crate::serde_util::{fmt_f64, parse_extended};
use crate::validation::{self, Profile};

const OUTPUT_DOCS: &str = "\
OUTPUT FILES
  simulate writes into --out:
    manifest.json   resolved config, tool version, timestamp, seeds, abort counts
    records.jsonl   one path per line: seed, value (functional or null if aborted),
                    record (norm series t,l2,l10,x2_fifth,h1; sup_l2; x2_fifth; x_norm;
                    stopping_time_m; stopping_time_m_eps; truncation_onset;
                    saturation_time; mass_drift; boundary_mass; flags; config echo)
    summaries.csv   functional,rho,value,stderr,n_used,n_aborted
                    value = (mean s^rho)^(1/rho), stderr from 200 bootstrap resamples
  ladder <study> writes <study>.csv ('#' metadata lines, then a header) and manifest.json:
    eps         eps_a,eps_b,value,stderr,n_used,n_aborted   (value: L^rho moment of ||u_a-u_b||_X)
    m           m,value,stderr,saturated_fraction,truncated_fraction,qualifying_paths,
                identical_to_m_plus_1,n_used,n_aborted
    stability   kappa,delta,stderr,n_used,n_aborted
    regularity  eps,value,stderr,max_growth,n_used,n_aborted   (value: L^rho moment of max_t H1)
    dodson      mu,mass,x2_norm,x_norm,x2_fifth,saturated,truncated,above_ground_state,
                growth_flag,monotone_in_mass
EXIT CODES
  0 success, 1 runtime failure, 2 usage or configuration error";

#[derive(Debug, Parser)]
#[command(name = "snls", version, about = "Stochastic mass-critical NLS simulator", after_help = OUTPUT_DOCS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one path or an ensemble and write manifest.json, records.jsonl, summaries.csv.
    Simulate(SimulateArgs),
    /// Run a ladder study and write <study>.csv plus manifest.json.
    Ladder(LadderArgs),
    /// Run the invariant checks and print a pass/fail table.
    Validate(ValidateArgs),
    /// Re-run a manifest and compare every output byte for byte.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelFlags {
    /// Subcriticality epsilon in [0, 1].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Truncation level m (`inf` disables truncation).
    #[arg(long, value_parser = parse_extended)]
    pub m: Option<f64>,
    /// Nonlinearity coupling mu in [0, 1].
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, value_enum)]
    pub sign: Option<SignArg>,
    /// Noise amplitude.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Noise rank (number of Hermite modes).
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub domain_length: Option<f64>,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    /// Initial L2 norm.
    #[arg(long)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    Defocusing,
    Focusing,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IntegratorArg {
    Stratonovich,
    Ito,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON ensemble config; every field is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Validate and print the resolved config without running.
    #[arg(long)]
    pub dry_run: bool,
    /// First seed; paths use seed, seed+1, ...
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, value_parser = parse_functional)]
    pub functional: Option<Functional>,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Keep the final field in each record.
    #[arg(long)]
    pub store_field: bool,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, default_value = "snls-out")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "SNLS_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StudyArg {
    Eps,
    M,
    Stability,
    Regularity,
    Dodson,
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Study {
        match s {
            StudyArg::Eps => Study::Eps,
            StudyArg::M => Study::M,
            StudyArg::Stability => Study::Stability,
            StudyArg::Regularity => Study::Regularity,
            StudyArg::Dodson => Study::Dodson,
        }
    }
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    #[arg(value_enum)]
    pub study: StudyArg,
    /// JSON ladder config; every field is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Moment order rho.
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Output directory (default snls-out/ladder-<study>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "SNLS_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run only these checks (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Print results as JSON.
    #[arg(long)]
    pub json: bool,
    /// Fewer paths in the weak-order check.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "SNLS_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Path to a manifest.json (or its directory).
    pub manifest: PathBuf,
    #[arg(long, env = "SNLS_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

fn parse_functional(s: &str) -> std::result::Result<Functional, String> {
    s.parse().map_err(|e: SnlsError| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| SnlsError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| SnlsError::Config(format!("{}: {e}", p.display())))
        }
    }
}

impl ModelFlags {
    fn apply(&self, cfg: &mut crate::pathsim::PathConfig) {
        let p = &mut cfg.params;
        if let Some(v) = self.epsilon {
            p.epsilon = v;
        }
        if let Some(v) = self.m {
            p.m_trunc = v;
        }
        if let Some(v) = self.mu {
            p.mu = v;
        }
        if let Some(s) = self.sign {
            p.sign = match s {
                SignArg::Defocusing => Sign::Defocusing,
                SignArg::Focusing => Sign::Focusing,
            };
        }
        if let Some(v) = self.amplitude {
            cfg.noise.amplitude = v;
        }
        if let Some(v) = self.rank {
            cfg.noise.rank = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.n_points {
            cfg.grid.n_points = v;
        }
        if let Some(v) = self.domain_length {
            cfg.grid.domain_length = v;
        }
        if let Some(i) = self.integrator {
            cfg.integrator = match i {
                IntegratorArg::Stratonovich => Integrator::Stratonovich,
                IntegratorArg::Ito => Integrator::Ito,
            };
        }
        if let Some(v) = self.mass {
            cfg.initial_mass = Some(v);
        }
    }
}

pub fn resolve_simulate(args: &SimulateArgs) -> Result<EnsembleConfig> {
    let mut cfg: EnsembleConfig = read_json(args.config.as_deref())?;
    args.model.apply(&mut cfg.base);
    if let Some(s) = args.seed {
        cfg.seed_base = s;
    }
    if let Some(n) = args.paths {
        cfg.n_paths = n;
    }
    if let Some(f) = args.functional {
        cfg.functional = f;
    }
    if let Some(r) = &args.rho {
        cfg.rho_list = r.clone();
    }
    if args.store_field {
        cfg.base.store_final_field = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_ladder(args: &LadderArgs) -> Result<LadderSpec> {
    let mut spec: LadderSpec = read_json(args.config.as_deref())?;
    args.model.apply(&mut spec.base);
    if let Some(m) = args.model.m {
        spec.fixed_m = m;
    }
    if let Some(mass) = args.model.mass {
        spec.mass = mass;
    }
    if let Some(s) = args.seed {
        spec.seed_base = s;
    }
    if let Some(n) = args.paths {
        spec.n_paths = n;
    }
    if let Some(r) = args.rho {
        spec.rho = r;
    }
    spec.validate()?;
    Ok(spec)
}

/// Output file names with their bytes.
pub type OutputFiles = Vec<(String, Vec<u8>)>;

/// Runs an ensemble and returns the manifest and the output files.
pub fn simulate_outputs(cfg: &EnsembleConfig, workers: usize) -> Result<(RunManifest, ensemble::EnsembleResult, OutputFiles)> {
    let res = ensemble::run_ensemble(cfg, workers)?;
    let mut manifest = RunManifest::new("simulate", cfg, cfg.seeds())?;
    manifest.n_used = res.n_used;
    manifest.n_aborted = res.n_aborted;
    let files = ensemble::output_files(&res.entries, &res.summaries)?;
    Ok((manifest, res, files))
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_simulate(args)?;
    if args.dry_run {
        writeln!(out, "{}", serde_json::to_string_pretty(&cfg)?).map_err(stdout_err)?;
        return Ok(());
    }
    let (mut manifest, res, files) = simulate_outputs(&cfg, args.workers)?;
    ensemble::write_outputs(&args.out, &mut manifest, &files)?;
    writeln!(out, "{:<14} {:>6} {:>24} {:>24}", "functional", "rho", "value", "stderr").map_err(stdout_err)?;
    for s in &res.summaries {
        writeln!(out, "{:<14} {:>6} {:>24} {:>24}", s.functional, fmt_f64(s.rho), fmt_f64(s.value), fmt_f64(s.stderr))
            .map_err(stdout_err)?;
    }
    writeln!(
        out,
        "{} paths used, {} aborted; outputs in {}",
        res.n_used,
        res.n_aborted,
        args.out.display()
    )
    .map_err(stdout_err)?;
    Ok(())
}

fn cmd_ladder(args: &LadderArgs, out: &mut dyn Write) -> Result<()> {
    let spec = resolve_ladder(args)?;
    let study: Study = args.study.into();
    if args.dry_run {
        writeln!(out, "{}", serde_json::to_string_pretty(&spec)?).map_err(stdout_err)?;
        return Ok(());
    }
    let table = experiments::run_study(study, &spec, args.workers)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("snls-out/ladder-{}", study.name())));
    experiments::write_study(&dir, &spec, &table)?;
    out.write_all(table.to_csv_string().as_bytes()).map_err(stdout_err)?;
    writeln!(out, "written to {}", dir.join(table.file_name()).display()).map_err(stdout_err)?;
    Ok(())
}

/// Returns whether every check passed.
fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<bool> {
    let profile = if args.quick { Profile::Quick } else { Profile::Full };
    let results = validation::run_checks(&args.only, profile, args.workers)?;
    let all = results.iter().all(|r| r.passed);
    if args.json {
        let doc = serde_json::json!({ "passed": all, "checks": results });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?).map_err(stdout_err)?;
    } else {
        for r in &results {
            writeln!(
                out,
                "{:<4} {:<13} value {:<12.4e} threshold {:<10.3e} {:>7.2}s  {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.value,
                r.threshold,
                r.seconds,
                r.detail
            )
            .map_err(stdout_err)?;
        }
    }
    Ok(all)
}

/// Outcome of comparing regenerated outputs against the files on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub kind: String,
    pub matched: Vec<String>,
    pub mismatched: Vec<String>,
}

/// Regenerates every output listed in the manifest at `path` and compares
/// bytes with the files next to it.
pub fn replay(path: &Path, workers: usize) -> Result<ReplayReport> {
    let manifest_path = if path.is_dir() {
        path.join(ensemble::MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let manifest = RunManifest::load(&manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let regenerated: Vec<(String, Vec<u8>)> = if manifest.kind == "simulate" {
        let cfg: EnsembleConfig = serde_json::from_value(manifest.config.clone())
            .map_err(|e| SnlsError::Config(format!("manifest config: {e}")))?;
        simulate_outputs(&cfg, workers)?.2
    } else if let Some(study) = Study::from_manifest_kind(&manifest.kind) {
        let spec: LadderSpec = serde_json::from_value(manifest.config.clone())
            .map_err(|e| SnlsError::Config(format!("manifest config: {e}")))?;
        let table = experiments::run_study(study, &spec, workers)?;
        vec![(table.file_name(), table.to_csv_string().into_bytes())]
    } else {
        return Err(SnlsError::Config(format!("unknown manifest kind {:?}", manifest.kind)));
    };
    let mut report = ReplayReport {
        kind: manifest.kind.clone(),
        matched: Vec::new(),
        mismatched: Vec::new(),
    };
    for name in &manifest.outputs {
        let p = dir.join(name);
        let on_disk = std::fs::read(&p).map_err(|e| SnlsError::io(&p, e))?;
        let same = regenerated.iter().any(|(n, bytes)| n == name && *bytes == on_disk);
        if same {
            report.matched.push(name.clone());
        } else {
            report.mismatched.push(name.clone());
        }
    }
    for (n, _) in &regenerated {
        if !manifest.outputs.contains(n) {
            report.mismatched.push(n.clone());
        }
    }
    Ok(report)
}

fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write) -> Result<bool> {
    let r = replay(&args.manifest, args.workers)?;
    for n in &r.matched {
        writeln!(out, "identical  {n}").map_err(stdout_err)?;
    }
    for n in &r.mismatched {
        writeln!(out, "DIFFERENT  {n}").map_err(stdout_err)?;
    }
    Ok(r.mismatched.is_empty())
}

fn stdout_err(e: std::io::Error) -> SnlsError {
    SnlsError::Runtime(format!("writing output: {e}"))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, out).map(|()| true),
        Command::Ladder(a) => cmd_ladder(a, out).map(|()| true),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Replay(a) => cmd_replay(a, out),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
