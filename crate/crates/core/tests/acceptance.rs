//! Acceptance suite. Runs every criterion in sequence and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any failed.
//!
//! `cargo test -p snls-core --release --test acceptance`

use std::path::Path;
use std::time::Instant;

use snls_core::cli;
use snls_core::ensemble::{self, resolved_k_grid, run_ensemble, tail_from_samples, EnsembleConfig, Functional};
use snls_core::experiments::{
    decrease_z_scores, eps_convergence_study, m_uniformity_study, stability_study, strictly_decreasing, LadderSpec,
};
use snls_core::pathsim::PathConfig;
use snls_core::validation::{self, WeakOrderSettings};

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn within(secs: f64, limit: f64) -> (bool, String) {
    (secs < limit, format!("{secs:.1}s, limit {limit}s"))
}

fn c1_mass() -> Outcome {
    let eps = [0.8, 0.4, 0.2, 0.1, 0.05, 0.0];
    let ms = [0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY];
    let r = validation::check_mass(1024, 1e-3, 0.5, &eps, &ms, 0, 1e-10).unwrap();
    let per_path = r.seconds / (eps.len() * ms.len()) as f64;
    let (fast, t) = within(per_path, 5.0);
    outcome(
        r.passed && fast,
        format!("max relative drift {:.2e} (<= 1e-10) over 36 (eps, m) pairs; {t} per path", r.value),
    )
}

fn c2_unitarity() -> Outcome {
    let r = validation::check_unitarity(100, 1024, 1e-12).unwrap();
    let (fast, t) = within(r.seconds, 1.0);
    outcome(r.passed && fast, format!("worst relative error {:.2e} (<= 1e-12); {t}", r.value))
}

fn c3_dispersion() -> Outcome {
    let r = validation::check_dispersion(4096, 400.0, (-0.55, -0.45)).unwrap();
    let (fast, t) = within(r.seconds, 10.0);
    outcome(r.passed && fast, format!("slope {:.4} in [-0.55, -0.45], {}; {t}", r.value, r.detail))
}

fn c4_soliton() -> Outcome {
    let g = validation::check_ground_state(4096, 60.0, 1e-8).unwrap();
    let s = validation::check_soliton(4096, 60.0, 1e-4, 1e-6).unwrap();
    let (fast, t) = within(g.seconds + s.seconds, 60.0);
    outcome(
        g.passed && s.passed && fast,
        format!(
            "residual of -Q''+Q-Q^5 {:.2e} (<= 1e-8); shape error {:.2e} (<= 1e-6); {t}",
            g.value, s.value
        ),
    )
}

fn c5_weak_order() -> Outcome {
    let t0 = Instant::now();
    let s = WeakOrderSettings::default();
    let r = validation::weak_order(&s, workers()).unwrap();
    let (fast, t) = within(t0.elapsed().as_secs_f64(), 900.0);
    let ok = r.mass_order >= 0.8 && r.l10_order >= 0.8;
    outcome(
        ok && fast,
        format!(
            "order {:.3} (mass), {:.3} (L10), need >= 0.8; gaps {} / {}; {} paths; {t}",
            r.mass_order, r.l10_order, sci(&r.mass_gap), sci(&r.l10_gap), s.n_paths
        ),
    )
}

fn c6_m_agreement() -> Outcome {
    let t0 = Instant::now();
    let spec = LadderSpec::default();
    let table = m_uniformity_study(&spec, workers()).unwrap();
    let inert = table.metadata_value("truncation_inert") == Some("true");
    let flat = table.metadata_value("flat_beyond") == Some("true");
    let first = table.metadata_value("first_saturation_free_m").unwrap_or("none").to_string();
    let q = table.column("qualifying_paths").unwrap();
    let same = table.column("identical_to_m_plus_1").unwrap();
    let counts: Vec<String> = q
        .iter()
        .zip(&same)
        .filter(|(q, _)| q.is_finite())
        .map(|(q, s)| format!("{s}/{q}"))
        .collect();
    let (fast, t) = within(t0.elapsed().as_secs_f64(), 1200.0);
    outcome(
        inert && flat && fast,
        format!(
            "identical/qualifying per m [{}]; flat within 3 stderr beyond m={first}: {flat}; {} paths; {t}",
            counts.join(", "),
            spec.n_paths
        ),
    )
}

fn eps_trend(spec: &LadderSpec) -> (bool, String) {
    let table = eps_convergence_study(spec, workers()).unwrap();
    let v = table.column("value").unwrap();
    let se = table.column("stderr").unwrap();
    let z = decrease_z_scores(&v, &se);
    let ok = strictly_decreasing(&v);
    let min_z = z.iter().copied().fold(f64::INFINITY, f64::min);
    (ok, format!("diffs {}, min decrease z {min_z:.2}", sci(&v)))
}

fn c7_eps_cauchy() -> Outcome {
    let t0 = Instant::now();
    let mut det = LadderSpec::default();
    det.base.noise.amplitude = 0.0;
    let (det_ok, det_msg) = eps_trend(&det);
    let sto = LadderSpec::default();
    let (sto_ok, sto_msg) = eps_trend(&sto);
    let (fast, t) = within(t0.elapsed().as_secs_f64(), 1200.0);
    outcome(
        det_ok && sto_ok && fast,
        format!("deterministic: {det_msg}; stochastic ({} paths): {sto_msg}; {t}", sto.n_paths),
    )
}

fn c8_stability() -> Outcome {
    let t0 = Instant::now();
    let spec = LadderSpec {
        n_paths: 100,
        mass: 1.0,
        ..LadderSpec::default()
    };
    let table = stability_study(&spec, workers()).unwrap();
    let k = table.column("kappa").unwrap();
    let d = table.column("delta").unwrap();
    let at_001 = k.iter().position(|&k| k == 0.01).map(|i| d[i]).unwrap_or(f64::NAN);
    let ok = strictly_decreasing(&d) && at_001 <= 0.05;
    let (fast, t) = within(t0.elapsed().as_secs_f64(), 900.0);
    outcome(
        ok && fast,
        format!("delta at kappa {k:?} = {}; delta(0.01) {at_001:.4e} (<= 0.05); {t}", sci(&d)),
    )
}

fn c9_tail() -> Outcome {
    let t0 = Instant::now();
    let cfg = EnsembleConfig {
        base: PathConfig {
            store_series: false,
            ..PathConfig::default()
        },
        n_paths: 1000,
        functional: Functional::X2Norm,
        ..EnsembleConfig::default()
    };
    let res = run_ensemble(&cfg, workers()).unwrap();
    let samples: Vec<f64> = res.entries.iter().filter(|e| !e.aborted()).map(|e| e.record.x2_fifth).collect();
    let ks = resolved_k_grid(&samples, 12, 10).unwrap();
    let tail = tail_from_samples(&samples, &ks).unwrap();
    let pts: Vec<(f64, f64)> = tail.iter().map(|p| (p.k.ln(), p.survival.ln())).collect();
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let monotone = tail.windows(2).all(|w| w[1].survival < w[0].survival);
    // piecewise-linear log-log curve is convex iff its slopes never decrease
    let convex = slopes.windows(2).all(|w| w[1] >= w[0]);
    let (fast, t) = within(t0.elapsed().as_secs_f64(), 1800.0);
    outcome(
        monotone && convex && fast,
        format!(
            "K in [{:.4}, {:.4}], survival {:.3} -> {:.3}; monotone {monotone}; convex {convex}; \
             log-log slopes {slopes:.2?}; {} paths; {t}",
            ks[0],
            ks[ks.len() - 1],
            tail[0].survival,
            tail[tail.len() - 1].survival,
            samples.len()
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("snls").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err))
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != ensemble::MANIFEST_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c10_reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    let runs: [(&str, Vec<&str>); 2] = [
        ("simulate", vec!["simulate", "--paths", "16", "--seed", "7"]),
        ("ladder", vec!["ladder", "stability", "--paths", "8"]),
    ];
    for (name, base) in runs {
        let mut outputs = Vec::new();
        for w in ["1", "4", "16"] {
            let dir = tmp.path().join(format!("{name}-{w}"));
            let mut args = base.clone();
            let d = dir.to_str().unwrap();
            args.extend(["--workers", w, "--out", d]);
            let (code, text) = run_cli(&args);
            if code != 0 {
                return outcome(false, format!("{name} with {w} workers exited {code}: {text}"));
            }
            outputs.push(data_files(&dir));
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        let dir = tmp.path().join(format!("{name}-4"));
        let (code, text) = run_cli(&["replay", dir.to_str().unwrap(), "--workers", "16"]);
        ok &= code == 0;
        let files: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
        notes.push(format!(
            "{name}: {files:?} identical across 1/4/16 workers: {same}, replay exit {code} ({})",
            text.trim().replace('\n', ", ")
        ));
    }
    outcome(ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1", "pathwise mass conservation", c1_mass),
        ("C2", "free propagator unitarity and group law", c2_unitarity),
        ("C3", "dispersive decay", c3_dispersion),
        ("C4", "soliton regression", c4_soliton),
        ("C5", "Ito/Stratonovich weak consistency", c5_weak_order),
        ("C6", "truncation inertness and m-agreement", c6_m_agreement),
        ("C7", "eps-Cauchy trend", c7_eps_cauchy),
        ("C8", "stability trend", c8_stability),
        ("C9", "tail decay", c9_tail),
        ("C10", "reproducibility", c10_reproducibility),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o.eq_ignore_ascii_case(id)) {
            continue;
        }
        let t0 = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "{} {id:<3} {name} [{:.1}s]: {}",
            if r.passed { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            r.detail
        );
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
