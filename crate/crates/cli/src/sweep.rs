//! ε sweeps: replicas on pre-derived streams, aggregated per ε, with the
//! analytic bounds attached to each row.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use filterstab_core::bounds::{
    bsc_lower_bound_curve, coarse_upper_bound_d2, lemma2_exact_d2, theorem1_exact_d2, theorem1_upper_bound,
};
use filterstab_core::estimators::{estimate_entropy_rate, estimate_gamma_decomposition, estimate_misclassification};
use filterstab_core::sim::RNG_ALGORITHM;
use filterstab_core::{AssumptionReport, HmmSpec, NoiseModel, RateEstimate};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::plotdata::emit_plotdata;

/// CSV header, in output order.
pub const CSV_COLUMNS: [&str; 18] = [
    "eps",
    "gamma_hat",
    "gamma_stderr",
    "lambda1_hat",
    "lambda1_stderr",
    "wedge_rate_hat",
    "wedge_rate_stderr",
    "entropy_rate_hat",
    "theorem1_bound",
    "d2_exact_limit",
    "lemma2_exact_d2",
    "coarse_d2_bound",
    "ex_eq_lower",
    "misclassification_hat",
    "misclassification_stderr",
    "n",
    "seed",
    "error",
];

/// One ε of a sweep, replicas aggregated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub gamma_hat: Option<f64>,
    pub gamma_stderr: Option<f64>,
    pub lambda1_hat: Option<f64>,
    pub lambda1_stderr: Option<f64>,
    pub wedge_rate_hat: Option<f64>,
    pub wedge_rate_stderr: Option<f64>,
    /// Discrete noise only.
    pub entropy_rate_hat: Option<f64>,
    pub theorem1_bound: Option<f64>,
    pub d2_exact_limit: Option<f64>,
    pub lemma2_exact_d2: Option<f64>,
    pub coarse_d2_bound: Option<f64>,
    /// Binary symmetric channel only.
    pub ex_eq_lower: Option<f64>,
    /// `d = 2` only: time average of the posterior misclassification.
    pub misclassification_hat: Option<f64>,
    pub misclassification_stderr: Option<f64>,
    /// Steps per replica, burn-in included.
    pub n: u64,
    /// Base seed; replica streams are listed in the manifest.
    pub seed: u64,
    pub error: Option<String>,
}

impl SweepRow {
    /// Accessors for every optional numeric column, by CSV name.
    pub fn series() -> [(&'static str, fn(&SweepRow) -> Option<f64>); 14] {
        [
            ("gamma_hat", |r| r.gamma_hat),
            ("gamma_stderr", |r| r.gamma_stderr),
            ("lambda1_hat", |r| r.lambda1_hat),
            ("lambda1_stderr", |r| r.lambda1_stderr),
            ("wedge_rate_hat", |r| r.wedge_rate_hat),
            ("wedge_rate_stderr", |r| r.wedge_rate_stderr),
            ("entropy_rate_hat", |r| r.entropy_rate_hat),
            ("theorem1_bound", |r| r.theorem1_bound),
            ("d2_exact_limit", |r| r.d2_exact_limit),
            ("lemma2_exact_d2", |r| r.lemma2_exact_d2),
            ("coarse_d2_bound", |r| r.coarse_d2_bound),
            ("ex_eq_lower", |r| r.ex_eq_lower),
            ("misclassification_hat", |r| r.misclassification_hat),
            ("misclassification_stderr", |r| r.misclassification_stderr),
        ]
    }
}

/// Execution knobs that do not change results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub override_assumptions: bool,
}

/// Stream index of replica `r` at grid position `eps_index`.
pub fn replica_stream(eps_index: usize, r: usize) -> u64 {
    ((eps_index as u64) << 20) | r as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowProvenance {
    pub eps: f64,
    pub replica_streams: Vec<u64>,
    pub n: u64,
    pub burn_in: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub provenance: Vec<RowProvenance>,
    pub assumptions: AssumptionReport,
}

impl SweepOutcome {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

struct ReplicaResult {
    gamma: RateEstimate,
    lambda1: RateEstimate,
    wedge: RateEstimate,
    entropy: Option<RateEstimate>,
    misclassification: Option<RateEstimate>,
}

fn run_replica(spec: &HmmSpec, cfg: &ExperimentConfig, eps_index: usize, r: usize) -> Result<ReplicaResult, String> {
    let est = cfg.estimator_config(spec.dim(), spec.eps(), replica_stream(eps_index, r)).map_err(|e| e.to_string())?;
    let dec = estimate_gamma_decomposition(spec, &est).map_err(|e| e.to_string())?;
    let entropy = match spec.noise() {
        NoiseModel::Discrete(_) if cfg.run.entropy_rate => Some(estimate_entropy_rate(spec, &est).map_err(|e| e.to_string())?),
        _ => None,
    };
    let misclassification = if spec.dim() == 2 && cfg.run.misclassification {
        Some(estimate_misclassification(spec, &est).map_err(|e| e.to_string())?.posterior)
    } else {
        None
    };
    Ok(ReplicaResult { gamma: dec.gamma, lambda1: dec.rho, wedge: dec.wedge, entropy, misclassification })
}

/// Inverse-variance weighted mean and its stderr. Exact (zero-stderr)
/// replicas, if any, take all the weight.
pub fn combine(estimates: &[RateEstimate]) -> (f64, f64) {
    let exact: Vec<f64> = estimates.iter().filter(|e| e.stderr == 0.0).map(|e| e.value).collect();
    if !exact.is_empty() {
        return (exact.iter().sum::<f64>() / exact.len() as f64, 0.0);
    }
    let (mut wsum, mut vsum) = (0.0, 0.0);
    for e in estimates {
        let w = 1.0 / (e.stderr * e.stderr);
        wsum += w;
        vsum += w * e.value;
    }
    (vsum / wsum, 1.0 / wsum.sqrt())
}

fn bound_columns(row: &mut SweepRow, spec: &HmmSpec) {
    row.theorem1_bound = theorem1_upper_bound(spec).ok();
    if spec.dim() == 2 {
        row.d2_exact_limit = theorem1_exact_d2(spec).ok();
        row.lemma2_exact_d2 = lemma2_exact_d2(spec, spec.eps()).ok();
    }
    row.coarse_d2_bound = spec.symmetric_d2_lambda().and_then(|l| coarse_upper_bound_d2(spec.eps(), l).ok());
    row.ex_eq_lower = spec.as_bsc().and_then(|b| bsc_lower_bound_curve(b.p, b.lambda, spec.eps()).ok());
}

fn describe(report: &AssumptionReport) -> String {
    let mut failed = Vec::new();
    if !report.a1_bounded {
        failed.push("densities unbounded");
    }
    if !report.a2_common_support {
        failed.push("supports differ");
    }
    if !report.a3_finite_cross_entropies {
        failed.push("cross-entropy diverges");
    }
    let pairs: Vec<String> = report.witnesses.iter().map(|(i, j)| format!("({i},{j})")).collect();
    format!("{}; state pairs {}", failed.join(", "), pairs.join(" "))
}

/// The noise-assumption check, failing unless `override_assumptions`.
pub fn check_assumptions(spec: &HmmSpec, override_assumptions: bool) -> Result<AssumptionReport, CliError> {
    let report = spec.noise().validate_assumptions();
    if !report.admissible() {
        if !override_assumptions {
            return Err(CliError::Assumptions(describe(&report)));
        }
        eprintln!("warning: continuing despite assumption violations: {}", describe(&report));
    }
    Ok(report)
}

/// Runs every (ε, replica) pair and assembles one row per ε. Estimator
/// failures are recorded on their row; the sweep itself only fails on
/// configuration problems.
pub fn run_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let base = cfg.base_spec()?;
    let assumptions = check_assumptions(&base, opts.override_assumptions)?;
    let eps = cfg.eps_values()?;
    let specs = eps.iter().map(|&e| base.with_eps(e)).collect::<Result<Vec<_>, _>>()?;
    let replicas = cfg.estimator.replicas;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..eps.len()).flat_map(|i| (0..replicas).map(move |r| (i, r))).collect();
    let results: Vec<Result<ReplicaResult, String>> =
        pool.install(|| jobs.par_iter().map(|&(i, r)| run_replica(&specs[i], cfg, i, r)).collect());

    let mut rows = Vec::with_capacity(eps.len());
    let mut provenance = Vec::with_capacity(eps.len());
    for (i, spec) in specs.iter().enumerate() {
        let est = cfg.estimator_config(spec.dim(), spec.eps(), 0)?;
        let mut row = SweepRow {
            eps: spec.eps(),
            gamma_hat: None,
            gamma_stderr: None,
            lambda1_hat: None,
            lambda1_stderr: None,
            wedge_rate_hat: None,
            wedge_rate_stderr: None,
            entropy_rate_hat: None,
            theorem1_bound: None,
            d2_exact_limit: None,
            lemma2_exact_d2: None,
            coarse_d2_bound: None,
            ex_eq_lower: None,
            misclassification_hat: None,
            misclassification_stderr: None,
            n: est.n,
            seed: cfg.estimator.seed,
            error: None,
        };
        bound_columns(&mut row, spec);
        let slice = &results[i * replicas..(i + 1) * replicas];
        match slice.iter().map(Result::as_ref).collect::<Result<Vec<_>, _>>() {
            Ok(reps) => {
                let pick = |f: fn(&ReplicaResult) -> Option<RateEstimate>| -> Option<(f64, f64)> {
                    let v: Option<Vec<RateEstimate>> = reps.iter().map(|&r| f(r)).collect();
                    v.map(|v| combine(&v))
                };
                let gamma = pick(|r| Some(r.gamma));
                let lambda1 = pick(|r| Some(r.lambda1));
                let wedge = pick(|r| Some(r.wedge));
                (row.gamma_hat, row.gamma_stderr) = (gamma.map(|g| g.0), gamma.map(|g| g.1));
                (row.lambda1_hat, row.lambda1_stderr) = (lambda1.map(|g| g.0), lambda1.map(|g| g.1));
                (row.wedge_rate_hat, row.wedge_rate_stderr) = (wedge.map(|g| g.0), wedge.map(|g| g.1));
                row.entropy_rate_hat = pick(|r| r.entropy).map(|g| g.0);
                let mis = pick(|r| r.misclassification);
                (row.misclassification_hat, row.misclassification_stderr) = (mis.map(|g| g.0), mis.map(|g| g.1));
            }
            Err(e) => row.error = Some(e.to_owned()),
        }
        provenance.push(RowProvenance {
            eps: row.eps,
            replica_streams: (0..replicas).map(|r| replica_stream(i, r)).collect(),
            n: est.n,
            burn_in: est.burn_in,
            error: row.error.clone(),
        });
        rows.push(row);
    }
    Ok(SweepOutcome { rows, provenance, assumptions })
}

/// Shortest round-trip decimal form; empty for an absent value.
pub fn format_float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for row in rows {
        let mut fields = vec![format_float(Some(row.eps))];
        fields.extend(SweepRow::series().iter().map(|(_, f)| format_float(f(row))));
        fields.push(row.n.to_string());
        fields.push(row.seed.to_string());
        fields.push(row.error.as_deref().map(quote).unwrap_or_default());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AssumptionSummary {
    a1_bounded: bool,
    a2_common_support: bool,
    a3_finite_cross_entropies: bool,
    witnesses: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    rng: &'static str,
    created_unix_s: u64,
    base_seed: u64,
    workers: usize,
    override_assumptions: bool,
    config: &'a ExperimentConfig,
    assumptions: AssumptionSummary,
    rows: &'a [RowProvenance],
    artifacts: Vec<String>,
}

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub plotdata: PathBuf,
    pub manifest: PathBuf,
}

/// Writes the CSV, plot data and manifest under `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, outcome: &SweepOutcome, opts: RunOptions, dir: &Path) -> Result<OutputPaths, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let paths = OutputPaths {
        csv: dir.join(&cfg.output.csv),
        plotdata: dir.join(&cfg.output.plotdata),
        manifest: dir.join(&cfg.output.manifest),
    };
    let mut buf = Vec::new();
    write_csv(&outcome.rows, &mut buf).map_err(CliError::io(&paths.csv))?;
    std::fs::write(&paths.csv, buf).map_err(CliError::io(&paths.csv))?;
    emit_plotdata(&outcome.rows, &paths.plotdata)?;

    let a = &outcome.assumptions;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        rng: RNG_ALGORITHM,
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        base_seed: cfg.estimator.seed,
        workers: opts.workers,
        override_assumptions: opts.override_assumptions,
        config: cfg,
        assumptions: AssumptionSummary {
            a1_bounded: a.a1_bounded,
            a2_common_support: a.a2_common_support,
            a3_finite_cross_entropies: a.a3_finite_cross_entropies,
            witnesses: a.witnesses.clone(),
        },
        rows: &outcome.provenance,
        artifacts: vec![cfg.output.csv.clone(), cfg.output.plotdata.clone()],
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&paths.manifest, json + "\n").map_err(CliError::io(&paths.manifest))?;
    Ok(paths)
}
