//! Driver for the `sdm` binary: impedance cache, frequency sweeps, the one
//! point source study, mesh export and cache inspection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sdm_core::cloning::{exterior_impedance_detailed, CloningConfig, ImpedanceDetail, ImpedanceMatrix};
use sdm_core::mesh::{circle_loop, save_mesh, BoundaryLoop, Point2};
use sdm_core::sdm::frequency_sweep;
use sdm_core::validate::{analytic_circle_impedance, ops_test};
use sdm_core::{Error, FrequencyPoint, Medium};
use serde::Serialize;

use crate::cache::{CacheKey, ImpedanceCache};
use crate::config::{MediumSpec, RunConfig};

/// Version tag of every JSON report.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Some frequencies failed; outputs were still written.
    #[error("partial failure: {0}")]
    Partial(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Partial(_) => 4,
        }
    }
}

/// Command-line overrides shared by all subcommands.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub gamma: Option<Vec<f64>>,
}

impl Overrides {
    /// Applies the overrides to `cfg`; a single gamma also replaces `cloning.g`.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(c) = &self.cache {
            cfg.paths.cache = Some(c.clone());
        }
        if let Some(o) = &self.out {
            cfg.paths.output = Some(o.clone());
        }
        if let Some(gs) = &self.gamma {
            if gs.is_empty() {
                return Err(CliError::Config("--gamma: empty list".into()));
            }
            cfg.ops.gammas = gs.clone();
            if gs.len() == 1 {
                cfg.cloning.g = gs[0];
            }
        }
        cfg.validate()
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ImpedanceStats {
    pub requested: usize,
    pub cache_hits: usize,
    pub cloning_solves: usize,
    pub retries: usize,
    pub failed: usize,
    /// Largest tail residual and spectral radius over this run's solves.
    pub worst_residual: Option<f64>,
    pub worst_spectral_radius: Option<f64>,
}

/// One entry per frequency: the admittance or the failure message.
pub type Impedances = Vec<Result<ImpedanceMatrix, String>>;

fn run_pool<T: Send, F: Fn(usize) -> T + Sync + Send>(threads: usize, n: usize, f: F) -> Result<Vec<T>, CliError> {
    if threads <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Cloning solve; a near-singular failure is retried once with ten times
/// the dissipation.
pub fn cloning_with_retry(
    lp: &BoundaryLoop,
    cfg: &CloningConfig,
    f: f64,
    medium: &Medium,
) -> (Result<ImpedanceDetail, Error>, Option<f64>) {
    let attempt = |eta: f64| exterior_impedance_detailed(lp, &CloningConfig { eta, ..*cfg }, FrequencyPoint::new(f, eta)?, medium);
    match attempt(cfg.eta) {
        Err(e) if e.is_singular() => {
            let eta = if cfg.eta > 0.0 { cfg.eta * 10.0 } else { 1e-6 };
            (attempt(eta), Some(eta))
        }
        other => (other, None),
    }
}

/// Admittances of `lp` at `freqs`, from the cache where possible. New
/// results and failures are written back through a single writer.
pub fn gather_impedances(
    lp: &BoundaryLoop,
    cloning: &CloningConfig,
    medium: &Medium,
    freqs: &[f64],
    mut cache: Option<&mut ImpedanceCache>,
    threads: usize,
    log: &mut dyn Write,
) -> Result<(Impedances, ImpedanceStats), CliError> {
    let fp = lp.fingerprint();
    let keys: Vec<CacheKey> = freqs.iter().map(|&f| CacheKey::new(&fp, cloning, medium, f)).collect();
    let mut out: Vec<Option<Result<ImpedanceMatrix, String>>> = vec![None; freqs.len()];
    let mut stats = ImpedanceStats { requested: freqs.len(), ..Default::default() };
    if let Some(c) = cache.as_deref() {
        for (i, key) in keys.iter().enumerate() {
            match c.lookup(key) {
                Ok(Some(d)) => {
                    out[i] = Some(Ok(ImpedanceMatrix { d, f: freqs[i], fingerprint: fp.clone() }));
                    stats.cache_hits += 1;
                }
                Ok(None) => {}
                Err(e) => {
                    let _ = writeln!(log, "warning: f = {} Hz: {e}; recomputing", freqs[i]);
                }
            }
        }
    }
    let todo: Vec<usize> = (0..freqs.len()).filter(|&i| out[i].is_none()).collect();
    let solved = run_pool(threads, todo.len(), |t| {
        let i = todo[t];
        let start = Instant::now();
        let (res, retry) = cloning_with_retry(lp, cloning, freqs[i], medium);
        (i, res, retry, start.elapsed())
    })?;
    stats.cloning_solves = solved.len();
    for (i, res, retry, elapsed) in solved {
        let f = freqs[i];
        if retry.is_some() {
            stats.retries += 1;
        }
        match res {
            Ok(det) => {
                let diag = &det.tail.diagnostics;
                stats.worst_residual = Some(stats.worst_residual.map_or(diag.residual, |w| w.max(diag.residual)));
                stats.worst_spectral_radius =
                    Some(stats.worst_spectral_radius.map_or(diag.spectral_radius, |w| w.max(diag.spectral_radius)));
                let _ = writeln!(
                    log,
                    "f = {f} Hz: solved in {:.3} s, ladder steps {}, tail residual {:.3e}, spectral radius {:.6}{}",
                    elapsed.as_secs_f64(),
                    det.ladder_steps,
                    diag.residual,
                    diag.spectral_radius,
                    retry.map_or(String::new(), |eta| format!(", retried with eta = {eta:e}")),
                );
                if let Some(c) = cache.as_deref_mut() {
                    c.insert(keys[i].clone(), &det.impedance.d, retry)?;
                }
                out[i] = Some(Ok(det.impedance));
            }
            Err(e) => {
                stats.failed += 1;
                let msg = e.to_string();
                let _ = writeln!(log, "f = {f} Hz: failed: {msg}");
                if let Some(c) = cache.as_deref_mut() {
                    c.record_failure(keys[i].clone(), msg.clone());
                }
                out[i] = Some(Err(msg));
            }
        }
    }
    if let Some(c) = cache.as_deref() {
        if stats.cloning_solves > 0 {
            c.save()?;
        }
    }
    let _ = writeln!(
        log,
        "impedances: {} requested, {} cache hits, {} cloning solves, {} retries, {} failed",
        stats.requested, stats.cache_hits, stats.cloning_solves, stats.retries, stats.failed
    );
    Ok((out.into_iter().map(|o| o.expect("every frequency handled")).collect(), stats))
}

fn open_cache(cfg: &RunConfig) -> Result<Option<ImpedanceCache>, CliError> {
    cfg.paths.cache.as_deref().map(|p| ImpedanceCache::open(p, cfg.paths.cache_format)).transpose()
}

/// `impedance`: fill the cache for every configured frequency.
pub fn cmd_impedance(cfg: &RunConfig, threads: usize, log: &mut dyn Write) -> Result<ImpedanceStats, CliError> {
    let Some(mut cache) = open_cache(cfg)? else {
        return Err(CliError::Config("paths.cache (or --cache) is required for 'impedance'".into()));
    };
    let lp = cfg.bounding_loop()?;
    let (_, stats) =
        gather_impedances(&lp, &cfg.cloning.to_config(), &cfg.medium(), &cfg.frequency_list(), Some(&mut cache), threads, log)?;
    if stats.failed == stats.requested {
        return Err(CliError::Numerical("every frequency failed".into()));
    }
    if stats.failed > 0 {
        return Err(CliError::Partial(format!("{} of {} frequencies failed", stats.failed, stats.requested)));
    }
    Ok(stats)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub csv: String,
    pub stats: ImpedanceStats,
    pub rows: usize,
    pub failed_rows: usize,
    /// `(frequency, message)` of each failed frequency.
    pub failures: Vec<(f64, String)>,
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    version: u32,
    medium: MediumSpec,
    impedances: &'a ImpedanceStats,
    rows: usize,
    failed_rows: usize,
    failures: Vec<FailureRow<'a>>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct FailureRow<'a> {
    freq_hz: f64,
    error: &'a str,
}

/// `sweep`: probe pressures over the configured frequencies, CSV output.
pub fn cmd_sweep(cfg: &RunConfig, threads: usize, log: &mut dyn Write) -> Result<SweepOutcome, CliError> {
    let prob = cfg.radiation_problem()?;
    let exc = cfg.excitation(&prob.structure)?;
    let probes = cfg.probe_points(&prob.structure);
    let freqs = cfg.frequency_list();
    let mut cache = open_cache(cfg)?;
    let (imps, stats) =
        gather_impedances(&prob.bounding, &cfg.cloning.to_config(), &cfg.medium(), &freqs, cache.as_mut(), threads, log)?;
    let provider = |f: f64| -> sdm_core::Result<ImpedanceMatrix> {
        let i = freqs.iter().position(|&x| x == f).expect("sweep frequencies come from the same list");
        imps[i].clone().map_err(|msg| Error::Invariant(format!("no bounding impedance: {msg}")))
    };
    let result = frequency_sweep(&prob, &exc, &freqs, &probes, &provider, threads).map_err(|e| match e {
        Error::ProbeOutside { .. } => CliError::Config(format!("probes: {e}")),
        e => CliError::Numerical(e.to_string()),
    })?;
    let rows = result.rows();
    let failures: Vec<(f64, String)> = result
        .points
        .iter()
        .filter_map(|p| p.outcome.as_ref().err().map(|e| (p.f, e.to_string())))
        .collect();
    for (f, e) in &failures {
        let _ = writeln!(log, "f = {f} Hz: row error: {e}");
    }
    let csv = output::sweep_csv(&rows);
    let failed_rows = rows.iter().filter(|r| r.value.is_err()).count();
    let outcome = SweepOutcome { csv, stats, rows: rows.len(), failed_rows, failures };
    if let Some(path) = &cfg.paths.output {
        write_file(path, outcome.csv.as_bytes())?;
        let meta = SweepMeta {
            version: REPORT_VERSION,
            medium: cfg.medium,
            impedances: &outcome.stats,
            rows: outcome.rows,
            failed_rows: outcome.failed_rows,
            failures: outcome.failures.iter().map(|(f, e)| FailureRow { freq_hz: *f, error: e }).collect(),
            config: cfg,
        };
        let meta_path = meta_path(path);
        write_file(&meta_path, serde_json::to_string_pretty(&meta).expect("serializable").as_bytes())?;
    }
    Ok(outcome)
}

/// `<out>.meta.json` next to a sweep CSV.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize)]
pub struct OpsEntry {
    pub gamma: f64,
    pub error: Option<f64>,
    pub ladder_steps: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpsReport {
    pub version: u32,
    pub medium: MediumSpec,
    pub radius: f64,
    pub n_nodes: usize,
    pub frequency_hz: f64,
    pub source: [f64; 2],
    pub baseline_error: f64,
    pub entries: Vec<OpsEntry>,
    /// `None` when fewer than two gammas succeeded.
    pub monotone: Option<bool>,
    pub note: Option<String>,
}

/// `ops-test`: one point source error for each gamma plus the analytic
/// baseline. See [`OpsReport::status`] for the exit condition.
pub fn cmd_ops_test(cfg: &RunConfig, threads: usize, log: &mut dyn Write) -> Result<OpsReport, CliError> {
    let o = &cfg.ops;
    let medium = cfg.medium();
    let lp = circle_loop(o.radius, o.n_nodes).map_err(|e| CliError::Config(format!("ops: {e}")))?;
    let x0 = Point2::new(o.source[0], o.source[1]);
    if !lp.contains(x0) {
        return Err(CliError::Config("ops.source: must lie strictly inside the circle".into()));
    }
    let fp = FrequencyPoint::lossless(o.frequency).map_err(|e| CliError::Config(format!("ops.frequency: {e}")))?;
    let num = |e: Error| CliError::Numerical(e.to_string());
    let baseline = analytic_circle_impedance(&lp, fp.f, &medium).map_err(num)?;
    let baseline_error = ops_test(&baseline, &lp, x0, fp, &medium).map_err(num)?;
    let _ = writeln!(log, "analytic operator: error {baseline_error:.6e}");
    let entries = run_pool(threads, o.gammas.len(), |i| {
        let gamma = o.gammas[i];
        let cloning = CloningConfig { g: gamma, ..cfg.cloning.to_config() };
        let (res, _) = cloning_with_retry(&lp, &cloning, fp.f, &medium);
        match res.and_then(|det| Ok((ops_test(&det.impedance, &lp, x0, fp, &medium)?, det.ladder_steps))) {
            Ok((error, steps)) => OpsEntry { gamma, error: Some(error), ladder_steps: Some(steps), failure: None },
            Err(e) => OpsEntry { gamma, error: None, ladder_steps: None, failure: Some(e.to_string()) },
        }
    })?;
    for e in &entries {
        match (e.error, &e.failure) {
            (Some(err), _) => {
                let _ = writeln!(log, "gamma = {}: error {err:.6e}", e.gamma);
            }
            (None, Some(f)) => {
                let _ = writeln!(log, "gamma = {}: failed: {f}", e.gamma);
            }
            _ => {}
        }
    }
    let mut ok: Vec<(f64, f64)> = entries.iter().filter_map(|e| e.error.map(|x| (e.gamma, x))).collect();
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (monotone, note) = if ok.len() < 2 {
        (None, Some("fewer than two gammas: monotonicity check skipped".to_string()))
    } else {
        (Some(ok.windows(2).all(|w| w[0].1 < w[1].1)), None)
    };
    let report = OpsReport {
        version: REPORT_VERSION,
        medium: cfg.medium,
        radius: o.radius,
        n_nodes: o.n_nodes,
        frequency_hz: o.frequency,
        source: o.source,
        baseline_error,
        entries,
        monotone,
        note,
    };
    if let Some(path) = &cfg.paths.output {
        write_file(path, serde_json::to_string_pretty(&report).expect("serializable").as_bytes())?;
    }
    Ok(report)
}

impl OpsReport {
    /// Exit status of a finished study: a non-monotone trend or a failed
    /// gamma is an error even though the report was produced.
    pub fn status(&self) -> Result<(), CliError> {
        if self.entries.iter().all(|e| e.error.is_none()) {
            return Err(CliError::Numerical("every gamma failed".into()));
        }
        if self.monotone == Some(false) {
            return Err(CliError::Numerical("errors do not increase with gamma".into()));
        }
        if self.entries.iter().any(|e| e.error.is_none()) {
            return Err(CliError::Partial("some gammas failed".into()));
        }
        Ok(())
    }
}

/// `mesh`: write the region mesh.
pub fn cmd_mesh(cfg: &RunConfig, log: &mut dyn Write) -> Result<PathBuf, CliError> {
    let Some(path) = cfg.paths.output.clone() else {
        return Err(CliError::Config("paths.output (or --out) is required for 'mesh'".into()));
    };
    let prob = cfg.radiation_problem()?;
    save_mesh(&prob.region, &path).map_err(|e| CliError::Io(e.to_string()))?;
    let _ = writeln!(
        log,
        "region mesh: {} nodes, {} triangles, area {:.6} m^2 -> {}",
        prob.region.nodes.len(),
        prob.region.elements.len(),
        prob.region.area(),
        path.display()
    );
    Ok(path)
}

/// `inspect`: human-readable manifest summary.
pub fn cmd_inspect(cfg: &RunConfig) -> Result<String, CliError> {
    let Some(dir) = &cfg.paths.cache else {
        return Err(CliError::Config("paths.cache (or --cache) is required for 'inspect'".into()));
    };
    let cache = ImpedanceCache::open_existing(dir)?;
    let m = &cache.manifest;
    let mut s = format!(
        "cache {} (version {}, {:?} format): {} entries, {} failures\n",
        dir.display(),
        m.version,
        m.format,
        m.entries.len(),
        m.failures.len()
    );
    let mut entries: Vec<_> = m.entries.iter().collect();
    entries.sort_by(|a, b| a.key.freq_hz.total_cmp(&b.key.freq_hz));
    for e in entries {
        let k = &e.key;
        s.push_str(&format!(
            "  f = {} Hz  n = {}  loop {}  g = {}  eta = {:e}  layers = {}  file {}{}\n",
            k.freq_hz,
            e.n,
            k.loop_hash,
            k.g,
            k.eta,
            k.n_layers,
            e.file,
            e.retried_eta.map_or(String::new(), |x| format!("  (retried, eta = {x:e})"))
        ));
    }
    for f in &m.failures {
        s.push_str(&format!("  f = {} Hz  FAILED: {}\n", f.key.freq_hz, f.reason));
    }
    Ok(s)
}
