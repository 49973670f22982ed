//! Experiment execution: integrate, checkpoint, analyze and emit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use solitonlab::diagnostics::{DiagnosticsRecord, Verdict};
use solitonlab::flow::{extend, start, Trajectory};

use crate::analysis::{analyze_run, experiment_reports, identity_refinement, ReportEntry, RunAnalysis};
use crate::config::{ExperimentConfig, ExperimentKind, RunSpec};
use crate::error::{io_err, LabError, Result};
use crate::plot::{line_plot, save, Series};
use crate::store::{fmt17, load_trajectory, snapshot_files, write_csv, write_json, write_snapshot};

pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub quiet: bool,
    /// Stop every run once it holds this many records, as if killed.
    pub stop_after: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Interrupted,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub records: usize,
    pub t_last: f64,
    pub abort: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub holds: usize,
    pub violated: usize,
    pub inconclusive: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: RunStatus,
    pub runs: Vec<RunSummary>,
    pub verdicts: BTreeMap<String, VerdictCounts>,
    pub files: Vec<FileEntry>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn say(opts: &RunOptions, msg: impl AsRef<str>) {
    if !opts.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

/// Continue a run from whatever snapshots its directory holds. Returns
/// `false` when stopped early by [`RunOptions::stop_after`].
fn integrate(dir: &Path, spec: &RunSpec, opts: &RunOptions) -> Result<(Trajectory, bool)> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut traj = if snapshot_files(dir)?.is_empty() {
        let t = start(&spec.initial, &spec.flow)?;
        write_snapshot(dir, &t, 0)?;
        t
    } else {
        load_trajectory(dir)?
    };
    while !traj.finished(&spec.flow) {
        if opts.stop_after.is_some_and(|n| traj.len() >= n) {
            return Ok((traj, false));
        }
        if let Err(e) = extend(&mut traj, &spec.flow) {
            traj.abort = Some(e.to_string());
            say(opts, format!("{}: aborted at t = {}: {e}", spec.label, traj.last_time()));
        }
        write_snapshot(dir, &traj, traj.len() - 1)?;
    }
    Ok((traj, true))
}

fn plots(dir: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let loge: Vec<f64> = records.iter().map(|r| r.e.log10()).collect();
    let n: Vec<f64> = records.iter().map(|r| r.n.unwrap_or(f64::NAN)).collect();
    let mu: Vec<f64> = records.iter().map(|r| r.mu).collect();
    for (file, title, ylabel, y) in [
        ("energy.svg", "energy", "log10 E", &loge),
        ("quotient.svg", "Dirichlet-Einstein quotient", "N", &n),
        ("entropy.svg", "entropy", "mu", &mu),
    ] {
        let doc = line_plot(title, "t", ylabel, &[Series { label: ylabel, x: &t, y }]);
        save(&dir.join(file), &doc)?;
    }
    Ok(())
}

/// Write the table, reports and plots of one run.
pub fn emit_outputs(dir: &Path, analysis: &RunAnalysis) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(&dir.join(TRAJECTORY_FILE), &analysis.records)?;
    if let Some(u) = &analysis.unweighted {
        write_csv(&dir.join("trajectory_unweighted.csv"), u)?;
    }
    write_json(&dir.join(REPORT_FILE), &analysis.reports)?;
    plots(dir, &analysis.records)
}

fn inventory(root: &Path) -> Result<Vec<FileEntry>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for e in fs::read_dir(dir).map_err(io_err(dir))? {
            let p = e.map_err(io_err(dir))?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    walk(root, &mut paths)?;
    paths.sort();
    paths
        .into_iter()
        .filter(|p| p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .map(|p| {
            let bytes = fs::read(&p).map_err(io_err(&p))?;
            let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
            Ok(FileEntry {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect()
}

fn tally(reports: &[ReportEntry]) -> BTreeMap<String, VerdictCounts> {
    let mut m: BTreeMap<String, VerdictCounts> = BTreeMap::new();
    for r in reports {
        let c = m.entry(r.report.id.clone()).or_default();
        match r.report.verdict {
            Verdict::Holds => c.holds += 1,
            Verdict::Violated => c.violated += 1,
            Verdict::Inconclusive => c.inconclusive += 1,
        }
    }
    m
}

fn refinement_outputs(out: &Path, cfg: &ExperimentConfig) -> Result<Vec<ReportEntry>> {
    let (rows, rep) = identity_refinement(cfg)?;
    let ids: Vec<String> = rows[0].residuals.keys().cloned().collect();
    let path = out.join("identities.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["resolution".to_string(), "h".to_string()];
    header.extend(ids.iter().map(|id| format!("res_{id}")));
    w.write_record(&header)?;
    for r in &rows {
        let mut row = vec![r.resolution.to_string(), fmt17(r.h)];
        row.extend(ids.iter().map(|id| fmt17(r.residuals[id])));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(&path))?;
    let logh: Vec<f64> = rows.iter().map(|r| r.h.log10()).collect();
    let logs: Vec<Vec<f64>> = ids
        .iter()
        .map(|id| rows.iter().map(|r| r.residuals[id].log10()).collect())
        .collect();
    let series: Vec<Series> = ids
        .iter()
        .zip(&logs)
        .map(|(id, y)| Series { label: id, x: &logh, y })
        .collect();
    save(&out.join("refinement.svg"), &line_plot("identity residuals", "log10 h", "log10 residual", &series))?;
    Ok(vec![rep])
}

fn read_config(out: &Path) -> Result<ExperimentConfig> {
    let path = out.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut cfg = ExperimentConfig::from_text(&text)?;
    cfg.output_dir = Some(out.to_path_buf());
    Ok(cfg)
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let mut stored = cfg.clone();
    stored.output_dir = None;
    let path = out.join(CONFIG_FILE);
    fs::write(&path, stored.to_text()).map_err(io_err(&path))
}

fn execute(out: &Path, cfg: &ExperimentConfig, opts: &RunOptions, integrate_runs: bool) -> Result<RunManifest> {
    let started = now();
    cfg.validate()?;
    let specs = cfg.runs()?;
    let results: Vec<(Trajectory, bool)> = specs
        .par_iter()
        .map(|spec| {
            let dir = out.join(&spec.label);
            if integrate_runs {
                say(opts, format!("{}: integrating to t = {}", spec.label, spec.flow.t_end));
                integrate(&dir, spec, opts)
            } else {
                let traj = load_trajectory(&dir)?;
                let done = traj.finished(&spec.flow);
                Ok((traj, done))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<RunSummary> = specs
        .iter()
        .zip(&results)
        .map(|(s, (t, _))| RunSummary {
            label: s.label.clone(),
            records: t.len(),
            t_last: t.last_time(),
            abort: t.abort.clone(),
        })
        .collect();
    let complete = results.iter().all(|(_, done)| *done);
    let mut reports = Vec::new();
    if complete {
        let analyses = specs
            .par_iter()
            .zip(&results)
            .map(|(spec, (traj, _))| {
                say(opts, format!("{}: diagnostics on {} records", spec.label, traj.len()));
                let a = analyze_run(&spec.label, traj, cfg)?;
                emit_outputs(&out.join(&spec.label), &a)?;
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(RunAnalysis, &Trajectory)> = analyses.into_iter().zip(results.iter().map(|(t, _)| t)).collect();
        for (a, _) in &pairs {
            reports.extend(a.reports.iter().cloned());
        }
        reports.extend(experiment_reports(cfg, &pairs)?);
        if cfg.experiment == ExperimentKind::IdentityRefinement {
            reports.extend(refinement_outputs(out, cfg)?);
        }
        write_json(&out.join(REPORT_FILE), &reports)?;
    }
    let status = if !complete {
        RunStatus::Interrupted
    } else if runs.iter().any(|r| r.abort.is_some()) {
        RunStatus::Aborted
    } else {
        RunStatus::Complete
    };
    let manifest = RunManifest {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: now(),
        status,
        runs,
        verdicts: tally(&reports),
        files: inventory(out)?,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    say(opts, format!("{}: {:?}, {} reports", cfg.name, manifest.status, reports.len()));
    Ok(manifest)
}

/// Run an experiment into `out`. A directory holding the same config is
/// continued rather than restarted.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    if out.join(CONFIG_FILE).exists() {
        let existing = read_config(out)?;
        if existing.hash() != cfg.hash() {
            return Err(LabError::Invalid(format!(
                "{} already holds a different experiment ({})",
                out.display(),
                existing.name
            )));
        }
    } else {
        write_config(out, cfg)?;
    }
    execute(out, cfg, opts, true)
}

/// Continue an interrupted experiment from its last snapshots.
pub fn resume_experiment(out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let cfg = read_config(out)?;
    execute(out, &cfg, opts, true)
}

/// Recompute diagnostics and reports from stored trajectories.
pub fn report_experiment(out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let cfg = read_config(out)?;
    execute(out, &cfg, opts, false)
}

/// Cap rayon's worker count from `LAB_THREADS`, when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::Invalid(format!("LAB_THREADS must be a positive integer, got `{v}`")))?;
        if n > 0 {
            // Fails only when a global pool already exists, which keeps its size.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    Ok(())
}
