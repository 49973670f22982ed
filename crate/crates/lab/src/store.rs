//! On-disk formats: state snapshots, the trajectory table and JSON helpers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use solitonlab::arena::MetricState;
use solitonlab::diagnostics::{DiagnosticsRecord, RES_COMM, RES_DIVFV, RES_HEQ, RES_SEV};
use solitonlab::entropy::{s_sigma, EntropySolution};
use solitonlab::flow::{FlowKind, StepStats, Trajectory};
use solitonlab::Tensor;

use crate::error::{io_err, LabError, Result};

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 12] = [
    "t", "mu", "E", "F", "N", "sup_S", "sup_H", "sup_Rm", "res_divfv", "res_comm", "res_sev", "res_heq",
];

/// Entropy minimizer as stored next to its state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSnapshot {
    pub mu: f64,
    pub f: Vec<f64>,
    pub mfield: Vec<f64>,
    pub el_residual: f64,
    pub iterations: usize,
    pub floored: bool,
    pub multistart_spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub index: usize,
    pub t: f64,
    pub flow: FlowKind,
    pub state: MetricState,
    pub solver: SolverSnapshot,
    pub stats: StepStats,
    pub abort: Option<String>,
}

impl Snapshot {
    pub fn from_record(traj: &Trajectory, k: usize) -> Self {
        let sol = &traj.entropy[k];
        let last = k + 1 == traj.len();
        Snapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            index: k,
            t: traj.times[k],
            flow: traj.kind,
            state: traj.states[k].clone(),
            solver: SolverSnapshot {
                mu: sol.mu,
                f: sol.f.values().to_vec(),
                mfield: sol.mfield.values().to_vec(),
                el_residual: sol.el_residual,
                iterations: sol.iterations,
                floored: sol.floored,
                multistart_spread: sol.multistart_spread,
            },
            stats: if last { traj.stats.clone() } else { StepStats::default() },
            abort: if last { traj.abort.clone() } else { None },
        }
    }

    /// Rebuild the entropy solution; `S` is recomputed from `f`, which
    /// reproduces the solver's own evaluation exactly.
    pub fn entropy(&self) -> Result<EntropySolution> {
        let geo = self.state.geometry()?;
        let f = Tensor::scalar(geo.layout, self.solver.f.clone());
        let s = s_sigma(&geo, &f)?;
        Ok(EntropySolution {
            mu: self.solver.mu,
            s,
            mfield: Tensor::scalar(geo.layout, self.solver.mfield.clone()),
            f,
            el_residual: self.solver.el_residual,
            iterations: self.solver.iterations,
            floored: self.solver.floored,
            multistart_spread: self.solver.multistart_spread,
        })
    }
}

pub fn snapshot_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("state_{k:05}.json"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_snapshot(dir: &Path, traj: &Trajectory, k: usize) -> Result<()> {
    write_json(&snapshot_path(dir, k), &Snapshot::from_record(traj, k))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let v: Version = read_json(path)?;
    if v.schema_version != SNAPSHOT_SCHEMA_VERSION {
        return Err(LabError::SchemaVersion {
            path: path.to_path_buf(),
            found: v.schema_version,
            expected: SNAPSHOT_SCHEMA_VERSION,
        });
    }
    read_json(path)
}

/// Snapshot files of a run directory in record order.
pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("state_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Trajectory rebuilt from a run directory's snapshots.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let files = snapshot_files(dir)?;
    let snaps = files.iter().map(|p| read_snapshot(p)).collect::<Result<Vec<_>>>()?;
    let first = snaps
        .first()
        .ok_or_else(|| LabError::Invalid(format!("{}: no snapshots", dir.display())))?;
    for (k, s) in snaps.iter().enumerate() {
        if s.index != k {
            return Err(LabError::Invalid(format!("{}: snapshot {k} is missing", dir.display())));
        }
    }
    let mut traj = Trajectory {
        kind: first.flow,
        sigma: first.state.sigma(),
        times: Vec::with_capacity(snaps.len()),
        states: Vec::with_capacity(snaps.len()),
        entropy: Vec::with_capacity(snaps.len()),
        stats: StepStats::default(),
        abort: None,
    };
    for s in &snaps {
        traj.times.push(s.t);
        traj.entropy.push(s.entropy()?);
        traj.states.push(s.state.clone());
    }
    let last = snaps.last().expect("non-empty");
    traj.stats = last.stats.clone();
    traj.abort = last.abort.clone();
    Ok(traj)
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn csv_row(r: &DiagnosticsRecord) -> Vec<String> {
    let res = |k: &str| opt17(r.residuals.get(k).copied());
    vec![
        fmt17(r.t),
        fmt17(r.mu),
        fmt17(r.e),
        fmt17(r.f),
        opt17(r.n),
        fmt17(r.sup_s),
        fmt17(r.sup_h),
        fmt17(r.sup_rm),
        res(RES_DIVFV),
        res(RES_COMM),
        res(RES_SEV),
        res(RES_HEQ),
    ]
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush().map_err(io_err(path))
}
