//! Checks evaluated on finished runs, each emitted as a labelled report.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use solitonlab::arena::{AxisymSphereState, MetricState, RoundFamilyState, TorusGridState};
use solitonlab::diagnostics::fit::refinement_order;
use solitonlab::diagnostics::{
    analyze, check_decay, check_eev, check_entropy_gradient, check_error_estimates, check_fdot, check_identities,
    check_nest, einstein_shortcut, lojasiewicz_fit, BoundCheckReport, DiagnosticsRecord, Verdict, E_FLOOR, RES_HEQ,
    RES_SEV,
};
use solitonlab::entropy::{minimize_entropy, spectral_gap};
use solitonlab::flow::{invariants, Trajectory};
use solitonlab::perturb::random_scalar;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

/// Relative tolerance on the closed-form round-family scale.
pub const ROUND_SCALE_TOL: f64 = 1e-8;
/// Absolute tolerance on the closed-form energies and quotient.
pub const ROUND_VALUE_TOL: f64 = 1e-6;
/// Drift allowed for fixed-point initial data.
pub const STATIC_DRIFT_TOL: f64 = 1e-9;
/// Relative disagreement allowed between gauges.
pub const GAUGE_TOL: f64 = 0.01;
/// Relative disagreement between weighted and unweighted pipelines.
pub const EINSTEIN_TOL: f64 = 1e-8;
/// `f` counts as constant when its spread is below this.
pub const CONSTANT_F_TOL: f64 = 1e-10;
/// Allowed mismatch between fitted and nominal refinement order.
pub const ORDER_TOL: f64 = 0.5;
/// A run leaves the regular neighbourhood once `sup |S|` grows past this multiple of its start.
pub const REGULAR_GROWTH: f64 = 1.5;

/// A report tagged with the run it belongs to and the statement it tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub run: String,
    pub paper_ref: String,
    #[serde(flatten)]
    pub report: BoundCheckReport,
}

fn anchors() -> &'static BTreeMap<String, String> {
    static TABLE: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        include_str!("anchors.txt")
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect()
    })
}

pub fn anchor(id: &str) -> String {
    anchors().get(id).cloned().unwrap_or_default()
}

pub fn entry(run: &str, report: BoundCheckReport) -> ReportEntry {
    ReportEntry {
        run: run.to_string(),
        paper_ref: anchor(&report.id),
        report,
    }
}

/// Everything derived from one trajectory.
#[derive(Clone, Debug)]
pub struct RunAnalysis {
    pub label: String,
    pub records: Vec<DiagnosticsRecord>,
    /// Unweighted records, for the Einstein experiment.
    pub unweighted: Option<Vec<DiagnosticsRecord>>,
    pub reports: Vec<ReportEntry>,
}

fn coupled_system(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new("coupled-system");
    for (key, id) in [("max_sev", RES_SEV), ("max_heq", RES_HEQ)] {
        let v = records.iter().filter_map(|r| r.residuals.get(id)).fold(0.0f64, |m, x| m.max(*x));
        rep.constants.insert(key.into(), v);
    }
    rep.notes.push("single resolution; convergence needs a joint refinement study".into());
    rep
}

/// Entropy of the fixed point the arena's flows converge to.
pub fn fixed_point_entropy(state: &MetricState, cfg: &ExperimentConfig) -> Result<f64> {
    let fixed = match state {
        MetricState::Round(s) => return Ok(RoundFamilyState::new(s.n, s.sigma, 1.0)?.entropy()),
        MetricState::Torus(s) => MetricState::Torus(TorusGridState::flat(s.n, s.l, s.sigma, s.stencil_order)),
        MetricState::Sphere(s) => MetricState::Sphere(AxisymSphereState::round(s.m, s.sigma, s.stencil_order, 1.0)),
    };
    Ok(minimize_entropy(&fixed, &cfg.flow.entropy_cfg, None)?.mu)
}

fn lojasiewicz(traj: &Trajectory, records: &[DiagnosticsRecord], cfg: &ExperimentConfig) -> Result<BoundCheckReport> {
    let limit = match cfg.diagnostics.mu_limit {
        Some(m) => m,
        None => fixed_point_entropy(&traj.states[0], cfg)?,
    };
    Ok(match lojasiewicz_fit(records, limit) {
        Ok(mut rep) => {
            rep.constants.insert("mu_limit".into(), limit);
            rep
        }
        Err(e) => {
            let mut rep = BoundCheckReport::new("lojasiewicz");
            rep.constants.insert("mu_limit".into(), limit);
            rep.notes.push(format!("no fit: {e}"));
            rep
        }
    })
}

fn spectral(traj: &Trajectory, records: &[DiagnosticsRecord]) -> Result<BoundCheckReport> {
    let gaps = traj
        .states
        .par_iter()
        .zip(&traj.entropy)
        .map(|(st, sol)| spectral_gap(st, &sol.f))
        .collect::<solitonlab::Result<Vec<_>>>()?;
    let mut rep = BoundCheckReport::new("spectral-gap");
    let s0 = records.first().map_or(0.0, |r| r.sup_s);
    let regular = records.iter().all(|r| r.sup_s <= REGULAR_GROWTH * s0 + 1e-12);
    let mut min_gap = f64::INFINITY;
    let mut min_lambda = f64::INFINITY;
    for (t, g) in traj.times.iter().zip(&gaps) {
        rep.margins.push((*t, g.gap));
        min_gap = min_gap.min(g.gap);
        min_lambda = min_lambda.min(g.lambda_g);
        if !g.exact {
            rep.notes.push(format!("t = {t}: eigenvalue is a lower bound"));
        }
    }
    rep.notes.dedup();
    rep.constants.insert("min_gap".into(), min_gap);
    rep.constants.insert("min_lambda".into(), min_lambda);
    rep.constants.insert("lambda_initial".into(), gaps.first().map_or(f64::NAN, |g| g.lambda_g));
    rep.constants.insert("regular".into(), if regular { 1.0 } else { 0.0 });
    rep.verdict = if min_gap > 0.0 {
        Verdict::Holds
    } else if regular {
        Verdict::Violated
    } else {
        rep.notes.push("run leaves the regular neighbourhood of its fixed point".into());
        Verdict::Inconclusive
    };
    Ok(rep)
}

fn round_closed_form(traj: &Trajectory, records: &[DiagnosticsRecord]) -> Option<BoundCheckReport> {
    let MetricState::Round(first) = &traj.states[0] else { return None };
    let sigma = first.sigma_f();
    let n = first.n as f64;
    let mut rep = BoundCheckReport::new("round-closed-form");
    let (mut ds, mut de, mut df, mut dn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (st, r) in traj.states.iter().zip(records) {
        let MetricState::Round(s) = st else { return None };
        let c = RoundFamilyState::exact_scale(sigma, first.c, r.t);
        ds = ds.max((s.c - c).abs() / c);
        let e = n * sigma * sigma * (c - 1.0).powi(2) / (4.0 * c * c);
        let q = sigma / c;
        de = de.max((r.e - e).abs());
        df = df.max((r.f - q * e).abs());
        if e >= E_FLOOR {
            if let Some(nv) = r.n {
                dn = dn.max((nv - q).abs());
            }
        }
        rep.margins.push((r.t, ROUND_SCALE_TOL - (s.c - c).abs() / c));
    }
    rep.constants.insert("max_scale_rel_error".into(), ds);
    rep.constants.insert("max_e_error".into(), de);
    rep.constants.insert("max_f_error".into(), df);
    rep.constants.insert("max_n_error".into(), dn);
    let ok = ds <= ROUND_SCALE_TOL && de.max(df).max(dn) <= ROUND_VALUE_TOL;
    rep.verdict = if ok { Verdict::Holds } else { Verdict::Violated };
    Some(rep)
}

fn static_drift(traj: &Trajectory) -> f64 {
    traj.states.iter().map(|s| s.sup_distance(&traj.states[0])).fold(0.0, f64::max)
}

fn f_spread(traj: &Trajectory) -> f64 {
    traj.entropy
        .iter()
        .map(|e| {
            let v = e.f.values();
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn einstein_reports(traj: &Trajectory, weighted: &[DiagnosticsRecord], unweighted: &[DiagnosticsRecord]) -> Vec<BoundCheckReport> {
    let mut agree = BoundCheckReport::new("einstein-agreement");
    let spread = f_spread(traj);
    agree.constants.insert("f_spread".into(), spread);
    if spread <= CONSTANT_F_TOL {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        let mut worst = 0.0f64;
        for ((w, u), sol) in weighted.iter().zip(unweighted).zip(&traj.entropy) {
            let weight = (-sol.f.values()[0]).exp();
            let d = if w.e.max(weight * u.e) <= E_FLOOR {
                0.0
            } else {
                let n = match (w.n, u.n) {
                    (Some(a), Some(b)) => rel(a, b),
                    _ => 0.0,
                };
                rel(w.e, weight * u.e)
                    .max(rel(w.f, weight * u.f))
                    .max(rel(w.rm_ss, weight * u.rm_ss))
                    .max(n)
            };
            agree.margins.push((w.t, EINSTEIN_TOL - d));
            worst = worst.max(d);
        }
        agree.constants.insert("max_rel_difference".into(), worst);
        agree.verdict = if worst <= EINSTEIN_TOL { Verdict::Holds } else { Verdict::Violated };
    } else {
        agree.notes.push("minimizer is not constant; pipelines differ by design".into());
    }
    let mut trace = BoundCheckReport::new("trace-bound");
    let mut worst = f64::NEG_INFINITY;
    for u in unweighted {
        let v = u.residuals.get(solitonlab::diagnostics::einstein::RES_TRACE_BOUND).copied().unwrap_or(f64::NAN);
        trace.margins.push((u.t, -v));
        worst = worst.max(v);
    }
    trace.constants.insert("max_excess".into(), worst);
    trace.verdict = if worst <= 1e-12 { Verdict::Holds } else { Verdict::Violated };
    vec![agree, trace]
}

/// Diagnostics and per-run reports for one trajectory.
pub fn analyze_run(label: &str, traj: &Trajectory, cfg: &ExperimentConfig) -> Result<RunAnalysis> {
    let records = analyze(traj)?;
    let mut reps = vec![
        check_entropy_gradient(&records),
        check_eev(&records),
        check_fdot(&records),
        check_nest(&records),
        check_decay(&records),
        check_error_estimates(&records),
        coupled_system(&records),
    ];
    if let Some(r) = round_closed_form(traj, &records) {
        reps.push(r);
    }
    if cfg.diagnostics.spectral_gap {
        reps.push(spectral(traj, &records)?);
    }
    if cfg.diagnostics.lojasiewicz {
        reps.push(lojasiewicz(traj, &records, cfg)?);
    }
    let mut unweighted = None;
    if cfg.experiment == ExperimentKind::Einstein {
        let u = einstein_shortcut(traj)?;
        reps.extend(einstein_reports(traj, &records, &u));
        unweighted = Some(u);
    }
    if let Some(reason) = &traj.abort {
        for r in &mut reps {
            r.notes.push(format!("run aborted: {reason}"));
        }
    }
    Ok(RunAnalysis {
        label: label.to_string(),
        records,
        unweighted,
        reports: reps.into_iter().map(|r| entry(label, r)).collect(),
    })
}

fn by_label<'a>(runs: &'a [(RunAnalysis, &'a Trajectory)], label: &str) -> Option<&'a (RunAnalysis, &'a Trajectory)> {
    runs.iter().find(|(a, _)| a.label == label)
}

/// Reports that compare several runs of one experiment.
pub fn experiment_reports(cfg: &ExperimentConfig, runs: &[(RunAnalysis, &Trajectory)]) -> Result<Vec<ReportEntry>> {
    let mut out = Vec::new();
    match cfg.experiment {
        ExperimentKind::Dichotomy => {
            let mut rep = BoundCheckReport::new("dichotomy");
            let mut ok = true;
            for label in ["soliton-round", "soliton-grid"] {
                if let Some((_, traj)) = by_label(runs, label) {
                    let d = static_drift(traj);
                    rep.constants.insert(format!("drift_{label}"), d);
                    ok &= d <= STATIC_DRIFT_TOL;
                }
            }
            if let Some((a, _)) = by_label(runs, "perturbed") {
                let decay = a.reports.iter().find(|r| r.report.id == "decay-bounds");
                let rate = decay.and_then(|r| r.report.constant("rate"));
                let (first, last) = (a.records.first(), a.records.last());
                if let (Some(rate), Some(first), Some(last)) = (rate, first, last) {
                    let n0 = 1.5 * rate;
                    let span = last.t - first.t + 1.0;
                    let bound = (-n0 * span).exp() * first.e;
                    rep.constants.insert("rate".into(), rate);
                    rep.constants.insert("N0".into(), n0);
                    rep.constants.insert("e_ratio".into(), last.e / first.e);
                    rep.constants.insert("bound_ratio".into(), bound / first.e);
                    rep.margins.push((last.t, last.e - bound));
                    if last.e > E_FLOOR {
                        ok &= rate.is_finite() && last.e >= bound;
                    } else {
                        rep.notes.push("final energy below the floor".into());
                    }
                } else {
                    rep.notes.push("perturbed run has no decay rate".into());
                    ok = false;
                }
            }
            rep.verdict = if ok { Verdict::Holds } else { Verdict::Violated };
            out.push(entry("experiment", rep));
        }
        ExperimentKind::GaugePair => {
            let (Some((_, nrf)), Some((_, mrf))) = (by_label(runs, "nrf"), by_label(runs, "mrf")) else {
                return Ok(out);
            };
            let mut rep = BoundCheckReport::new("gauge");
            let (mut dmu, mut de) = (0.0f64, 0.0f64);
            for k in 0..nrf.len().min(mrf.len()) {
                let a = invariants(&nrf.states[k], &nrf.entropy[k])?;
                let b = invariants(&mrf.states[k], &mrf.entropy[k])?;
                let rmu = (a.mu - b.mu).abs() / b.mu.abs().max(1e-300);
                let re = (a.energy - b.energy).abs() / b.energy.max(1e-300);
                dmu = dmu.max(rmu);
                de = de.max(re);
                rep.margins.push((nrf.times[k], GAUGE_TOL - rmu.max(re)));
            }
            rep.constants.insert("max_mu_rel_difference".into(), dmu);
            rep.constants.insert("max_e_rel_difference".into(), de);
            rep.verdict = if dmu.max(de) <= GAUGE_TOL { Verdict::Holds } else { Verdict::Violated };
            out.push(entry("experiment", rep));
        }
        _ => {}
    }
    Ok(out)
}

/// Residuals of the static identities at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub resolution: usize,
    pub h: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// Identity residuals across `arena.resolutions` and their fitted orders.
pub fn identity_refinement(cfg: &ExperimentConfig) -> Result<(Vec<RefinementRow>, ReportEntry)> {
    let states = cfg.refinement_states()?;
    let rows = states
        .par_iter()
        .map(|st| {
            let f = random_scalar(st, 0.2, 1, cfg.initial.seed.wrapping_add(4));
            let (resolution, h) = match st {
                MetricState::Torus(s) => (s.n, s.spacing()),
                MetricState::Sphere(s) => (s.m, s.spacing()),
                MetricState::Round(_) => (1, 1.0),
            };
            Ok(RefinementRow {
                resolution,
                h,
                residuals: check_identities(st, &f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = BoundCheckReport::new("identities");
    let nominal = cfg.arena.order as f64;
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let mut ok = true;
    for id in rows[0].residuals.keys() {
        let err: Vec<f64> = rows.iter().map(|r| r.residuals[id]).collect();
        match refinement_order(&h, &err) {
            Ok(p) => {
                rep.constants.insert(format!("order_{id}"), p);
                ok &= (p - nominal).abs() <= ORDER_TOL;
            }
            Err(e) => {
                rep.notes.push(format!("{id}: {e}"));
                ok = false;
            }
        }
    }
    rep.constants.insert("nominal_order".into(), nominal);
    rep.verdict = if ok { Verdict::Holds } else { Verdict::Violated };
    Ok((rows, entry("experiment", rep)))
}
