//! Evolution laws and differential inequalities measured along trajectories.

use super::fit::{centered_derivative, five_point_derivative, line_fit, trapezoid};
use super::{BoundCheckReport, DiagnosticsRecord, Verdict, E_FLOOR};
use crate::error::{Error, Result};

/// Tolerance on the relative error of the evolution identities.
pub const EVOLUTION_TOLERANCE: f64 = 0.05;
/// Additive slack on pointwise decay inequalities.
pub const DECAY_SLACK: f64 = 1e-3;
/// Records on either side whose rates set the local scale.
const CROSSING_REACH: usize = 2;
/// Fraction of the local rate below which a sample counts as a sign change.
const CROSSING_FRACTION: f64 = 0.5;
/// Tolerance on the relative error of `d mu / dt = 2E`.
pub const ENTROPY_GRADIENT_TOLERANCE: f64 = 0.02;
/// Rates of `mu` below this are not compared.
pub const ENTROPY_RATE_FLOOR: f64 = 1e-10;
/// Gap below which a Lojasiewicz sample is treated as noise.
pub const GAP_FLOOR: f64 = 1e-12;

const SEED: u64 = 0x5eed;

fn times(records: &[DiagnosticsRecord]) -> Vec<f64> {
    records.iter().map(|r| r.t).collect()
}

fn in_mid_window(t: f64, t0: f64, t1: f64) -> bool {
    let span = t1 - t0;
    t >= t0 + 0.25 * span && t <= t0 + 0.75 * span
}

/// Compare a differenced rate against its predicted value; the verdict uses
/// the middle half of the window where the rate is above the noise floor.
fn rate_identity(id: &str, records: &[DiagnosticsRecord], lhs: &[Option<f64>], rhs: &[Option<f64>]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new(id);
    let t = times(records);
    if t.len() < 3 {
        rep.notes.push("fewer than three records".into());
        return rep;
    }
    let scale = lhs.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = (1e-4 * scale).max(1e-13);
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let mut worst_mid = 0.0f64;
    let mut worst = 0.0f64;
    let mut mid_points = 0;
    let mut all_small = true;
    let mut guarded = 0;
    for k in 0..t.len() {
        let (Some(a), Some(b)) = (lhs[k], rhs[k]) else { continue };
        if a.abs() > 1e-13 || b.abs() > 1e-13 {
            all_small = false;
        }
        if a.abs() <= floor {
            continue;
        }
        let local = lhs[k.saturating_sub(CROSSING_REACH)..(k + CROSSING_REACH + 1).min(lhs.len())]
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let denom = a.abs().max(CROSSING_FRACTION * local);
        if denom > a.abs() {
            guarded += 1;
        }
        let rel = (a - b).abs() / denom;
        rep.margins.push((t[k], EVOLUTION_TOLERANCE - rel));
        worst = worst.max(rel);
        if in_mid_window(t[k], t0, t1) {
            worst_mid = worst_mid.max(rel);
            mid_points += 1;
        }
    }
    rep.constants.insert("max_rel_error".into(), worst);
    if guarded > 0 {
        rep.notes.push(format!("{guarded} samples near a sign change measured against the local rate"));
    }
    if all_small {
        rep.verdict = Verdict::Holds;
        rep.notes.push("static: both sides vanish".into());
    } else if mid_points == 0 {
        rep.notes.push("no mid-window samples above the noise floor".into());
    } else {
        rep.constants.insert("max_rel_error_mid".into(), worst_mid);
        rep.verdict = if worst_mid <= EVOLUTION_TOLERANCE { Verdict::Holds } else { Verdict::Violated };
    }
    rep
}

/// `dE/dt = -2F - (HS, S) = (L_1 S, S) - (HS, S)`.
pub fn check_eev(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let t = times(records);
    let e: Vec<f64> = records.iter().map(|r| r.e).collect();
    let de = centered_derivative(&t, &e);
    let rhs: Vec<Option<f64>> = records
        .iter()
        .zip(&de)
        .map(|(r, d)| d.map(|_| -2.0 * r.f - r.h_ss))
        .collect();
    let mut rep = rate_identity("energy-evolution", records, &de, &rhs);
    let rhs1: Vec<Option<f64>> = records.iter().map(|r| r.l1_pairing.map(|p| p - r.h_ss)).collect();
    let second = rate_identity("energy-evolution", records, &de, &rhs1);
    if let Some(v) = second.constant("max_rel_error_mid") {
        rep.constants.insert("max_rel_error_mid_l1".into(), v);
    }
    rep
}

/// `dF/dt = -||L_1 S||^2 / 2 - E^2 + (|S|^2 S, S) + J`, together with
/// `F = -(L_1 S, S) / 2`.
pub fn check_fdot(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let t = times(records);
    let f: Vec<f64> = records.iter().map(|r| r.f).collect();
    let df = centered_derivative(&t, &f);
    let rhs: Vec<Option<f64>> = records
        .iter()
        .zip(&df)
        .map(|(r, d)| match (d, r.l1_sq) {
            (Some(_), Some(l1)) => Some(-0.5 * l1 - r.e * r.e + r.cubic + r.j),
            _ => None,
        })
        .collect();
    let mut rep = rate_identity("dirichlet-evolution", records, &df, &rhs);
    let fv: Vec<Option<f64>> = records.iter().map(|r| r.l1_pairing.map(|_| r.f)).collect();
    let fl: Vec<Option<f64>> = records.iter().map(|r| r.l1_pairing.map(|p| -0.5 * p)).collect();
    let ident = rate_identity("dirichlet-evolution", records, &fv, &fl);
    if let Some(v) = ident.constant("max_rel_error_mid") {
        rep.constants.insert("f_identity_rel_error_mid".into(), v);
    }
    rep.constants.insert(
        "max_j".into(),
        records.iter().fold(0.0f64, |m, r| m.max(r.j.abs())),
    );
    rep
}

/// `d mu / dt = 2E` at every interior record where the rate is measurable.
pub fn check_entropy_gradient(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new("entropy-gradient");
    let t = times(records);
    let mu: Vec<f64> = records.iter().map(|r| r.mu).collect();
    let dmu = centered_derivative(&t, &mu);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (k, d) in dmu.iter().enumerate() {
        let Some(d) = *d else { continue };
        if d.abs() <= ENTROPY_RATE_FLOOR {
            continue;
        }
        let rel = (d - 2.0 * records[k].e).abs() / d.abs();
        rep.margins.push((t[k], ENTROPY_GRADIENT_TOLERANCE - rel));
        worst = worst.max(rel);
        compared += 1;
    }
    rep.constants.insert("max_rel_error".into(), worst);
    rep.constants.insert("compared".into(), compared as f64);
    if compared == 0 {
        rep.notes.push("static: no measurable entropy rate".into());
    }
    rep.verdict = if worst <= ENTROPY_GRADIENT_TOLERANCE { Verdict::Holds } else { Verdict::Violated };
    rep
}

const C1_CANDIDATES: [f64; 10] = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];

/// Empirical constants in `dN/dt <= C0 (|H|_inf + |S|_inf)(N + C1)`.
pub fn check_nest(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new("quotient-growth");
    let window: Vec<&DiagnosticsRecord> = records.iter().take_while(|r| r.n.is_some()).collect();
    if window.len() < 3 {
        rep.notes.push("quotient undefined on the window".into());
        return rep;
    }
    if window.len() < records.len() {
        rep.notes.push(format!("window truncated at t = {} where E falls below the floor", window[window.len() - 1].t));
    }
    let t: Vec<f64> = window.iter().map(|r| r.t).collect();
    let n: Vec<f64> = window.iter().map(|r| r.n.unwrap_or(0.0)).collect();
    let w: Vec<f64> = window.iter().map(|r| r.sup_h + r.sup_s).collect();
    let dn = centered_derivative(&t, &n);
    let n_min = n.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut best: Option<(f64, f64)> = None;
    for &c1 in C1_CANDIDATES.iter().filter(|c| n_min + **c > 0.0) {
        let mut c0 = 0.0f64;
        for k in 0..t.len() {
            let Some(d) = dn[k] else { continue };
            if d <= 0.0 {
                continue;
            }
            let den = w[k] * (n[k] + c1);
            c0 = if den > 0.0 { c0.max(d / den) } else { f64::INFINITY };
        }
        if best.is_none_or(|(b, _)| c0 < b) {
            best = Some((c0, c1));
        }
    }
    let Some((c0, c1)) = best else {
        rep.notes.push("no admissible C1 candidate".into());
        return rep;
    };
    rep.constants.insert("C0".into(), c0);
    rep.constants.insert("C1".into(), c1);
    // Integrated form: N(t) - N(0) <= C0 int (|H| + |S|)(N + C1).
    let integrand: Vec<f64> = (0..t.len()).map(|k| w[k] * (n[k] + c1)).collect();
    for k in 1..t.len() {
        let bound = c0 * trapezoid(&t[..=k], &integrand[..=k]);
        rep.margins.push((t[k], bound - (n[k] - n[0]) + 1e-9 * n[0].abs().max(1.0)));
    }
    let rising = dn.iter().flatten().any(|d| *d > 0.0);
    rep.verdict = if !c0.is_finite() {
        Verdict::Violated
    } else if rising || dn.iter().flatten().count() > 0 {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    if !rising {
        rep.notes.push("N never increases on the window".into());
    }
    rep
}

/// Pointwise two-sided bounds on `(log E)'`, exponential envelopes, the
/// integrated entropy decay and the fitted decay rate of `E`.
pub fn check_decay(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new("decay-bounds");
    let window: Vec<&DiagnosticsRecord> = records.iter().take_while(|r| r.e > E_FLOOR).collect();
    if window.len() < records.len() {
        rep.notes.push(format!("E below floor after {} records; window truncated", window.len()));
    }
    if window.len() < 3 {
        rep.notes.push("fewer than three records above the energy floor".into());
        return rep;
    }
    let t: Vec<f64> = window.iter().map(|r| r.t).collect();
    let loge: Vec<f64> = window.iter().map(|r| r.e.ln()).collect();
    let dl = five_point_derivative(&t, &loge);
    let mut ok = true;
    let mut lower_min = f64::INFINITY;
    let mut upper_min = f64::INFINITY;
    for k in 0..t.len() {
        let (Some(d), Some(n)) = (dl[k], window[k].n) else { continue };
        let lower = d - (-2.0 * n - window[k].sup_h - DECAY_SLACK);
        let upper = 4.0 * window[k].sup_rm + window[k].sup_h + DECAY_SLACK - d;
        lower_min = lower_min.min(lower);
        upper_min = upper_min.min(upper);
        rep.margins.push((t[k], lower.min(upper)));
        ok &= lower >= 0.0 && upper >= 0.0;
    }
    rep.constants.insert("lower_margin_min".into(), lower_min);
    rep.constants.insert("upper_margin_min".into(), upper_min);

    let start = t.len() / 2;
    let fit = match line_fit(&t[start..], &loge[start..], SEED) {
        Ok(f) => f,
        Err(e) => {
            rep.notes.push(format!("rate fit failed: {e}"));
            rep.verdict = if ok { Verdict::Inconclusive } else { Verdict::Violated };
            return rep;
        }
    };
    let rate = -fit.slope;
    rep.constants.insert("rate".into(), rate);
    rep.constants.insert("rate_lo".into(), -fit.slope_hi);
    rep.constants.insert("rate_hi".into(), -fit.slope_lo);
    let n_tail: Vec<f64> = window[start..].iter().filter_map(|r| r.n).collect();
    if !n_tail.is_empty() {
        rep.constants.insert("n_plateau".into(), n_tail.iter().sum::<f64>() / n_tail.len() as f64);
    }

    let e0 = window[0].e;
    let n0_env = (0..t.len())
        .map(|k| -(window[k].e / e0).ln() / (t[k] - t[0] + 1.0))
        .fold(0.0f64, f64::max);
    let n0 = n0_env.max(1.5 * rate).max(1e-12);
    let n1 = window.iter().map(|r| 4.0 * r.sup_rm + r.sup_h).fold(0.0f64, f64::max).max(1e-12);
    rep.constants.insert("N0".into(), n0);
    rep.constants.insert("N1".into(), n1);
    let w: Vec<f64> = window.iter().map(|r| r.sup_s + r.sup_h).collect();
    rep.constants.insert("Lambda0".into(), trapezoid(&t, &w));
    for k in 0..t.len() {
        let tau = t[k] - t[0];
        let lo = (-n0 * (tau + 1.0)).exp() * e0;
        let hi = (n1 * (tau + 1.0)).exp() * e0;
        ok &= window[k].e >= lo * (1.0 - 1e-12) && window[k].e <= hi * (1.0 + 1e-12);
    }
    // Entropy decay between every ordered pair of records, once with the
    // measured energy integrated and once with the measured entropy.
    let e: Vec<f64> = window.iter().map(|r| r.e).collect();
    let mut cumulative = vec![0.0; t.len()];
    for k in 1..t.len() {
        cumulative[k] = cumulative[k - 1] + trapezoid(&t[k - 1..=k], &e[k - 1..=k]);
    }
    let (mut int_margin, mut mu_margin) = (f64::INFINITY, f64::INFINITY);
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            let (ta, tb) = (t[a] - t[0], t[b] - t[0]);
            let bound = 2.0 / n0 * e0 * (-n0 * (ta + 1.0)).exp() * (1.0 - (n0 * (ta - tb)).exp());
            let integrated = 2.0 * (cumulative[b] - cumulative[a]);
            int_margin = int_margin.min((integrated - bound) / bound);
            mu_margin = mu_margin.min((window[b].mu - window[a].mu - bound) / bound);
        }
    }
    rep.constants.insert("mu_decay_integrated_rel_margin_min".into(), int_margin);
    rep.constants.insert("mu_decay_rel_margin_min".into(), mu_margin);
    ok &= int_margin >= -1e-12 && mu_margin >= -ENTROPY_GRADIENT_TOLERANCE;
    rep.verdict = if ok { Verdict::Holds } else { Verdict::Violated };
    rep
}

/// Empirical constants bounding the commutator and `D_t Rm` pairings by
/// `|S|_inf (||S||^2 + ||nabla S||^2)`.
pub fn check_error_estimates(records: &[DiagnosticsRecord]) -> BoundCheckReport {
    let mut rep = BoundCheckReport::new("error-terms");
    let (mut c_comm, mut c_rm) = (0.0f64, 0.0f64);
    let mut static_only = true;
    for r in records {
        let rhs = r.sup_s * (r.e + r.grad_s_sq);
        let lhs = r.comm_pairing.abs().max(r.dtrm_pairing.abs());
        if rhs > 0.0 {
            static_only = false;
            c_comm = c_comm.max(r.comm_pairing.abs() / rhs);
            c_rm = c_rm.max(r.dtrm_pairing.abs() / rhs);
            rep.margins.push((r.t, rhs - lhs));
        } else if lhs > 1e-14 {
            c_comm = f64::INFINITY;
        }
    }
    rep.constants.insert("C_comm".into(), c_comm);
    rep.constants.insert("C_dtrm".into(), c_rm);
    if static_only && c_comm.is_finite() {
        rep.notes.push("static: both sides vanish".into());
    }
    rep.verdict = if c_comm.is_finite() && c_rm.is_finite() { Verdict::Holds } else { Verdict::Violated };
    rep
}

/// Fit `|mu_limit - mu|^theta <= C_L ||S||` on the usable part of the window.
pub fn lojasiewicz_fit(records: &[DiagnosticsRecord], mu_limit: f64) -> Result<BoundCheckReport> {
    for w in records.windows(2) {
        if w[1].mu < w[0].mu - 1e-9 {
            return Err(Error::InvalidState(format!("entropy decreases at t = {}", w[1].t)));
        }
    }
    let usable: Vec<&DiagnosticsRecord> = records
        .iter()
        .filter(|r| mu_limit - r.mu > GAP_FLOOR && r.e > 0.0 && r.sup_s >= 1e-8 && r.sup_s <= 1e-1)
        .collect();
    if usable.len() < 10 {
        return Err(Error::InsufficientData(format!("{} usable samples for the Lojasiewicz fit", usable.len())));
    }
    let x: Vec<f64> = usable.iter().map(|r| 0.5 * r.e.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|r| (mu_limit - r.mu).ln()).collect();
    let fit = line_fit(&x, &y, SEED)?;
    let theta = 1.0 / fit.slope;
    let c_l = usable
        .iter()
        .map(|r| (mu_limit - r.mu).powf(theta) / r.e.sqrt())
        .fold(0.0f64, f64::max);
    let mut rep = BoundCheckReport::new("lojasiewicz");
    rep.constants.insert("theta".into(), theta);
    rep.constants.insert("theta_lo".into(), 1.0 / fit.slope_hi);
    rep.constants.insert("theta_hi".into(), 1.0 / fit.slope_lo);
    rep.constants.insert("C_L".into(), c_l);
    rep.constants.insert("samples".into(), usable.len() as f64);
    for r in &usable {
        rep.margins.push((r.t, c_l * r.e.sqrt() - (mu_limit - r.mu).powf(theta)));
    }
    rep.verdict = if theta.is_finite() && theta > 0.0 && c_l.is_finite() && c_l > 0.0 {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(rep)
}
