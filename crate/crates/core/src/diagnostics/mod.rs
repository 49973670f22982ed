//! Energy, Dirichlet quotient, identity residuals and inequality monitors.

pub mod checks;
pub mod einstein;
pub mod fit;
pub mod identities;
pub mod terms;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arena::{Geometry, WeightedMeasure};
use crate::calculus::{box_f, cov_deriv, div_f, grad, hess, inner, inner_pointwise, integrate, laplacian_f, rm_action, sup_norm, trace2};
use crate::entropy::{h_field, m_sigma, EntropySolution};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::tensor::{ScalarField, SymTensorField, Tensor};

pub use checks::{check_decay, check_eev, check_entropy_gradient, check_error_estimates, check_fdot, check_nest, lojasiewicz_fit};
pub use einstein::einstein_shortcut;
pub use identities::check_identities;

/// Below this energy the quotient `N = F / E` is reported absent.
pub const E_FLOOR: f64 = 1e-14;

pub const RES_DIVFV: &str = "divfv";
pub const RES_COMM: &str = "comm";
pub const RES_SEV: &str = "sev";
pub const RES_HEQ: &str = "heq";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mu: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[serde(rename = "sup_S")]
    pub sup_s: f64,
    #[serde(rename = "sup_H")]
    pub sup_h: f64,
    #[serde(rename = "sup_Rm")]
    pub sup_rm: f64,
    /// `||nabla S||^2`.
    pub grad_s_sq: f64,
    /// `(Rm(S), S)`.
    pub rm_ss: f64,
    /// `(H S, S)`.
    pub h_ss: f64,
    /// `(|S|^2 S, S)`.
    pub cubic: f64,
    /// `([D_t, nabla_i] S, nabla_i S)`.
    pub comm_pairing: f64,
    /// `(D_t Rm (S), S)`.
    pub dtrm_pairing: f64,
    pub j: f64,
    /// `||L_1 S||^2`, interior records only.
    pub l1_sq: Option<f64>,
    /// `(L_1 S, S)`, interior records only.
    pub l1_pairing: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub id: String,
    pub verdict: Verdict,
    /// `(t, margin)`; a negative margin marks a violation at that time.
    pub margins: Vec<(f64, f64)>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundCheckReport {
    pub fn new(id: &str) -> Self {
        BoundCheckReport {
            id: id.to_string(),
            verdict: Verdict::Inconclusive,
            margins: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}

#[derive(Clone, Debug)]
pub struct LOperatorFields {
    pub l0s: SymTensorField,
    pub l1s: SymTensorField,
    pub dts: SymTensorField,
    pub hess_h: SymTensorField,
}

pub fn energy_e(geo: &Geometry, es: &EntropySolution) -> Result<f64> {
    let m = geo.measure(Some(&es.f))?;
    inner(geo, &es.s, &es.s, &m)
}

pub fn dirichlet_f(geo: &Geometry, es: &EntropySolution) -> Result<f64> {
    let m = geo.measure(Some(&es.f))?;
    let ds = cov_deriv(geo, &es.s)?;
    Ok(inner(geo, &ds, &ds, &m)? - 2.0 * inner(geo, &rm_action(geo, &es.s)?, &es.s, &m)?)
}

pub fn quotient_n(e: f64, f: f64) -> Option<f64> {
    (e >= E_FLOOR).then(|| f / e)
}

fn times3(traj: &Trajectory, k: usize) -> Result<[f64; 3]> {
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::InsufficientData(format!("record {k} has no neighbours on both sides")));
    }
    if traj.entropy.len() != traj.len() {
        return Err(Error::InsufficientData("trajectory lacks entropy records".into()));
    }
    Ok([traj.times[k - 1], traj.times[k], traj.times[k + 1]])
}

/// `D_t S` by centered differences of the stored `S` plus the contraction terms.
pub fn dt_s(geo: &Geometry, traj: &Trajectory, k: usize) -> Result<SymTensorField> {
    let t = times3(traj, k)?;
    let s = [&traj.entropy[k - 1].s, &traj.entropy[k].s, &traj.entropy[k + 1].s];
    let rate = terms::time_derivative(t, s)?;
    Ok(terms::dt_of(geo, s[1], s[1], &rate)?.symmetrize())
}

fn l_fields_with(geo: &Geometry, traj: &Trajectory, k: usize, h: &ScalarField) -> Result<LOperatorFields> {
    let sol = &traj.entropy[k];
    let dts = dt_s(geo, traj, k)?;
    let bx = box_f(geo, &sol.s, &sol.f)?;
    let hess_h = hess(geo, h)?;
    let mut l0s = dts.sub(&bx)?;
    l0s.axpy(-1.0, &hess_h);
    let mut l1s = dts.add(&bx)?;
    l1s.axpy(-1.0, &hess_h);
    Ok(LOperatorFields { l0s, l1s, dts, hess_h })
}

/// `L_0 S`, `L_1 S`, `D_t S` and `nabla nabla H` at interior record `k`.
pub fn l_fields(traj: &Trajectory, k: usize) -> Result<LOperatorFields> {
    times3(traj, k)?;
    let geo = traj.states[k].geometry()?;
    let h = h_field(&geo, &traj.entropy[k])?;
    l_fields_with(&geo, traj, k, &h)
}

/// `Delta_f H - (sigma / 2) H + |S|^2 - ||S||^2` with `H = df/dt + tr S` taken
/// from time differences of the stored potentials.
pub fn heq_residual(geo: &Geometry, traj: &Trajectory, k: usize) -> Result<ScalarField> {
    let t = times3(traj, k)?;
    let sol = &traj.entropy[k];
    let f = [&traj.entropy[k - 1].f, &sol.f, &traj.entropy[k + 1].f];
    let mut h = terms::time_derivative(t, f)?;
    h.axpy(1.0, &trace2(geo, &sol.s)?);
    let m = geo.measure(Some(&sol.f))?;
    let s2 = inner_pointwise(geo, &sol.s, &sol.s)?;
    let e = integrate(&s2, &m)?;
    let mut res = laplacian_f(geo, &h, &sol.f)?;
    res.axpy(-0.5 * geo.sigma, &h);
    res.axpy(1.0, &s2);
    Ok(res.map(|x| x - e))
}

/// `div_f S - (1/2) nabla M` as a covector.
pub fn divfv_field(geo: &Geometry, s: &SymTensorField, f: &ScalarField) -> Result<Tensor> {
    let m = m_sigma(geo, f)?;
    let mut r = div_f(geo, s, f)?;
    r.axpy(-0.5, &grad(geo, &m)?);
    Ok(r)
}

/// Difference of the two sides of the weighted commutator identity.
pub fn comm_field(geo: &Geometry, s: &SymTensorField, f: &ScalarField) -> Result<Tensor> {
    let m = m_sigma(geo, f)?;
    let lhs = div_f(geo, &box_f(geo, s, f)?, f)?;
    let dfs = div_f(geo, s, f)?;
    let mut rhs = laplacian_f(geo, &dfs, f)?;
    rhs.axpy(-0.5 * geo.sigma, &dfs);
    rhs.axpy(0.5, &grad(geo, &inner_pointwise(geo, s, s)?)?);
    let dm = grad(geo, &m)?;
    rhs.axpy(0.5, &crate::calculus::contract_vector(geo, &dm, s)?);
    lhs.sub(&rhs)
}

fn weighted_norm(geo: &Geometry, t: &Tensor, m: &WeightedMeasure) -> Result<f64> {
    Ok(inner(geo, t, t, m)?.max(0.0).sqrt())
}

/// Full diagnostics at record `k`; interior records also carry the
/// time-differenced quantities.
pub fn record(traj: &Trajectory, k: usize) -> Result<DiagnosticsRecord> {
    let sol = traj
        .entropy
        .get(k)
        .ok_or_else(|| Error::InsufficientData(format!("no entropy solution at record {k}")))?;
    let geo = traj.states[k].geometry()?;
    let m = geo.measure(Some(&sol.f))?;
    let s = &sol.s;
    let ds = cov_deriv(&geo, s)?;
    let e = inner(&geo, s, s, &m)?;
    let grad_s_sq = inner(&geo, &ds, &ds, &m)?;
    let rms = rm_action(&geo, s)?;
    let rm_ss = inner(&geo, &rms, s, &m)?;
    let f_val = grad_s_sq - 2.0 * rm_ss;
    let h = h_field(&geo, sol)?;
    let s2 = inner_pointwise(&geo, s, s)?;
    let h_ss = integrate(&h.zip_map(&s2, |a, b| a * b), &m)?;
    let cubic = integrate(&s2.map(|x| x * x), &m)?;
    let comm = terms::commutator(&geo, s, &ds)?;
    let comm_pairing = inner(&geo, &comm, &ds, &m)?;
    let dtrm = terms::dt_rm(&geo, s, &ds)?;
    let dtrm_pairing = integrate(&terms::quartic(&geo, &dtrm, s)?, &m)?;
    let ds2 = inner_pointwise(&geo, &ds, &ds)?;
    let rm_pt = inner_pointwise(&geo, &rms, s)?;
    let weight: Vec<f64> = (0..geo.nodes())
        .map(|p| h.values()[p] * (0.5 * geo.sigma * s2.values()[p] + ds2.values()[p] - 2.0 * rm_pt.values()[p]))
        .collect();
    let h_term = integrate(&Tensor::scalar(geo.layout, weight), &m)?;
    let j = 2.0 * (comm_pairing - dtrm_pairing) - h_term;

    let mut residuals = BTreeMap::new();
    residuals.insert(RES_DIVFV.to_string(), sup_norm(&geo, &divfv_field(&geo, s, &sol.f)?)?);
    residuals.insert(RES_COMM.to_string(), sup_norm(&geo, &comm_field(&geo, s, &sol.f)?)?);
    let (mut l1_sq, mut l1_pairing) = (None, None);
    if k > 0 && k + 1 < traj.len() {
        let lf = l_fields_with(&geo, traj, k, &h)?;
        l1_sq = Some(inner(&geo, &lf.l1s, &lf.l1s, &m)?);
        l1_pairing = Some(inner(&geo, &lf.l1s, s, &m)?);
        if e >= E_FLOOR {
            residuals.insert(RES_SEV.to_string(), weighted_norm(&geo, &lf.l0s, &m)? / e.sqrt());
            let res = heq_residual(&geo, traj, k)?;
            residuals.insert(RES_HEQ.to_string(), weighted_norm(&geo, &res, &m)? / e);
        }
    }
    let sup_rm = geo.curvature.rm_norm(geo.dim()).into_iter().fold(0.0, f64::max);
    Ok(DiagnosticsRecord {
        t: traj.times[k],
        mu: sol.mu,
        e,
        f: f_val,
        n: quotient_n(e, f_val),
        sup_s: sup_norm(&geo, s)?,
        sup_h: h.max_abs(),
        sup_rm,
        grad_s_sq,
        rm_ss,
        h_ss,
        cubic,
        comm_pairing,
        dtrm_pairing,
        j,
        l1_sq,
        l1_pairing,
        residuals,
    })
}

/// Diagnostics for every record, evaluated in parallel.
pub fn analyze(traj: &Trajectory) -> Result<Vec<DiagnosticsRecord>> {
    (0..traj.len()).into_par_iter().map(|k| record(traj, k)).collect()
}
