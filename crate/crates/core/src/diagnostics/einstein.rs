//! Unweighted pipeline with `f = 0`, `S = Rc + (sigma / 2) g` and `H = tr S`.

use std::collections::BTreeMap;

use super::{quotient_n, DiagnosticsRecord};
use crate::calculus::{cov_deriv, inner, inner_pointwise, integrate, norm_pointwise, rm_action, sup_norm, trace2};
use crate::entropy::s_sigma;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::tensor::Tensor;

pub const RES_TRACE_BOUND: &str = "trace_bound";

pub fn einstein_shortcut(traj: &Trajectory) -> Result<Vec<DiagnosticsRecord>> {
    let mut out = Vec::with_capacity(traj.len());
    for (k, state) in traj.states.iter().enumerate() {
        let geo = state.geometry()?;
        let zero = Tensor::constant(geo.layout, 0.0);
        let s = s_sigma(&geo, &zero)?;
        let m = geo.measure(None)?;
        let h = trace2(&geo, &s)?;
        let ds = cov_deriv(&geo, &s)?;
        let e = inner(&geo, &s, &s, &m)?;
        let grad_s_sq = inner(&geo, &ds, &ds, &m)?;
        let rm_ss = inner(&geo, &rm_action(&geo, &s)?, &s, &m)?;
        let f = grad_s_sq - 2.0 * rm_ss;
        let s2 = inner_pointwise(&geo, &s, &s)?;
        let h_ss = integrate(&h.zip_map(&s2, |a, b| a * b), &m)?;
        let cubic = integrate(&s2.map(|x| x * x), &m)?;
        let root_n = (geo.dim() as f64).sqrt();
        let bound = h
            .values()
            .iter()
            .zip(norm_pointwise(&geo, &s)?)
            .map(|(hv, sn)| hv.abs() - root_n * sn)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut residuals = BTreeMap::new();
        residuals.insert(RES_TRACE_BOUND.to_string(), bound);
        let mu = traj
            .entropy
            .get(k)
            .map(|e| e.mu)
            .ok_or_else(|| Error::InsufficientData("trajectory lacks entropy records".into()))?;
        out.push(DiagnosticsRecord {
            t: traj.times[k],
            mu,
            e,
            f,
            n: quotient_n(e, f),
            sup_s: sup_norm(&geo, &s)?,
            sup_h: h.max_abs(),
            sup_rm: geo.curvature.rm_norm(geo.dim()).into_iter().fold(0.0, f64::max),
            grad_s_sq,
            rm_ss,
            h_ss,
            cubic,
            comm_pairing: 0.0,
            dtrm_pairing: 0.0,
            j: 0.0,
            l1_sq: None,
            l1_pairing: None,
            residuals,
        });
    }
    Ok(out)
}
