//! Static identity residuals for arbitrary `(g, f)`.

use std::collections::BTreeMap;

use super::{comm_field, divfv_field};
use crate::arena::MetricState;
use crate::calculus::{div_f, div_star, grad, hess, inner_pointwise, laplacian_f, mixed, rm_action, sup_norm, trace2};
use crate::entropy::s_sigma;
use crate::error::Result;
use crate::perturb::{random_scalar, random_sym};
use crate::tensor::{ScalarField, SymTensorField, Tensor};

pub const ID_DIVFV: &str = "divfv";
pub const ID_COMM: &str = "comm";
pub const ID_BOCHNER: &str = "fbochner";
pub const ID_SLIN: &str = "slin";

/// Step of the symmetric difference quotient in the linearization check.
pub const SLIN_EPS: f64 = 1e-4;
const SLIN_SEED: u64 = 0x11e4;

/// Linearization of `S^sigma` at `(g, f)` in the direction `(h, k)`.
pub fn s_linearization(state: &MetricState, f: &ScalarField, h: &SymTensorField, k: &ScalarField) -> Result<SymTensorField> {
    let geo = state.geometry()?;
    let s = s_sigma(&geo, f)?;
    let mut out = laplacian_f(&geo, h, f)?.scale(-0.5);
    out.axpy(-1.0, &rm_action(&geo, h)?);
    out.axpy(-1.0, &div_star(&geo, &div_f(&geo, h, f)?)?);
    out.axpy(0.5, &h.act_on_slot(&mixed(&geo, &s)?, 0));
    out.axpy(0.5, &s.act_on_slot(&mixed(&geo, h)?, 0));
    let pot = k.sub(&trace2(&geo, h)?.scale(0.5))?;
    out.axpy(1.0, &hess(&geo, &pot)?);
    Ok(out.symmetrize())
}

/// Symmetric difference quotient of `S^sigma` along `(h, k)`.
pub fn s_difference_quotient(state: &MetricState, f: &ScalarField, h: &SymTensorField, k: &ScalarField, eps: f64) -> Result<SymTensorField> {
    let plus = state.advanced(h, eps);
    let minus = state.advanced(h, -eps);
    let mut fp = f.clone();
    fp.axpy(eps, k);
    let mut fm = f.clone();
    fm.axpy(-eps, k);
    let sp = s_sigma(&plus.geometry()?, &fp)?;
    let sm = s_sigma(&minus.geometry()?, &fm)?;
    Ok(sp.sub(&sm)?.scale(0.5 / eps))
}

/// `Delta_f |nabla u|^2` minus the right side of the weighted Bochner formula.
pub fn bochner_field(state: &MetricState, f: &ScalarField, u: &ScalarField) -> Result<Tensor> {
    let geo = state.geometry()?;
    let du = grad(&geo, u)?;
    let g2 = inner_pointwise(&geo, &du, &du)?;
    let lhs = laplacian_f(&geo, &g2, f)?;
    let hu = hess(&geo, u)?;
    let s = s_sigma(&geo, f)?;
    let mut rhs = inner_pointwise(&geo, &hu, &hu)?.scale(2.0);
    rhs.axpy(2.0, &inner_pointwise(&geo, &s, &du.outer(&du))?);
    rhs.axpy(-geo.sigma, &g2);
    let dlap = grad(&geo, &laplacian_f(&geo, u, f)?)?;
    rhs.axpy(2.0, &inner_pointwise(&geo, &dlap, &du)?);
    lhs.sub(&rhs)
}

/// Sup-norm residuals of the weighted Bianchi identity, the commutator
/// identity, the weighted Bochner formula (with `u = f`) and the
/// linearization of `S^sigma` along a fixed band-limited direction.
pub fn check_identities(state: &MetricState, f: &ScalarField) -> Result<BTreeMap<String, f64>> {
    let geo = state.geometry()?;
    let s = s_sigma(&geo, f)?;
    let mut out = BTreeMap::new();
    out.insert(ID_DIVFV.to_string(), sup_norm(&geo, &divfv_field(&geo, &s, f)?)?);
    out.insert(ID_COMM.to_string(), sup_norm(&geo, &comm_field(&geo, &s, f)?)?);
    out.insert(ID_BOCHNER.to_string(), bochner_field(state, f, f)?.max_abs());
    let h = random_sym(state, 0.1, 2, SLIN_SEED);
    let k = random_scalar(state, 0.1, 2, SLIN_SEED + 7);
    let lin = s_linearization(state, f, &h, &k)?;
    let fd = s_difference_quotient(state, f, &h, &k, SLIN_EPS)?;
    out.insert(ID_SLIN.to_string(), sup_norm(&geo, &fd.sub(&lin)?)?);
    Ok(out)
}
