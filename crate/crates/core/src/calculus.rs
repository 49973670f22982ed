//! Weighted tensor calculus on a [`Geometry`].
//!
//! Index conventions: covariant derivatives put the derivative index first,
//! `(nabla T)_{k i_1 .. i_r}`. Contractions always raise with `g^{-1}`, so
//! frame formulas written with repeated lower indices read as metric traces.

use crate::arena::{Geometry, WeightedMeasure};
use crate::error::{Error, Result};
use crate::tensor::{ScalarField, SymTensorField, Tensor};

fn check(geo: &Geometry, t: &Tensor) -> Result<()> {
    geo.layout.check(&t.layout())
}

/// `nabla T`, one rank higher.
pub fn cov_deriv(geo: &Geometry, t: &Tensor) -> Result<Tensor> {
    check(geo, t)?;
    Ok(cov_deriv_unchecked(geo, t))
}

pub(crate) fn cov_deriv_unchecked(geo: &Geometry, t: &Tensor) -> Tensor {
    let n = geo.dim();
    let r = t.rank();
    let parity = geo.parity(r);
    let mut out = Tensor::zeros(geo.layout, r + 1);
    for flat in 0..t.ncomp() {
        let idx = t.multi(flat);
        for k in 0..n {
            let mut full = Vec::with_capacity(r + 1);
            full.push(k);
            full.extend_from_slice(&idx);
            let mut acc = geo.deriv.apply(k, t.comp(flat), parity);
            for slot in 0..r {
                for m in 0..n {
                    let w = geo.conn(m, k, idx[slot]);
                    if w.iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    let mut src = idx.clone();
                    src[slot] = m;
                    let v = t.c(&src);
                    for ((a, x), y) in acc.iter_mut().zip(w).zip(v) {
                        *a -= x * y;
                    }
                }
            }
            *out.c_mut(&full) = acc;
        }
    }
    out
}

pub fn grad(geo: &Geometry, u: &ScalarField) -> Result<Tensor> {
    cov_deriv(geo, u)
}

/// `nabla nabla u`, symmetrized.
pub fn hess(geo: &Geometry, u: &ScalarField) -> Result<SymTensorField> {
    let du = cov_deriv(geo, u)?;
    Ok(cov_deriv_unchecked(geo, &du).symmetrize())
}

/// Metric trace over slots `a < b`.
pub fn trace(geo: &Geometry, t: &Tensor, a: usize, b: usize) -> Result<Tensor> {
    check(geo, t)?;
    Ok(t.contract_with(&geo.inv_metric, a, b))
}

/// `tr_g W` of a 2-tensor.
pub fn trace2(geo: &Geometry, w: &SymTensorField) -> Result<ScalarField> {
    trace(geo, w, 0, 1)
}

/// Raise one slot with `g^{-1}`.
pub fn raise(geo: &Geometry, t: &Tensor, slot: usize) -> Result<Tensor> {
    check(geo, t)?;
    Ok(t.act_on_slot(&geo.inv_metric, slot))
}

/// `(div T)_{I} = nabla^k T_{k I}`.
pub fn div(geo: &Geometry, t: &Tensor) -> Result<Tensor> {
    let d = cov_deriv(geo, t)?;
    Ok(d.contract_with(&geo.inv_metric, 0, 1))
}

/// Contract `X^k T_{k I}` for a covector `X`.
pub fn contract_vector(geo: &Geometry, x: &Tensor, t: &Tensor) -> Result<Tensor> {
    check(geo, x)?;
    check(geo, t)?;
    Ok(x.outer(t).contract_with(&geo.inv_metric, 0, 1))
}

/// `div_f W = div W - W(nabla f, .)`.
pub fn div_f(geo: &Geometry, w: &Tensor, f: &ScalarField) -> Result<Tensor> {
    let dw = div(geo, w)?;
    let df = grad(geo, f)?;
    dw.sub(&contract_vector(geo, &df, w)?)
}

/// `-(nabla_i X_j + nabla_j X_i) / 2`.
pub fn div_star(geo: &Geometry, x: &Tensor) -> Result<SymTensorField> {
    Ok(cov_deriv(geo, x)?.symmetrize().scale(-1.0))
}

/// Rough Laplacian `g^{kl} nabla_k nabla_l T`.
pub fn laplacian(geo: &Geometry, t: &Tensor) -> Result<Tensor> {
    let d = cov_deriv(geo, t)?;
    let dd = cov_deriv_unchecked(geo, &d);
    Ok(dd.contract_with(&geo.inv_metric, 0, 1))
}

/// `Delta_f T = Delta T - nabla_{nabla f} T`.
pub fn laplacian_f(geo: &Geometry, t: &Tensor, f: &ScalarField) -> Result<Tensor> {
    check(geo, f)?;
    let d = cov_deriv(geo, t)?;
    let dd = cov_deriv_unchecked(geo, &d);
    let lap = dd.contract_with(&geo.inv_metric, 0, 1);
    let df = cov_deriv_unchecked(geo, f);
    let drift = df.outer(&d).contract_with(&geo.inv_metric, 0, 1);
    lap.sub(&drift)
}

/// `Rm(W)_{ij} = R_{iklj} W^{kl}`.
pub fn rm_action(geo: &Geometry, w: &SymTensorField) -> Result<SymTensorField> {
    check(geo, w)?;
    let n = geo.dim();
    let up = w.act_on_slot(&geo.inv_metric, 0).act_on_slot(&geo.inv_metric, 1);
    let rm = &geo.curvature.rm;
    let mut out = Tensor::zeros(geo.layout, 2);
    for i in 0..n {
        for j in 0..n {
            let acc = out.c_mut(&[i, j]);
            for k in 0..n {
                for l in 0..n {
                    let r = rm.c(&[i, k, l, j]);
                    let u = up.c(&[k, l]);
                    for ((a, x), y) in acc.iter_mut().zip(r).zip(u) {
                        *a += x * y;
                    }
                }
            }
        }
    }
    Ok(out.symmetrize())
}

/// `Box_f W = Delta_f W + 2 Rm(W)`.
pub fn box_f(geo: &Geometry, w: &SymTensorField, f: &ScalarField) -> Result<SymTensorField> {
    let lap = laplacian_f(geo, w, f)?;
    let rm = rm_action(geo, w)?;
    let mut out = lap;
    out.axpy(2.0, &rm);
    Ok(out.symmetrize())
}

/// `A_i^p = W_{iq} g^{qp}`; `t.act_on_slot(&A, s)` then computes `W_{ip} T_{..p..}`
/// with the repeated index contracted through the metric.
pub fn mixed(geo: &Geometry, w: &SymTensorField) -> Result<Tensor> {
    check(geo, w)?;
    Ok(w.act_on_slot(&geo.inv_metric, 1))
}

/// Pointwise `<U, W>_g` over all slots.
pub fn inner_pointwise(geo: &Geometry, u: &Tensor, w: &Tensor) -> Result<ScalarField> {
    check(geo, u)?;
    check(geo, w)?;
    if u.rank() != w.rank() {
        return Err(Error::InvalidState(format!(
            "rank mismatch: {} vs {}",
            u.rank(),
            w.rank()
        )));
    }
    let mut up = w.clone();
    for s in 0..w.rank() {
        up = up.act_on_slot(&geo.inv_metric, s);
    }
    let mut out = vec![0.0; geo.nodes()];
    for (a, b) in u.components().iter().zip(up.components()) {
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o += x * y;
        }
    }
    Ok(Tensor::scalar(geo.layout, out))
}

/// Pointwise `|W|_g`.
pub fn norm_pointwise(geo: &Geometry, w: &Tensor) -> Result<Vec<f64>> {
    Ok(inner_pointwise(geo, w, w)?
        .values()
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect())
}

/// `sup |W|_g` over the nodes.
pub fn sup_norm(geo: &Geometry, w: &Tensor) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::NonFinite("sup_norm argument"));
    }
    Ok(norm_pointwise(geo, w)?.into_iter().fold(0.0, f64::max))
}

pub fn integrate(u: &ScalarField, measure: &WeightedMeasure) -> Result<f64> {
    measure.layout.check(&u.layout())?;
    let v: f64 = u
        .values()
        .iter()
        .zip(&measure.weights)
        .map(|(x, w)| x * w)
        .sum();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("integrate"))
    }
}

/// Weighted `L^2` pairing `(U, W)`.
pub fn inner(geo: &Geometry, u: &Tensor, w: &Tensor, measure: &WeightedMeasure) -> Result<f64> {
    integrate(&inner_pointwise(geo, u, w)?, measure)
}

/// Weighted mean `int u dm / int dm`.
pub fn weighted_mean(u: &[f64], measure: &WeightedMeasure) -> f64 {
    let num: f64 = u.iter().zip(&measure.weights).map(|(x, w)| x * w).sum();
    num / measure.total()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::arena::{AxisymSphereState, MetricState, RoundFamilyState, TorusGridState};
    use crate::perturb::{random_covector, random_scalar, random_sym, torus_random_metric};

    fn torus(n: usize, order: usize) -> MetricState {
        MetricState::Torus(torus_random_metric(n, 2.0 * PI, 0, order, 0.15, 2, 7))
    }

    fn fitted_order(errs: &[f64]) -> f64 {
        (errs[errs.len() - 2] / errs[errs.len() - 1]).log2()
    }

    #[test]
    fn metric_is_parallel() {
        for st in [torus(16, 2), torus(16, 4), MetricState::Sphere(crate::perturb::sphere_shape_mode(32, -1, 2, 1.0, 0.2))] {
            let geo = st.geometry().unwrap();
            let f = random_scalar(&st, 0.3, 2, 3);
            let lhs = div_f(&geo, &geo.metric, &f).unwrap();
            let rhs = grad(&geo, &f).unwrap().scale(-1.0);
            assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
            assert!(cov_deriv(&geo, &geo.metric).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn contracted_bianchi_converges() {
        for order in [2, 4] {
            let errs: Vec<f64> = [16, 32, 64]
                .iter()
                .map(|&n| {
                    let geo = torus(n, order).geometry().unwrap();
                    let d = div(&geo, &geo.curvature.rc).unwrap();
                    let dr = grad(&geo, &geo.curvature.r).unwrap().scale(0.5);
                    d.sub(&dr).unwrap().max_abs()
                })
                .collect();
            let p = fitted_order(&errs);
            assert!((p - order as f64).abs() < 0.5, "order {order}: {errs:?}");
        }
    }

    #[test]
    fn div_star_is_adjoint() {
        for order in [2, 4] {
            let errs: Vec<f64> = [16, 32, 64]
                .iter()
                .map(|&n| {
                    let st = torus(n, order);
                    let geo = st.geometry().unwrap();
                    let f = random_scalar(&st, 0.3, 2, 11);
                    let w = random_sym(&st, 1.0, 2, 12);
                    let x = random_covector(&st, 1.0, 2, 13);
                    let m = geo.measure(Some(&f)).unwrap();
                    let a = inner(&geo, &div_f(&geo, &w, &f).unwrap(), &x, &m).unwrap();
                    let b = inner(&geo, &w, &div_star(&geo, &x).unwrap(), &m).unwrap();
                    (a - b).abs()
                })
                .collect();
            assert!(errs[2] < 1e-3 && errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
        }
    }

    #[test]
    fn weighted_laplacian_is_self_adjoint() {
        let st = torus(48, 4);
        let geo = st.geometry().unwrap();
        let f = random_scalar(&st, 0.3, 2, 21);
        let u = random_scalar(&st, 1.0, 2, 22);
        let v = random_scalar(&st, 1.0, 2, 23);
        let m = geo.measure(Some(&f)).unwrap();
        let a = integrate(&Tensor::scalar(geo.layout, laplacian_f(&geo, &u, &f).unwrap().values().iter().zip(v.values()).map(|(x, y)| x * y).collect()), &m).unwrap();
        let b = integrate(&Tensor::scalar(geo.layout, laplacian_f(&geo, &v, &f).unwrap().values().iter().zip(u.values()).map(|(x, y)| x * y).collect()), &m).unwrap();
        assert!((a - b).abs() < 1e-5 * a.abs().max(1.0), "{a} {b}");
        let one = Tensor::constant(geo.layout, 1.0);
        assert!(laplacian_f(&geo, &one, &f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn flat_fourier_mode() {
        let n = 64;
        let st = MetricState::Torus(TorusGridState::flat(n, 1.0, 0, 4));
        let geo = st.geometry().unwrap();
        let h = 1.0 / n as f64;
        let u = Tensor::scalar(geo.layout, (0..n * n).map(|p| (2.0 * PI * (p % n) as f64 * h).sin()).collect());
        let zero = Tensor::constant(geo.layout, 0.0);
        let lap = laplacian_f(&geo, &u, &zero).unwrap();
        let expect = u.scale(-(2.0 * PI).powi(2));
        assert!(lap.sub(&expect).unwrap().max_abs() < 1e-3);
        let hs = hess(&geo, &u).unwrap();
        let ds = div_star(&geo, &grad(&geo, &u).unwrap()).unwrap();
        assert!(hs.add(&ds).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rm_action_properties() {
        for st in [torus(16, 4), MetricState::Sphere(AxisymSphereState::round(16, -1, 2, 1.3)), MetricState::Round(RoundFamilyState::new(3, 1, 0.7).unwrap())] {
            let geo = st.geometry().unwrap();
            let rg = rm_action(&geo, &geo.metric).unwrap();
            assert!(rg.sub(&geo.curvature.rc).unwrap().max_abs() < 1e-12);
            let u = random_sym(&st, 1.0, 2, 31);
            let w = random_sym(&st, 1.0, 2, 32).map(|x| x * 0.5 + 0.1);
            let a = inner_pointwise(&geo, &rm_action(&geo, &u).unwrap(), &w).unwrap();
            let b = inner_pointwise(&geo, &u, &rm_action(&geo, &w).unwrap()).unwrap();
            assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
        }
        let flat = MetricState::Torus(TorusGridState::flat(8, 1.0, 0, 2)).geometry().unwrap();
        let w = random_sym(&flat.state, 1.0, 2, 1);
        assert_eq!(rm_action(&flat, &w).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn einstein_operator_on_round_metric() {
        let st = MetricState::Sphere(AxisymSphereState::round(64, -1, 4, 2.0));
        let geo = st.geometry().unwrap();
        let f = Tensor::constant(geo.layout, 0.3);
        let b = box_f(&geo, &geo.metric, &f).unwrap();
        let expect = geo.metric.scale(0.5);
        assert!(b.sub(&expect).unwrap().max_abs() < 1e-4);
        let rs = MetricState::Round(RoundFamilyState::new(2, -1, 2.0).unwrap()).geometry().unwrap();
        let f0 = Tensor::constant(rs.layout, 0.0);
        let b = box_f(&rs, &rs.metric, &f0).unwrap();
        assert!(b.sub(&rs.metric.scale(0.5)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn inner_products() {
        let st = torus(16, 2);
        let geo = st.geometry().unwrap();
        let m = geo.measure(None).unwrap();
        let u = random_sym(&st, 1.0, 2, 41);
        let w = random_sym(&st, 1.0, 2, 42);
        let uu = inner(&geo, &u, &u, &m).unwrap();
        let ww = inner(&geo, &w, &w, &m).unwrap();
        let uw = inner(&geo, &u, &w, &m).unwrap();
        assert!(uu > 0.0 && uw.abs() <= (uu * ww).sqrt());
        let flat = MetricState::Torus(TorusGridState::flat(8, 1.0, 0, 2)).geometry().unwrap();
        let f = Tensor::constant(flat.layout, flat.total_volume().ln());
        let one = Tensor::constant(flat.layout, 1.0);
        assert!((integrate(&one, &flat.measure(Some(&f)).unwrap()).unwrap() - 1.0).abs() < 1e-14);
        let other = MetricState::Torus(TorusGridState::flat(12, 1.0, 0, 2)).geometry().unwrap();
        assert!(inner_pointwise(&flat, &one, &Tensor::constant(other.layout, 1.0)).is_err());
    }
}
