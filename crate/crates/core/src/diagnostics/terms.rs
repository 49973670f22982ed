//! Pointwise tensor terms along the modified flow: `D_t`, the commutator
//! `[D_t, nabla]` and `D_t Rm`.

use crate::arena::Geometry;
use crate::calculus::{cov_deriv, mixed};
use crate::error::{Error, Result};
use crate::tensor::{ScalarField, SymTensorField, Tensor};

/// `sum_a S_{i_a p} T_{.. p ..}` over every slot of `T`.
pub fn s_action(geo: &Geometry, s: &SymTensorField, t: &Tensor) -> Result<Tensor> {
    let a = mixed(geo, s)?;
    let mut out = Tensor::zeros(geo.layout, t.rank());
    for slot in 0..t.rank() {
        out.axpy(1.0, &t.act_on_slot(&a, slot));
    }
    Ok(out)
}

/// Three-point derivative at the middle of `(t0, t1, t2)`, exact for quadratics.
pub fn centered_weights(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (h0, h1) = (t1 - t0, t2 - t1);
    [-h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1))]
}

/// Componentwise time derivative of a tensor sampled at three times.
pub fn time_derivative(times: [f64; 3], v: [&Tensor; 3]) -> Result<Tensor> {
    v[0].layout().check(&v[1].layout())?;
    v[1].layout().check(&v[2].layout())?;
    if !(times[0] < times[1] && times[1] < times[2]) {
        return Err(Error::InvalidState("time samples must increase".into()));
    }
    let w = centered_weights(times[0], times[1], times[2]);
    let mut out = v[0].scale(w[0]);
    out.axpy(w[1], v[1]);
    out.axpy(w[2], v[2]);
    Ok(out)
}

/// `D_t T = dT/dt + S * T` in every slot, given `T` and its componentwise rate.
pub fn dt_of(geo: &Geometry, s: &SymTensorField, value: &Tensor, dtdt: &Tensor) -> Result<Tensor> {
    dtdt.add(&s_action(geo, s, value)?)
}

fn acc(out: &mut [f64], c: f64, a: &[f64], b: &[f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o += c * x * y;
    }
}

fn acc1(out: &mut [f64], c: f64, a: &[f64]) {
    for (o, x) in out.iter_mut().zip(a) {
        *o += c * x;
    }
}

/// `[D_t, nabla_i] S_{jk}` from `S` and `ds = nabla S`.
pub fn commutator(geo: &Geometry, s: &SymTensorField, ds: &Tensor) -> Result<Tensor> {
    let n = geo.dim();
    let a = mixed(geo, s)?;
    let mut out = Tensor::zeros(geo.layout, 3);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let o = out.c_mut(&[i, j, k]);
                for l in 0..n {
                    acc(o, 1.0, a.c(&[i, l]), ds.c(&[l, j, k]));
                    acc(o, 1.0, a.c(&[k, l]), ds.c(&[j, i, l]));
                    acc(o, -1.0, a.c(&[k, l]), ds.c(&[l, i, j]));
                    acc(o, 1.0, a.c(&[j, l]), ds.c(&[k, i, l]));
                    acc(o, -1.0, a.c(&[j, l]), ds.c(&[l, i, k]));
                }
            }
        }
    }
    Ok(out)
}

/// `D_t R_{ijkl}` along the flow `dg/dt = -2S`, given `ds = nabla S`.
pub fn dt_rm(geo: &Geometry, s: &SymTensorField, ds: &Tensor) -> Result<Tensor> {
    let n = geo.dim();
    let dd = cov_deriv(geo, ds)?;
    let a = mixed(geo, s)?;
    let rm = &geo.curvature.rm;
    let mut out = Tensor::zeros(geo.layout, 4);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let o = out.c_mut(&[i, j, k, l]);
                    acc1(o, 1.0, dd.c(&[i, l, j, k]));
                    acc1(o, 1.0, dd.c(&[j, k, i, l]));
                    acc1(o, -1.0, dd.c(&[i, k, j, l]));
                    acc1(o, -1.0, dd.c(&[j, l, i, k]));
                    for p in 0..n {
                        acc(o, 1.0, a.c(&[i, p]), rm.c(&[p, j, k, l]));
                        acc(o, 1.0, a.c(&[j, p]), rm.c(&[i, p, k, l]));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Q(S, S) = Q_{iklj} S^{kl} S^{ij}` for a 4-tensor with the symmetries of `Rm`.
pub fn quartic(geo: &Geometry, q: &Tensor, s: &SymTensorField) -> Result<ScalarField> {
    let n = geo.dim();
    let up = s.act_on_slot(&geo.inv_metric, 0).act_on_slot(&geo.inv_metric, 1);
    let mut out = vec![0.0; geo.nodes()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let (q, a, b) = (q.c(&[i, k, l, j]), up.c(&[k, l]), up.c(&[i, j]));
                    for p in 0..out.len() {
                        out[p] += q[p] * a[p] * b[p];
                    }
                }
            }
        }
    }
    Ok(Tensor::scalar(geo.layout, out))
}
