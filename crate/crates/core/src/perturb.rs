//! Initial data and random test fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arena::{AxisymSphereState, MetricState, TorusGridState};
use crate::tensor::{ScalarField, SymTensorField, Tensor};

/// Random trigonometric polynomial on the `n x n` torus grid with wave numbers
/// up to `kmax` per axis and sup-norm at most `amp`.
pub fn torus_band_limited(n: usize, l: f64, kmax: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = l / n as f64;
    let mut u = vec![0.0; n * n];
    let mut total = 0.0;
    let k = kmax as i64;
    for kx in -k..=k {
        for ky in 0..=k {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let shift: f64 = rng.gen_range(0.0..2.0 * PI);
            total += a.abs() + b.abs();
            for iy in 0..n {
                for ix in 0..n {
                    let ph = 2.0 * PI * (kx as f64 * ix as f64 + ky as f64 * iy as f64) * h / l + shift;
                    u[iy * n + ix] += a * ph.cos() + b * ph.sin();
                }
            }
        }
    }
    let s = if total > 0.0 { amp / total } else { 0.0 };
    u.iter_mut().for_each(|x| *x *= s);
    u
}

/// Random even function of colatitude, `sum_k a_k cos(k theta)`, sup-norm at most `amp`.
pub fn sphere_band_limited(m: usize, kmax: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..kmax).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let total: f64 = coeffs.iter().map(|c: &f64| c.abs()).sum();
    (0..m)
        .map(|j| {
            let th = (j as f64 + 0.5) * PI / m as f64;
            let v: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * th).cos())
                .sum();
            if total > 0.0 {
                amp * v / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Single-mode conformal bump `exp(2 eps sin(2 pi (mx x + my y) / L)) delta`.
pub fn torus_conformal_mode(n: usize, l: f64, sigma: i8, order: usize, eps: f64, mode: (i32, i32)) -> TorusGridState {
    let (mx, my) = (mode.0 as f64, mode.1 as f64);
    TorusGridState::conformal(n, l, sigma, order, |x, y| {
        eps * (2.0 * PI * (mx * x + my * y) / l).sin()
    })
}

/// Single-mode traceless bump: `g = delta + eps s (dx^2 - dy^2)` with
/// `s = sin(2 pi (mx x + my y) / L)`.
pub fn torus_anisotropic_mode(n: usize, l: f64, sigma: i8, order: usize, eps: f64, mode: (i32, i32)) -> TorusGridState {
    let mut st = TorusGridState::flat(n, l, sigma, order);
    let (mx, my) = (mode.0 as f64, mode.1 as f64);
    for p in 0..n * n {
        let (x, y) = st.coords(p);
        let s = eps * (2.0 * PI * (mx * x + my * y) / l).sin();
        st.g11[p] += s;
        st.g22[p] -= s;
    }
    st
}

/// Band-limited random metric `exp(2u)(delta + anisotropic part)`.
pub fn torus_random_metric(n: usize, l: f64, sigma: i8, order: usize, amp: f64, kmax: usize, seed: u64) -> TorusGridState {
    let u = torus_band_limited(n, l, kmax, amp, seed);
    let v = torus_band_limited(n, l, kmax, 0.5 * amp, seed.wrapping_add(1));
    let w = torus_band_limited(n, l, kmax, 0.5 * amp, seed.wrapping_add(2));
    let mut st = TorusGridState::flat(n, l, sigma, order);
    for p in 0..n * n {
        let e = (2.0 * u[p]).exp();
        st.g11[p] = e * (1.0 + v[p]);
        st.g22[p] = e * (1.0 - v[p]);
        st.g12[p] = e * w[p];
    }
    st
}

/// Shape perturbation of the round sphere of scale `c`:
/// `a = 2c(1 + eps sin^2)`, `beta = 2c(1 - eps sin^2)`.
pub fn sphere_shape_mode(m: usize, sigma: i8, order: usize, c: f64, eps: f64) -> AxisymSphereState {
    let mut st = AxisymSphereState::round(m, sigma, order, c);
    for j in 0..m {
        let s2 = st.theta(j).sin().powi(2);
        st.a[j] = 2.0 * c * (1.0 + eps * s2);
        st.beta[j] = 2.0 * c * (1.0 - eps * s2);
    }
    st
}

/// Random scalar on any grid arena; constant zero on the round family.
pub fn random_scalar(state: &MetricState, amp: f64, kmax: usize, seed: u64) -> ScalarField {
    let layout = state.layout();
    let v = match state {
        MetricState::Round(_) => vec![0.0],
        MetricState::Torus(s) => torus_band_limited(s.n, s.l, kmax, amp, seed),
        MetricState::Sphere(s) => sphere_band_limited(s.m, kmax, amp, seed),
    };
    Tensor::scalar(layout, v)
}

/// Random smooth symmetric 2-tensor representable on the arena.
pub fn random_sym(state: &MetricState, amp: f64, kmax: usize, seed: u64) -> SymTensorField {
    let layout = state.layout();
    let n = layout.dim;
    let mut t = Tensor::zeros(layout, 2);
    match state {
        MetricState::Round(_) => {
            for i in 0..n {
                t.c_mut(&[i, i])[0] = amp;
            }
        }
        MetricState::Torus(_) => {
            let mut k = 0;
            for i in 0..n {
                for j in i..n {
                    let v = random_scalar(state, amp, kmax, seed.wrapping_add(k)).values().to_vec();
                    k += 1;
                    *t.c_mut(&[i, j]) = v.clone();
                    *t.c_mut(&[j, i]) = v;
                }
            }
        }
        MetricState::Sphere(s) => {
            let a = random_scalar(state, amp, kmax, seed).values().to_vec();
            let b = random_scalar(state, amp, kmax, seed.wrapping_add(1)).values().to_vec();
            // Smooth at the poles: the two diagonal entries agree there.
            let th = s.thetas();
            let b: Vec<f64> = (0..s.m).map(|j| a[j] + th[j].sin().powi(2) * b[j]).collect();
            *t.c_mut(&[0, 0]) = a;
            *t.c_mut(&[1, 1]) = b;
        }
    }
    t
}

/// Random covector field; the sphere keeps only the `d_theta` component,
/// which is odd through the poles.
pub fn random_covector(state: &MetricState, amp: f64, kmax: usize, seed: u64) -> Tensor {
    let layout = state.layout();
    let mut t = Tensor::zeros(layout, 1);
    match state {
        MetricState::Round(_) => {}
        MetricState::Torus(_) => {
            for i in 0..2 {
                *t.c_mut(&[i]) = random_scalar(state, amp, kmax, seed.wrapping_add(i as u64)).values().to_vec();
            }
        }
        MetricState::Sphere(s) => {
            let a = random_scalar(state, amp, kmax, seed).values().to_vec();
            let th = s.thetas();
            *t.c_mut(&[0]) = (0..s.m).map(|j| th[j].sin() * a[j]).collect();
        }
    }
    t
}
