//! Discrete geometries and the frame data every tensor operation needs.
//!
//! All three arenas are presented through [`Geometry`]: a frame in which the
//! metric has components `g_ij`, a frame-derivative operator on component
//! arrays, connection coefficients `w^m_{ki}` (with `nabla_{e_k} e_i = w^m_{ki} e_m`),
//! quadrature weights for `dV`, and the curvature bundle.

mod round;
mod sphere;
mod torus;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use round::{default_background_volume, unit_sphere_volume, RoundFamilyState};
pub use sphere::{AxisymSphereState, POLE_TOLERANCE};
pub use torus::{TorusGridState, DEGENERATE_DET};

use crate::error::{Error, Result};
use crate::stencil::{periodic_d1, reflective_d1};
use crate::tensor::{ArenaKind, Layout, ScalarField, SymTensorField, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arena", rename_all = "kebab-case")]
pub enum MetricState {
    Round(RoundFamilyState),
    Torus(TorusGridState),
    Sphere(AxisymSphereState),
}

impl MetricState {
    pub fn kind(&self) -> ArenaKind {
        match self {
            MetricState::Round(_) => ArenaKind::Round,
            MetricState::Torus(_) => ArenaKind::Torus,
            MetricState::Sphere(_) => ArenaKind::Sphere,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_i() as f64
    }

    pub fn sigma_i(&self) -> i8 {
        match self {
            MetricState::Round(s) => s.sigma,
            MetricState::Torus(s) => s.sigma,
            MetricState::Sphere(s) => s.sigma,
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            MetricState::Round(s) => Layout {
                kind: ArenaKind::Round,
                dim: s.n,
                nodes: 1,
            },
            MetricState::Torus(s) => Layout {
                kind: ArenaKind::Torus,
                dim: 2,
                nodes: s.n * s.n,
            },
            MetricState::Sphere(s) => Layout {
                kind: ArenaKind::Sphere,
                dim: 2,
                nodes: s.m,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.layout().dim
    }

    pub fn stencil_order(&self) -> usize {
        match self {
            MetricState::Round(_) => 0,
            MetricState::Torus(s) => s.stencil_order,
            MetricState::Sphere(s) => s.stencil_order,
        }
    }

    /// Grid spacing; `None` on the closed-form arena.
    pub fn spacing(&self) -> Option<f64> {
        match self {
            MetricState::Round(_) => None,
            MetricState::Torus(s) => Some(s.spacing()),
            MetricState::Sphere(s) => Some(s.spacing()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetricState::Round(s) => s.validate(),
            MetricState::Torus(s) => s.validate(),
            MetricState::Sphere(s) => s.validate(),
        }
    }

    /// Frame components of the metric.
    pub fn metric(&self) -> SymTensorField {
        let layout = self.layout();
        let n = layout.dim;
        let mut g = Tensor::zeros(layout, 2);
        match self {
            MetricState::Round(s) => {
                for i in 0..n {
                    g.c_mut(&[i, i])[0] = s.c;
                }
            }
            MetricState::Torus(s) => {
                *g.c_mut(&[0, 0]) = s.g11.clone();
                *g.c_mut(&[0, 1]) = s.g12.clone();
                *g.c_mut(&[1, 0]) = s.g12.clone();
                *g.c_mut(&[1, 1]) = s.g22.clone();
            }
            MetricState::Sphere(s) => {
                *g.c_mut(&[0, 0]) = s.a.clone();
                *g.c_mut(&[1, 1]) = s.beta.clone();
            }
        }
        g
    }

    /// New state with frame metric `g + dt * rate`. Components of `rate` that
    /// the arena cannot represent (anisotropy on the round family, the
    /// off-diagonal part on the sphere) are dropped.
    pub fn advanced(&self, rate: &SymTensorField, dt: f64) -> MetricState {
        match self {
            MetricState::Round(s) => {
                let n = s.n;
                let tr: f64 = (0..n).map(|i| rate.c(&[i, i])[0]).sum::<f64>() / n as f64;
                MetricState::Round(RoundFamilyState {
                    c: s.c + dt * tr,
                    ..s.clone()
                })
            }
            MetricState::Torus(s) => {
                let upd = |base: &[f64], r: &[f64]| -> Vec<f64> {
                    base.iter().zip(r).map(|(b, x)| b + dt * x).collect()
                };
                let r12: Vec<f64> = rate
                    .c(&[0, 1])
                    .iter()
                    .zip(rate.c(&[1, 0]))
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                MetricState::Torus(TorusGridState {
                    g11: upd(&s.g11, rate.c(&[0, 0])),
                    g12: upd(&s.g12, &r12),
                    g22: upd(&s.g22, rate.c(&[1, 1])),
                    ..s.clone()
                })
            }
            MetricState::Sphere(s) => {
                let upd = |base: &[f64], r: &[f64]| -> Vec<f64> {
                    base.iter().zip(r).map(|(b, x)| b + dt * x).collect()
                };
                MetricState::Sphere(AxisymSphereState {
                    a: upd(&s.a, rate.c(&[0, 0])),
                    beta: upd(&s.beta, rate.c(&[1, 1])),
                    ..s.clone()
                })
            }
        }
    }

    /// Multiply the metric by a constant factor.
    pub fn scaled(&self, factor: f64) -> MetricState {
        match self {
            MetricState::Round(s) => MetricState::Round(RoundFamilyState {
                c: s.c * factor,
                ..s.clone()
            }),
            MetricState::Torus(s) => MetricState::Torus(TorusGridState {
                g11: s.g11.iter().map(|x| x * factor).collect(),
                g12: s.g12.iter().map(|x| x * factor).collect(),
                g22: s.g22.iter().map(|x| x * factor).collect(),
                ..s.clone()
            }),
            MetricState::Sphere(s) => MetricState::Sphere(AxisymSphereState {
                a: s.a.iter().map(|x| x * factor).collect(),
                beta: s.beta.iter().map(|x| x * factor).collect(),
                ..s.clone()
            }),
        }
    }

    /// Largest eigenvalue of `g^{-1}` over the nodes; sets the parabolic step bound.
    pub fn max_inverse_metric(&self) -> f64 {
        match self {
            MetricState::Round(s) => 1.0 / s.c,
            MetricState::Torus(s) => (0..s.g11.len())
                .map(|k| {
                    let (a, b, c) = (s.g11[k], s.g12[k], s.g22[k]);
                    let tr = a + c;
                    let det = a * c - b * b;
                    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
                    let lmin = 0.5 * tr - disc;
                    1.0 / lmin
                })
                .fold(0.0, f64::max),
            MetricState::Sphere(s) => s
                .a
                .iter()
                .zip(&s.beta)
                .map(|(a, b)| (1.0 / a).max(1.0 / b))
                .fold(0.0, f64::max),
        }
    }

    /// Sup-norm distance between the stored metric arrays of two states.
    pub fn sup_distance(&self, other: &MetricState) -> f64 {
        let g = self.metric();
        let h = other.metric();
        if g.layout() != h.layout() {
            return f64::INFINITY;
        }
        g.sub(&h).map(|t| t.max_abs()).unwrap_or(f64::INFINITY)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        self.validate()?;
        match self {
            MetricState::Round(s) => Ok(round_geometry(self, s)),
            MetricState::Torus(s) => torus_geometry(self, s),
            MetricState::Sphere(s) => sphere_geometry(self, s),
        }
    }

    /// Total volume.
    pub fn volume(&self) -> Result<f64> {
        Ok(self.geometry()?.volume.iter().sum())
    }
}

/// Frame derivative of component arrays.
#[derive(Clone, Debug)]
pub enum FrameDerivative {
    /// Homogeneous fields: every frame derivative vanishes.
    Zero,
    Periodic { n: usize, h: f64, order: usize },
    /// Only `e_0 = d_theta` acts; `e_1 = d_phi / sin(theta)` annihilates axisymmetric data.
    Reflective { h: f64, order: usize },
}

impl FrameDerivative {
    /// `e_k(u)`; `parity` is the sign a component picks up under reflection
    /// through a pole, `(-1)^rank` in the sphere frame.
    pub fn apply(&self, k: usize, u: &[f64], parity: f64) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        match *self {
            FrameDerivative::Zero => {}
            FrameDerivative::Periodic { n, h, order } => periodic_d1(u, n, k, h, order, &mut out),
            FrameDerivative::Reflective { h, order } => {
                if k == 0 {
                    reflective_d1(u, h, order, parity, &mut out);
                }
            }
        }
        out
    }
}

/// `Rm`, `Rc` and `R` of a metric. Arenas have constant-curvature tensor
/// structure pointwise (dimension two, or space forms), so `Rm` is assembled
/// as `K (g_il g_jk - g_ik g_jl)` from the sectional curvature `K`, which keeps
/// its algebraic symmetries exact.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub rm: Tensor,
    pub rc: SymTensorField,
    pub r: ScalarField,
    pub sectional: Vec<f64>,
}

impl CurvatureBundle {
    fn from_sectional(metric: &Tensor, k: Vec<f64>) -> Self {
        let layout = metric.layout();
        let n = layout.dim;
        let mut rm = Tensor::zeros(layout, 4);
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let gil = metric.c(&[i, b]);
                        let gjk = metric.c(&[j, a]);
                        let gik = metric.c(&[i, a]);
                        let gjl = metric.c(&[j, b]);
                        let out = rm.c_mut(&[i, j, a, b]);
                        for p in 0..layout.nodes {
                            out[p] = k[p] * (gil[p] * gjk[p] - gik[p] * gjl[p]);
                        }
                    }
                }
            }
        }
        let nm1 = n as f64 - 1.0;
        let rc = metric.mul_scalar_field(&k.iter().map(|x| nm1 * x).collect::<Vec<_>>());
        let r = Tensor::scalar(layout, k.iter().map(|x| n as f64 * nm1 * x).collect());
        CurvatureBundle {
            rm,
            rc,
            r,
            sectional: k,
        }
    }

    /// Pointwise norm `|Rm|_g`; in dimension two this is `|R|`.
    pub fn rm_norm(&self, dim: usize) -> Vec<f64> {
        let nn = dim as f64;
        let factor = (2.0 * nn * (nn - 1.0)).sqrt();
        self.sectional.iter().map(|k| factor * k.abs()).collect()
    }
}

/// Node weights for `e^{-f} dV_g`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    pub layout: Layout,
    pub weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct Geometry {
    pub state: MetricState,
    pub layout: Layout,
    pub sigma: f64,
    pub metric: SymTensorField,
    pub inv_metric: SymTensorField,
    /// `w^m_{ki}` stored at `(m * n + k) * n + i`.
    pub connection: Vec<Vec<f64>>,
    pub curvature: CurvatureBundle,
    /// Quadrature weights for `dV_g`.
    pub volume: Vec<f64>,
    pub deriv: FrameDerivative,
}

impl Geometry {
    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn nodes(&self) -> usize {
        self.layout.nodes
    }

    pub fn conn(&self, m: usize, k: usize, i: usize) -> &[f64] {
        let n = self.layout.dim;
        &self.connection[(m * n + k) * n + i]
    }

    /// Parity of frame components of a rank-`r` field under pole reflection.
    pub fn parity(&self, rank: usize) -> f64 {
        if rank % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn measure(&self, f: Option<&ScalarField>) -> Result<WeightedMeasure> {
        let weights = match f {
            None => self.volume.clone(),
            Some(f) => {
                self.layout.check(&f.layout())?;
                self.volume
                    .iter()
                    .zip(f.values())
                    .map(|(v, x)| v * (-x).exp())
                    .collect()
            }
        };
        Ok(WeightedMeasure {
            layout: self.layout,
            weights,
        })
    }

    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }
}

fn inverse_2x2(metric: &Tensor) -> Result<(Tensor, Vec<f64>)> {
    let layout = metric.layout();
    let mut inv = Tensor::zeros(layout, 2);
    let mut sqrt_det = vec![0.0; layout.nodes];
    for p in 0..layout.nodes {
        let a = metric.c(&[0, 0])[p];
        let b = metric.c(&[0, 1])[p];
        let c = metric.c(&[1, 1])[p];
        let det = a * c - b * b;
        if !(det >= DEGENERATE_DET) || a <= 0.0 {
            return Err(Error::DegenerateMetric { node: p, det });
        }
        inv.c_mut(&[0, 0])[p] = c / det;
        inv.c_mut(&[0, 1])[p] = -b / det;
        inv.c_mut(&[1, 0])[p] = -b / det;
        inv.c_mut(&[1, 1])[p] = a / det;
        sqrt_det[p] = det.sqrt();
    }
    Ok((inv, sqrt_det))
}

fn round_geometry(state: &MetricState, s: &RoundFamilyState) -> Geometry {
    let layout = state.layout();
    let n = layout.dim;
    let metric = state.metric();
    let mut inv = Tensor::zeros(layout, 2);
    for i in 0..n {
        inv.c_mut(&[i, i])[0] = 1.0 / s.c;
    }
    let curvature = CurvatureBundle::from_sectional(&metric, vec![s.sectional()]);
    Geometry {
        state: state.clone(),
        layout,
        sigma: s.sigma_f(),
        metric,
        inv_metric: inv,
        connection: vec![vec![0.0]; n * n * n],
        curvature,
        volume: vec![s.volume()],
        deriv: FrameDerivative::Zero,
    }
}

fn torus_geometry(state: &MetricState, s: &TorusGridState) -> Result<Geometry> {
    let layout = state.layout();
    let nn = layout.nodes;
    let h = s.spacing();
    let deriv = FrameDerivative::Periodic {
        n: s.n,
        h,
        order: s.stencil_order,
    };
    let metric = state.metric();
    let (inv, sqrt_det) = inverse_2x2(&metric)?;
    // dg[(l * 2 + k) * 2 + i] = d_l g_{ki}
    let mut dg = vec![vec![0.0; nn]; 8];
    for l in 0..2 {
        for k in 0..2 {
            for i in 0..2 {
                dg[(l * 2 + k) * 2 + i] = deriv.apply(l, metric.c(&[k, i]), 1.0);
            }
        }
    }
    // Christoffel symbols of the second kind.
    let mut gamma = vec![vec![0.0; nn]; 8];
    for m in 0..2 {
        for k in 0..2 {
            for i in 0..2 {
                let out = &mut gamma[(m * 2 + k) * 2 + i];
                for l in 0..2 {
                    let gi = inv.c(&[m, l]);
                    let a = &dg[(k * 2 + l) * 2 + i];
                    let b = &dg[(i * 2 + l) * 2 + k];
                    let c = &dg[(l * 2 + k) * 2 + i];
                    for p in 0..nn {
                        out[p] += 0.5 * gi[p] * (a[p] + b[p] - c[p]);
                    }
                }
            }
        }
    }
    // Rc_jk = R^i_{ijk} = d_i G^i_jk - d_j G^i_ik + G^p_jk G^i_ip - G^p_ik G^i_jp
    let g_at = |m: usize, k: usize, i: usize| -> &Vec<f64> { &gamma[(m * 2 + k) * 2 + i] };
    let mut scalar = vec![0.0; nn];
    for j in 0..2 {
        for k in 0..2 {
            let mut rc = vec![0.0; nn];
            for i in 0..2 {
                let d1 = deriv.apply(i, g_at(i, j, k), 1.0);
                let d2 = deriv.apply(j, g_at(i, i, k), 1.0);
                for p in 0..nn {
                    rc[p] += d1[p] - d2[p];
                }
                for q in 0..2 {
                    let a = g_at(q, j, k);
                    let b = g_at(i, i, q);
                    let c = g_at(q, i, k);
                    let d = g_at(i, j, q);
                    for p in 0..nn {
                        rc[p] += a[p] * b[p] - c[p] * d[p];
                    }
                }
            }
            let gi = inv.c(&[j, k]);
            for p in 0..nn {
                scalar[p] += gi[p] * rc[p];
            }
        }
    }
    let k_sec: Vec<f64> = scalar.iter().map(|r| 0.5 * r).collect();
    let curvature = CurvatureBundle::from_sectional(&metric, k_sec);
    let volume = sqrt_det.iter().map(|d| d * h * h).collect();
    Ok(Geometry {
        state: state.clone(),
        layout,
        sigma: s.sigma as f64,
        metric,
        inv_metric: inv,
        connection: gamma,
        curvature,
        volume,
        deriv,
    })
}

fn sphere_geometry(state: &MetricState, s: &AxisymSphereState) -> Result<Geometry> {
    let layout = state.layout();
    let m = s.m;
    let h = s.spacing();
    let order = s.stencil_order;
    let deriv = FrameDerivative::Reflective { h, order };
    let metric = state.metric();
    let (inv, _) = inverse_2x2(&metric)?;
    let th = s.thetas();
    let da = deriv.apply(0, &s.a, 1.0);
    let db = deriv.apply(0, &s.beta, 1.0);
    let mut conn = vec![vec![0.0; m]; 8];
    let idx = |mm: usize, k: usize, i: usize| (mm * 2 + k) * 2 + i;
    for j in 0..m {
        let (a, b) = (s.a[j], s.beta[j]);
        let cot = th[j].cos() / th[j].sin();
        conn[idx(0, 0, 0)][j] = da[j] / (2.0 * a);
        conn[idx(1, 0, 1)][j] = db[j] / (2.0 * b);
        conn[idx(1, 1, 0)][j] = cot + db[j] / (2.0 * b);
        conn[idx(0, 1, 1)][j] = -(cot * b + 0.5 * db[j]) / a;
    }
    // K = -(1 / (sqrt(a) sin sqrt(beta))) d/dtheta[(cos sqrt(beta) + sin (sqrt beta)') / sqrt(a)]
    let sb: Vec<f64> = s.beta.iter().map(|b| b.sqrt()).collect();
    let dsb = deriv.apply(0, &sb, 1.0);
    let inner: Vec<f64> = (0..m)
        .map(|j| (th[j].cos() * sb[j] + th[j].sin() * dsb[j]) / s.a[j].sqrt())
        .collect();
    let dinner = deriv.apply(0, &inner, 1.0);
    let k_sec: Vec<f64> = (0..m)
        .map(|j| -dinner[j] / (s.a[j].sqrt() * th[j].sin() * sb[j]))
        .collect();
    let curvature = CurvatureBundle::from_sectional(&metric, k_sec);
    let volume = (0..m)
        .map(|j| {
            let cell = (th[j] - 0.5 * h).cos() - (th[j] + 0.5 * h).cos();
            2.0 * PI * (s.a[j] * s.beta[j]).sqrt() * cell
        })
        .collect();
    Ok(Geometry {
        state: state.clone(),
        layout,
        sigma: s.sigma as f64,
        metric,
        inv_metric: inv,
        connection: conn,
        curvature,
        volume,
        deriv,
    })
}
