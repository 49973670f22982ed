//! Conservative discretizations of scalar weighted Laplacians and their solvers.
//!
//! The operator is stored as a symmetric stiffness matrix `K` (a discrete
//! Dirichlet form `u^T K v ~ int rho <grad u, grad v> dV`) together with a
//! diagonal mass `M ~ rho dV`. Then `-Delta_rho u = M^{-1} K u`, which is
//! self-adjoint in the `M` inner product by construction.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::arena::{Geometry, MetricState};
use crate::error::{Error, Result};
use crate::tensor::Layout;

#[derive(Clone, Debug)]
enum Stencil {
    Round,
    Torus {
        n: usize,
        h: f64,
        order: usize,
        /// `A11` at the x-faces `(ix + 1/2, iy)`.
        ax: Vec<f64>,
        /// `A22` at the y-faces `(ix, iy + 1/2)`.
        ay: Vec<f64>,
        /// `A12` at the nodes.
        axy: Vec<f64>,
    },
    Sphere {
        /// Conductance of face `j + 1/2`, `j = 0..m-2`.
        face: Vec<f64>,
        /// Diagonal `M / (beta sin^2 theta)` carrying the azimuthal wave number.
        azimuthal: Vec<f64>,
        mode: usize,
    },
}

/// `-Delta_rho` with `rho = e^{-f}` (or `rho = 1`) on one arena.
#[derive(Clone, Debug)]
pub struct ScalarOperator {
    pub layout: Layout,
    pub mass: Vec<f64>,
    stencil: Stencil,
}

fn interp_face(order: usize, a: &[f64], idx: impl Fn(isize) -> usize, j: isize) -> f64 {
    if order == 4 {
        (-a[idx(j - 1)] + 9.0 * a[idx(j)] + 9.0 * a[idx(j + 1)] - a[idx(j + 2)]) / 16.0
    } else {
        0.5 * (a[idx(j)] + a[idx(j + 1)])
    }
}

impl ScalarOperator {
    pub fn new(geo: &Geometry, rho: Option<&[f64]>) -> Self {
        let nodes = geo.nodes();
        let rho: Vec<f64> = rho.map(|r| r.to_vec()).unwrap_or_else(|| vec![1.0; nodes]);
        let mass: Vec<f64> = geo.volume.iter().zip(&rho).map(|(v, r)| v * r).collect();
        let stencil = match &geo.state {
            MetricState::Round(_) => Stencil::Round,
            MetricState::Torus(s) => {
                let n = s.n;
                let h = s.spacing();
                let ginv = &geo.inv_metric;
                let sd: Vec<f64> = (0..nodes).map(|p| geo.volume[p] / (h * h)).collect();
                let coef = |i: usize, j: usize| -> Vec<f64> {
                    (0..nodes).map(|p| rho[p] * sd[p] * ginv.c(&[i, j])[p]).collect()
                };
                let a11 = coef(0, 0);
                let a22 = coef(1, 1);
                let axy = coef(0, 1);
                let wrap = |j: isize| j.rem_euclid(n as isize) as usize;
                let mut ax = vec![0.0; nodes];
                let mut ay = vec![0.0; nodes];
                for iy in 0..n {
                    for ix in 0..n {
                        ax[iy * n + ix] =
                            interp_face(s.stencil_order, &a11, |j| iy * n + wrap(j), ix as isize);
                        ay[iy * n + ix] =
                            interp_face(s.stencil_order, &a22, |j| wrap(j) * n + ix, iy as isize);
                    }
                }
                Stencil::Torus {
                    n,
                    h,
                    order: s.stencil_order,
                    ax,
                    ay,
                    axy,
                }
            }
            MetricState::Sphere(s) => {
                let m = s.m;
                let h = s.spacing();
                let q: Vec<f64> = (0..m).map(|j| rho[j] * (s.beta[j] / s.a[j]).sqrt()).collect();
                let face = (0..m - 1)
                    .map(|j| {
                        let tf = (j as f64 + 1.0) * h;
                        2.0 * PI * tf.sin() * 0.5 * (q[j] + q[j + 1]) / h
                    })
                    .collect();
                let azimuthal = (0..m)
                    .map(|j| mass[j] / (s.beta[j] * s.theta(j).sin().powi(2)))
                    .collect();
                Stencil::Sphere {
                    face,
                    azimuthal,
                    mode: 0,
                }
            }
        };
        ScalarOperator {
            layout: geo.layout,
            mass,
            stencil,
        }
    }

    /// Restrict to azimuthal wave number `m` (sphere only; ignored elsewhere).
    pub fn with_mode(mut self, m: usize) -> Self {
        if let Stencil::Sphere { mode, .. } = &mut self.stencil {
            *mode = m;
        }
        self
    }

    pub fn nodes(&self) -> usize {
        self.mass.len()
    }

    /// `K u`.
    pub fn stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        match &self.stencil {
            Stencil::Round => {}
            Stencil::Torus {
                n,
                h,
                order,
                ax,
                ay,
                axy,
            } => torus_stiffness(*n, *h, *order, ax, ay, axy, u, &mut out),
            Stencil::Sphere {
                face,
                azimuthal,
                mode,
            } => {
                for (j, c) in face.iter().enumerate() {
                    let flux = c * (u[j + 1] - u[j]);
                    out[j] -= flux;
                    out[j + 1] += flux;
                }
                if *mode > 0 {
                    let m2 = (*mode * *mode) as f64;
                    for j in 0..u.len() {
                        out[j] += m2 * azimuthal[j] * u[j];
                    }
                }
            }
        }
        out
    }

    /// `Delta_rho u = -M^{-1} K u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness(u)
            .iter()
            .zip(&self.mass)
            .map(|(k, m)| -k / m)
            .collect()
    }

    /// `u^T K u`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        self.stiffness(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn mass_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.mass).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn mean(&self, u: &[f64]) -> f64 {
        let tot: f64 = self.mass.iter().sum();
        u.iter().zip(&self.mass).map(|(a, m)| a * m).sum::<f64>() / tot
    }

    pub fn project_mean_zero(&self, u: &mut [f64]) {
        let c = self.mean(u);
        u.iter_mut().for_each(|x| *x -= c);
    }

    /// Norm `sqrt(r^T M^{-1} r)` of a residual in the dual (stiffness) space.
    fn dual_norm(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.mass).map(|(a, m)| a * a / m).sum::<f64>().sqrt()
    }
}

#[allow(clippy::too_many_arguments)]
fn torus_stiffness(n: usize, h: f64, order: usize, ax: &[f64], ay: &[f64], axy: &[f64], u: &[f64], out: &mut [f64]) {
    let w = |j: isize| j.rem_euclid(n as isize) as usize;
    let h2 = h * h;
    let mut fx = vec![0.0; n * n];
    let mut fy = vec![0.0; n * n];
    let mut dxu = vec![0.0; n * n];
    let mut dyu = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (ix as isize, iy as isize);
            let at = |xx: isize, yy: isize| u[w(yy) * n + w(xx)];
            let p = iy * n + ix;
            let (gx, gy) = if order == 4 {
                (
                    (at(x - 1, y) - 27.0 * at(x, y) + 27.0 * at(x + 1, y) - at(x + 2, y)) / (24.0 * h),
                    (at(x, y - 1) - 27.0 * at(x, y) + 27.0 * at(x, y + 1) - at(x, y + 2)) / (24.0 * h),
                )
            } else {
                ((at(x + 1, y) - at(x, y)) / h, (at(x, y + 1) - at(x, y)) / h)
            };
            fx[p] = ax[p] * gx;
            fy[p] = ay[p] * gy;
            let (cx, cy) = if order == 4 {
                (
                    (8.0 * (at(x + 1, y) - at(x - 1, y)) - (at(x + 2, y) - at(x - 2, y))) / (12.0 * h),
                    (8.0 * (at(x, y + 1) - at(x, y - 1)) - (at(x, y + 2) - at(x, y - 2))) / (12.0 * h),
                )
            } else {
                ((at(x + 1, y) - at(x - 1, y)) / (2.0 * h), (at(x, y + 1) - at(x, y - 1)) / (2.0 * h))
            };
            // Cross fluxes live on nodes: A12 d_y u feeds d_x, A12 d_x u feeds d_y.
            dxu[p] = axy[p] * cy;
            dyu[p] = axy[p] * cx;
        }
    }
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (ix as isize, iy as isize);
            let p = iy * n + ix;
            let fxa = |xx: isize| fx[iy * n + w(xx)];
            let fya = |yy: isize| fy[w(yy) * n + ix];
            let cxa = |xx: isize| dxu[iy * n + w(xx)];
            let cya = |yy: isize| dyu[w(yy) * n + ix];
            let (div_d, div_c) = if order == 4 {
                (
                    (fxa(x - 2) - 27.0 * fxa(x - 1) + 27.0 * fxa(x) - fxa(x + 1)
                        + fya(y - 2) - 27.0 * fya(y - 1) + 27.0 * fya(y) - fya(y + 1))
                        / (24.0 * h),
                    (8.0 * (cxa(x + 1) - cxa(x - 1)) - (cxa(x + 2) - cxa(x - 2))
                        + 8.0 * (cya(y + 1) - cya(y - 1)) - (cya(y + 2) - cya(y - 2)))
                        / (12.0 * h),
                )
            } else {
                (
                    (fxa(x) - fxa(x - 1) + fya(y) - fya(y - 1)) / h,
                    (cxa(x + 1) - cxa(x - 1) + cya(y + 1) - cya(y - 1)) / (2.0 * h),
                )
            };
            out[p] = -h2 * (div_d + div_c);
        }
    }
}

/// Symmetric positive approximate inverse of `K + M diag(c)`.
enum Preconditioner {
    Diagonal(Vec<f64>),
    Fourier {
        n: usize,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
        symbol: Vec<f64>,
    },
    Tridiagonal {
        lower: Vec<f64>,
        diag: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Preconditioner {
    fn build(op: &ScalarOperator, shift: &[f64]) -> Self {
        let nodes = op.nodes();
        match &op.stencil {
            Stencil::Round => Preconditioner::Diagonal(
                (0..nodes)
                    .map(|p| 1.0 / (op.mass[p] * shift[p].abs().max(1e-12)))
                    .collect(),
            ),
            Stencil::Torus {
                n, h, order, ax, ay, axy,
            } => {
                let n = *n;
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                let cst = |v: &[f64]| vec![mean(v); v.len()];
                let mut delta = vec![0.0; nodes];
                delta[0] = 1.0;
                let mut col = vec![0.0; nodes];
                torus_stiffness(n, *h, *order, &cst(ax), &cst(ay), &cst(axy), &delta, &mut col);
                let mut planner = FftPlanner::new();
                let fwd = planner.plan_fft_forward(n);
                let inv = planner.plan_fft_inverse(n);
                let mut buf: Vec<Complex<f64>> = col.iter().map(|&x| Complex::new(x, 0.0)).collect();
                fft2(&fwd, n, &mut buf);
                let mbar = mean(&op.mass);
                let sbar: f64 = (0..nodes).map(|p| op.mass[p] * shift[p]).sum::<f64>() / nodes as f64;
                let floor = 1e-3 * mbar;
                let symbol = buf
                    .iter()
                    .map(|z| {
                        let s = z.re.max(0.0) + sbar.max(floor);
                        1.0 / s
                    })
                    .collect();
                Preconditioner::Fourier {
                    n,
                    fwd,
                    inv,
                    symbol,
                }
            }
            Stencil::Sphere {
                face,
                azimuthal,
                mode,
            } => {
                let m2 = (*mode * *mode) as f64;
                let mut diag: Vec<f64> = (0..nodes)
                    .map(|j| {
                        let s = shift[j].max(1e-3);
                        op.mass[j] * s + m2 * azimuthal[j]
                    })
                    .collect();
                let mut lower = vec![0.0; nodes];
                let mut upper = vec![0.0; nodes];
                for (j, c) in face.iter().enumerate() {
                    diag[j] += c;
                    diag[j + 1] += c;
                    upper[j] = -c;
                    lower[j + 1] = -c;
                }
                Preconditioner::Tridiagonal { lower, diag, upper }
            }
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Diagonal(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            Preconditioner::Fourier {
                n,
                fwd,
                inv,
                symbol,
            } => {
                let mut buf: Vec<Complex<f64>> = r.iter().map(|&x| Complex::new(x, 0.0)).collect();
                fft2(fwd, *n, &mut buf);
                for (z, s) in buf.iter_mut().zip(symbol) {
                    *z *= s;
                }
                fft2(inv, *n, &mut buf);
                let scale = 1.0 / (n * n) as f64;
                buf.iter().map(|z| z.re * scale).collect()
            }
            Preconditioner::Tridiagonal { lower, diag, upper } => thomas(lower, diag, upper, r),
        }
    }
}

fn fft2(plan: &Arc<dyn Fft<f64>>, n: usize, buf: &mut [Complex<f64>]) {
    for row in buf.chunks_mut(n) {
        plan.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for ix in 0..n {
        for iy in 0..n {
            col[iy] = buf[iy * n + ix];
        }
        plan.process(&mut col);
        for iy in 0..n {
            buf[iy * n + ix] = col[iy];
        }
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = r[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / den;
        d[i] = (r[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Linear system `(-Delta_rho + c) x = b` with node-wise `c`.
pub struct ShiftedSystem<'a> {
    pub op: &'a ScalarOperator,
    pub shift: &'a [f64],
    /// Solve on weighted-mean-zero functions; requires a constant shift.
    pub mean_zero: bool,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

impl ShiftedSystem<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.op.stiffness(x);
        for p in 0..y.len() {
            y[p] += self.op.mass[p] * self.shift[p] * x[p];
        }
        y
    }

    /// Preconditioned conjugate gradients. A non-positive curvature direction
    /// means the shifted operator is not positive on the working subspace and
    /// is reported as [`Error::NotInvertible`].
    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let op = self.op;
        let nodes = op.nodes();
        let mut rhs: Vec<f64> = b.to_vec();
        if self.mean_zero {
            op.project_mean_zero(&mut rhs);
        }
        let rhs: Vec<f64> = rhs.iter().zip(&op.mass).map(|(x, m)| x * m).collect();
        let mut x: Vec<f64> = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; nodes]);
        if self.mean_zero {
            op.project_mean_zero(&mut x);
        }
        let bnorm = op.dual_norm(&rhs);
        if bnorm == 0.0 {
            return Ok((vec![0.0; nodes], SolveStats { iterations: 0, residual: 0.0 }));
        }
        let pre = Preconditioner::build(op, self.shift);
        let ax = self.apply(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let precond = |r: &[f64]| {
            let mut z = pre.apply(r);
            if self.mean_zero {
                op.project_mean_zero(&mut z);
            }
            z
        };
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut res = op.dual_norm(&r) / bnorm;
        for it in 0..self.max_iter {
            if res <= self.tol {
                return Ok((x, SolveStats { iterations: it, residual: res }));
            }
            let ap = self.apply(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                let pp = op.mass_dot(&p, &p);
                return Err(Error::NotInvertible { gap: pap / pp });
            }
            let alpha = rz / pap;
            for i in 0..nodes {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = op.dual_norm(&r) / bnorm;
            z = precond(&r);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..nodes {
                p[i] = z[i] + beta * p[i];
            }
        }
        if res <= self.tol {
            Ok((x, SolveStats { iterations: self.max_iter, residual: res }))
        } else {
            Err(Error::NonConvergence {
                what: "conjugate gradients",
                iterations: self.max_iter,
                residual: res,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{AxisymSphereState, TorusGridState};
    use crate::perturb::{random_scalar, torus_random_metric};

    fn rayleigh(op: &ScalarOperator, u: &[f64]) -> f64 {
        op.dirichlet(u) / op.mass_dot(u, u)
    }

    #[test]
    fn stiffness_symmetric_and_kills_constants() {
        for order in [2, 4] {
            let st = MetricState::Torus(torus_random_metric(16, 2.0 * PI, 0, order, 0.2, 2, 5));
            let geo = st.geometry().unwrap();
            let f = random_scalar(&st, 0.3, 2, 6);
            let rho: Vec<f64> = f.values().iter().map(|x| (-x).exp()).collect();
            let op = ScalarOperator::new(&geo, Some(&rho));
            let u = random_scalar(&st, 1.0, 3, 7).values().to_vec();
            let v = random_scalar(&st, 1.0, 3, 8).values().to_vec();
            let a: f64 = op.stiffness(&u).iter().zip(&v).map(|(x, y)| x * y).sum();
            let b: f64 = op.stiffness(&v).iter().zip(&u).map(|(x, y)| x * y).sum();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            assert!(op.stiffness(&vec![1.0; 256]).iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn flat_torus_lowest_mode() {
        let n = 64;
        let st = MetricState::Torus(TorusGridState::flat(n, 2.0 * PI, 0, 4));
        let op = ScalarOperator::new(&st.geometry().unwrap(), None);
        let h = 2.0 * PI / n as f64;
        let u: Vec<f64> = (0..n * n).map(|p| ((p % n) as f64 * h).sin()).collect();
        let lam = rayleigh(&op, &u);
        assert!((lam - 1.0).abs() < 1e-6, "{lam}");
        let lap = op.laplacian(&u);
        assert!(lap.iter().zip(&u).all(|(a, b)| (a + lam * b).abs() < 1e-12));
    }

    #[test]
    fn conformal_laplacian_converges() {
        for order in [2, 4] {
            let errs: Vec<f64> = [16, 32, 64]
                .iter()
                .map(|&n| {
                    let t = TorusGridState::conformal(n, 2.0 * PI, 0, order, |x, y| 0.2 * (x + y).sin());
                    let op = ScalarOperator::new(&MetricState::Torus(t.clone()).geometry().unwrap(), None);
                    let u: Vec<f64> = (0..n * n).map(|p| { let (x, y) = t.coords(p); x.cos() * (2.0 * y).sin() }).collect();
                    let lap = op.laplacian(&u);
                    (0..n * n)
                        .map(|p| {
                            let (x, y) = t.coords(p);
                            let exact = (-0.4 * (x + y).sin()).exp() * (-5.0 * u[p]);
                            (lap[p] - exact).abs()
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let rate = (errs[1] / errs[2]).log2();
            assert!((rate - order as f64).abs() < 0.5, "order {order}: {errs:?}");
        }
    }

    #[test]
    fn round_sphere_first_modes() {
        let c = 1.5;
        let st = AxisymSphereState::round(128, -1, 2, c);
        let geo = MetricState::Sphere(st.clone()).geometry().unwrap();
        let op = ScalarOperator::new(&geo, None);
        let u0: Vec<f64> = st.thetas().iter().map(|t| t.cos()).collect();
        let u1: Vec<f64> = st.thetas().iter().map(|t| t.sin()).collect();
        let l0 = rayleigh(&op, &u0);
        let l1 = rayleigh(&op.clone().with_mode(1), &u1);
        assert!((l0 - 1.0 / c).abs() < 1e-3, "{l0}");
        assert!((l1 - 1.0 / c).abs() < 1e-3, "{l1}");
    }

    #[test]
    fn solves_shifted_and_mean_zero_systems() {
        let st = MetricState::Torus(torus_random_metric(32, 2.0 * PI, 0, 4, 0.2, 2, 9));
        let geo = st.geometry().unwrap();
        let op = ScalarOperator::new(&geo, None);
        let exact = random_scalar(&st, 1.0, 3, 10).values().to_vec();
        let shift = vec![0.7; exact.len()];
        let b: Vec<f64> = op.laplacian(&exact).iter().zip(&exact).map(|(l, u)| -l + 0.7 * u).collect();
        let sys = ShiftedSystem { op: &op, shift: &shift, mean_zero: false, tol: 1e-12, max_iter: 500 };
        let (x, stats) = sys.solve(&b, None).unwrap();
        assert!(stats.iterations < 60, "{stats:?}");
        assert!(x.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-9));

        let zero = vec![0.0; exact.len()];
        let mut ez = exact.clone();
        op.project_mean_zero(&mut ez);
        let b: Vec<f64> = op.laplacian(&ez).iter().map(|l| -l).collect();
        let sys = ShiftedSystem { op: &op, shift: &zero, mean_zero: true, tol: 1e-12, max_iter: 500 };
        let (x, _) = sys.solve(&b, None).unwrap();
        assert!(x.iter().zip(&ez).all(|(a, b)| (a - b).abs() < 1e-9));

        let neg = vec![-5.0; exact.len()];
        let sys = ShiftedSystem { op: &op, shift: &neg, mean_zero: true, tol: 1e-12, max_iter: 500 };
        assert!(matches!(sys.solve(&b, None), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn sphere_solve_is_direct() {
        let st = MetricState::Sphere(crate::perturb::sphere_shape_mode(64, -1, 2, 1.0, 0.1));
        let geo = st.geometry().unwrap();
        let op = ScalarOperator::new(&geo, None);
        let exact = random_scalar(&st, 1.0, 4, 3).values().to_vec();
        let shift = vec![1.0; 64];
        let b: Vec<f64> = op.laplacian(&exact).iter().zip(&exact).map(|(l, u)| -l + u).collect();
        let sys = ShiftedSystem { op: &op, shift: &shift, mean_zero: false, tol: 1e-12, max_iter: 50 };
        let (x, stats) = sys.solve(&b, None).unwrap();
        assert!(stats.iterations <= 2);
        assert!(x.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
