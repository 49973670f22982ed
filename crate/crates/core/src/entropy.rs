//! The entropy `mu_sigma`, its minimizing potential and the derived fields.
//!
//! Minimization runs in the variable `w = e^{-f/2}`, where the functional reads
//! `int (4 |grad w|^2 + R w^2 + 2 sigma w^2 log w) dV` under `int w^2 dV = 1`
//! and the Euler-Lagrange equation is `-4 Delta w + R w + 2 sigma w log w = mu w`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arena::{Geometry, MetricState};
use crate::calculus::{grad, hess, inner_pointwise, laplacian};
use crate::elliptic::{ScalarOperator, ShiftedSystem};
use crate::error::{Error, Result};
use crate::tensor::{ScalarField, SymTensorField, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of each inverse-iteration update that is accepted.
    pub damping: f64,
    pub w_floor: f64,
    /// Extra randomized starts used to detect distinct critical points.
    pub multistart: usize,
}

impl SolverConfig {
    pub fn for_state(state: &MetricState) -> Self {
        let tol = match state {
            MetricState::Round(_) => 1e-9,
            _ => 1e-7,
        };
        SolverConfig {
            tol,
            max_iter: 500,
            damping: 1.0,
            w_floor: 1e-12,
            multistart: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.damping > 0.0 && self.damping <= 1.0) || !(self.w_floor > 0.0) {
            return Err(Error::InvalidState(format!(
                "solver config out of range: tol {}, damping {}, w_floor {}",
                self.tol, self.damping, self.w_floor
            )));
        }
        Ok(())
    }
}

pub const MULTISTART_TOLERANCE: f64 = 1e-8;

/// Spectral shift of the inverse iteration above the current entropy estimate.
const INVERSE_SHIFT: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct EntropySolution {
    pub f: ScalarField,
    pub mu: f64,
    pub s: SymTensorField,
    /// `M^sigma` evaluated with the discretization the solver minimizes.
    pub mfield: ScalarField,
    pub el_residual: f64,
    pub iterations: usize,
    /// Some node was clipped at `w_floor` on the final iterate.
    pub floored: bool,
    /// Largest disagreement in `mu` across randomized starts, when requested.
    pub multistart_spread: Option<f64>,
}

impl EntropySolution {
    pub fn multistart_disagrees(&self) -> bool {
        self.multistart_spread.is_some_and(|s| s > MULTISTART_TOLERANCE)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralGapReport {
    pub lambda_g: f64,
    pub gap: f64,
    pub eigenfield: ScalarField,
    /// Azimuthal wave number of the eigenfield on the sphere arena.
    pub mode: usize,
    /// False when only a lower bound is available.
    pub exact: bool,
    pub residual: f64,
}

/// `S^sigma = Rc + nabla nabla f + (sigma / 2) g`.
pub fn s_sigma(geo: &Geometry, f: &ScalarField) -> Result<SymTensorField> {
    let mut s = geo.curvature.rc.clone();
    s.axpy(1.0, &hess(geo, f)?);
    s.axpy(0.5 * geo.sigma, &geo.metric);
    Ok(s.symmetrize())
}

/// `M^sigma = 2 Delta f - |nabla f|^2 + R - sigma f`.
pub fn m_sigma(geo: &Geometry, f: &ScalarField) -> Result<ScalarField> {
    let lap = laplacian(geo, f)?;
    let df = grad(geo, f)?;
    let g2 = inner_pointwise(geo, &df, &df)?;
    let r = geo.curvature.r.values();
    let v = (0..geo.nodes())
        .map(|p| 2.0 * lap.values()[p] - g2.values()[p] + r[p] - geo.sigma * f.values()[p])
        .collect();
    Ok(Tensor::scalar(geo.layout, v))
}

struct Problem {
    op: ScalarOperator,
    r: Vec<f64>,
    sigma: f64,
}

impl Problem {
    fn new(geo: &Geometry) -> Self {
        Problem {
            op: ScalarOperator::new(geo, None),
            r: geo.curvature.r.values().to_vec(),
            sigma: geo.sigma,
        }
    }

    fn potential(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.r)
            .map(|(x, r)| r + 2.0 * self.sigma * x.ln())
            .collect()
    }

    fn functional(&self, w: &[f64]) -> f64 {
        let v = self.potential(w);
        let pot: f64 = (0..w.len()).map(|p| self.op.mass[p] * v[p] * w[p] * w[p]).sum();
        4.0 * self.op.dirichlet(w) + pot
    }

    /// `(-4 Delta w + V w) / w` node-wise.
    fn mfield(&self, w: &[f64]) -> Vec<f64> {
        let k = self.op.stiffness(w);
        let v = self.potential(w);
        (0..w.len())
            .map(|p| (4.0 * k[p] / self.op.mass[p] + v[p] * w[p]) / w[p])
            .collect()
    }

    fn residual(&self, w: &[f64], mu: f64) -> f64 {
        let m = self.mfield(w);
        (0..w.len())
            .map(|p| self.op.mass[p] * ((m[p] - mu) * w[p]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn normalize(&self, w: &mut [f64]) {
        let s = self.op.mass_dot(w, w).sqrt();
        w.iter_mut().for_each(|x| *x /= s);
    }

    fn minimize(&self, mut w: Vec<f64>, cfg: &SolverConfig) -> Result<(Vec<f64>, f64, f64, usize, bool)> {
        let nodes = w.len();
        let mut floored = false;
        for x in w.iter_mut() {
            *x = x.max(cfg.w_floor);
        }
        self.normalize(&mut w);
        for it in 0..=cfg.max_iter {
            let mu = self.functional(&w);
            let res = self.residual(&w, mu);
            if !mu.is_finite() || !res.is_finite() {
                return Err(Error::NonFinite("entropy iterate"));
            }
            if res <= cfg.tol {
                return Ok((w, mu, res, it, floored));
            }
            if it == cfg.max_iter {
                return Err(Error::NonConvergence {
                    what: "entropy minimization",
                    iterations: it,
                    residual: res,
                });
            }
            let v = self.potential(&w);
            let rhs: Vec<f64> = w.iter().map(|x| 0.25 * x).collect();
            let cg_tol = (1e-2 * res).clamp(1e-14, 1e-6);
            let solve = |shift: &[f64]| {
                ShiftedSystem {
                    op: &self.op,
                    shift,
                    mean_zero: false,
                    tol: cg_tol,
                    max_iter: 4 * nodes + 50,
                }
                .solve(&rhs, Some(&w))
            };
            let shift: Vec<f64> = v.iter().map(|x| 0.25 * (x - mu + INVERSE_SHIFT)).collect();
            let y = match solve(&shift) {
                Ok((y, _)) => y,
                Err(Error::NotInvertible { .. }) => {
                    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
                    let safe: Vec<f64> = v.iter().map(|x| 0.25 * (x - vmin + 1.0)).collect();
                    solve(&safe)?.0
                }
                Err(e) => return Err(e),
            };
            let mut y = y;
            self.normalize(&mut y);
            floored = false;
            for p in 0..nodes {
                let mut x = (1.0 - cfg.damping) * w[p] + cfg.damping * y[p];
                if x < cfg.w_floor {
                    x = cfg.w_floor;
                    floored = true;
                }
                w[p] = x;
            }
            self.normalize(&mut w);
        }
        unreachable!()
    }
}

/// `W_sigma(g, -2 log w)` for `w > 0` with `int w^2 dV = 1`.
pub fn w_functional(state: &MetricState, w: &ScalarField) -> Result<f64> {
    let geo = state.geometry()?;
    geo.layout.check(&w.layout())?;
    let vals = w.values();
    if let Some(min) = vals.iter().cloned().reduce(f64::min) {
        if !(min > 0.0) {
            return Err(Error::NonPositive { min });
        }
    }
    let pb = Problem::new(&geo);
    let norm = pb.op.mass_dot(vals, vals);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("w is not normalized: int w^2 dV = {norm}")));
    }
    Ok(pb.functional(vals))
}

/// Minimize the entropy functional; `warm_start` is a previous potential `f`.
pub fn minimize_entropy(state: &MetricState, config: &SolverConfig, warm_start: Option<&ScalarField>) -> Result<EntropySolution> {
    config.validate()?;
    let geo = state.geometry()?;
    minimize_on(&geo, config, warm_start)
}

pub fn minimize_on(geo: &Geometry, config: &SolverConfig, warm_start: Option<&ScalarField>) -> Result<EntropySolution> {
    let pb = Problem::new(geo);
    let nodes = geo.nodes();
    let w0: Vec<f64> = match warm_start {
        Some(f) => {
            geo.layout.check(&f.layout())?;
            f.values().iter().map(|x| (-0.5 * x).exp()).collect()
        }
        None => vec![1.0; nodes],
    };
    let (w, mu, res, iterations, floored) = pb.minimize(w0, config)?;

    let multistart_spread = if config.multistart > 0 && geo.sigma < 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut spread: f64 = 0.0;
        for _ in 0..config.multistart {
            let start: Vec<f64> = w.iter().map(|x| x * (1.0 + 0.3 * rng.gen_range(-1.0..1.0))).collect();
            let (_, mu_k, _, _, _) = pb.minimize(start, config)?;
            spread = spread.max((mu_k - mu).abs());
        }
        Some(spread)
    } else {
        None
    };

    let f = Tensor::scalar(geo.layout, w.iter().map(|x| -2.0 * x.ln()).collect());
    let mfield = Tensor::scalar(geo.layout, pb.mfield(&w));
    let s = s_sigma(geo, &f)?;
    Ok(EntropySolution {
        f,
        mu,
        s,
        mfield,
        el_residual: res,
        iterations,
        floored,
        multistart_spread,
    })
}

/// `L^2(e^{-f} dV)` gradient of `mu_sigma`, which is `-S^sigma(g, f_g)`.
pub fn grad_mu(state: &MetricState, config: &SolverConfig) -> Result<SymTensorField> {
    Ok(minimize_entropy(state, config, None)?.s.scale(-1.0))
}

/// `H` from `Delta_f H - (sigma / 2) H = -|S|^2 + ||S||^2`, weighted mean zero.
pub fn h_field(geo: &Geometry, sol: &EntropySolution) -> Result<ScalarField> {
    let rho: Vec<f64> = sol.f.values().iter().map(|x| (-x).exp()).collect();
    let op = ScalarOperator::new(geo, Some(&rho));
    let s2 = inner_pointwise(geo, &sol.s, &sol.s)?;
    let mean = op.mean(s2.values());
    let rhs: Vec<f64> = s2.values().iter().map(|x| x - mean).collect();
    let scale = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale <= 1e-14 * mean.abs().max(1e-300) || geo.nodes() == 1 {
        return Ok(Tensor::constant(geo.layout, 0.0));
    }
    let shift = vec![0.5 * geo.sigma; geo.nodes()];
    let sys = ShiftedSystem {
        op: &op,
        shift: &shift,
        mean_zero: true,
        tol: 1e-12,
        max_iter: 4 * geo.nodes() + 50,
    };
    let (h, _) = sys.solve(&rhs, None)?;
    Ok(Tensor::scalar(geo.layout, h))
}

fn rayleigh(op: &ScalarOperator, u: &[f64]) -> f64 {
    op.dirichlet(u) / op.mass_dot(u, u)
}

const EIG_BLOCK: usize = 8;
const EIG_SWEEPS: usize = 300;

/// Mass-orthonormalize the columns in place; columns that collapse are dropped.
fn orthonormalize(op: &ScalarOperator, cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols.drain(..) {
        let before = op.mass_dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = op.mass_dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = op.mass_dot(&v, &v).sqrt();
        if nrm > 1e-10 * before && nrm > 0.0 {
            v.iter_mut().for_each(|x| *x /= nrm);
            out.push(v);
        }
    }
    *cols = out;
}

/// Block inverse iteration with Rayleigh-Ritz; robust to clustered eigenvalues.
fn lowest_mode(op: &ScalarOperator, mean_zero: bool, seed: u64) -> Result<(f64, Vec<f64>, f64)> {
    let nodes = op.nodes();
    let width = EIG_BLOCK.min(nodes - usize::from(mean_zero)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block: Vec<Vec<f64>> = (0..width)
        .map(|_| {
            let mut u: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if mean_zero {
                op.project_mean_zero(&mut u);
            }
            u
        })
        .collect();
    orthonormalize(op, &mut block);
    let zero = vec![1e-12; nodes];
    let sys = ShiftedSystem {
        op,
        shift: &zero,
        mean_zero,
        tol: 1e-12,
        max_iter: 4 * nodes + 50,
    };
    let mut ritz: Vec<f64> = vec![1.0; block.len()];
    let mut res = f64::INFINITY;
    for _ in 0..EIG_SWEEPS {
        let mut next = Vec::with_capacity(block.len());
        for (u, &l) in block.iter().zip(&ritz) {
            let guess: Vec<f64> = u.iter().map(|x| x / l.max(1e-12)).collect();
            let (mut y, _) = sys.solve(u, Some(&guess))?;
            if mean_zero {
                op.project_mean_zero(&mut y);
            }
            next.push(y);
        }
        orthonormalize(op, &mut next);
        let b = next.len();
        let k: Vec<Vec<f64>> = next.iter().map(|v| op.stiffness(v)).collect();
        let a = DMatrix::from_fn(b, b, |i, j| {
            0.5 * (k[i].iter().zip(&next[j]).map(|(x, y)| x * y).sum::<f64>()
                + k[j].iter().zip(&next[i]).map(|(x, y)| x * y).sum::<f64>())
        });
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        block = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; nodes];
                for (r, col) in next.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    v.iter_mut().zip(col).for_each(|(a, b)| *a += w * b);
                }
                v
            })
            .collect();
        ritz = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let (u, lam) = (&block[0], rayleigh(op, &block[0]));
        let lap = op.laplacian(u);
        res = (0..nodes)
            .map(|p| op.mass[p] * (lap[p] + lam * u[p]).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= 1e-8 * lam.abs().max(1.0) {
            return Ok((lam, block.swap_remove(0), res));
        }
    }
    Err(Error::NonConvergence {
        what: "weighted eigensolver",
        iterations: EIG_SWEEPS,
        residual: res,
    })
}

/// Lowest nonzero eigenvalue of `-Delta_f` and the gap `lambda + sigma / 2`.
pub fn spectral_gap(state: &MetricState, f: &ScalarField) -> Result<SpectralGapReport> {
    let geo = state.geometry()?;
    geo.layout.check(&f.layout())?;
    let sigma = geo.sigma;
    if let MetricState::Round(s) = state {
        let eig = s.first_eigenvalue();
        let exact = eig.is_some();
        let lambda_g = eig.unwrap_or(0.0);
        return Ok(SpectralGapReport {
            lambda_g,
            gap: lambda_g + 0.5 * sigma,
            eigenfield: Tensor::constant(geo.layout, 0.0),
            mode: 0,
            exact,
            residual: 0.0,
        });
    }
    let rho: Vec<f64> = f.values().iter().map(|x| (-x).exp()).collect();
    let op = ScalarOperator::new(&geo, Some(&rho));
    let (mut lam, mut u, mut res) = lowest_mode(&op, true, 17)?;
    let mut mode = 0;
    if matches!(state, MetricState::Sphere(_)) {
        let op1 = op.clone().with_mode(1);
        let (l1, u1, r1) = lowest_mode(&op1, false, 18)?;
        if l1 < lam {
            lam = l1;
            u = u1;
            res = r1;
            mode = 1;
        }
    }
    Ok(SpectralGapReport {
        lambda_g: lam,
        gap: lam + 0.5 * sigma,
        eigenfield: Tensor::scalar(geo.layout, u),
        mode,
        exact: true,
        residual: res,
    })
}

/// Rayleigh quotient of a field for the weighted Laplacian of `f`.
pub fn weighted_rayleigh(state: &MetricState, f: &ScalarField, u: &ScalarField, mode: usize) -> Result<f64> {
    let geo = state.geometry()?;
    let rho: Vec<f64> = f.values().iter().map(|x| (-x).exp()).collect();
    let op = ScalarOperator::new(&geo, Some(&rho)).with_mode(mode);
    Ok(rayleigh(&op, u.values()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;


    use super::*;
    use crate::arena::{AxisymSphereState, RoundFamilyState, TorusGridState};
    use crate::calculus::{div_f, inner, trace2};
    use crate::perturb::{random_scalar, random_sym, torus_conformal_mode, torus_random_metric};

    fn tight(state: &MetricState) -> SolverConfig {
        SolverConfig {
            tol: 1e-11,
            ..SolverConfig::for_state(state)
        }
    }

    #[test]
    fn flat_torus_is_trivial() {
        let st = MetricState::Torus(TorusGridState::flat(16, 2.0 * PI, 0, 4));
        let sol = minimize_entropy(&st, &SolverConfig::for_state(&st), None).unwrap();
        assert!(sol.mu.abs() < 1e-12);
        let vol = 4.0 * PI * PI;
        assert!(sol.f.values().iter().all(|f| (f - vol.ln()).abs() < 1e-12));
        let w = Tensor::constant(st.layout(), vol.powf(-0.5));
        assert!(w_functional(&st, &w).unwrap().abs() < 1e-13);
    }

    #[test]
    fn round_entropy_closed_form() {
        let rs = RoundFamilyState::new(2, -1, 2.0).unwrap();
        let expect = 0.5 + (16.0 * PI).ln();
        assert!((rs.entropy() - expect).abs() < 1e-12);
        let st = MetricState::Round(rs);
        let sol = minimize_entropy(&st, &SolverConfig::for_state(&st), None).unwrap();
        assert!((sol.mu - expect).abs() < 1e-12);
        // The sphere grid at c = 1.5, inside the regular neighborhood (c = 2 sits
        // exactly where the gap closes), from a random start.
        let c = 1.5;
        let expect = 1.0 / c + (8.0 * PI * c).ln();
        let sp = MetricState::Sphere(AxisymSphereState::round(96, -1, 4, c));
        let start = random_scalar(&sp, 0.5, 3, 4).map(|x| x + (8.0 * PI * c).ln());
        let sol = minimize_entropy(&sp, &SolverConfig::for_state(&sp), Some(&start)).unwrap();
        assert!((sol.mu - expect).abs() < 1e-3, "{}", sol.mu);
        let spread = sol.f.values().iter().fold(0.0f64, |m, f| m.max((f - (8.0 * PI * c).ln()).abs()));
        assert!(spread < 1e-3, "{spread}");
    }

    #[test]
    fn sigma_zero_entropy_is_lowest_eigenvalue() {
        let st = MetricState::Torus(torus_conformal_mode(16, 2.0 * PI, 0, 4, 0.05, (1, 0)));
        let sol = minimize_entropy(&st, &tight(&st), None).unwrap();
        let geo = st.geometry().unwrap();
        let op = ScalarOperator::new(&geo, None);
        let n = geo.nodes();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let k = op.stiffness(&e);
            for i in 0..n {
                a[(i, j)] = 4.0 * k[i] / (op.mass[i] * op.mass[j]).sqrt();
            }
            a[(j, j)] += geo.curvature.r.values()[j];
        }
        let a = (&a + a.transpose()) * 0.5;
        let lowest = SymmetricEigen::new(a).eigenvalues.min();
        assert!((sol.mu - lowest).abs() < 1e-9, "{} vs {}", sol.mu, lowest);
        assert!(sol.mu < 0.0);
    }

    #[test]
    fn minimizer_invariants() {
        let st = MetricState::Torus(torus_random_metric(24, 2.0 * PI, 0, 4, 0.1, 2, 3));
        let cfg = SolverConfig::for_state(&st);
        let sol = minimize_entropy(&st, &cfg, None).unwrap();
        let geo = st.geometry().unwrap();
        let m = geo.measure(Some(&sol.f)).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-10);
        let dev = sol.mfield.map(|x| x - sol.mu);
        let l2 = inner(&geo, &dev, &dev, &m).unwrap().sqrt();
        assert!(l2 <= 10.0 * cfg.tol);

        // Perturbing the minimizing w raises the functional quadratically.
        let w: Vec<f64> = sol.f.values().iter().map(|f| (-0.5 * f).exp()).collect();
        let phi = random_scalar(&st, 1.0, 2, 9);
        let bump = |eps: f64| {
            let mut v: Vec<f64> = w.iter().zip(phi.values()).map(|(a, b)| a * (1.0 + eps * b)).collect();
            let nrm: f64 = v.iter().zip(&geo.volume).map(|(x, m)| x * x * m).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
            w_functional(&st, &Tensor::scalar(geo.layout, v)).unwrap() - sol.mu
        };
        let (d1, d2) = (bump(1e-2), bump(2e-2));
        assert!(d1 > 0.0 && d2 > 0.0);
        assert!(((d2 / d1) - 4.0).abs() < 0.2, "{d1} {d2}");
    }

    #[test]
    fn trace_and_constant_potential_identities() {
        let st = MetricState::Torus(torus_random_metric(16, 2.0 * PI, 0, 2, 0.1, 2, 5));
        let geo = st.geometry().unwrap();
        let f = random_scalar(&st, 0.4, 2, 6);
        let s = s_sigma(&geo, &f).unwrap();
        let tr = trace2(&geo, &s).unwrap();
        let lap = laplacian(&geo, &f).unwrap();
        for p in 0..geo.nodes() {
            let expect = geo.curvature.r.values()[p] + lap.values()[p] + geo.sigma;
            assert!((tr.values()[p] - expect).abs() < 1e-10);
        }
        let c = Tensor::constant(geo.layout, 0.7);
        let s0 = s_sigma(&geo, &c).unwrap();
        assert!(s0.sub(&geo.curvature.rc).unwrap().max_abs() < 1e-12);
        let m0 = m_sigma(&geo, &c).unwrap();
        assert!(m0.sub(&geo.curvature.r).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn weighted_bianchi_converges() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let st = MetricState::Torus(torus_random_metric(n, 2.0 * PI, 0, 4, 0.15, 2, 8));
                let geo = st.geometry().unwrap();
                let f = random_scalar(&st, 0.5, 2, 2);
                let lhs = div_f(&geo, &s_sigma(&geo, &f).unwrap(), &f).unwrap();
                let rhs = grad(&geo, &m_sigma(&geo, &f).unwrap()).unwrap().scale(0.5);
                lhs.sub(&rhs).unwrap().max_abs()
            })
            .collect();
        let rate = (errs[1] / errs[2]).log2();
        assert!((rate - 4.0).abs() < 0.5, "{errs:?}");
    }

    #[test]
    fn gradient_matches_directional_derivative() {
        let st = MetricState::Torus(torus_random_metric(32, 2.0 * PI, 0, 4, 0.1, 1, 12));
        let cfg = tight(&st);
        let sol = minimize_entropy(&st, &cfg, None).unwrap();
        let geo = st.geometry().unwrap();
        let m = geo.measure(Some(&sol.f)).unwrap();
        for seed in 0..2 {
            let h = random_sym(&st, 1.0, 1, 40 + seed);
            let eps = 1e-4;
            let mu = |s: f64| minimize_entropy(&st.advanced(&h, s), &cfg, Some(&sol.f)).unwrap().mu;
            let fd = (mu(eps) - mu(-eps)) / (2.0 * eps);
            let pair = -inner(&geo, &sol.s, &h, &m).unwrap();
            assert!((fd - pair).abs() < 1e-3 * pair.abs().max(1e-3), "{fd} vs {pair}");
        }
        // Round family: d mu / dc against the pairing with gbar.
        let rs = RoundFamilyState::new(2, 1, 1.3).unwrap();
        let rst = MetricState::Round(rs.clone());
        let rsol = minimize_entropy(&rst, &SolverConfig::for_state(&rst), None).unwrap();
        let rgeo = rst.geometry().unwrap();
        let gbar = rgeo.metric.scale(1.0 / rs.c);
        let pair = -inner(&rgeo, &rsol.s, &gbar, &rgeo.measure(Some(&rsol.f)).unwrap()).unwrap();
        let e = 1e-5;
        let mut up = rs.clone();
        up.c += e;
        let mut dn = rs.clone();
        dn.c -= e;
        let fd = (up.entropy() - dn.entropy()) / (2.0 * e);
        assert!((fd - pair).abs() < 1e-8, "{fd} vs {pair}");
    }

    #[test]
    fn spectral_gaps() {
        let st = MetricState::Torus(TorusGridState::flat(64, 2.0 * PI, 0, 4));
        let f = Tensor::constant(st.layout(), (4.0 * PI * PI).ln());
        let rep = spectral_gap(&st, &f).unwrap();
        assert!((rep.lambda_g - 1.0).abs() < 1e-6, "{}", rep.lambda_g);
        let rq = weighted_rayleigh(&st, &f, &rep.eigenfield, rep.mode).unwrap();
        assert!((rq - rep.lambda_g).abs() < 1e-8);

        let sp = MetricState::Sphere(AxisymSphereState::round(64, -1, 2, 1.0));
        let sol = minimize_entropy(&sp, &SolverConfig::for_state(&sp), None).unwrap();
        let rep = spectral_gap(&sp, &sol.f).unwrap();
        assert!(rep.gap > 0.0 && (rep.lambda_g - 1.0).abs() < 1e-2, "{rep:?}");

        let rs = MetricState::Round(RoundFamilyState::new(2, -1, 1.0).unwrap());
        let rep = spectral_gap(&rs, &Tensor::constant(rs.layout(), 0.0)).unwrap();
        assert!((rep.gap - 0.5).abs() < 1e-14 && rep.exact);
    }

    #[test]
    fn h_vanishes_on_homogeneous_states() {
        for st in [
            MetricState::Round(RoundFamilyState::new(3, -1, 1.7).unwrap()),
            MetricState::Torus(TorusGridState::flat(16, 1.0, 0, 2)),
        ] {
            let geo = st.geometry().unwrap();
            let sol = minimize_entropy(&st, &SolverConfig::for_state(&st), None).unwrap();
            assert!(h_field(&geo, &sol).unwrap().max_abs() < 1e-12);
        }
    }
}
