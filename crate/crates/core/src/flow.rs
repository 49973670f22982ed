//! Normalized and modified Ricci flow, homothety conversion and gauge pairs.

use serde::{Deserialize, Serialize};

use crate::arena::{Geometry, MetricState};
use crate::calculus::inner;
use crate::entropy::{minimize_on, EntropySolution, SolverConfig};
use crate::error::{Error, Result};
use crate::tensor::{ScalarField, SymTensorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    Nrf,
    Mrf,
    /// Unnormalized Ricci flow, produced only by [`homothety_convert`].
    Unnormalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub dt_init: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Steps of size `dt_init` between recorded outputs.
    pub output_stride: usize,
    pub entropy_cfg: SolverConfig,
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::InvalidState("dt_init and t_end must be positive".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidState(format!("cfl_safety {} outside (0, 1]", self.cfl_safety)));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidState("output_stride must be positive".into()));
        }
        if self.kind == FlowKind::Unnormalized {
            return Err(Error::Unsupported("integrating the unnormalized flow directly".into()));
        }
        self.entropy_cfg.validate()
    }

    pub fn output_interval(&self) -> f64 {
        self.dt_init * self.output_stride as f64
    }

    pub fn n_outputs(&self) -> usize {
        (self.t_end / self.output_interval() - 1e-9).ceil() as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Smallest accepted step; `None` before the first step.
    pub min_dt: Option<f64>,
    pub max_pole_projection: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub states: Vec<MetricState>,
    /// One entropy solution per recorded time; empty for converted trajectories.
    pub entropy: Vec<EntropySolution>,
    pub stats: StepStats,
    pub abort: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn finished(&self, config: &FlowConfig) -> bool {
        self.abort.is_some() || self.len() > config.n_outputs()
    }
}

/// `-2 (Rc + (sigma / 2) g)`.
pub fn rhs_nrf(geo: &Geometry) -> SymTensorField {
    let mut s = geo.curvature.rc.clone();
    s.axpy(0.5 * geo.sigma, &geo.metric);
    s.scale(-2.0)
}

/// `-2 S^sigma(g, f_g)`.
pub fn rhs_mrf(sol: &EntropySolution) -> SymTensorField {
    sol.s.scale(-2.0)
}

/// Largest stable step for the parabolic system on the current metric.
pub fn cfl_limit(state: &MetricState, cfl_safety: f64) -> f64 {
    match state.spacing() {
        None => f64::INFINITY,
        Some(h) => cfl_safety * h * h / (4.0 * state.max_inverse_metric()),
    }
}

fn rate(state: &MetricState, kind: FlowKind, cfg: &SolverConfig, warm: Option<&ScalarField>) -> Result<(SymTensorField, Option<EntropySolution>)> {
    let geo = state.geometry()?;
    match kind {
        FlowKind::Nrf => Ok((rhs_nrf(&geo), None)),
        _ => {
            let sol = minimize_on(&geo, cfg, warm)?;
            Ok((rhs_mrf(&sol), Some(sol)))
        }
    }
}

/// One classical RK4 step of size `dt`. For the modified flow `entropy` is the
/// converged solution at `state`; it seeds every stage solve.
pub fn step(state: &MetricState, dt: f64, kind: FlowKind, cfg: &SolverConfig, entropy: Option<&EntropySolution>) -> Result<(MetricState, f64)> {
    let warm = entropy.map(|e| &e.f);
    let k1 = match (kind, entropy) {
        (FlowKind::Mrf, Some(sol)) => rhs_mrf(sol),
        _ => rate(state, kind, cfg, warm)?.0,
    };
    if k1.max_abs() == 0.0 {
        return Ok((state.clone(), dt));
    }
    let s2 = state.advanced(&k1, 0.5 * dt);
    let k2 = rate(&s2, kind, cfg, warm)?.0;
    let s3 = state.advanced(&k2, 0.5 * dt);
    let k3 = rate(&s3, kind, cfg, warm)?.0;
    let s4 = state.advanced(&k3, dt);
    let k4 = rate(&s4, kind, cfg, warm)?.0;
    let mut total = k1;
    total.axpy(2.0, &k2);
    total.axpy(2.0, &k3);
    total.axpy(1.0, &k4);
    let next = state.advanced(&total.scale(1.0 / 6.0), dt);
    Ok((next, dt))
}

fn project(state: MetricState, stats: &mut StepStats) -> MetricState {
    match state {
        MetricState::Sphere(mut s) => {
            let d = s.project_poles();
            stats.max_pole_projection = stats.max_pole_projection.max(d);
            MetricState::Sphere(s)
        }
        other => other,
    }
}

pub const DT_UNDERFLOW: f64 = 1e-12;

/// Initial record of a run.
pub fn start(initial: &MetricState, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let geo = initial.geometry()?;
    let sol = minimize_on(&geo, &config.entropy_cfg, None)?;
    Ok(Trajectory {
        kind: config.kind,
        sigma: initial.sigma(),
        times: vec![0.0],
        states: vec![initial.clone()],
        entropy: vec![sol],
        stats: StepStats::default(),
        abort: None,
    })
}

/// Integrate over one output interval and append the record.
pub fn extend(traj: &mut Trajectory, config: &FlowConfig) -> Result<()> {
    let j = traj.len();
    let target = (j as f64 * config.output_interval()).min(config.t_end);
    let mut t = traj.last_time();
    let mut state = traj.states.last().cloned().ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let mut sol = traj.entropy.last().cloned();
    let mut dt_cap = config.dt_init.min(cfl_limit(&state, config.cfl_safety));
    while target - t > 1e-12 * config.output_interval() {
        let k = ((target - t) / dt_cap).ceil().max(1.0);
        let dt = (target - t) / k;
        if dt < DT_UNDERFLOW {
            return Err(Error::StepUnderflow {
                t,
                dt,
                reason: "repeated step rejection".into(),
            });
        }
        let warm = if config.kind == FlowKind::Mrf { sol.as_ref() } else { None };
        let attempt = step(&state, dt, config.kind, &config.entropy_cfg, warm).and_then(|(next, _)| {
            let next = project(next, &mut traj.stats);
            let geo = next.geometry()?;
            let new_sol = if config.kind == FlowKind::Mrf {
                Some(minimize_on(&geo, &config.entropy_cfg, sol.as_ref().map(|s| &s.f))?)
            } else {
                None
            };
            Ok((next, new_sol))
        });
        match attempt {
            Ok((next, new_sol)) => {
                state = next;
                if new_sol.is_some() {
                    sol = new_sol;
                }
                t = if k == 1.0 { target } else { t + dt };
                traj.stats.accepted += 1;
                traj.stats.min_dt = Some(traj.stats.min_dt.map_or(dt, |m| m.min(dt)));
                dt_cap = dt_cap.min(config.dt_init.min(cfl_limit(&state, config.cfl_safety)));
            }
            Err(e) => {
                traj.stats.rejected += 1;
                dt_cap = 0.5 * dt;
                if dt_cap < DT_UNDERFLOW {
                    return Err(Error::StepUnderflow {
                        t,
                        dt: dt_cap,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    let sol = match config.kind {
        FlowKind::Mrf => sol.ok_or_else(|| Error::InsufficientData("missing entropy".into()))?,
        _ => {
            let geo = state.geometry()?;
            minimize_on(&geo, &config.entropy_cfg, traj.entropy.last().map(|s| &s.f))?
        }
    };
    traj.times.push(target);
    traj.states.push(state);
    traj.entropy.push(sol);
    Ok(())
}

/// Integrate to `t_end`. Failures after the first record end the run early
/// and are reported in [`Trajectory::abort`].
pub fn run(initial: &MetricState, config: &FlowConfig) -> Result<Trajectory> {
    let mut traj = start(initial, config)?;
    continue_run(&mut traj, config);
    Ok(traj)
}

pub fn continue_run(traj: &mut Trajectory, config: &FlowConfig) {
    while !traj.finished(config) {
        if let Err(e) = extend(traj, config) {
            traj.abort = Some(e.to_string());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomothetyDirection {
    /// Normalized flow at time `t` to the unnormalized flow at `s = (e^{sigma t} - 1) / sigma`.
    ToUnnormalized,
    /// Inverse map, `t = log(1 + sigma s) / sigma`.
    ToNormalized,
}

/// Time and metric scale factor of the homothety at one record.
pub fn homothety_map(sigma: f64, t: f64, direction: HomothetyDirection) -> Result<(f64, f64)> {
    if sigma == 0.0 {
        return Err(Error::Unsupported("sigma = 0: normalized and unnormalized flows coincide".into()));
    }
    match direction {
        HomothetyDirection::ToUnnormalized => {
            let scale = (sigma * t).exp();
            Ok(((scale - 1.0) / sigma, scale))
        }
        HomothetyDirection::ToNormalized => {
            let base = 1.0 + sigma * t;
            if !(base > 0.0) {
                return Err(Error::OutsideDomain { t });
            }
            Ok((base.ln() / sigma, 1.0 / base))
        }
    }
}

pub fn homothety_convert(traj: &Trajectory, direction: HomothetyDirection) -> Result<Trajectory> {
    let sigma = traj.sigma;
    let mut times = Vec::with_capacity(traj.len());
    let mut states = Vec::with_capacity(traj.len());
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let (s, scale) = homothety_map(sigma, *t, direction)?;
        times.push(s);
        states.push(st.scaled(scale));
    }
    let kind = match direction {
        HomothetyDirection::ToUnnormalized => FlowKind::Unnormalized,
        HomothetyDirection::ToNormalized => FlowKind::Nrf,
    };
    Ok(Trajectory {
        kind,
        sigma,
        times,
        states,
        entropy: Vec::new(),
        stats: traj.stats.clone(),
        abort: traj.abort.clone(),
    })
}

/// Diffeomorphism-invariant scalars of one record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub mu: f64,
    pub energy: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub volume: f64,
}

pub fn invariants(state: &MetricState, sol: &EntropySolution) -> Result<Invariants> {
    let geo = state.geometry()?;
    let m = geo.measure(Some(&sol.f))?;
    let r = geo.curvature.r.values();
    Ok(Invariants {
        mu: sol.mu,
        energy: inner(&geo, &sol.s, &sol.s, &m)?,
        r_min: r.iter().cloned().fold(f64::INFINITY, f64::min),
        r_max: r.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        volume: geo.total_volume(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaugeRecord {
    pub t: f64,
    pub nrf: Invariants,
    pub mrf: Invariants,
    /// Sup of the traceless part of the torus metric relative to the flat background.
    pub nrf_anisotropy: f64,
    pub mrf_anisotropy: f64,
}

#[derive(Clone, Debug)]
pub struct GaugePair {
    pub nrf_traj: Trajectory,
    pub mrf_traj: Trajectory,
    pub diff_invariants: Vec<GaugeRecord>,
}

/// Sup over nodes of `|g - (tr g / n) delta|` in background components; zero
/// for conformally flat torus metrics and for the round family.
pub fn conformal_defect(state: &MetricState) -> f64 {
    match state {
        MetricState::Torus(s) => (0..s.g11.len())
            .map(|p| (0.5 * (s.g11[p] - s.g22[p])).hypot(s.g12[p]))
            .fold(0.0, f64::max),
        MetricState::Sphere(s) => s
            .a
            .iter()
            .zip(&s.beta)
            .map(|(a, b)| 0.5 * (a - b).abs())
            .fold(0.0, f64::max),
        MetricState::Round(_) => 0.0,
    }
}

/// Run both flows from the same data on the same output grid.
pub fn gauge_experiment(initial: &MetricState, config: &FlowConfig) -> Result<GaugePair> {
    let nrf_cfg = FlowConfig {
        kind: FlowKind::Nrf,
        ..config.clone()
    };
    let mrf_cfg = FlowConfig {
        kind: FlowKind::Mrf,
        ..config.clone()
    };
    let nrf_traj = run(initial, &nrf_cfg)?;
    let mrf_traj = run(initial, &mrf_cfg)?;
    for tr in [&nrf_traj, &mrf_traj] {
        if let Some(reason) = &tr.abort {
            return Err(Error::InvalidState(format!("gauge pair voided: {reason}")));
        }
    }
    let mut diff_invariants = Vec::with_capacity(nrf_traj.len());
    for k in 0..nrf_traj.len().min(mrf_traj.len()) {
        diff_invariants.push(GaugeRecord {
            t: nrf_traj.times[k],
            nrf: invariants(&nrf_traj.states[k], &nrf_traj.entropy[k])?,
            mrf: invariants(&mrf_traj.states[k], &mrf_traj.entropy[k])?,
            nrf_anisotropy: conformal_defect(&nrf_traj.states[k]),
            mrf_anisotropy: conformal_defect(&mrf_traj.states[k]),
        });
    }
    Ok(GaugePair {
        nrf_traj,
        mrf_traj,
        diff_invariants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::RoundFamilyState;
    use crate::perturb::torus_conformal_mode;

    fn round(n: usize, sigma: i8, c: f64) -> MetricState {
        MetricState::Round(RoundFamilyState::new(n, sigma, c).unwrap())
    }

    fn c_of(state: &MetricState) -> f64 {
        match state {
            MetricState::Round(r) => r.c,
            _ => unreachable!(),
        }
    }

    fn config(kind: FlowKind, state: &MetricState, dt: f64, t_end: f64, stride: usize) -> FlowConfig {
        FlowConfig {
            kind,
            dt_init: dt,
            t_end,
            cfl_safety: 0.5,
            output_stride: stride,
            entropy_cfg: SolverConfig::for_state(state),
        }
    }

    #[test]
    fn round_rate_matches_ode() {
        for sigma in [-1i8, 1] {
            for c in [0.5, 1.0, 3.0] {
                let st = round(3, sigma, c);
                let geo = st.geometry().unwrap();
                let r = rhs_nrf(&geo);
                let next = st.advanced(&r, 1.0);
                let dc = c_of(&next) - c;
                assert!((dc + sigma as f64 * (c - 1.0)).abs() < 1e-13, "sigma {sigma} c {c}: {dc}");
            }
        }
    }

    #[test]
    fn two_dimensional_rate_is_conformal() {
        let st = MetricState::Torus(torus_conformal_mode(24, 6.0, -1, 4, 0.1, (1, 2)));
        let geo = st.geometry().unwrap();
        let r = rhs_nrf(&geo);
        for p in 0..geo.nodes() {
            let ratio = r.c(&[0, 0])[p] / geo.metric.c(&[0, 0])[p];
            assert!((r.c(&[1, 1])[p] / geo.metric.c(&[1, 1])[p] - ratio).abs() < 1e-12);
            assert!(r.c(&[0, 1])[p].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_step_is_identity() {
        let st = MetricState::Torus(crate::arena::TorusGridState::flat(8, 1.0, 0, 2));
        let cfg = SolverConfig::for_state(&st);
        let (next, _) = step(&st, 0.01, FlowKind::Nrf, &cfg, None).unwrap();
        assert_eq!(next, st);
    }

    #[test]
    fn rk4_order_on_round_family() {
        let c0 = 1.2;
        let exact = RoundFamilyState::exact_scale(-1.0, c0, 2.0);
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| {
                let st = round(3, -1, c0);
                let tr = run(&st, &config(FlowKind::Nrf, &st, dt, 2.0, (2.0 / dt) as usize)).unwrap();
                (c_of(tr.states.last().unwrap()) - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 4.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn round_sigma_one_reaches_exact_scale() {
        let st = round(2, 1, 1.2);
        let tr = run(&st, &config(FlowKind::Mrf, &st, 0.01, 5.0, 50)).unwrap();
        assert!(tr.abort.is_none());
        let c5 = c_of(tr.states.last().unwrap());
        assert!((c5 - (1.0 + 0.2 * (-5.0f64).exp())).abs() < 1e-8);
        assert!((tr.last_time() - 5.0).abs() < 1e-12);
        for w in tr.entropy.windows(2) {
            assert!(w[1].mu >= w[0].mu - 1e-9);
        }
    }

    #[test]
    fn soliton_is_static_under_mrf() {
        let st = round(3, -1, 1.0);
        let tr = run(&st, &config(FlowKind::Mrf, &st, 0.05, 5.0, 20)).unwrap();
        for s in &tr.states {
            assert!(s.sup_distance(&st) <= 1e-9);
        }
    }

    #[test]
    fn homothety_of_fixed_point_shrinks_linearly() {
        let st = round(3, -1, 1.0);
        let tr = run(&st, &config(FlowKind::Nrf, &st, 0.05, 3.0, 10)).unwrap();
        let un = homothety_convert(&tr, HomothetyDirection::ToUnnormalized).unwrap();
        for (s, g) in un.times.iter().zip(&un.states) {
            assert!((c_of(g) - (1.0 - s)).abs() < 1e-12);
        }
        let back = homothety_convert(&un, HomothetyDirection::ToNormalized).unwrap();
        for k in 0..tr.len() {
            assert!((back.times[k] - tr.times[k]).abs() < 1e-12);
            assert!(back.states[k].sup_distance(&tr.states[k]) < 1e-12);
        }
        assert!(matches!(homothety_map(0.0, 1.0, HomothetyDirection::ToUnnormalized), Err(Error::Unsupported(_))));
        assert!(matches!(homothety_map(-1.0, 1.5, HomothetyDirection::ToNormalized), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn unnormalized_trajectory_solves_ricci_flow() {
        let st = round(2, 1, 1.5);
        let tr = run(&st, &config(FlowKind::Nrf, &st, 0.01, 1.0, 1)).unwrap();
        let un = homothety_convert(&tr, HomothetyDirection::ToUnnormalized).unwrap();
        for k in 1..un.len() - 1 {
            let (s0, s1, s2) = (un.times[k - 1], un.times[k], un.times[k + 1]);
            let (c0, c1, c2) = (c_of(&un.states[k - 1]), c_of(&un.states[k]), c_of(&un.states[k + 1]));
            let (h0, h1) = (s1 - s0, s2 - s1);
            let slope = (c2 - c1) * h0 / (h1 * (h0 + h1)) + (c1 - c0) * h1 / (h0 * (h0 + h1));
            let geo = un.states[k].geometry().unwrap();
            let rc = geo.curvature.rc.c(&[0, 0])[0] / geo.metric.c(&[0, 0])[0] * c1;
            assert!((slope + 2.0 * rc).abs() < 1e-4, "k {k}: {slope} vs {}", -2.0 * rc);
        }
    }

    #[test]
    fn conformal_class_under_both_flows() {
        let st = MetricState::Torus(torus_conformal_mode(16, 2.0 * std::f64::consts::PI, 0, 4, 0.05, (1, 1)));
        let cfg = config(FlowKind::Nrf, &st, 0.05, 0.2, 2);
        let pair = gauge_experiment(&st, &cfg).unwrap();
        let last = pair.diff_invariants.last().unwrap();
        assert!(last.nrf_anisotropy < 1e-12);
        assert!(last.mrf_anisotropy > 1e-5);
        for rec in &pair.diff_invariants {
            assert!((rec.nrf.mu - rec.mrf.mu).abs() <= 1e-3 * rec.nrf.mu.abs().max(1e-6));
        }
    }
}
