use std::f64::consts::PI;

use solitonlab::arena::{MetricState, RoundFamilyState, TorusGridState};
use solitonlab::diagnostics::{analyze, fit::centered_derivative};
use solitonlab::entropy::{spectral_gap, SolverConfig};
use solitonlab::flow::{continue_run, extend, gauge_experiment, run, start, FlowConfig, FlowKind};
use solitonlab::perturb::{sphere_shape_mode, torus_conformal_mode};

fn config(kind: FlowKind, state: &MetricState, dt: f64, t_end: f64, stride: usize) -> FlowConfig {
    let mut entropy_cfg = SolverConfig::for_state(state);
    entropy_cfg.tol = entropy_cfg.tol.min(1e-10);
    FlowConfig {
        kind,
        dt_init: dt,
        t_end,
        cfl_safety: 0.5,
        output_stride: stride,
        entropy_cfg,
    }
}

#[test]
fn gauge_pair_agrees_on_invariants() {
    let st = MetricState::Torus(torus_conformal_mode(24, 2.0 * PI, 0, 4, 0.05, (1, 1)));
    let pair = gauge_experiment(&st, &config(FlowKind::Mrf, &st, 0.01, 1.0, 5)).unwrap();
    assert_eq!(pair.nrf_traj.times, pair.mrf_traj.times);
    for rec in &pair.diff_invariants {
        assert!((rec.nrf.mu - rec.mrf.mu).abs() <= 1e-2 * rec.mrf.mu.abs(), "{rec:?}");
        assert!((rec.nrf.energy - rec.mrf.energy).abs() <= 1e-2 * rec.mrf.energy, "{rec:?}");
        assert!((rec.nrf.r_min - rec.mrf.r_min).abs() <= 1e-2 * rec.mrf.r_min.abs().max(1e-3));
    }
}

#[test]
fn flat_torus_entropy_rises_towards_zero() {
    let st = MetricState::Torus(torus_conformal_mode(16, 2.0 * PI, 0, 4, 0.05, (1, 0)));
    let tr = run(&st, &config(FlowKind::Mrf, &st, 0.02, 3.0, 5)).unwrap();
    assert!(tr.abort.is_none());
    for w in tr.entropy.windows(2) {
        assert!(w[1].mu >= w[0].mu - 1e-9);
    }
    assert!(tr.entropy.iter().all(|e| e.mu <= 0.0));
    assert!(tr.entropy.last().unwrap().mu > 0.01 * tr.entropy[0].mu);
}

#[test]
fn sphere_shrinker_obeys_entropy_gradient_law() {
    let st = MetricState::Sphere(sphere_shape_mode(128, -1, 4, 1.0, 0.05));
    let tr = run(&st, &config(FlowKind::Mrf, &st, 0.01, 0.5, 5)).unwrap();
    assert!(tr.abort.is_none(), "{:?}", tr.abort);
    let recs = analyze(&tr).unwrap();
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let mu: Vec<f64> = recs.iter().map(|r| r.mu).collect();
    for (d, r) in centered_derivative(&t, &mu).iter().zip(&recs) {
        if let Some(d) = d {
            if d.abs() > 1e-10 {
                assert!((d - 2.0 * r.e).abs() <= 0.02 * d.abs(), "t {}: {d} vs {}", r.t, 2.0 * r.e);
            }
        }
    }
    for (s, e) in tr.states.iter().zip(&tr.entropy) {
        let gap = spectral_gap(s, &e.f).unwrap();
        assert!(gap.gap > 0.0);
    }
    assert!(tr.stats.max_pole_projection < 1e-3);
}

#[test]
fn solitons_stay_put() {
    let states = [
        MetricState::Round(RoundFamilyState::new(3, -1, 1.0).unwrap()),
        MetricState::Torus(TorusGridState::flat(16, 2.0 * PI, 0, 4)),
    ];
    for st in states {
        let tr = run(&st, &config(FlowKind::Mrf, &st, 0.05, 5.0, 10)).unwrap();
        assert!((tr.last_time() - 5.0).abs() < 1e-12);
        for (s, e) in tr.states.iter().zip(&tr.entropy) {
            assert!(s.sup_distance(&st) <= 1e-9);
            assert!(e.s.max_abs() <= 1e-10);
        }
    }
}

#[test]
fn interrupted_runs_resume_exactly() {
    let st = MetricState::Torus(torus_conformal_mode(16, 2.0 * PI, 0, 4, 0.05, (1, 0)));
    let cfg = config(FlowKind::Mrf, &st, 0.02, 0.6, 5);
    let full = run(&st, &cfg).unwrap();
    let mut part = start(&st, &cfg).unwrap();
    extend(&mut part, &cfg).unwrap();
    extend(&mut part, &cfg).unwrap();
    let mut resumed = part.clone();
    continue_run(&mut resumed, &cfg);
    assert_eq!(resumed.times, full.times);
    assert_eq!(resumed.states, full.states);
    for (a, b) in resumed.entropy.iter().zip(&full.entropy) {
        assert_eq!(a.mu, b.mu);
    }
}
