use std::f64::consts::PI;

use proptest::prelude::*;

use solitonlab::arena::{MetricState, RoundFamilyState};
use solitonlab::calculus::{cov_deriv, inner, inner_pointwise, norm_pointwise, rm_action, trace2};
use solitonlab::diagnostics::terms::centered_weights;
use solitonlab::diagnostics::{dirichlet_f, energy_e, quotient_n, E_FLOOR};
use solitonlab::entropy::{minimize_entropy, w_functional, SolverConfig};
use solitonlab::flow::{homothety_map, HomothetyDirection};
use solitonlab::perturb::{random_scalar, random_sym, torus_random_metric};
use solitonlab::Tensor;

fn torus(seed: u64, amp: f64) -> MetricState {
    MetricState::Torus(torus_random_metric(16, 2.0 * PI, 1, 4, amp, 1, seed))
}

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn homothety_round_trips(sigma in prop_oneof![-2.0f64..-0.05, 0.05f64..2.0], t in 0.0f64..3.0) {
        let (s, a) = homothety_map(sigma, t, HomothetyDirection::ToUnnormalized).unwrap();
        let (back, b) = homothety_map(sigma, s, HomothetyDirection::ToNormalized).unwrap();
        prop_assert!((back - t).abs() <= 1e-10 * (1.0 + t));
        prop_assert!((a * b - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn centered_weights_differentiate_quadratics(
        t0 in -5.0f64..5.0, h0 in 0.01f64..1.0, h1 in 0.01f64..1.0,
        a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
    ) {
        let (t1, t2) = (t0 + h0, t0 + h0 + h1);
        let p = |t: f64| a + b * t + c * t * t;
        let w = centered_weights(t0, t1, t2);
        let approx = w[0] * p(t0) + w[1] * p(t1) + w[2] * p(t2);
        let exact = b + 2.0 * c * t1;
        let scale = (a.abs() + b.abs() + c.abs()) * (1.0 + t2.abs()).powi(2) / h0.min(h1);
        prop_assert!((approx - exact).abs() <= 1e-12 * scale);
    }

    #[test]
    fn quotient_exists_exactly_above_the_floor(e in 0.0f64..1e-12, f in -1.0f64..1.0) {
        prop_assert_eq!(quotient_n(e, f).is_none(), e < E_FLOOR);
        if let Some(n) = quotient_n(e, f) {
            prop_assert!((n * e - f).abs() <= 1e-12 * f.abs().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_family_matches_closed_forms(
        n in 2usize..5,
        sigma in prop_oneof![Just(-1i8), Just(1i8)],
        c in prop_oneof![0.3f64..0.9, 1.1f64..1.9],
    ) {
        let rf = RoundFamilyState::new(n, sigma, c).unwrap();
        let st = MetricState::Round(rf.clone());
        let sol = minimize_entropy(&st, &SolverConfig::for_state(&st), None).unwrap();
        let geo = st.geometry().unwrap();
        let e = energy_e(&geo, &sol).unwrap();
        let f = dirichlet_f(&geo, &sol).unwrap();
        prop_assert!((sol.mu - rf.entropy()).abs() <= 1e-8 * (1.0 + rf.entropy().abs()));
        prop_assert!((e - rf.energy()).abs() <= 1e-10 * (1.0 + rf.energy()));
        let q = quotient_n(e, f).unwrap();
        prop_assert!((q - rf.quotient()).abs() <= 1e-8);
    }

    #[test]
    fn trace_is_bounded_by_norm(seed in 0u64..10_000, amp in 0.01f64..0.3) {
        let st = torus(seed, amp);
        let geo = st.geometry().unwrap();
        let s = random_sym(&st, 1.0, 2, seed ^ 0x5a5a);
        let tr = trace2(&geo, &s).unwrap();
        let nm = norm_pointwise(&geo, &s).unwrap();
        let root_n = (geo.dim() as f64).sqrt();
        for (t, m) in tr.values().iter().zip(nm) {
            prop_assert!(t.abs() <= root_n * m * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn curvature_action_is_self_adjoint(seed in 0u64..10_000, amp in 0.01f64..0.3) {
        let st = torus(seed, amp);
        let geo = st.geometry().unwrap();
        let a = random_sym(&st, 1.0, 2, seed.wrapping_add(100));
        let b = random_sym(&st, 1.0, 2, seed.wrapping_add(200));
        let lhs = inner_pointwise(&geo, &rm_action(&geo, &a).unwrap(), &b).unwrap();
        let rhs = inner_pointwise(&geo, &a, &rm_action(&geo, &b).unwrap()).unwrap();
        let scale = lhs.max_abs().max(1.0);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn dirichlet_form_is_sandwiched(seed in 0u64..10_000, amp in 0.01f64..0.3) {
        let st = torus(seed, amp);
        let geo = st.geometry().unwrap();
        let s = random_sym(&st, 0.5, 2, seed.wrapping_add(300));
        let f = random_scalar(&st, 0.3, 1, seed.wrapping_add(400));
        let m = geo.measure(Some(&f)).unwrap();
        let ds = cov_deriv(&geo, &s).unwrap();
        let grad_sq = inner(&geo, &ds, &ds, &m).unwrap();
        let e = inner(&geo, &s, &s, &m).unwrap();
        let rm_ss = inner(&geo, &rm_action(&geo, &s).unwrap(), &s, &m).unwrap();
        let dirichlet = grad_sq - 2.0 * rm_ss;
        let k0 = geo.curvature.rm_norm(geo.dim()).into_iter().fold(0.0, f64::max);
        prop_assert!(e >= 0.0);
        prop_assert!(dirichlet <= grad_sq + 2.0 * k0 * e + 1e-12);
        prop_assert!(dirichlet >= grad_sq - 2.0 * k0 * e - 1e-12);
    }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn minimizer_is_normalized_and_minimal(
        seed in 0u64..10_000,
        amp in 0.02f64..0.2,
        bump in 0.01f64..0.2,
    ) {
        let st = torus(seed, amp);
        let cfg = SolverConfig { tol: 1e-10, ..SolverConfig::for_state(&st) };
        let sol = minimize_entropy(&st, &cfg, None).unwrap();
        let geo = st.geometry().unwrap();
        let mass = geo.measure(Some(&sol.f)).unwrap().total();
        prop_assert!((mass - 1.0).abs() <= 1e-9);
        let e = energy_e(&geo, &sol).unwrap();
        prop_assert!(e >= 0.0);

        let phi = random_scalar(&st, 1.0, 2, seed.wrapping_add(500));
        let w: Vec<f64> = sol
            .f
            .values()
            .iter()
            .zip(phi.values())
            .map(|(f, p)| (-0.5 * f).exp() * (1.0 + bump * p))
            .collect();
        let norm: f64 = w.iter().zip(&geo.volume).map(|(x, v)| x * x * v).sum();
        let w = Tensor::scalar(geo.layout, w.iter().map(|x| x / norm.sqrt()).collect());
        let wv = w_functional(&st, &w).unwrap();
        prop_assert!(sol.mu <= wv + 1e-9, "mu {} exceeds W {}", sol.mu, wv);
    }
}
