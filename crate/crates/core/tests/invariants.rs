use std::sync::Arc;

use ks_core::diagnostics::{dissipation_l2, energy_l2, hardy_check, l1_bridge_bound, WeightSpec};
use ks_core::grid::{cumulative_integral, first_derivative, second_derivative, trapezoid_integral};
use ks_core::initial::zero_mass_dipole;
use ks_core::steady::{spike_sweep, TAIL_MASS_TOL};
use ks_core::transform::antiderivative_pair;
use ks_core::{Grid, Parameters, SteadyStateProfile, SweepAxis, TestFunction};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = Parameters> {
    (
        0.2..3.0f64,
        0.0..3.0f64,
        0.1..6.0f64,
        0.2..3.0f64,
        0.2..3.0f64,
    )
        .prop_map(|(lambda, m, gap, eps, b)| {
            Parameters::new(lambda, (1.0 - m).abs() + gap, m, eps, b).unwrap()
        })
}

fn profile_of(p: Parameters) -> SteadyStateProfile {
    SteadyStateProfile::new(p).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xi_exceeds_one_and_u_bar_is_u_at_origin(p in params()) {
        let c = p.derive_constants();
        prop_assert!(c.xi > 1.0);
        prop_assert!(rel(profile_of(p).u(0.0), c.u_bar) < 1e-14);
    }

    #[test]
    fn steady_relations_hold_pointwise(p in params(), x in 0.0..200.0f64) {
        let s = profile_of(p);
        let first = s.du(x) + p.chi * s.u(x) * s.v(x);
        let second = p.eps * s.dv(x) - (p.eps * s.v(x).powi(2) - s.u(x) * s.w(x).powf(p.m - 1.0));
        prop_assert!(first.abs() < 1e-10, "first {}", first);
        prop_assert!(second.abs() < 1e-10, "second {}", second);
        let c0 = p.derive_constants().c0;
        prop_assert!(rel(s.u(x) / s.w(x).powf(p.chi), c0) < 1e-10);
    }

    #[test]
    fn quadrature_mass_is_lambda(p in params()) {
        let s = profile_of(p);
        prop_assert!((s.quadrature_mass() - p.lambda).abs() < 1e-8);
        let l = s.truncation_length(TAIL_MASS_TOL);
        if l.is_finite() {
            prop_assert!(s.tail_mass(l) <= TAIL_MASS_TOL * p.lambda * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sampled_profiles_strictly_decrease(p in params(), n in 3usize..400) {
        let s = profile_of(p);
        let g = Grid::graded(s.default_domain_length().min(1e4), n, 20.0).unwrap();
        for f in [s.sample_u(&g), s.sample_w(&g)] {
            prop_assert!(f.values().windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn layer_width_scales_with_eps(p in params(), scale in 1e-3..1.0f64, delta in 0.001..0.9f64) {
        let a = profile_of(p).layer_width(delta).unwrap() / p.eps;
        let q = Parameters { eps: p.eps * scale, ..p };
        let b = profile_of(q).layer_width(delta).unwrap() / q.eps;
        prop_assert!(rel(b, a) < 1e-12);
    }

    #[test]
    fn weights_invert_steady_profiles(p in params()) {
        let s = profile_of(p);
        let g = Grid::graded(s.default_domain_length().min(1e4), 257, 30.0).unwrap();
        let (w1, w2, w3) = (
            WeightSpec::W1(s).sample(&g).unwrap(),
            WeightSpec::W2(s).sample(&g).unwrap(),
            WeightSpec::W3(s).sample(&g).unwrap(),
        );
        for (i, &x) in g.nodes().iter().enumerate() {
            let (u, wm) = (s.u(x), s.w(x).powf(p.m - 1.0));
            prop_assert!(rel(w1.values()[i] * u, 1.0) < 1e-12);
            prop_assert!(rel(w2.values()[i] * wm, 1.0) < 1e-12);
            prop_assert!(rel(w3.values()[i] * u / wm, 1.0) < 1e-12);
        }
    }

    #[test]
    fn energy_and_dissipation_are_quadratic(p in params(), s in -50.0..50.0f64, a in 0.1..3.0f64) {
        let prof = profile_of(p);
        let g = Grid::uniform(20.0, 201).unwrap();
        let phi = g.sample(|x| (a * x).sin() * (-x).exp() * x);
        let psi = g.sample(|x| x * x * (-a * x).exp());
        let (phi_x, psi_x) = (first_derivative(&phi).unwrap(), first_derivative(&psi).unwrap());
        let regime = p.regime();
        let e1 = energy_l2(&phi, &psi, &prof, regime).unwrap().value;
        let d1 = dissipation_l2(&phi_x, &psi_x, &psi, &prof, regime).unwrap().value;
        let sc = |f: &ks_core::Field| f.map(|v| s * v);
        let e2 = energy_l2(&sc(&phi), &sc(&psi), &prof, regime).unwrap().value;
        let d2 = dissipation_l2(&sc(&phi_x), &sc(&psi_x), &sc(&psi), &prof, regime).unwrap().value;
        prop_assert!((e2 - s * s * e1).abs() <= 1e-12 * e2.abs().max(1e-300));
        prop_assert!((d2 - s * s * d1).abs() <= 1e-12 * d2.abs().max(1e-300));
    }

    #[test]
    fn l1_bridge_bounds_the_deviation(p in params(), amp in -1.0..1.0f64, c in 1.0..5.0f64) {
        let s = profile_of(p);
        let g = Grid::graded(s.default_domain_length().min(1e4), 801, 30.0).unwrap();
        let du = zero_mass_dipole(&g, c, 1.0).unwrap().map(|d| amp * s.u(0.0) * d * 0.5);
        let u = s.sample_u(&g).zip_with(&du, |a, b| a + b).unwrap();
        let l1 = trapezoid_integral(&du.map(f64::abs)).unwrap();
        let bound = l1_bridge_bound(&u, &s).unwrap();
        prop_assert!(l1 <= bound + 1e-12, "l1 {} bound {}", l1, bound);
    }

    #[test]
    fn hardy_holds_for_random_cubics(
        coef in prop::array::uniform3(-2.0..2.0f64),
        support in 0.5..10.0f64,
        j in prop::sample::select(vec![-0.5, 0.0, 1.0, 2.0]),
        k in prop::sample::select(vec![0.15, 1.0, 5.0]),
    ) {
        let g = Grid::uniform(40.0, 2001).unwrap();
        let f = g.sample(|x| {
            if x < support {
                x * (support - x).powi(2) * (coef[0] + coef[1] * x + coef[2] * x * x)
            } else {
                0.0
            }
        });
        let h = hardy_check(&f, j, k).unwrap();
        prop_assert!(h.satisfied, "lhs {} rhs {}", h.lhs, h.rhs);
    }

    #[test]
    fn polynomial_exactness(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, n in 3usize..60, len in 0.5..50.0f64) {
        let g = Grid::uniform(len, n).unwrap();
        let lin = g.sample(|x| a + b * x);
        let exact = a * len + 0.5 * b * len * len;
        prop_assert!((trapezoid_integral(&lin).unwrap() - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        let quad = g.sample(|x| a + b * x + c * x * x);
        let d1 = first_derivative(&quad).unwrap();
        let d2 = second_derivative(&quad).unwrap();
        let scale = 1.0 + b.abs() + c.abs() * len * len;
        for (i, &x) in g.nodes().iter().enumerate() {
            prop_assert!((d1.values()[i] - (b + 2.0 * c * x)).abs() <= 1e-8 * scale);
            prop_assert!((d2.values()[i] - 2.0 * c).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn cumulative_ends_at_trapezoid(vals in prop::collection::vec(-1e3..1e3f64, 3..200)) {
        let g = Grid::graded(7.0, vals.len(), 3.0).unwrap();
        let f = ks_core::Field::new(&g, vals).unwrap();
        let cum = cumulative_integral(&f).unwrap();
        prop_assert_eq!(*cum.values().last().unwrap(), trapezoid_integral(&f).unwrap());
    }

    #[test]
    fn antiderivatives_start_at_zero(p in params(), noise in prop::collection::vec(-1.0..1.0f64, 65)) {
        let s = profile_of(p);
        let g = Grid::uniform(10.0, 65).unwrap();
        let u = ks_core::Field::new(&g, noise.clone()).unwrap();
        let v = ks_core::Field::new(&g, noise.iter().rev().copied().collect()).unwrap();
        let pair = antiderivative_pair(&u, &v, &s).unwrap();
        prop_assert_eq!(pair.phi.values()[0], 0.0);
        prop_assert_eq!(pair.psi.values()[0], 0.0);
    }

    #[test]
    fn zero_mean_perturbations_vanish_far_away(p in params(), amp in -0.5..0.5f64, c in 1.0..4.0f64) {
        let s = profile_of(p);
        let g = Grid::graded(40.0, 801, 10.0).unwrap();
        let d = zero_mass_dipole(&g, c, 1.0).unwrap();
        let u = s.sample_u(&g).zip_with(&d, |a, b| a + amp * b).unwrap();
        let v = s.sample_v(&g).zip_with(&d, |a, b| a - amp * b).unwrap();
        let (phi_l, psi_l) = antiderivative_pair(&u, &v, &s).unwrap().far_field();
        prop_assert!(phi_l.abs() < 1e-12 && psi_l.abs() < 1e-12);
    }
}

#[test]
fn integration_by_parts_defect_is_second_order() {
    let defect = |n| {
        let g: Arc<Grid> = Grid::graded(6.0, n, 4.0).unwrap();
        let f = g.sample(|x| (1.3 * x).sin() + 0.2 * x);
        let h = g.sample(|x| (-0.4 * x).exp());
        let fp = first_derivative(&f).unwrap();
        let hp = first_derivative(&h).unwrap();
        let lhs = trapezoid_integral(&fp.zip_with(&h, |a, b| a * b).unwrap()).unwrap()
            + trapezoid_integral(&f.zip_with(&hp, |a, b| a * b).unwrap()).unwrap();
        let last = n - 1;
        (lhs - (f.values()[last] * h.values()[last] - f.values()[0] * h.values()[0])).abs()
    };
    let (a, b, c) = (defect(101), defect(201), defect(401));
    assert!((a / b).log2() > 1.8 && (b / c).log2() > 1.8, "{a} {b} {c}");
}

#[test]
fn spike_sweep_decreases_along_both_limits() {
    let base = Parameters::new(1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
    for (axis, samples) in [
        (SweepAxis::Chi, vec![1.0, 4.0, 16.0, 64.0]),
        (SweepAxis::Eps, vec![2.0, 0.5, 0.125, 0.03]),
    ] {
        let r = spike_sweep(base, axis, &samples, TestFunction::InverseCube).unwrap();
        assert!(
            r.weak_errors.windows(2).all(|w| w[1] < w[0]),
            "{:?}",
            r.weak_errors
        );
    }
}

#[test]
fn advisory_only_for_small_chi_below_unit_m() {
    assert!(Parameters::new(1.0, 1.0, 0.5, 1.0, 1.0)
        .unwrap()
        .advisory()
        .is_some());
    assert!(Parameters::new(1.0, 8.0, 0.5, 1.0, 1.0)
        .unwrap()
        .advisory()
        .is_none());
    assert!(Parameters::new(1.0, 3.0, 2.0, 1.0, 1.0)
        .unwrap()
        .advisory()
        .is_none());
}
