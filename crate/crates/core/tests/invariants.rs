mod common;

use common::{random_family, random_pair, uniform_vector, Family};
use lsemix::cones::{self, DEFAULT_TOL};
use lsemix::empirical::{self, McConfig};
use lsemix::linalg::max_abs;
use lsemix::orders::{self, OrderKind, Sufficient, Verdict};
use lsemix::quadrature::GaussLegendre;
use lsemix::rng::stream;
use lsemix::{DensityGenerator, LseDistribution, LseError, Necessary};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_law(seed: u64, n: usize) -> LseDistribution {
    let mut rng = stream(seed, 0);
    let family = random_family(&mut rng);
    random_pair(&mut rng, n, &family, false).0
}

fn necessary() -> impl Strategy<Value = Necessary> {
    prop_oneof![
        Just(Necessary::Holds),
        Just(Necessary::NotApplicable),
        Just(Necessary::AssumptionUnmet),
        Just(Necessary::Violated),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pdf_is_finite_and_nonnegative(seed in any::<u64>(), n in 1usize..4, y in prop::collection::vec(-20.0f64..20.0, 3)) {
        let d = random_law(seed, n);
        let p = d.pdf(&DVector::from_row_slice(&y[..n])).unwrap();
        prop_assert!(p.is_finite() && p >= 0.0);
    }

    #[test]
    fn char_fn_is_hermitian_and_bounded(seed in any::<u64>(), n in 1usize..4, t in prop::collection::vec(-3.0f64..3.0, 3)) {
        let mut rng = stream(seed, 1);
        let family = if seed % 2 == 0 { Family::normal() } else { Family::ghss(rng.random_range(2.5..5.0)) };
        let d = random_pair(&mut rng, n, &family, false).0;
        let t = DVector::from_row_slice(&t[..n]);
        let plus = d.char_fn(&t).unwrap();
        let minus = d.char_fn(&-&t).unwrap();
        prop_assert!((plus.conj() - minus).norm() <= 1e-12);
        prop_assert!(plus.norm() <= 1.0 + 1e-12);
        prop_assert!((d.char_fn(&DVector::zeros(n)).unwrap().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn affine_maps_moments(seed in any::<u64>(), n in 1usize..5, m_pick in 0usize..4) {
        let mut rng = stream(seed, 2);
        let m = 1 + m_pick % n;
        let d = random_law(seed, n);
        let b_mat = common::gaussian_matrix(&mut rng, m, n, 1.0);
        let b_vec = uniform_vector(&mut rng, m, -1.0, 1.0);
        let t = match d.affine(&b_mat, &b_vec) {
            Ok(t) => t,
            Err(LseError::UnsupportedGenerator(_)) => {
                prop_assert!(m < n && !d.generator().closed_under_projection());
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let (before, after) = (d.moments(), t.moments());
        if let (Some(m0), Some(m1)) = (before.mean, after.mean) {
            let want = &b_mat * m0 + &b_vec;
            prop_assert!((m1 - &want).amax() <= 1e-8 * (1.0 + want.amax()));
        }
        if let (Some(c0), Some(c1)) = (before.covariance, after.covariance) {
            let want = &b_mat * c0 * b_mat.transpose();
            prop_assert!((c1 - &want).amax() <= 1e-8 * (1.0 + want.amax()));
        }
    }

    #[test]
    fn psd_and_nonnegative_matrices_are_copositive(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = stream(seed, 3);
        let g = common::gaussian_matrix(&mut rng, n, n, 1.0);
        let psd = &g * g.transpose();
        prop_assert!(cones::is_copositive(&psd, DEFAULT_TOL).unwrap().is_inside());
        let nonneg = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 7 + 3) % 5) as f64 + rng.random_range(0.0..1.0));
        let nonneg = 0.5 * (&nonneg + nonneg.transpose());
        prop_assert!(cones::is_copositive(&nonneg, DEFAULT_TOL).unwrap().is_inside());
    }

    #[test]
    fn completely_positive_implies_copositive_and_psd(seed in any::<u64>(), n in 2usize..6, k in 1usize..8) {
        let mut rng = stream(seed, 4);
        let b = DMatrix::from_fn(k, n, |_, _| rng.random_range(0.0..1.0));
        let a = b.transpose() * &b;
        let v = cones::is_completely_positive(&a, DEFAULT_TOL).unwrap();
        prop_assert!(!v.is_outside());
        if v.is_inside() {
            prop_assert!(cones::is_copositive(&a, DEFAULT_TOL).unwrap().is_inside());
            prop_assert!(cones::is_psd(&a, DEFAULT_TOL).unwrap().is_inside());
        }
        if let Some(f) = v.witness_factor() {
            prop_assert!(f.iter().all(|&x| x >= 0.0));
            prop_assert!(max_abs(&(f.transpose() * &f - &a)) <= DEFAULT_TOL * max_abs(&a));
        }
    }

    #[test]
    fn outside_copositive_witness_is_a_certificate(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = stream(seed, 5);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = 0.5 * (&a + a.transpose());
        let v = cones::is_copositive(&a, DEFAULT_TOL).unwrap();
        if let Some(x) = v.witness_vector() {
            if v.is_outside() {
                prop_assert!(x.iter().all(|&xi| xi >= 0.0));
                prop_assert!(x.dot(&(&a * &x)) < 0.0);
            }
        }
    }

    #[test]
    fn simplex_projection_lands_on_simplex(v in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let p = cones::project_simplex(&DVector::from_vec(v));
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn every_law_is_ordered_against_itself(seed in any::<u64>(), n in 1usize..4) {
        let d = random_law(seed, n);
        for order in OrderKind::ALL {
            prop_assert_eq!(orders::check(&d, &d, order).unwrap().verdict, Verdict::Ordered, "{}", order);
        }
    }

    #[test]
    fn sufficiency_lattice(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = stream(seed, 6);
        let family = random_family(&mut rng);
        let (d1, d2) = random_pair(&mut rng, n, &family, false);
        let st = orders::check_st(&d1, &d2).unwrap();
        if st.sufficient == Sufficient::Holds {
            prop_assert_eq!(orders::check_icx(&d1, &d2).unwrap().verdict, Verdict::Ordered);
            prop_assert_eq!(orders::check_derived(&d1, &d2, OrderKind::Plst).unwrap().verdict, Verdict::Ordered);
        }
        if orders::check_cx(&d1, &d2).unwrap().verdict == Verdict::Ordered {
            prop_assert_eq!(orders::check_derived(&d1, &d2, OrderKind::Lcx).unwrap().verdict, Verdict::Ordered);
            prop_assert_eq!(orders::check_derived(&d1, &d2, OrderKind::Ilcx).unwrap().verdict, Verdict::Ordered);
        }
    }

    #[test]
    fn mutual_supermodular_order_forces_equal_scales(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = stream(seed, 7);
        let family = random_family(&mut rng);
        let (d1, d2) = random_pair(&mut rng, n, &family, false);
        let forward = orders::check_sm(&d1, &d2).unwrap().verdict == Verdict::Ordered;
        let backward = orders::check_sm(&d2, &d1).unwrap().verdict == Verdict::Ordered;
        if forward && backward {
            let tol = 1e-9 * max_abs(d1.sigma()).max(max_abs(d2.sigma()));
            prop_assert!(max_abs(&(d1.sigma() - d2.sigma())) <= tol);
        }
    }

    #[test]
    fn scale_mixture_table_matches_general_checker(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = stream(seed, 8);
        let family = random_family(&mut rng);
        let (d1, d2) = random_pair(&mut rng, n, &family, true);
        for order in OrderKind::ALL {
            let general = orders::check(&d1, &d2, order).unwrap().verdict;
            let table = orders::check_sme_table(&d1, &d2, order).unwrap().verdict;
            prop_assert_eq!(general, table, "{}", order);
        }
    }

    #[test]
    fn merge_is_a_join(a in necessary(), b in necessary(), c in necessary()) {
        prop_assert_eq!(a.merge(b), b.merge(a));
        prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        prop_assert_eq!(a.merge(a), a);
    }

    #[test]
    fn survival_and_stop_loss_shapes(seed in any::<u64>(), mut grid in prop::collection::vec(-4.0f64..4.0, 2..20)) {
        grid.sort_by(f64::total_cmp);
        let d = random_law(seed, 1);
        let mut rng = stream(seed, 9);
        let draws: Vec<f64> = d.sample(&mut rng, 2000).unwrap().iter().copied().collect();
        let s = empirical::empirical_survival(&draws, &grid);
        prop_assert!(s.windows(2).all(|w| w[0].1 >= w[1].1));
        let sl: Vec<f64> = grid.iter().map(|&t| empirical::stop_loss(&draws, t).0).collect();
        prop_assert!(sl.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn order_names_round_trip(i in 0usize..13) {
        let o = OrderKind::ALL[i];
        prop_assert_eq!(o.tag().parse::<OrderKind>().unwrap(), o);
        prop_assert_eq!(o.to_string().to_uppercase().parse::<OrderKind>().unwrap(), o);
    }

    #[test]
    fn every_family_meets_both_assumptions_with_larger_first_scale(s2 in 0.1f64..5.0, ratio in 1.05f64..4.0, gi in 0usize..6) {
        let g = DensityGenerator::catalog()[gi];
        let r = g.limit_ratio(s2 * ratio, s2, 0.0, 0.0).unwrap();
        prop_assert!(r.satisfies_assumption1 && r.satisfies_assumption2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn identical_configs_give_identical_estimates(seed in any::<u64>(), coupled in any::<bool>()) {
        let d1 = random_law(seed, 1);
        let d2 = d1.with_parameters(d1.mu().add_scalar(0.1), d1.sigma().clone(), d1.delta().clone()).unwrap();
        let mut cfg = McConfig::new(40_000, seed);
        cfg.coupled = coupled;
        let a = empirical::verify_icx(&d1, &d2, &cfg).unwrap();
        let b = empirical::verify_icx(&d1, &d2, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(empirical::curves_csv(&a.curves), empirical::curves_csv(&b.curves));
    }
}

#[test]
fn student_closed_forms_match_the_ladder_at_moderate_range() {
    for m in 1..=6 {
        let g = DensityGenerator::Student { m };
        for (s1, s2) in [(2.0, 1.0), (1.0, 3.0), (1.5, 1.2)] {
            let want = g.limit_ratio(s1, s2, 0.0, 0.0).unwrap().c_value;
            let t = 1e4 * f64::max(s1, s2);
            let got = g.ln_ratio_at(t, s1, s2, 0.0, 0.0).exp();
            assert!((got - want).abs() <= 0.05 * want, "m={m} {s1}/{s2}: {got} vs {want}");
        }
    }
}

#[test]
fn radial_second_moment_of_normal_is_dimension() {
    for n in 1..=10 {
        let m = DensityGenerator::Normal.radial_second_moment(n).unwrap();
        assert!((m - n as f64).abs() <= 1e-8, "n={n}: {m}");
    }
}

#[test]
fn marginal_density_matches_numeric_marginalization() {
    let gl = GaussLegendre::new(24);
    for (k, family) in [Family::normal(), Family::ghss(3.0)].iter().enumerate() {
        let mut rng = stream(11, k as u64);
        let (d, _) = random_pair(&mut rng, 2, family, false);
        let marg = d.marginal(&[0]).unwrap();
        for x in [-1.5, -0.2, 0.4, 2.0] {
            let mut total = 0.0;
            let half = std::f64::consts::FRAC_PI_2;
            let panels = 80;
            let width = 2.0 * half / panels as f64;
            for p in 0..panels {
                let a = -half + p as f64 * width;
                for (theta, w) in gl.mapped(a, a + width) {
                    let c = theta.cos();
                    let y = d.mu()[1] + theta.tan();
                    total += w / (c * c) * d.pdf(&DVector::from_vec(vec![x, y])).unwrap();
                }
            }
            let want = marg.pdf(&DVector::from_element(1, x)).unwrap();
            assert!((total - want).abs() <= 1e-4, "family {k} x={x}: {total} vs {want}");
        }
    }
}

#[test]
fn identical_laws_rarely_fail_with_independent_streams() {
    let d = LseDistribution::ghss(DVector::zeros(1), DMatrix::identity(1, 1), DVector::from_element(1, 0.3), 4.0).unwrap();
    let failures = (0..100)
        .filter(|&seed| !empirical::verify_st(&d, &d, &McConfig::new(20_000, seed).independent()).unwrap().pass)
        .count();
    assert!(failures < 5, "{failures} false failures in 100 seeds");
}

#[test]
fn sufficient_verdicts_survive_monte_carlo() {
    let mut rng = stream(12, 0);
    let mut verified = 0;
    let mut attempts = 0;
    while verified < 8 && attempts < 400 {
        attempts += 1;
        let family = if attempts % 2 == 0 { Family::normal() } else { Family::ghss(rng.random_range(3.0..6.0)) };
        let (d1, d2) = random_pair(&mut rng, 1, &family, false);
        for order in [OrderKind::St, OrderKind::Icx] {
            let report = orders::check(&d1, &d2, order).unwrap();
            if report.sufficient != Sufficient::Holds {
                continue;
            }
            let (m1, m2) = (d1.moments(), d2.moments());
            let centre = 0.5 * (m1.mean.unwrap()[0] + m2.mean.unwrap()[0]);
            let sd = m1.covariance.unwrap()[(0, 0)].max(m2.covariance.unwrap()[(0, 0)]).sqrt();
            let grid: Vec<f64> = (0..41).map(|i| centre - 5.0 * sd + 10.0 * sd * i as f64 / 40.0).collect();
            let cfg = McConfig::new(1_000_000, 1200 + attempts).with_grid(grid);
            let r = match order {
                OrderKind::St => empirical::verify_st(&d1, &d2, &cfg),
                _ => empirical::verify_icx(&d1, &d2, &cfg),
            }
            .unwrap();
            assert!(r.pass, "{order} attempt {attempts}: {r:?}");
            verified += 1;
        }
    }
    assert!(verified >= 8, "only {verified} ordered pairs found");
}
