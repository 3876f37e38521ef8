use proptest::prelude::*;

use lifespan::bounds::{e_q, g_root, general_shape, series_lower_bound, upper_bound_constant, y_quantity, RootResult};
use lifespan::experiments::fit_power_law;
use lifespan::geometry::{make_box, make_patch, Grid, PatchShape};
use lifespan::kernel::KernelEvaluator;
use lifespan::solver::{interpolate, solve_fd, Problem, SolveControl};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_symmetric_and_positive(
        x in prop::array::uniform2(0.0f64..1.0),
        y in prop::array::uniform2(0.0f64..1.0),
        t in 1e-3f64..5.0,
    ) {
        let d = make_box(2, &[1.0, 1.0]).unwrap();
        let ev = KernelEvaluator::new(&d).unwrap();
        let a = ev.kernel(&x, &y, t).unwrap();
        let b = ev.kernel(&y, &x, t).unwrap();
        prop_assert!(a >= -1e-12);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn eq_between_its_envelopes(q in 1.001f64..200.0) {
        let e = e_q(q);
        prop_assert!(1.0 / (3.0 * q) < e);
        prop_assert!(e < (1.0 / q).min(1.0 / ((q - 1.0) * std::f64::consts::E)));
    }

    #[test]
    fn series_dominates_log(lambda in 0.01f64..0.99, log_a in -3.0f64..8.0) {
        let s = series_lower_bound(lambda, 10f64.powf(log_a)).unwrap();
        prop_assert!(s.holds, "{s:?}");
    }

    #[test]
    fn root_solves_and_is_classified(q in 1.05f64..6.0, m in 0.01f64..100.0, frac in 0.01f64..1.5) {
        let ymax = m.powf(1.0 - q) * e_q(q);
        let y = frac * ymax;
        match g_root(q, m, y).unwrap() {
            RootResult::Root { lambda, .. } => {
                prop_assert!(frac <= 1.0 + 1e-12);
                prop_assert!(lambda > m && lambda <= q * m / (q - 1.0) * (1.0 + 1e-12));
                let g = (lambda - m) / lambda.powf(q);
                prop_assert!((g - y).abs() <= 1e-10 * y);
            }
            RootResult::NoRoot => prop_assert!(frac > 1.0),
        }
    }

    #[test]
    fn bounds_shrink_with_data_and_patch(
        q in 1.1f64..4.0,
        m0 in 0.05f64..5.0,
        area in 0.01f64..1.0,
        n in 2usize..4,
    ) {
        prop_assert!(general_shape(q, 2.0 * m0, area, n) <= general_shape(q, m0, area, n));
        prop_assert!(general_shape(q, m0, 0.5 * area, n) >= general_shape(q, m0, area, n));
        prop_assert!(y_quantity(q, 2.0 * m0, area, n) > y_quantity(q, m0, area, n));
        let up = upper_bound_constant(q, m0, area, 1.0).unwrap();
        prop_assert!(upper_bound_constant(q, 2.0 * m0, area, 1.0).unwrap() < up);
        prop_assert!(upper_bound_constant(q, m0, 2.0 * area, 1.0).unwrap() < up);
    }

    #[test]
    fn interpolation_stays_in_range(ys in prop::collection::vec(-5.0f64..5.0, 2..12), frac in 0.0f64..1.0) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        let x = frac * (ys.len() - 1) as f64;
        let v = interpolate(&xs, &ys, x).unwrap();
        let k = (x.floor() as usize).min(ys.len() - 2);
        let (lo, hi) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        prop_assert!(interpolate(&xs, &ys, -0.5).is_none());
    }

    #[test]
    fn fit_recovers_exact_power(slope in -3.0f64..3.0, scale in 0.1f64..10.0) {
        let xs: Vec<f64> = (0..6).map(|i| 0.1 * 2f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| scale * x.powf(slope)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f.r2));
        prop_assert_eq!(f.residuals.len(), xs.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fd_stays_positive_and_maximum_grows(m0 in 0.1f64..3.0, q in 1.2f64..3.0, lo in 0.0f64..0.5) {
        let d = make_box(2, &[1.0, 1.0]).unwrap();
        let p = make_patch(&d, "y-", PatchShape::Rect { lo: vec![lo], hi: vec![lo + 0.5] }).unwrap();
        let problem = Problem::constant(d, p, q, m0).unwrap();
        let grid = Grid::new(&problem.domain, 1.0 / 8.0).unwrap();
        let mut control = SolveControl::for_m0(m0);
        control.t_end = Some(0.05);
        let r = solve_fd(&problem, &grid, &control).unwrap();
        prop_assert!(r.min_value >= m0 * (1.0 - 1e-12));
        prop_assert!(r.trace.windows(2).all(|w| w[1].m >= w[0].m && w[1].t > w[0].t));
    }
}
