use proptest::prelude::*;

use finsmooth::catalog::{hexagon_norm, lookup, max_norm};
use finsmooth::field::Analytic;
use finsmooth::geometry::{flag_curvature, Flag, GeometryEval};
use finsmooth::harness::{decreasing, series_csv, GridSpec, Quantity, SweepConfig};
use finsmooth::kernel::{Mollifier, QuadOrders};
use finsmooth::norm::{check_growth_bound, compute_chart_bounds, growth_radius, sphere_extrema};
use finsmooth::vertical::{Blend, VerticalConfig, VerticalSmoothed};

fn angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_even_nonnegative_and_supported(r in 0.05f64..3.0, x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let k = Mollifier::new(2, r).unwrap();
        let v = k.value(&[x, y]);
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v, k.value(&[-x, -y]));
        if x * x + y * y >= r * r {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn convolution_reproduces_affine(
        r in 0.05f64..2.0,
        p in prop::array::uniform2(-3.0f64..3.0),
        a in prop::array::uniform2(-5.0f64..5.0),
        b in -5.0f64..5.0,
    ) {
        let k = Mollifier::new(2, r).unwrap();
        let q = QuadOrders::default_for(2);
        let f = |z: &[f64]| a[0] * z[0] + a[1] * z[1] + b;
        let c = k.convolve(&p, &q, f).unwrap();
        prop_assert!((c - f(&p)).abs() < 1e-11 * (1.0 + f(&p).abs()));
        let d = k.convolve_derivative(&[1, 0], &p, &q, f).unwrap();
        prop_assert!((d - a[0]).abs() < 1e-9 * (1.0 + a[0].abs()));
    }

    #[test]
    fn growth_bound_on_admissible_samples(
        th in angle(), len in 0.1f64..5.0, frac in 0.0f64..1.0, ph in angle(), lt in -4.0f64..2.0, hex in any::<bool>(),
    ) {
        let f: fn(&[f64]) -> f64 = if hex { hexagon_norm } else { max_norm };
        let bounds = sphere_extrema(2, &f).unwrap();
        let v = [len * th.cos(), len * th.sin()];
        let rad = growth_radius(&v, &bounds) * frac;
        let w = [v[0] + rad * ph.cos(), v[1] + rad * ph.sin()];
        let rep = check_growth_bound(&f, &v, &w, 10f64.powf(lt), &bounds).unwrap();
        prop_assert!(rep.admissible);
        prop_assert!(rep.holds, "gap {} threshold {}", rep.gap, rep.threshold);
    }

    #[test]
    fn riemannian_tensor_is_y_independent(th in angle(), s in 0.1f64..10.0, x0 in -0.2f64..0.2, x1 in 0.8f64..1.2) {
        let e = lookup("poincare_half_plane").unwrap();
        let src = Analytic::new(e.field.clone());
        let y = [s * th.cos(), s * th.sin()];
        let geo = GeometryEval::connection_only(&src, &[x0, x1], &y).unwrap();
        let want = 1.0 / (x1 * x1);
        prop_assert!((geo.g[0][0] - want).abs() < 1e-12 * want);
        prop_assert!(geo.g[0][1].abs() < 1e-12 * want);
        prop_assert!((geo.g[1][1] - want).abs() < 1e-12 * want);
    }

    #[test]
    fn flag_curvature_depends_only_on_the_flag(th in angle(), a in 0.2f64..3.0, b in -2.0f64..2.0, mu in 0.2f64..4.0) {
        let e = lookup("poincare_half_plane").unwrap();
        let src = Analytic::new(e.field.clone());
        let y = vec![th.cos(), th.sin()];
        let z = vec![-th.sin(), th.cos()];
        let x = vec![0.05, 1.1];
        let k0 = flag_curvature(&src, &Flag { x: x.clone(), y: y.clone(), z: z.clone() }).unwrap();
        let z2: Vec<f64> = z.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let y2: Vec<f64> = y.iter().map(|v| mu * v).collect();
        let k1 = flag_curvature(&src, &Flag { x, y: y2, z: z2 }).unwrap();
        prop_assert!((k0 + 1.0).abs() < 1e-6);
        prop_assert!((k1 - k0).abs() < 1e-6);
    }

    #[test]
    fn decrease_verdict_matches_definition(mut v in prop::collection::vec(1e-6f64..1.0, 2..10)) {
        v.sort_by(|a, b| b.total_cmp(a));
        v.dedup();
        prop_assert!(decreasing(&v, v.len(), 0.0));
        let mut bumped = v.clone();
        bumped.push(v[v.len() - 1] * 2.0);
        prop_assert!(!decreasing(&bumped, bumped.len(), 0.0));
        // a bump below the floor is tolerated
        prop_assert!(decreasing(&bumped, bumped.len(), v[v.len() - 1] * 2.0));
    }

    #[test]
    fn epsilon_ladder_is_strict(eps0 in 0.01f64..0.99, count in 1usize..12) {
        let mut c = SweepConfig::new("euclidean", &[Quantity::F]);
        c.eps0 = eps0;
        c.count = count;
        let e = c.epsilon_list().unwrap();
        prop_assert_eq!(e.len(), count);
        prop_assert!(e.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(e.iter().all(|&x| x > 0.0 && x < 1.0));
        let body = series_csv(&e, &e);
        prop_assert_eq!(body.lines().count(), count + 1);
    }

    #[test]
    fn grid_spec_round_trip(p in 1usize..50, d in 1usize..200, f in 1usize..50) {
        let g: GridSpec = format!("{p},{d},{f}").parse().unwrap();
        prop_assert_eq!(g, GridSpec { points: p, directions: d, flags: f });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn smoothed_norm_is_positively_homogeneous(th in angle(), mu in 0.01f64..50.0, frac in 0.1f64..0.9) {
        let e = lookup("polytope_norm_2d").unwrap();
        let bounds = compute_chart_bounds(e.field.as_ref(), &e.charts[0].domain).unwrap();
        let cfg = VerticalConfig::new(2, bounds, Blend::default(), QuadOrders::default_for(2)).unwrap();
        let v = VerticalSmoothed::new(e.field.clone(), cfg, frac * cfg.tau).unwrap();
        let y = [th.cos(), th.sin()];
        let g = v.g_eps(&[0.0, 0.0], &y).unwrap();
        let gm = v.g_eps(&[0.0, 0.0], &[mu * y[0], mu * y[1]]).unwrap();
        prop_assert!((gm - mu * g).abs() <= 1e-14 * mu * g);
        // close to the unsmoothed norm
        prop_assert!((g - hexagon_norm(&y)).abs() < 0.05);
    }
}
