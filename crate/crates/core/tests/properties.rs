use proptest::prelude::*;
use wiener_bounds::ids;
use wiener_bounds::inequalities::path_mean_variance;
use wiener_bounds::oracle::count_states;
use wiener_bounds::paths::{self, PathGrid, SampledPath};
use wiener_bounds::potentials::gaussian_laplace_moment;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bridge_is_affine_in_endpoints(
        seed in any::<u64>(),
        steps in 1usize..40,
        total in 0.1f64..5.0,
        start in prop::collection::vec(-3.0f64..3.0, 2),
        end in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let grid = PathGrid::new(total, steps, 2).unwrap();
        let w = paths::wiener_path(&grid, seed, 0);
        let moved = paths::to_bridge(&w, &start, &end).unwrap();
        let pinned = paths::to_bridge(&w, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        prop_assert_eq!(moved.node(0), &start[..]);
        prop_assert_eq!(moved.node(steps), &end[..]);
        for k in 0..grid.n_nodes() {
            let f = grid.time(k) / total;
            for j in 0..2 {
                let shift = moved.node(k)[j] - pinned.node(k)[j];
                let line = start[j] + f * (end[j] - start[j]);
                prop_assert!((shift - line).abs() <= 1e-12 * (1.0 + line.abs()), "k={} j={} {} vs {}", k, j, shift, line);
            }
        }
    }

    #[test]
    fn counting_is_monotone(mut ev in prop::collection::vec(-10.0f64..10.0, 0..60), a in -12.0f64..12.0, b in -12.0f64..12.0) {
        ev.sort_by(f64::total_cmp);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(count_states(&ev, lo) <= count_states(&ev, hi));
        prop_assert_eq!(count_states(&ev, hi), ev.iter().filter(|&&l| l <= hi).count());
    }

    #[test]
    fn path_variance_ignores_constant_shift(
        xs in prop::collection::vec(-4.0f64..4.0, 2..80),
        shift in -50.0f64..50.0,
        slope in -2.0f64..2.0,
    ) {
        let base = path_mean_variance(xs.iter().copied(), |r| slope * r + r.sin());
        let moved = path_mean_variance(xs.iter().copied(), |r| slope * r + r.sin() + shift);
        prop_assert!(base.variance >= 0.0);
        prop_assert!((moved.variance - base.variance).abs() <= 1e-12 * (1.0 + shift.abs()).powi(2));
        prop_assert!((moved.mean - base.mean - shift).abs() <= 1e-12 * (1.0 + shift.abs()));
        let flat = path_mean_variance(xs.iter().copied(), |_| shift);
        // only rounding of the mean survives
        prop_assert!(flat.variance <= (64.0 * f64::EPSILON * (1.0 + shift.abs())).powi(2));
    }

    #[test]
    fn optimized_bound_never_exceeds_fixed(e in -30.0f64..30.0, c0 in 0.1f64..5.0, beta in 0.01f64..20.0, d in 1usize..4) {
        let (opt, beta_star) = ids::optimized_pastur_bound(e, c0, 1.0, d).unwrap();
        let fixed = ids::pastur_bound(e, beta, gaussian_laplace_moment(c0, beta).unwrap(), 1.0, d);
        prop_assert!(beta_star > 0.0);
        prop_assert!(opt <= fixed * (1.0 + 1e-10), "{} > {}", opt, fixed);
    }
}
