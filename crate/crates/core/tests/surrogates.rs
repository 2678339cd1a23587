use locality_core::surrogate::{fit_tree, fit_weighted_ridge, DEFAULT_LAMBDA};
use proptest::prelude::*;

fn plane() -> impl Strategy<Value = (Vec<f64>, f64, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|d| {
        (
            prop::collection::vec(-2.0..2.0f64, d),
            -1.0..1.0f64,
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), (d + 8)..40),
            prop::collection::vec(0.1..5.0f64, 40),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_recovers_an_exact_plane((a, c, points, w) in plane()) {
        let targets: Vec<f64> = points.iter().map(|p| c + p.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>()).collect();
        let w = &w[..points.len()];
        let fit = fit_weighted_ridge(&points, &targets, Some(w), 1e-12).unwrap();
        for (got, want) in fit.coefficients.iter().zip(&a) {
            prop_assert!((got - want).abs() < 1e-6);
        }
        prop_assert!((fit.intercept - c).abs() < 1e-6);
    }

    #[test]
    fn ridge_ignores_a_global_weight_scale((a, c, points, w) in plane(), scale in 0.01..100.0f64) {
        let targets: Vec<f64> = points.iter().enumerate().map(|(i, p)| c + (i % 3) as f64 * 0.1 + p.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>()).collect();
        let w = &w[..points.len()];
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let one = fit_weighted_ridge(&points, &targets, Some(w), DEFAULT_LAMBDA).unwrap();
        let two = fit_weighted_ridge(&points, &targets, Some(&scaled), DEFAULT_LAMBDA).unwrap();
        for (x, y) in one.coefficients.iter().zip(&two.coefficients) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn tree_respects_depth_and_fits_separable_labels(
        points in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 2..60),
        depth in 1usize..=4,
    ) {
        let labels: Vec<u8> = points.iter().map(|p| u8::from(p[0] > 0.1)).collect();
        let tree = fit_tree(&points, &labels, None, depth, 1.0).unwrap();
        prop_assert!(tree.depth() <= depth);
        for (p, &y) in points.iter().zip(&labels) {
            prop_assert_eq!(tree.predict(p), y);
        }
    }
}
