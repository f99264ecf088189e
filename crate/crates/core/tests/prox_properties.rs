use bayesinv_core::proximal::{
    isotonic_increasing, moreau_envelope, prox, project_convex, soft_threshold, tv1d_denoise, ProxFn,
};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn convex_fns() -> Vec<ProxFn> {
    vec![
        ProxFn::L1,
        ProxFn::Tv1d,
        ProxFn::NonNeg,
        ProxFn::Box { lower: -0.5, upper: 1.5 },
        ProxFn::Increasing,
        ProxFn::Decreasing,
        ProxFn::Convex,
        ProxFn::Concave,
        ProxFn::SquaredNorm,
    ]
}

fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn firmly_nonexpansive((x, y) in pair(5), alpha in 0.01..3.0f64) {
        for f in convex_fns() {
            let px = prox(&f, &x, alpha).unwrap();
            let py = prox(&f, &y, alpha).unwrap();
            let d = sub(&px, &py);
            let lhs = dot(&d, &d);
            let rhs = dot(&d, &sub(&x, &y));
            let slack = 1e-9;
            prop_assert!(lhs <= rhs + slack * (1.0 + rhs.abs()), "{}: {lhs} > {rhs}", f.name());
        }
    }

    #[test]
    fn indicators_are_idempotent(x in prop::collection::vec(-5.0..5.0f64, 6), alpha in 0.01..3.0f64) {
        for f in convex_fns().into_iter().filter(|f| f.is_indicator()) {
            let p = prox(&f, &x, alpha).unwrap();
            let pp = prox(&f, &p, alpha).unwrap();
            let gap = sub(&p, &pp).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(gap < 1e-6, "{}: {gap}", f.name());
            prop_assert_eq!(f.eval(&p).unwrap(), 0.0);
        }
    }

    #[test]
    fn l1_moreau_decomposition(x in prop::collection::vec(-5.0..5.0f64, 4), alpha in 0.01..3.0f64) {
        // x = prox_{alpha |.|_1}(x) + alpha * proj_{[-1, 1]}(x / alpha)
        let p = prox(&ProxFn::L1, &x, alpha).unwrap();
        for (xi, pi) in x.iter().zip(&p) {
            prop_assert!((pi + alpha * (xi / alpha).clamp(-1.0, 1.0) - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_below_function(x in prop::collection::vec(-5.0..5.0f64, 4), alpha in 0.01..3.0f64) {
        for f in [ProxFn::L1, ProxFn::Tv1d, ProxFn::SquaredNorm] {
            let env = moreau_envelope(&f, &x, alpha).unwrap();
            // z = x is feasible in the proximal problem
            prop_assert!(env <= alpha * f.eval(&x).unwrap() + 1e-12);
            prop_assert!(env >= 0.0);
        }
    }

    #[test]
    fn isotonic_output_is_sorted_and_mean_preserving(x in prop::collection::vec(-5.0..5.0f64, 1..12)) {
        let p = isotonic_increasing(&x);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        let (a, b): (f64, f64) = (x.iter().sum(), p.iter().sum());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn tv1d_preserves_the_mean(x in prop::collection::vec(-5.0..5.0f64, 1..20), lambda in 0.0..3.0f64) {
        let p = tv1d_denoise(&x, lambda);
        let (a, b): (f64, f64) = (x.iter().sum(), p.iter().sum());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn convex_projection_is_convex(x in prop::collection::vec(-5.0..5.0f64, 3..9)) {
        let p = project_convex(&x, 1e-10, 5000).unwrap();
        for w in p.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-6);
        }
    }
}

#[test]
fn soft_threshold_values() {
    assert_eq!(soft_threshold(3.0, 1.0), 2.0);
    assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    assert_eq!(soft_threshold(0.5, 1.0), 0.0);
}

#[test]
fn tv1d_two_points_closed_form() {
    // merges when |x1 - x0| <= 2 lambda, otherwise each moves lambda inward
    assert_eq!(tv1d_denoise(&[0.0, 1.0], 0.6), vec![0.5, 0.5]);
    let p = tv1d_denoise(&[0.0, 3.0], 0.5);
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 2.5).abs() < 1e-12);
}
