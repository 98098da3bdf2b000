mod common;

use common::{battery, rng};
use imcergo::ergodicity::{self, LimitConfig};
use imcergo::generate::{self, ModelShape};
use imcergo::graph;
use imcergo::{Gamble, UpperTransitionOperator};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigenpair_satisfies_its_equation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = generate::random_strongly_connected(&mut r, &ModelShape::default());
        let op = UpperTransitionOperator::new(&m);
        let f = generate::random_gamble(&mut r, m.n()).scaled(2.0);
        let cfg = LimitConfig::default();
        let e = ergodicity::estimate_eigenvalue(&op, &f, None, &cfg).unwrap();
        let lhs = op.apply_topical(&f, &e.eigvec).unwrap();
        let rhs = e.eigvec.shifted(e.mu);
        prop_assert!(lhs.distance(&rhs) <= cfg.scaled_tol(&f));
        prop_assert!(e.bounds.0 <= e.mu && e.mu <= e.bounds.1);
        prop_assert_eq!(e.eigvec.min(), 0.0);
    }

    #[test]
    fn averages_approach_the_top_class_limit(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = generate::random_tca_model(&mut r, &ModelShape::default());
        let op = UpperTransitionOperator::new(&m);
        let f = generate::random_gamble(&mut r, m.n());
        let cfg = LimitConfig::default();
        let report = graph::classify(&m);
        let top = report.decomposition.top_states().unwrap();
        let e = ergodicity::estimate_eigenvalue(&op, &f, Some(top), &cfg).unwrap();
        let k = 5000;
        let m_bar = op.average_recursion(&f, k).unwrap().m_bar;
        // nonexpansiveness puts the top-class averages within span(h)/k of the limit
        let bound = e.eigvec.span() / k as f64 + 1e-9;
        for (i, &x) in top.iter().enumerate() {
            prop_assert!((m_bar[x] - e.mu).abs() <= bound, "state {} index {}", x, i);
        }
        let weak = ergodicity::weak_ergodic_limit(&op, &f, &cfg).unwrap().unwrap();
        prop_assert!((weak - e.mu).abs() <= 1e-9);
    }

    #[test]
    fn report_limits_are_consistent(seed in any::<u64>()) {
        let m = battery(seed, 1).pop().unwrap();
        let op = UpperTransitionOperator::new(&m);
        let f = generate::random_gamble(&mut rng(seed ^ 5), m.n());
        let cfg = LimitConfig::default();
        let rep = ergodicity::full_report(&op, &f, &cfg).unwrap();
        let neg = ergodicity::full_report(&op, &f.negated(), &cfg).unwrap();
        prop_assert_eq!(rep.limit_upper.is_some(), rep.ergodic);
        prop_assert_eq!(rep.limit_avg_upper.is_some(), rep.weakly_ergodic);
        prop_assert_eq!(rep.limit_lower, neg.limit_upper.map(|v| -v));
        prop_assert_eq!(rep.limit_avg_lower, neg.limit_avg_upper.map(|v| -v));
        if let (Some(avg), Some(lim)) = (rep.limit_avg_upper, rep.limit_upper) {
            prop_assert!(avg <= lim + 1e-6);
        }
        for c in &rep.per_class_limits {
            prop_assert!(c.lower <= c.upper + 1e-9);
        }
    }
}

#[test]
fn restricting_to_an_open_class_is_rejected() {
    let m =
        imcergo::model::load_model_file(concat!(env!("CARGO_MANIFEST_DIR"), "/models/leaky.json"))
            .unwrap();
    let op = UpperTransitionOperator::new(&m);
    let f = Gamble::new(vec![0.0, 1.0]).unwrap();
    let cfg = LimitConfig::default();
    let b = [1usize].into_iter().collect();
    assert!(matches!(
        ergodicity::per_class_limit(&op, &f, &b, &cfg),
        Err(imcergo::Error::NotClosed)
    ));
    let both = [0usize, 1].into_iter().collect();
    assert!(matches!(
        ergodicity::per_class_limit(&op, &f, &both, &cfg),
        Err(imcergo::Error::NotCommunicating)
    ));
}
