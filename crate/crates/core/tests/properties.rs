use dabound_core::synth::{bayes_posterior, paper_default_specs};
use dabound_core::transport::{smoothed_zero_one, solve_assignment, Assignment};
use dabound_core::Matrix;
use proptest::prelude::*;

proptest! {
    #[test]
    fn smoothed_cost_is_bounded_and_monotone(gamma in 0.01f64..500.0, d1 in 0.0f64..50.0, d2 in 0.0f64..50.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let (a, b) = (smoothed_zero_one(gamma, lo), smoothed_zero_one(gamma, hi));
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b);
    }

    #[test]
    fn posteriors_sum_to_one(x in proptest::collection::vec(-10.0f64..15.0, 10)) {
        let (s, t) = paper_default_specs();
        for spec in [&s, &t] {
            let (p0, p1) = bayes_posterior(spec, &x).unwrap();
            prop_assert!((0.0..=1.0).contains(&p1));
            prop_assert!((p0 + p1 - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn assignment_is_a_permutation_no_worse_than_identity(
        n in 1usize..12,
        entries in proptest::collection::vec(0.0f64..10.0, 144),
    ) {
        let m = Matrix::from_vec(n, n, entries[..n * n].to_vec()).unwrap();
        let a = solve_assignment(&m).unwrap();
        let mut seen = vec![false; n];
        for &j in &a.permutation {
            prop_assert!(j < n && !seen[j]);
            seen[j] = true;
        }
        let identity: Vec<usize> = (0..n).collect();
        prop_assert!(a.matrix_total <= Assignment::total_from(&m, &identity) + 1e-9);
        prop_assert_eq!(a.matrix_total, Assignment::total_from(&m, &a.permutation));
    }

    #[test]
    fn derived_seeds_differ_by_stream(base in any::<u64>(), s in 0u64..1000) {
        prop_assert_ne!(dabound_core::derive_seed(base, s), dabound_core::derive_seed(base, s + 1));
    }
}
