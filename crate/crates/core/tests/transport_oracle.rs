use dabound_core::transport::{cost, empirical_wasserstein, sorted_sum, CostSpec};
use dabound_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                go(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum over every matching of the mean matched cost.
fn brute_force(a: &Matrix, b: &Matrix, spec: &CostSpec) -> f64 {
    let n = a.rows();
    permutations(n)
        .iter()
        .map(|p| {
            let mut v: Vec<f64> = (0..n).map(|i| cost(spec, a.row(i), b.row(p[i])).unwrap()).collect();
            sorted_sum(&mut v) / n as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// Matchings that tie in exact arithmetic can differ by a few ulps once summed.
fn ulps(v: f64) -> f64 {
    8.0 * f64::EPSILON * v.abs().max(1.0)
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Matrix {
    let data = (0..n * d).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

#[test]
fn matches_enumeration_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // The smoothed cost gets a small scale so that it does not saturate.
    let specs = [(CostSpec::lp(1.0, 1.0), 1.0), (CostSpec::lp(2.0, 1.0), 1.0), (CostSpec::smoothed(100.0), 0.02)];
    for n in 2..=6 {
        for _ in 0..40 {
            for (spec, scale) in &specs {
                let a = random_batch(&mut rng, n, 3, *scale);
                let b = random_batch(&mut rng, n, 3, *scale);
                let (got, want) = (empirical_wasserstein(&a, &b, spec).unwrap(), brute_force(&a, &b, spec));
                assert!(got >= want && got - want <= ulps(want), "n={n} {spec:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn euclidean_distance_is_a_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = CostSpec::lp(2.0, 1.0);
    for _ in 0..25 {
        let a = random_batch(&mut rng, 20, 4, 2.0);
        let b = random_batch(&mut rng, 20, 4, 2.0);
        let c = random_batch(&mut rng, 20, 4, 2.0);
        let w = |x: &Matrix, y: &Matrix| empirical_wasserstein(x, y, &spec).unwrap();
        assert_eq!(w(&a, &b), w(&b, &a));
        assert_eq!(w(&a, &a), 0.0);
        assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
    }
}

#[test]
fn mismatched_batches_are_rejected() {
    let a = Matrix::zeros(3, 2);
    assert!(empirical_wasserstein(&a, &Matrix::zeros(4, 2), &CostSpec::lp(2.0, 1.0)).is_err());
    assert!(empirical_wasserstein(&Matrix::zeros(0, 2), &Matrix::zeros(0, 2), &CostSpec::lp(2.0, 1.0)).is_err());
}
