//! Cross-route equality and structural properties of the dimension
//! calculators.

use rand::Rng;

use twistlab::dimension::{
    dim_unweighted, dim_weighted_2d, pivot_partition_bound, pivot_partition_from_unweighted,
    upper_cover_exponent,
};
use twistlab::geom::WeightVector;
use twistlab::rng::task_rng;

/// Random admissible unweighted instance: `tau_j > m/n`, drawn on a coarse
/// grid so the rational lifts stay small.
fn random_unweighted(rng: &mut impl Rng) -> (usize, usize, Vec<f64>) {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=4);
    let tau: Vec<f64> = (0..n)
        .map(|_| m as f64 / n as f64 + rng.gen_range(1..=40) as f64 / 8.0)
        .collect();
    (m, n, tau)
}

#[test]
fn three_routes_agree_exactly_on_200_random_instances() {
    let mut rng = task_rng(888, 0);
    for case in 0..200 {
        let (m, n, tau) = random_unweighted(&mut rng);
        let direct = dim_unweighted(m, n, &tau).unwrap();

        // pivot-partition route through the exact reduction
        let mt = pivot_partition_from_unweighted(m, n, &tau).unwrap();
        assert_eq!(
            direct.value.to_bits(),
            mt.value.to_bits(),
            "case {case}: m={m} n={n} tau={tau:?}: {} vs {}",
            direct.value,
            mt.value
        );

        // covering route: the same minimum over explicit pivots
        let cover = (1..=n)
            .map(|j| upper_cover_exponent(m, &tau, j).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(direct.value.to_bits(), cover.to_bits(), "case {case}");
    }
}

#[test]
fn weighted_flat_matches_unweighted_on_100_random_instances() {
    let mut rng = task_rng(889, 0);
    let v = WeightVector::ones(2);
    let mut done = 0;
    while done < 100 {
        let m = rng.gen_range(1..=4);
        // both hypotheses need tau > m/2; route agreement needs tau_min <= m,
        // the regime where the closed form is the covering minimum
        let tau: Vec<f64> = (0..2)
            .map(|_| {
                let lo = m as f64 / 2.0;
                lo + rng.gen_range(1..=(4 * m)) as f64 / 8.0
            })
            .collect();
        if tau.iter().any(|t| *t > m as f64) {
            continue;
        }
        let w = dim_weighted_2d(m, &v, &tau).unwrap();
        let u = dim_unweighted(m, 2, &tau).unwrap();
        assert_eq!(
            w.value.to_bits(),
            u.value.to_bits(),
            "m={m} tau={tau:?}: {} vs {}",
            w.value,
            u.value
        );
        assert!(w.checks.iter().all(|c| c.passed));
        done += 1;
    }
}

#[test]
fn value_is_permutation_invariant_and_monotone() {
    let mut rng = task_rng(890, 0);
    for _ in 0..50 {
        let (m, n, mut tau) = random_unweighted(&mut rng);
        let before = dim_unweighted(m, n, &tau).unwrap().value;
        // permutation invariance
        tau.reverse();
        let after = dim_unweighted(m, n, &tau).unwrap().value;
        assert_eq!(before.to_bits(), after.to_bits());
        // monotone non-increasing when any tau_i increases
        let j = rng.gen_range(0..n);
        tau[j] += 0.5;
        let bigger = dim_unweighted(m, n, &tau).unwrap().value;
        assert!(bigger <= after + 1e-15);
    }
}

#[test]
fn reports_carry_valid_partitions_and_bounded_values() {
    let mut rng = task_rng(891, 0);
    for _ in 0..100 {
        let (m, n, tau) = random_unweighted(&mut rng);
        let rep = dim_unweighted(m, n, &tau).unwrap();
        assert!(rep.partitions_are_valid(n));
        assert!(rep.value > 0.0 && rep.value <= n as f64);

        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=16) as f64 / 4.0).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=16) as f64 / 4.0).collect();
        let rep = pivot_partition_bound(&a, &t).unwrap();
        assert!(rep.partitions_are_valid(n));
        assert!(rep.value > 0.0 && rep.value <= n as f64);
    }
}
