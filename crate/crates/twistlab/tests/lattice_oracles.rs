//! Oracle-backed checks of the enumeration and classification machinery:
//! the ball enumerator against a direct product-box oracle, the closed-form
//! count against enumeration, and the badly-approximable functional against
//! the continued-fraction minima of quadratic irrationals.

use num::BigRational;
use rand::Rng;

use twistlab::geom::{quasi_norm_int, MatrixSpec, WeightVector};
use twistlab::lattice::{
    badness_functional, best_profile, count_ball, enumerate_ball, level_in_l, level_in_l_profile,
    Limits,
};
use twistlab::rng::task_rng;
use twistlab::scalar::{phi, sqrt2, sqrt3, Rat64, Scalar, Tri};

/// Direct product-box oracle: materialise the coordinate box from float
/// bounds, then keep exactly the points with `0 < |q|_alpha < n_bound`.
fn box_oracle(alpha: &WeightVector, n_bound: f64) -> Vec<Vec<i64>> {
    let bounds: Vec<i64> = alpha
        .values()
        .iter()
        .map(|w| (n_bound.powf(*w).ceil() as i64).max(0))
        .collect();
    let mut out = Vec::new();
    let mut q = vec![0i64; bounds.len()];
    fn rec(
        bounds: &[i64],
        alpha: &WeightVector,
        n_bound: f64,
        q: &mut Vec<i64>,
        d: usize,
        out: &mut Vec<Vec<i64>>,
    ) {
        if d == bounds.len() {
            if q.iter().any(|&x| x != 0) {
                let norm = quasi_norm_int(q, alpha).unwrap();
                if norm < n_bound {
                    out.push(q.clone());
                }
            }
            return;
        }
        for x in -bounds[d]..=bounds[d] {
            q[d] = x;
            rec(bounds, alpha, n_bound, q, d + 1, out);
        }
    }
    rec(&bounds, alpha, n_bound, &mut q, 0, &mut out);
    out.sort();
    out
}

fn random_weights(rng: &mut impl Rng, d: usize) -> WeightVector {
    // rational weights with denominator 4 summing exactly to d
    loop {
        let mut parts: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=7)).collect();
        let total: i64 = parts.iter().sum();
        let want = 4 * d as i64;
        let diff = want - total;
        parts[0] += diff;
        if parts.iter().all(|&p| p > 0) {
            return WeightVector::from_rationals(
                parts.into_iter().map(|p| Rat64::new(p, 4)).collect(),
            )
            .unwrap();
        }
    }
}

#[test]
fn enumeration_matches_box_oracle_on_100_random_cases() {
    let lim = Limits::default();
    let mut rng = task_rng(2024, 0);
    for case in 0..100 {
        let m = rng.gen_range(1..=2);
        let alpha = random_weights(&mut rng, m);
        // offset away from integer powers so float and exact agree
        let n_bound = rng.gen_range(1..=31) as f64 + 0.41;
        let mut got: Vec<Vec<i64>> = enumerate_ball(&alpha, n_bound, &lim).unwrap().collect();
        got.sort();
        let want = box_oracle(&alpha, n_bound);
        assert_eq!(
            got,
            want,
            "case {case}: alpha = {:?}, N = {n_bound}",
            alpha.values()
        );
    }
}

#[test]
fn count_matches_enumeration_on_100_random_cases() {
    let lim = Limits::default();
    let mut rng = task_rng(2025, 0);
    for _ in 0..100 {
        let m = rng.gen_range(1..=2);
        let alpha = random_weights(&mut rng, m);
        let n_bound = rng.gen_range(1..=31) as f64 + 0.5;
        // no |q|_alpha hits N exactly at this offset, so < and <= coincide
        let enumerated = enumerate_ball(&alpha, n_bound, &lim).unwrap().count() as u128;
        assert_eq!(count_ball(&alpha, n_bound).unwrap(), enumerated + 1);
    }
}

#[test]
fn best_profile_is_non_increasing_in_the_radius() {
    let lim = Limits::default();
    let w1 = WeightVector::ones(1);
    let a = MatrixSpec::from_floats(1, 1, vec![phi()]).unwrap();
    let mut prev = f64::INFINITY;
    for n in [2.0, 4.0, 8.0, 16.0, 64.0, 256.0] {
        let (v, _) = best_profile(&a, &w1, &w1, n, &lim).unwrap();
        assert!(v <= prev, "profile rose from {prev} to {v} at N = {n}");
        prev = v;
    }
}

fn random_rational_matrix(rng: &mut impl Rng, n: usize, m: usize) -> MatrixSpec {
    let entries: Vec<BigRational> = (0..n * m)
        .map(|_| {
            let den = rng.gen_range(2..=12);
            let num = rng.gen_range(0..den);
            BigRational::new(num.into(), den.into())
        })
        .collect();
    MatrixSpec::from_rationals(n, m, entries).unwrap()
}

#[test]
fn per_row_and_profile_routes_agree_on_50_rational_matrices() {
    let lim = Limits::default();
    let mut rng = task_rng(77, 0);
    let eps_grid = [
        Scalar::exact_from_i64(1, 10),
        Scalar::exact_from_i64(1, 4),
        Scalar::exact_from_i64(1, 2),
    ];
    for _ in 0..50 {
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        let a = random_rational_matrix(&mut rng, n, m);
        let v = random_weights(&mut rng, n);
        let alpha = random_weights(&mut rng, m);
        for eps in &eps_grid {
            for level in 1..=3u32 {
                let direct = level_in_l(&a, &v, &alpha, eps, level, &lim).unwrap();
                let profile = level_in_l_profile(&a, &v, &alpha, eps, level, &lim).unwrap();
                assert_eq!(direct, profile, "matrix {a:?}, eps {eps}, level {level}");
                assert_ne!(direct, Tri::Indeterminate, "exact mode never indeterminate");
            }
        }
    }
}

#[test]
fn level_membership_is_monotone_in_eps() {
    let lim = Limits::default();
    let mut rng = task_rng(78, 0);
    for _ in 0..25 {
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        let a = random_rational_matrix(&mut rng, n, m);
        let v = random_weights(&mut rng, n);
        let alpha = random_weights(&mut rng, m);
        for level in 1..=3u32 {
            let outcomes: Vec<Tri> = [
                Scalar::exact_from_i64(1, 2),
                Scalar::exact_from_i64(1, 4),
                Scalar::exact_from_i64(1, 10),
                Scalar::exact_from_i64(1, 100),
            ]
            .iter()
            .map(|e| level_in_l(&a, &v, &alpha, e, level, &lim).unwrap())
            .collect();
            // once a level is in L at some eps it stays in L at smaller eps
            for w in outcomes.windows(2) {
                if w[0].is_true() {
                    assert!(w[1].is_true(), "monotonicity in eps broke: {outcomes:?}");
                }
            }
        }
    }
}

/// Continued-fraction oracle: minima of `q ||q x||` over a denominator window
/// are attained at convergent denominators, computed from the known periodic
/// expansion of the quadratic irrational.
fn cf_window_min(x: f64, cf_terms: &mut dyn Iterator<Item = u64>, q0: f64, q1: f64) -> f64 {
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p_cur, mut q_cur) = (cf_terms.next().unwrap() as i64, 1i64);
    let mut best = f64::INFINITY;
    while (q_cur as f64) < q1 {
        if q_cur as f64 >= q0 {
            let r = (q_cur as f64 * x - p_cur as f64).abs();
            best = best.min(q_cur as f64 * r);
        }
        let a = cf_terms.next().unwrap() as i64;
        let p_next = a * p_cur + p_prev;
        let q_next = a * q_cur + q_prev;
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
    }
    best
}

#[test]
fn badness_agrees_with_continued_fraction_oracle() {
    let lim = Limits::default();
    let w1 = WeightVector::ones(1);

    // golden ratio: all partial quotients are 1
    let a = MatrixSpec::from_floats(1, 1, vec![phi()]).unwrap();
    let got = badness_functional(&a, &w1, &w1, 100.0, 10_000.0, &lim).unwrap();
    let want = cf_window_min(phi(), &mut std::iter::repeat(1), 100.0, 10_000.0);
    assert!((got - want).abs() < 1e-6, "phi: got {got}, oracle {want}");

    // sqrt(2) = [1; 2, 2, 2, ...]
    let a = MatrixSpec::from_floats(1, 1, vec![sqrt2()]).unwrap();
    let got = badness_functional(&a, &w1, &w1, 50.0, 5_000.0, &lim).unwrap();
    let mut terms = std::iter::once(1u64).chain(std::iter::repeat(2));
    let want = cf_window_min(sqrt2(), &mut terms, 50.0, 5_000.0);
    assert!((got - want).abs() < 1e-6, "sqrt2: got {got}, oracle {want}");

    // sqrt(3) = [1; 1, 2, 1, 2, ...]
    let a = MatrixSpec::from_floats(1, 1, vec![sqrt3()]).unwrap();
    let got = badness_functional(&a, &w1, &w1, 50.0, 5_000.0, &lim).unwrap();
    let mut terms = std::iter::once(1u64).chain([1u64, 2].into_iter().cycle());
    let want = cf_window_min(sqrt3(), &mut terms, 50.0, 5_000.0);
    assert!((got - want).abs() < 1e-6, "sqrt3: got {got}, oracle {want}");
}
