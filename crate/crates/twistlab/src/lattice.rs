//! Enumeration of integer vectors in weighted-norm balls, best-approximation
//! profiles, and finite-scale classification of a matrix as singular-like or
//! badly-approximable via the dyadic level set.
//!
//! A weighted ball `0 < |q|_alpha < N` decomposes per coordinate:
//! `|q|_alpha < N  <=>  |q_j| < N^(alpha_j)` for every `j`, so the ball is a
//! coordinate box minus the origin. Bounds are computed exactly (by clearing
//! the rational exponent denominator) whenever the weights are rational, which
//! is what makes the closed-form count and the enumeration agree exactly.
//!
//! Enumeration order: each axis runs `0, 1, -1, 2, -2, ...` and vectors are
//! emitted in lexicographic order of those per-axis sequences.

use std::cmp::Ordering;

use num::{BigInt, BigRational, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{
    nearest_residual, nearest_residual_exact, quasi_norm_int, MatrixSpec, WeightVector,
};
use crate::scalar::{
    big_pow, exact_lt_scaled_pow2, pow2_rational, tri_lt, CmpCounter, ExactPow, ExactProd, Rat64,
    Scalar, Tri,
};

/// Hard cap on enumerated points per call. Exceeding it is a resource error,
/// never a silent truncation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Limits {
    pub max_points: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_points: 100_000_000,
        }
    }
}

/// Per-coordinate integer bounds describing a coordinate box `|q_j| <= b_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallBounds {
    per_coord: Vec<i64>,
}

fn rational_weight_parts(w: Rat64) -> (i64, u32) {
    (*w.numer(), *w.denom() as u32)
}

/// Largest integer `t >= 0` with `t < base^(a/b)` (strict) or `t <= base^(a/b)`
/// (inclusive), decided exactly: `t^b < base^a`.
fn exact_coord_bound(base: &BigRational, alpha: Rat64, strict: bool) -> i64 {
    let (a, b) = rational_weight_parts(alpha);
    debug_assert!(a > 0);
    let rhs = big_pow(base, a as u32);
    let ok = |t: i64| -> bool {
        let lhs = BigRational::from_integer(BigInt::from(t).pow(b));
        if strict {
            lhs < rhs
        } else {
            lhs <= rhs
        }
    };
    // start from the float estimate, then correct by exact tests
    let guess = base
        .to_f64()
        .map(|x| x.powf(alpha.to_f64().unwrap()))
        .unwrap_or(0.0);
    let mut t = if guess.is_finite() && guess > 0.0 {
        guess as i64
    } else {
        0
    };
    if t < 0 {
        t = 0;
    }
    while !ok(t) && t > 0 {
        t -= 1;
    }
    if !ok(t) {
        // even t = 0 fails only for base <= 0, which callers exclude
        return -1;
    }
    while ok(t + 1) {
        t += 1;
    }
    t
}

fn float_coord_bound(n_bound: f64, alpha: f64, strict: bool) -> i64 {
    let g = n_bound.powf(alpha);
    if !g.is_finite() || g <= 0.0 {
        return 0;
    }
    if strict {
        (g.ceil() as i64 - 1).max(0)
    } else {
        g.floor() as i64
    }
}

impl BallBounds {
    fn from_bound(alpha: &WeightVector, n_bound: f64, strict: bool) -> Result<Self> {
        if !(n_bound > 0.0) || !n_bound.is_finite() {
            return Err(Error::usage(format!(
                "norm bound must be positive, got {n_bound}"
            )));
        }
        let per_coord = match alpha.exact() {
            Some(ws) => {
                let base = Scalar::lift_f64(n_bound)?;
                ws.iter()
                    .map(|&w| exact_coord_bound(&base, w, strict).max(0))
                    .collect()
            }
            None => alpha
                .values()
                .iter()
                .map(|&w| float_coord_bound(n_bound, w, strict))
                .collect(),
        };
        Ok(BallBounds { per_coord })
    }

    /// Box with explicitly given per-coordinate bounds.
    pub fn from_coords(per_coord: Vec<i64>) -> Self {
        BallBounds {
            per_coord: per_coord.into_iter().map(|b| b.max(0)).collect(),
        }
    }

    /// Box of the strict ball `|q|_alpha < N`.
    pub fn strict(alpha: &WeightVector, n_bound: f64) -> Result<Self> {
        Self::from_bound(alpha, n_bound, true)
    }

    /// Box of the closed ball `|q|_alpha <= N`.
    pub fn inclusive(alpha: &WeightVector, n_bound: f64) -> Result<Self> {
        Self::from_bound(alpha, n_bound, false)
    }

    /// Strict ball of radius `2^level`, bounds decided exactly for rational
    /// weights regardless of the float value of `2^level`.
    pub fn strict_pow2(alpha: &WeightVector, level: u32) -> Result<Self> {
        match alpha.exact() {
            Some(ws) => {
                let base = pow2_rational(level as i64);
                Ok(BallBounds {
                    per_coord: ws
                        .iter()
                        .map(|&w| exact_coord_bound(&base, w, true).max(0))
                        .collect(),
                })
            }
            None => Self::strict(alpha, (2.0f64).powi(level as i32)),
        }
    }

    pub fn per_coord(&self) -> &[i64] {
        &self.per_coord
    }

    /// Number of integer points in the box, including the origin.
    pub fn point_count(&self) -> u128 {
        self.per_coord
            .iter()
            .fold(1u128, |acc, &b| acc.saturating_mul(2 * b as u128 + 1))
    }

    /// Whether the box contains a nonzero point.
    pub fn has_nonzero(&self) -> bool {
        self.per_coord.iter().any(|&b| b > 0)
    }

    /// Whether `q` lies inside this box.
    pub fn contains(&self, q: &[i64]) -> bool {
        q.iter()
            .zip(self.per_coord.iter())
            .all(|(qj, bj)| qj.abs() <= *bj)
    }

    pub fn check_budget(&self, limits: &Limits, what: &str) -> Result<()> {
        let n = self.point_count();
        if n > limits.max_points as u128 {
            return Err(Error::resource(format!(
                "{what}: coordinate box {:?} holds {n} points, budget is {}",
                self.per_coord, limits.max_points
            )));
        }
        Ok(())
    }
}

/// Value at position `k` of the per-axis sequence `0, 1, -1, 2, -2, ...`.
fn axis_value(k: i64) -> i64 {
    if k == 0 {
        0
    } else if k % 2 == 1 {
        (k + 1) / 2
    } else {
        -k / 2
    }
}

/// Visit every point of the box in enumeration order. The visitor returns
/// `false` to stop early; the function returns `false` iff it stopped early.
// TODO: split the outermost axis range across workers for the large-ball
// level scans; per-partition minima merge by min.
pub fn scan_box(
    bounds: &BallBounds,
    include_origin: bool,
    f: &mut impl FnMut(&[i64]) -> bool,
) -> bool {
    let m = bounds.per_coord.len();
    let sizes: Vec<i64> = bounds.per_coord.iter().map(|&b| 2 * b + 1).collect();
    let mut idx = vec![0i64; m];
    let mut q = vec![0i64; m];
    loop {
        if include_origin || q.iter().any(|&x| x != 0) {
            if !f(&q) {
                return false;
            }
        }
        // odometer: last axis fastest
        let mut axis = m;
        loop {
            if axis == 0 {
                return true;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < sizes[axis] {
                q[axis] = axis_value(idx[axis]);
                break;
            }
            idx[axis] = 0;
            q[axis] = 0;
        }
    }
}

/// Streaming iterator over the nonzero integer vectors with `0 < |q|_alpha < N`.
#[derive(Debug)]
pub struct BallIter {
    bounds: BallBounds,
    idx: Vec<i64>,
    q: Vec<i64>,
    done: bool,
    started: bool,
    // strict-norm filter for inexact (float-weight) bounds
    filter: Option<(WeightVector, f64)>,
}

impl Iterator for BallIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            if self.started {
                let m = self.bounds.per_coord.len();
                let sizes: Vec<i64> = self.bounds.per_coord.iter().map(|&b| 2 * b + 1).collect();
                let mut axis = m;
                loop {
                    if axis == 0 {
                        self.done = true;
                        return None;
                    }
                    axis -= 1;
                    self.idx[axis] += 1;
                    if self.idx[axis] < sizes[axis] {
                        self.q[axis] = axis_value(self.idx[axis]);
                        break;
                    }
                    self.idx[axis] = 0;
                    self.q[axis] = 0;
                }
            } else {
                self.started = true;
            }
            if self.q.iter().all(|&x| x == 0) {
                continue;
            }
            if let Some((alpha, n_bound)) = &self.filter {
                let norm = quasi_norm_int(&self.q, alpha).expect("dims match");
                if !(norm < *n_bound) {
                    continue;
                }
            }
            return Some(self.q.clone());
        }
    }
}

/// Yields exactly the `q` with `0 < |q|_alpha < N` in enumeration order.
pub fn enumerate_ball(alpha: &WeightVector, n_bound: f64, limits: &Limits) -> Result<BallIter> {
    let bounds = BallBounds::strict(alpha, n_bound)?;
    bounds.check_budget(limits, &format!("ball |q|_alpha < {n_bound}"))?;
    let m = bounds.per_coord.len();
    let filter = if alpha.exact().is_some() {
        None
    } else {
        Some((alpha.clone(), n_bound))
    };
    Ok(BallIter {
        bounds,
        idx: vec![0; m],
        q: vec![0; m],
        done: false,
        started: false,
        filter,
    })
}

/// Closed-form count of `{q : |q|_alpha <= N}`, including `q = 0`.
pub fn count_ball(alpha: &WeightVector, n_bound: f64) -> Result<u128> {
    let bounds = BallBounds::inclusive(alpha, n_bound)?;
    Ok(bounds.point_count())
}

/// An integer witness pair with its per-row residuals and weighted norm.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxWitness {
    pub q: Vec<i64>,
    pub p: Vec<i64>,
    pub residuals: Vec<f64>,
    pub qnorm: f64,
}

impl ApproxWitness {
    fn from_parts(a: &MatrixSpec, alpha: &WeightVector, q: &[i64]) -> Self {
        let (p, residuals) = nearest_residual(a, q);
        let qnorm = quasi_norm_int(q, alpha).expect("dims match");
        ApproxWitness {
            q: q.to_vec(),
            p,
            residuals,
            qnorm,
        }
    }
}

/// Exponents `n/(m v_i)` of the singular/bad functionals.
fn profile_exponents_f64(v: &WeightVector, m: usize) -> Vec<f64> {
    let n = v.dim();
    v.values()
        .iter()
        .map(|vi| n as f64 / (m as f64 * vi))
        .collect()
}

fn profile_exponents_exact(v: &WeightVector, m: usize) -> Option<Vec<Rat64>> {
    let n = v.dim() as i64;
    v.exact()
        .map(|ws| ws.iter().map(|w| Rat64::new(n, m as i64) / w).collect())
}

fn exact_mode(a: &MatrixSpec, v: &WeightVector, alpha: &WeightVector) -> bool {
    a.is_exact() && v.exact().is_some() && alpha.exact().is_some()
}

fn check_dims(a: &MatrixSpec, v: &WeightVector, alpha: &WeightVector) -> Result<()> {
    if v.dim() != a.rows() {
        return Err(Error::usage(format!(
            "row weight vector has dimension {}, matrix has {} rows",
            v.dim(),
            a.rows()
        )));
    }
    if alpha.dim() != a.cols() {
        return Err(Error::usage(format!(
            "column weight vector has dimension {}, matrix has {} columns",
            alpha.dim(),
            a.cols()
        )));
    }
    Ok(())
}

/// Exact profile value `max_i |res_i|^(n/(m v_i))` as an ordered power term.
fn exact_profile_value(res: &[BigRational], exps: &[Rat64]) -> ExactPow {
    let mut best: Option<ExactPow> = None;
    for (r, &e) in res.iter().zip(exps) {
        let term = ExactPow::new(r.abs(), e);
        best = Some(match best {
            None => term,
            Some(b) => {
                if term.cmp_exact(&b) == Ordering::Greater {
                    term
                } else {
                    b
                }
            }
        });
    }
    best.expect("at least one row")
}

/// Minimum over the strict ball `0 < |q|_alpha < N` of
/// `max_i |A_i.q - p_i|^(n/(m v_i))`, with a minimizing witness. Ties keep the
/// first vector in enumeration order.
pub fn best_profile(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    n_bound: f64,
    limits: &Limits,
) -> Result<(f64, ApproxWitness)> {
    check_dims(a, v, alpha)?;
    let bounds = BallBounds::strict(alpha, n_bound)?;
    bounds.check_budget(limits, "best_profile")?;
    if !bounds.has_nonzero() {
        return Err(Error::usage(format!(
            "best_profile: the ball |q|_alpha < {n_bound} contains no nonzero vector"
        )));
    }
    if exact_mode(a, v, alpha) {
        let exps = profile_exponents_exact(v, a.cols()).unwrap();
        let mut best: Option<(ExactPow, Vec<i64>)> = None;
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = nearest_residual_exact(a, q);
            let val = exact_profile_value(&res, &exps);
            let better = match &best {
                None => true,
                Some((b, _)) => val.cmp_exact(b) == Ordering::Less,
            };
            if better {
                best = Some((val, q.to_vec()));
            }
            true
        });
        let (val, q) = best.unwrap();
        Ok((val.to_f64(), ApproxWitness::from_parts(a, alpha, &q)))
    } else {
        let exps = profile_exponents_f64(v, a.cols());
        let mut best: Option<(f64, Vec<i64>)> = None;
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = nearest_residual(a, q);
            let val = res
                .iter()
                .zip(&exps)
                .map(|(r, e)| r.abs().powf(*e))
                .fold(0.0f64, f64::max);
            if best.as_ref().map_or(true, |(b, _)| val < *b) {
                best = Some((val, q.to_vec()));
            }
            true
        });
        let (val, q) = best.unwrap();
        Ok((val, ApproxWitness::from_parts(a, alpha, &q)))
    }
}

/// Per-row level thresholds `eps * 2^(-l v_i m/n)`.
struct LevelThresholds {
    float: Vec<f64>,
    exact: Option<(BigRational, Vec<Rat64>)>, // (eps, exponent of 2 per row)
}

fn level_thresholds(
    v: &WeightVector,
    m: usize,
    eps: &Scalar,
    level: u32,
    want_exact: bool,
) -> Result<LevelThresholds> {
    let n = v.dim();
    let eps_f = eps.to_f64();
    let float = v
        .values()
        .iter()
        .map(|vi| eps_f * (2.0f64).powf(-(level as f64) * vi * m as f64 / n as f64))
        .collect();
    let exact = if want_exact {
        let eps_rat = eps.to_rational()?;
        let exps = v
            .exact()
            .expect("exact mode requires rational weights")
            .iter()
            .map(|w| -Rat64::from_integer(level as i64) * w * Rat64::new(m as i64, n as i64))
            .collect();
        Some((eps_rat, exps))
    } else {
        None
    };
    Ok(LevelThresholds { float, exact })
}

/// One row of a level-set report.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub in_l: Tri,
    /// Minimum of the profile functional over the level's ball.
    pub best_value: f64,
    /// A solving witness when `in_l` is false, otherwise the profile minimizer.
    pub witness: Option<ApproxWitness>,
}

/// The computed prefix of the level set, with per-level minima and the
/// comparison/indeterminate tally.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub epsilon: Scalar,
    pub max_level: u32,
    pub levels: Vec<LevelRow>,
    pub counter: CmpCounter,
}

impl LevelSetReport {
    /// Levels of the prefix that are in the level set (definitely).
    pub fn member_levels(&self) -> Vec<u32> {
        self.levels
            .iter()
            .filter(|r| r.in_l.is_true())
            .map(|r| r.level)
            .collect()
    }
}

struct LevelScanOutcome {
    in_l: Tri,
    solving_q: Option<Vec<i64>>,
    best_q: Vec<i64>,
    best_value: f64,
}

/// Full scan of one level: decides membership and tracks the profile minimum.
fn scan_level(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps: &Scalar,
    level: u32,
    limits: &Limits,
    counter: &mut CmpCounter,
) -> Result<LevelScanOutcome> {
    check_dims(a, v, alpha)?;
    let bounds = BallBounds::strict_pow2(alpha, level)?;
    bounds.check_budget(limits, &format!("level {level} ball"))?;
    if !bounds.has_nonzero() {
        // empty ball: the system trivially has no solution
        return Ok(LevelScanOutcome {
            in_l: Tri::True,
            solving_q: None,
            best_q: vec![],
            best_value: f64::INFINITY,
        });
    }
    let exact = exact_mode(a, v, alpha);
    let thr = level_thresholds(v, a.cols(), eps, level, exact)?;
    let exps_f = profile_exponents_f64(v, a.cols());
    let exps_x = profile_exponents_exact(v, a.cols());

    let mut solving_q: Option<Vec<i64>> = None;
    let mut possible = false;
    let mut best_f: Option<(f64, Vec<i64>)> = None;
    let mut best_x: Option<(ExactPow, Vec<i64>)> = None;

    scan_box(&bounds, false, &mut |q| {
        if exact {
            let (eps_rat, exps2) = thr.exact.as_ref().unwrap();
            let (_, res) = nearest_residual_exact(a, q);
            let all = res
                .iter()
                .zip(exps2.iter())
                .all(|(r, &e)| exact_lt_scaled_pow2(&r.abs(), eps_rat, e));
            if all && solving_q.is_none() {
                solving_q = Some(q.to_vec());
            }
            let val = exact_profile_value(&res, exps_x.as_ref().unwrap());
            let better = match &best_x {
                None => true,
                Some((b, _)) => val.cmp_exact(b) == Ordering::Less,
            };
            if better {
                best_x = Some((val, q.to_vec()));
            }
        } else {
            let (_, res) = nearest_residual(a, q);
            let mut row_all = Tri::True;
            for (r, t) in res.iter().zip(thr.float.iter()) {
                row_all = row_all.and(tri_lt(r.abs(), *t, counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    if solving_q.is_none() {
                        solving_q = Some(q.to_vec());
                    }
                }
                Tri::Indeterminate => possible = true,
                Tri::False => {}
            }
            let val = res
                .iter()
                .zip(&exps_f)
                .map(|(r, e)| r.abs().powf(*e))
                .fold(0.0f64, f64::max);
            if best_f.as_ref().map_or(true, |(b, _)| val < *b) {
                best_f = Some((val, q.to_vec()));
            }
        }
        true
    });

    let in_l = if solving_q.is_some() {
        Tri::False
    } else if possible {
        Tri::Indeterminate
    } else {
        Tri::True
    };
    let (best_value, best_q) = if exact {
        let (v0, q0) = best_x.unwrap();
        (v0.to_f64(), q0)
    } else {
        best_f.unwrap()
    };
    Ok(LevelScanOutcome {
        in_l,
        solving_q,
        best_q,
        best_value,
    })
}

/// Whether level `l` belongs to the level set: true iff no nonzero `q` with
/// `|q|_alpha < 2^l` satisfies all the per-row strict inequalities.
pub fn level_in_l(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps: &Scalar,
    level: u32,
    limits: &Limits,
) -> Result<Tri> {
    let mut counter = CmpCounter::default();
    level_membership(a, v, alpha, eps, level, limits, &mut counter)
}

/// Membership-only level scan: exits at the first definite solution instead
/// of tracking the profile minimum, so levels that leave the set are decided
/// quickly. Distinguishing `True` from `Indeterminate` still needs the full
/// ball.
pub fn level_membership(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps: &Scalar,
    level: u32,
    limits: &Limits,
    counter: &mut CmpCounter,
) -> Result<Tri> {
    check_dims(a, v, alpha)?;
    let bounds = BallBounds::strict_pow2(alpha, level)?;
    bounds.check_budget(limits, &format!("level {level} ball"))?;
    if !bounds.has_nonzero() {
        return Ok(Tri::True);
    }
    let exact = exact_mode(a, v, alpha);
    let thr = level_thresholds(v, a.cols(), eps, level, exact)?;
    let mut solving = false;
    let mut possible = false;
    scan_box(&bounds, false, &mut |q| {
        if exact {
            let (eps_rat, exps) = thr.exact.as_ref().unwrap();
            let (_, res) = nearest_residual_exact(a, q);
            let all = res
                .iter()
                .zip(exps.iter())
                .all(|(r, &e)| exact_lt_scaled_pow2(&r.abs(), eps_rat, e));
            if all {
                solving = true;
                return false;
            }
        } else {
            let (_, res) = nearest_residual(a, q);
            let mut row_all = Tri::True;
            for (r, t) in res.iter().zip(thr.float.iter()) {
                row_all = row_all.and(tri_lt(r.abs(), *t, counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    solving = true;
                    return false;
                }
                Tri::Indeterminate => possible = true,
                Tri::False => {}
            }
        }
        true
    });
    Ok(if solving {
        Tri::False
    } else if possible {
        Tri::Indeterminate
    } else {
        Tri::True
    })
}

/// Alternate route to the same membership decision through the profile-form
/// inequalities `|res_i|^(n/(m v_i)) < eps^(n/(m v_i)) * 2^(-l)`; used as a
/// cross-check of the per-row route.
pub fn level_in_l_profile(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps: &Scalar,
    level: u32,
    limits: &Limits,
) -> Result<Tri> {
    check_dims(a, v, alpha)?;
    let bounds = BallBounds::strict_pow2(alpha, level)?;
    bounds.check_budget(limits, &format!("level {level} ball"))?;
    if !bounds.has_nonzero() {
        return Ok(Tri::True);
    }
    let mut counter = CmpCounter::default();
    let exact = exact_mode(a, v, alpha);
    let exps_f = profile_exponents_f64(v, a.cols());
    let eps_f = eps.to_f64();

    let mut solving = false;
    let mut possible = false;
    if exact {
        let eps_rat = eps.to_rational()?;
        let exps = profile_exponents_exact(v, a.cols()).unwrap();
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = nearest_residual_exact(a, q);
            // |res_i|^e_i < eps^e_i * 2^-l, cleared to integer exponents
            let all = res.iter().zip(exps.iter()).all(|(r, e)| {
                let (num, den) = (*e.numer(), *e.denom());
                let lhs = big_pow(&r.abs(), num as u32);
                let rhs = big_pow(&eps_rat, num as u32) * pow2_rational(-(level as i64) * den);
                lhs < rhs
            });
            if all {
                solving = true;
                return false;
            }
            true
        });
    } else {
        let level_term = (2.0f64).powi(-(level as i32));
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = nearest_residual(a, q);
            let mut row_all = Tri::True;
            for (r, e) in res.iter().zip(&exps_f) {
                let lhs = r.abs().powf(*e);
                let rhs = eps_f.powf(*e) * level_term;
                row_all = row_all.and(tri_lt(lhs, rhs, &mut counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    solving = true;
                    return false;
                }
                Tri::Indeterminate => possible = true,
                Tri::False => {}
            }
            true
        });
    }
    Ok(if solving {
        Tri::False
    } else if possible {
        Tri::Indeterminate
    } else {
        Tri::True
    })
}

/// Per-level records for `l = 1..=l_max`.
pub fn level_set_prefix(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps: &Scalar,
    l_max: u32,
    limits: &Limits,
) -> Result<LevelSetReport> {
    if l_max == 0 {
        return Err(Error::usage("level-set prefix needs l_max >= 1"));
    }
    let mut counter = CmpCounter::default();
    let mut levels = Vec::with_capacity(l_max as usize);
    for level in 1..=l_max {
        let out = scan_level(a, v, alpha, eps, level, limits, &mut counter)?;
        let witness_q = match &out.solving_q {
            Some(q) => Some(q.clone()),
            None if !out.best_q.is_empty() => Some(out.best_q.clone()),
            None => None,
        };
        levels.push(LevelRow {
            level,
            in_l: out.in_l,
            best_value: out.best_value,
            witness: witness_q.map(|q| ApproxWitness::from_parts(a, alpha, &q)),
        });
    }
    Ok(LevelSetReport {
        epsilon: eps.clone(),
        max_level: l_max,
        levels,
        counter,
    })
}

/// Finite-window proxy for the badly-approximable functional: minimum over
/// `q0 <= |q|_alpha < q1` of `max_i |q|_alpha * |A_i.q - p_i|^(n/(m v_i))`.
pub fn badness_functional(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    q0: f64,
    q1: f64,
    limits: &Limits,
) -> Result<f64> {
    check_dims(a, v, alpha)?;
    if !(q0 > 0.0 && q1 > q0) {
        return Err(Error::usage(format!(
            "badness window needs 0 < Q0 < Q1, got [{q0}, {q1})"
        )));
    }
    let outer = BallBounds::strict(alpha, q1)?;
    outer.check_budget(limits, "badness_functional")?;
    let inner = BallBounds::strict(alpha, q0)?;

    let exact = exact_mode(a, v, alpha);
    let exps_f = profile_exponents_f64(v, a.cols());
    let exps_x = profile_exponents_exact(v, a.cols());
    let alpha_recip: Option<Vec<Rat64>> = alpha
        .exact()
        .map(|ws| ws.iter().map(|w| w.recip()).collect());

    let mut best_f: Option<f64> = None;
    let mut best_x: Option<ExactProd> = None;
    let mut seen = false;

    scan_box(&outer, false, &mut |q| {
        // window membership: outside the strict q0-ball
        if exact {
            if inner.contains(q) {
                return true;
            }
        } else {
            let norm = quasi_norm_int(q, alpha).expect("dims match");
            if !(norm >= q0) {
                return true;
            }
        }
        seen = true;
        if exact {
            let recips = alpha_recip.as_ref().unwrap();
            // |q|_alpha as an exact power term: the max over j of |q_j|^(1/alpha_j)
            let mut qn: Option<ExactPow> = None;
            for (qj, &e) in q.iter().zip(recips) {
                let term = ExactPow::new(BigRational::from_integer(BigInt::from(qj.abs())), e);
                qn = Some(match qn {
                    None => term,
                    Some(b) => {
                        if term.cmp_exact(&b) == Ordering::Greater {
                            term
                        } else {
                            b
                        }
                    }
                });
            }
            let qn = qn.unwrap();
            let (_, res) = nearest_residual_exact(a, q);
            let mut row_best: Option<ExactProd> = None;
            for (r, &e) in res.iter().zip(exps_x.as_ref().unwrap()) {
                let prod = ExactProd::new(vec![qn.clone(), ExactPow::new(r.abs(), e)]);
                row_best = Some(match row_best {
                    None => prod,
                    Some(b) => {
                        if prod.cmp_exact(&b) == Ordering::Greater {
                            prod
                        } else {
                            b
                        }
                    }
                });
            }
            let val = row_best.unwrap();
            let better = match &best_x {
                None => true,
                Some(b) => val.cmp_exact(b) == Ordering::Less,
            };
            if better {
                best_x = Some(val);
            }
        } else {
            let norm = quasi_norm_int(q, alpha).expect("dims match");
            let (_, res) = nearest_residual(a, q);
            let val = res
                .iter()
                .zip(&exps_f)
                .map(|(r, e)| norm * r.abs().powf(*e))
                .fold(0.0f64, f64::max);
            if best_f.map_or(true, |b| val < b) {
                best_f = Some(val);
            }
        }
        true
    });

    if !seen {
        return Err(Error::usage(format!(
            "badness window [{q0}, {q1}) contains no lattice point"
        )));
    }
    Ok(if exact {
        best_x.unwrap().to_f64()
    } else {
        best_f.unwrap()
    })
}

/// Config-exposed thresholds of the finite-scale classification heuristics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyOptions {
    /// Fraction of the prefix that a trailing all-true run must cover for the
    /// bad-like verdict.
    pub cofinite_fraction: f64,
    /// Fraction of the top half that must be true for the non-singular-like
    /// verdict.
    pub majority_fraction: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            cofinite_fraction: 0.5,
            majority_fraction: 0.5,
        }
    }
}

/// Finite-scale verdicts. All of these are heuristics about the computed
/// prefix, not statements about the asymptotic sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "bad-like at scale")]
    BadLikeAtScale,
    #[serde(rename = "singular-like at scale")]
    SingularLikeAtScale,
    #[serde(rename = "non-singular-like")]
    NonSingularLike,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::BadLikeAtScale => "bad-like at scale",
            Verdict::SingularLikeAtScale => "singular-like at scale",
            Verdict::NonSingularLike => "non-singular-like",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Membership of one level, without profile minima.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipRow {
    pub level: u32,
    pub in_l: Tri,
}

/// The observed membership prefix at one threshold scale.
#[derive(Debug, Clone, Serialize)]
pub struct PrefixMembership {
    pub epsilon: Scalar,
    pub levels: Vec<MembershipRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub verdict: Verdict,
    pub options: ClassifyOptions,
    pub per_eps: Vec<PrefixMembership>,
    pub counter: CmpCounter,
}

/// Finite-scale heuristic combining the level-set characterisations: a
/// cofinite prefix at some eps is bad-like, an empty top-half tail at every
/// eps is singular-like, a mostly-true top half at some eps is
/// non-singular-like. Uses membership-only scans, so levels with solutions
/// are decided at the first witness.
pub fn classify(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    eps_grid: &[Scalar],
    l_max: u32,
    opts: &ClassifyOptions,
    limits: &Limits,
) -> Result<ClassifyReport> {
    if eps_grid.is_empty() {
        return Err(Error::usage("classify needs a non-empty eps grid"));
    }
    if l_max == 0 {
        return Err(Error::usage("classify needs l_max >= 1"));
    }
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    let mut counter = CmpCounter::default();
    for eps in eps_grid {
        let mut levels = Vec::with_capacity(l_max as usize);
        for level in 1..=l_max {
            let in_l = level_membership(a, v, alpha, eps, level, limits, &mut counter)?;
            levels.push(MembershipRow { level, in_l });
        }
        per_eps.push(PrefixMembership {
            epsilon: eps.clone(),
            levels,
        });
    }

    let run_needed = ((opts.cofinite_fraction * l_max as f64).ceil() as usize).max(1);
    let top_start = l_max / 2 + 1;
    let top_len = (l_max - top_start + 1) as usize;
    let majority_needed = ((opts.majority_fraction * top_len as f64).ceil() as usize).max(1);

    let mut any_cofinite = false;
    let mut any_majority = false;
    let mut all_empty_tail = true;
    for rep in &per_eps {
        let flags: Vec<bool> = rep.levels.iter().map(|r| r.in_l.is_true()).collect();
        let trailing = flags.iter().rev().take_while(|&&b| b).count();
        if trailing >= run_needed {
            any_cofinite = true;
        }
        let top_true = rep
            .levels
            .iter()
            .filter(|r| r.level >= top_start && r.in_l.is_true())
            .count();
        if top_true >= majority_needed {
            any_majority = true;
        }
        if top_true > 0 {
            all_empty_tail = false;
        }
    }

    let verdict = if any_cofinite {
        Verdict::BadLikeAtScale
    } else if any_majority {
        Verdict::NonSingularLike
    } else if all_empty_tail {
        Verdict::SingularLikeAtScale
    } else {
        Verdict::Inconclusive
    };

    Ok(ClassifyReport {
        verdict,
        options: *opts,
        per_eps,
        counter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::phi;

    fn golden() -> MatrixSpec {
        MatrixSpec::from_floats(1, 1, vec![phi()]).unwrap()
    }

    fn one_third() -> MatrixSpec {
        MatrixSpec::from_rationals(
            1,
            1,
            vec![BigRational::new(BigInt::from(1), BigInt::from(3))],
        )
        .unwrap()
    }

    #[test]
    fn enumeration_counts() {
        let lim = Limits::default();
        let a11 = WeightVector::ones(2);
        let pts: Vec<_> = enumerate_ball(&a11, 3.0 + 1e-9, &lim).unwrap().collect();
        assert_eq!(pts.len(), 48); // 7^2 - 1

        let w = WeightVector::from_rationals(vec![Rat64::new(1, 2), Rat64::new(3, 2)]).unwrap();
        let pts: Vec<_> = enumerate_ball(&w, 4.0 + 1e-9, &lim).unwrap().collect();
        assert_eq!(pts.len(), 84); // (2*2+1)(2*8+1) - 1

        let w1 = WeightVector::ones(1);
        let pts: Vec<_> = enumerate_ball(&w1, 1.0, &lim).unwrap().collect();
        assert!(pts.is_empty());
    }

    #[test]
    fn enumeration_order_is_balanced_lex() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let pts: Vec<_> = enumerate_ball(&w1, 3.0, &lim).unwrap().collect();
        assert_eq!(pts, vec![vec![1], vec![-1], vec![2], vec![-2]]);
    }

    #[test]
    fn count_ball_examples() {
        let a11 = WeightVector::ones(2);
        assert_eq!(count_ball(&a11, 3.0).unwrap(), 49);
        let w = WeightVector::from_rationals(vec![Rat64::new(1, 2), Rat64::new(3, 2)]).unwrap();
        assert_eq!(count_ball(&w, 4.0).unwrap(), 85);
        let w1 = WeightVector::ones(1);
        assert_eq!(count_ball(&w1, 0.5).unwrap(), 1);
    }

    #[test]
    fn budget_is_enforced() {
        let lim = Limits { max_points: 10 };
        let w1 = WeightVector::ones(1);
        let err = enumerate_ball(&w1, 100.0, &lim).unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn best_profile_golden() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let (val, wit) = best_profile(&golden(), &w1, &w1, 8.0, &lim).unwrap();
        assert!((val - 0.09016994374947451).abs() < 1e-12);
        assert_eq!(wit.q, vec![5]);
        assert_eq!(wit.p, vec![8]);
    }

    #[test]
    fn best_profile_zero_matrix() {
        let lim = Limits::default();
        let w = WeightVector::ones(2);
        let a = MatrixSpec::from_floats(2, 2, vec![0.0; 4]).unwrap();
        let (val, wit) = best_profile(&a, &w, &w, 4.0, &lim).unwrap();
        assert_eq!(val, 0.0);
        assert_eq!(wit.q, vec![0, 1]); // first enumerated
        assert_eq!(wit.p, vec![0, 0]);
    }

    #[test]
    fn best_profile_exact_rational() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let (val, wit) = best_profile(&one_third(), &w1, &w1, 4.0, &lim).unwrap();
        assert_eq!(val, 0.0);
        assert_eq!(wit.q, vec![3]);
        assert_eq!(wit.p, vec![1]);
    }

    #[test]
    fn best_profile_empty_ball_is_usage_error() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        assert!(best_profile(&golden(), &w1, &w1, 1.0, &lim)
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn level_membership_golden() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        // eps = 0.4: best residual 0.0902 over the 2^3 ball, threshold 0.05
        let e = Scalar::exact_from_i64(2, 5);
        assert_eq!(
            level_in_l(&golden(), &w1, &w1, &e, 3, &lim).unwrap(),
            Tri::True
        );
        // eps = 1.0: threshold 0.125 > 0.0902, q = 5 solves
        let e1 = Scalar::exact_from_i64(1, 1);
        assert_eq!(
            level_in_l(&golden(), &w1, &w1, &e1, 3, &lim).unwrap(),
            Tri::False
        );
    }

    #[test]
    fn level_membership_zero_matrix() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let a = MatrixSpec::from_floats(1, 1, vec![0.0]).unwrap();
        for l in 1..=6 {
            let e = Scalar::exact_from_i64(1, 10);
            assert_eq!(level_in_l(&a, &w1, &w1, &e, l, &lim).unwrap(), Tri::False);
        }
    }

    #[test]
    fn level_set_prefix_dichotomy() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let eps = Scalar::exact_from_i64(1, 10);

        let rep = level_set_prefix(&golden(), &w1, &w1, &eps, 10, &lim).unwrap();
        assert!(rep.levels.iter().all(|r| r.in_l.is_true()));
        assert_eq!(rep.counter.indeterminate, 0);

        let rep = level_set_prefix(&one_third(), &w1, &w1, &eps, 6, &lim).unwrap();
        assert!(rep.levels[0].in_l.is_true()); // level 1: only |q| = 1
        for row in &rep.levels[1..] {
            assert!(row.in_l.is_false(), "level {} should leave L", row.level);
        }
        // exact arithmetic never produces indeterminates
        assert_eq!(rep.counter.indeterminate, 0);
        // the solving witness at level 2 is q = 3
        assert_eq!(rep.levels[1].witness.as_ref().unwrap().q, vec![3]);
    }

    #[test]
    fn badness_examples() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let v = badness_functional(&golden(), &w1, &w1, 100.0, 10_000.0, &lim).unwrap();
        assert!((v - 0.4472092821793012).abs() < 1e-9, "got {v}");

        let v = badness_functional(&one_third(), &w1, &w1, 4.0, 100.0, &lim).unwrap();
        assert_eq!(v, 0.0);

        let zero = MatrixSpec::from_floats(1, 1, vec![0.0]).unwrap();
        let v = badness_functional(&zero, &w1, &w1, 2.0, 50.0, &lim).unwrap();
        assert_eq!(v, 0.0);

        assert!(badness_functional(&golden(), &w1, &w1, 5.0, 5.0, &lim)
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn classify_verdicts() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let grid = vec![
            Scalar::exact_from_i64(1, 10),
            Scalar::exact_from_i64(1, 5),
            Scalar::exact_from_i64(2, 5),
        ];
        let opts = ClassifyOptions::default();

        let rep = classify(&golden(), &w1, &w1, &grid, 12, &opts, &lim).unwrap();
        assert_eq!(rep.verdict, Verdict::BadLikeAtScale);

        let rep = classify(&one_third(), &w1, &w1, &grid, 8, &opts, &lim).unwrap();
        assert_eq!(rep.verdict, Verdict::SingularLikeAtScale);

        let zero = MatrixSpec::from_floats(1, 1, vec![0.0]).unwrap();
        let rep = classify(&zero, &w1, &w1, &grid, 8, &opts, &lim).unwrap();
        assert_eq!(rep.verdict, Verdict::SingularLikeAtScale);
    }

    #[test]
    fn classify_liouville_preset() {
        let lim = Limits::default();
        let w1 = WeightVector::ones(1);
        let a = MatrixSpec::from_floats(1, 1, vec![crate::scalar::liouville_like()]).unwrap();
        let grid = vec![Scalar::exact_from_i64(1, 10), Scalar::exact_from_i64(2, 5)];
        let rep = classify(&a, &w1, &w1, &grid, 12, &ClassifyOptions::default(), &lim).unwrap();
        assert_eq!(rep.verdict, Verdict::SingularLikeAtScale);
    }
}
