//! Hausdorff-dimension calculators and an empirical box-counting estimator.
//!
//! The closed forms are rational functions of their inputs, so everything here
//! is computed in exact rational arithmetic (f64 inputs are lifted to their
//! exact rational values) and only rendered to f64 at the report boundary.
//! Two independent routes to the same value (the direct closed form and the
//! pivot-partition minimisation) therefore agree bit-for-bit whenever they
//! agree mathematically.

use num::{BigRational, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{frac, ApproxTuple, MatrixSpec, WeightVector};
use crate::lattice::{scan_box, BallBounds, Limits};
use crate::measure::fit_slope;
use crate::scalar::Scalar;

fn lift(x: f64) -> Result<BigRational> {
    Scalar::lift_f64(x)
}

fn rat_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// One pivot of the partition minimisation. Indices are 1-based.
#[derive(Debug, Clone, Serialize)]
pub struct PivotRow {
    pub pivot: f64,
    pub pivot_exact: String,
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    pub k3: Vec<usize>,
    pub d: f64,
    pub d_exact: String,
    pub is_min: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
}

/// A computed dimension value with its per-pivot table and hypothesis checks.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub mode: String,
    pub value: f64,
    pub value_exact: String,
    pub minimizing_pivot: f64,
    pub pivots: Vec<PivotRow>,
    pub checks: Vec<ConditionCheck>,
}

impl DimensionReport {
    /// Every pivot row must carry a partition of {1..n}.
    pub fn partitions_are_valid(&self, n: usize) -> bool {
        self.pivots.iter().all(|row| {
            let mut seen = vec![false; n];
            for idx in row.k1.iter().chain(&row.k2).chain(&row.k3) {
                if *idx < 1 || *idx > n || seen[idx - 1] {
                    return false;
                }
                seen[idx - 1] = true;
            }
            seen.iter().all(|&s| s)
        })
    }
}

/// A dimension computation to run: the mode selects the formula and the
/// hypotheses that are validated before it is applied.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DimensionProblem {
    /// Unit row weights, power laws `r^-tau_i` with every `tau_i > m/n`.
    Unweighted { m: usize, n: usize, tau: Vec<f64> },
    /// Two rows with weights `v`, `tau_i >= v_i m/2`, plus the compatibility
    /// condition of the weighted lower bound.
    #[serde(rename = "weighted-2d")]
    Weighted2d {
        m: usize,
        v: crate::geom::WeightVector,
        tau: Vec<f64>,
    },
    /// General pivot-partition bound on growth/excess exponents.
    #[serde(rename = "pivot-partition")]
    Pivots { a: Vec<f64>, t: Vec<f64> },
}

impl DimensionProblem {
    pub fn solve(&self) -> Result<DimensionReport> {
        match self {
            DimensionProblem::Unweighted { m, n, tau } => dim_unweighted(*m, *n, tau),
            DimensionProblem::Weighted2d { m, v, tau } => dim_weighted_2d(*m, v, tau),
            DimensionProblem::Pivots { a, t } => pivot_partition_bound(a, t),
        }
    }
}

/// The pivot-partition lower bound: enumerate pivots `{a_i} U {a_i + t_i}`,
/// build each partition `K1 = {j : a_j >= P}`, `K2 = {j : a_j + t_j <= P} \ K1`,
/// `K3` the rest, and minimise
/// `d(P) = |K1| + |K2| + (sum_{K3} a_j - sum_{K2} t_j) / P`.
pub fn pivot_partition_bound(a: &[f64], t: &[f64]) -> Result<DimensionReport> {
    if a.is_empty() || a.len() != t.len() {
        return Err(Error::usage("exponent vectors must be non-empty and match"));
    }
    if a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::usage("growth exponents a_i must be positive"));
    }
    if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::usage("excess exponents t_i must be nonnegative"));
    }
    let a_r: Vec<BigRational> = a.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    let t_r: Vec<BigRational> = t.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    pivot_partition_bound_rational(&a_r, &t_r)
}

pub(crate) fn pivot_partition_bound_rational(
    a_r: &[BigRational],
    t_r: &[BigRational],
) -> Result<DimensionReport> {
    let n = a_r.len();
    let mut pivots: Vec<BigRational> = a_r
        .iter()
        .cloned()
        .chain(a_r.iter().zip(t_r).map(|(a, t)| a + t))
        .collect();
    pivots.sort();
    pivots.dedup();

    let mut rows = Vec::with_capacity(pivots.len());
    let mut best: Option<BigRational> = None;
    for p in &pivots {
        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        let mut k3 = Vec::new();
        for j in 0..n {
            if &a_r[j] >= p {
                k1.push(j + 1);
            } else if &(a_r[j].clone() + &t_r[j]) <= p {
                k2.push(j + 1);
            } else {
                k3.push(j + 1);
            }
        }
        let sum_a3: BigRational = k3.iter().map(|&j| a_r[j - 1].clone()).sum();
        let sum_t2: BigRational = k2.iter().map(|&j| t_r[j - 1].clone()).sum();
        let d = BigRational::from_integer(((k1.len() + k2.len()) as i64).into())
            + (sum_a3 - sum_t2) / p;
        if best.as_ref().map_or(true, |b| &d < b) {
            best = Some(d.clone());
        }
        rows.push((p.clone(), k1, k2, k3, d));
    }
    let best = best.unwrap();
    let min_pivot = rows
        .iter()
        .find(|(_, _, _, _, d)| d == &best)
        .map(|(p, ..)| p.clone())
        .unwrap();

    Ok(DimensionReport {
        mode: "pivot-partition".into(),
        value: best.to_f64().unwrap(),
        value_exact: rat_str(&best),
        minimizing_pivot: min_pivot.to_f64().unwrap(),
        pivots: rows
            .into_iter()
            .map(|(p, k1, k2, k3, d)| PivotRow {
                pivot: p.to_f64().unwrap(),
                pivot_exact: rat_str(&p),
                k1,
                k2,
                k3,
                is_min: d == best,
                d: d.to_f64().unwrap(),
                d_exact: rat_str(&d),
            })
            .collect(),
        checks: vec![],
    })
}

/// Pivot-partition route applied to the unweighted reduction
/// `a_i = m/n`, `t_i = tau_i - m/n`, with the reduction done in exact
/// arithmetic so that the correspondence with [`dim_unweighted`] is exact.
pub fn pivot_partition_from_unweighted(m: usize, n: usize, tau: &[f64]) -> Result<DimensionReport> {
    if tau.len() != n {
        return Err(Error::usage(format!("expected {n} exponents")));
    }
    let dirichlet =
        BigRational::from_integer((m as i64).into()) / BigRational::from_integer((n as i64).into());
    let a_r = vec![dirichlet.clone(); n];
    let t_r: Vec<BigRational> = tau
        .iter()
        .map(|&x| Ok(lift(x)? - &dirichlet))
        .collect::<Result<_>>()?;
    if t_r.iter().any(|t| t.is_negative()) {
        return Err(Error::usage("reduction needs tau_i >= m/n"));
    }
    pivot_partition_bound_rational(&a_r, &t_r)
}

/// Unweighted power-law dimension:
/// `min_j (m + sum_{i : tau_j > tau_i} (tau_j - tau_i)) / tau_j`,
/// valid for `tau_j > m/n` on every row.
pub fn dim_unweighted(m: usize, n: usize, tau: &[f64]) -> Result<DimensionReport> {
    if m < 1 || n < 1 || tau.len() != n {
        return Err(Error::usage(format!(
            "unweighted mode needs m >= 1 and exactly n = {n} exponents"
        )));
    }
    let tau_r: Vec<BigRational> = tau.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    let m_r = BigRational::from_integer((m as i64).into());
    let dirichlet = &m_r / BigRational::from_integer((n as i64).into());
    for (j, t) in tau_r.iter().enumerate() {
        if t <= &dirichlet {
            return Err(Error::usage(format!(
                "hypothesis tau_j > m/n violated at j = {}: tau = {} but m/n = {}",
                j + 1,
                tau[j],
                dirichlet.to_f64().unwrap()
            )));
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut best: Option<BigRational> = None;
    for j in 0..n {
        let excess: BigRational = tau_r
            .iter()
            .filter(|ti| &tau_r[j] > *ti)
            .map(|ti| tau_r[j].clone() - ti)
            .sum();
        let d = (&m_r + excess) / &tau_r[j];
        if best.as_ref().map_or(true, |b| &d < b) {
            best = Some(d.clone());
        }
        let k2: Vec<usize> = (1..=n).filter(|&i| tau_r[i - 1] <= tau_r[j]).collect();
        let k3: Vec<usize> = (1..=n).filter(|&i| tau_r[i - 1] > tau_r[j]).collect();
        rows.push((tau_r[j].clone(), k2, k3, d));
    }
    let best = best.unwrap();
    let min_pivot = rows
        .iter()
        .find(|(_, _, _, d)| d == &best)
        .map(|(p, ..)| p.clone())
        .unwrap();

    Ok(DimensionReport {
        mode: "unweighted".into(),
        value: best.to_f64().unwrap(),
        value_exact: rat_str(&best),
        minimizing_pivot: min_pivot.to_f64().unwrap(),
        pivots: rows
            .into_iter()
            .map(|(p, k2, k3, d)| PivotRow {
                pivot: p.to_f64().unwrap(),
                pivot_exact: rat_str(&p),
                k1: vec![],
                k2,
                k3,
                is_min: d == best,
                d: d.to_f64().unwrap(),
                d_exact: rat_str(&d),
            })
            .collect(),
        checks: vec![ConditionCheck {
            name: "tau_j > m/n for all j".into(),
            passed: true,
        }],
    })
}

/// Covering exponent of pivot `j` (1-based):
/// `(m + sum_{i : tau_j > tau_i} (tau_j - tau_i)) / tau_j`. Above this
/// exponent the covering sum of the truncated tail vanishes.
pub fn upper_cover_exponent(m: usize, tau: &[f64], j: usize) -> Result<f64> {
    if j < 1 || j > tau.len() {
        return Err(Error::usage(format!(
            "pivot index must lie in 1..={}, got {j}",
            tau.len()
        )));
    }
    let tau_r: Vec<BigRational> = tau.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    let m_r = BigRational::from_integer((m as i64).into());
    let tj = &tau_r[j - 1];
    let excess: BigRational = tau_r
        .iter()
        .filter(|ti| tj > *ti)
        .map(|ti| tj.clone() - ti)
        .sum();
    Ok(((m_r + excess) / tj).to_f64().unwrap())
}

/// Weighted two-row dimension: validates the hypotheses
/// `tau_i >= v_i m/2` and the compatibility condition
/// `min{ v_min m / (tau_min n), v_min / v_max } >= (m - tau_min) / tau_max`,
/// then applies `s = (m + tau_max - tau_min) / tau_max`. The report carries a
/// cross-check flag comparing the closed form against the pivot-partition
/// route.
pub fn dim_weighted_2d(m: usize, v: &WeightVector, tau: &[f64]) -> Result<DimensionReport> {
    if v.dim() != 2 || tau.len() != 2 {
        return Err(Error::usage(
            "weighted-2d mode needs n = 2 weights and exponents",
        ));
    }
    if m < 1 {
        return Err(Error::usage("weighted-2d mode needs m >= 1"));
    }
    let tau_r: Vec<BigRational> = tau.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    let v_r: Vec<BigRational> = match v.exact() {
        Some(ws) => ws
            .iter()
            .map(|w| BigRational::new((*w.numer()).into(), (*w.denom()).into()))
            .collect(),
        None => v.values().iter().map(|&x| lift(x)).collect::<Result<_>>()?,
    };
    let m_r = BigRational::from_integer((m as i64).into());
    let two = BigRational::from_integer(2.into());

    // hypothesis: tau_i >= v_i * m / 2
    for i in 0..2 {
        let lower = &v_r[i] * &m_r / &two;
        if tau_r[i] < lower {
            return Err(Error::usage(format!(
                "hypothesis tau_i >= v_i*m/2 violated at i = {}: tau = {} but v_i*m/2 = {}",
                i + 1,
                tau[i],
                lower.to_f64().unwrap()
            )));
        }
    }

    let tau_min = tau_r.iter().min().unwrap().clone();
    let tau_max = tau_r.iter().max().unwrap().clone();
    let v_min = v_r.iter().min().unwrap().clone();
    let v_max = v_r.iter().max().unwrap().clone();

    // compatibility condition with n = 2
    let lhs = (&v_min * &m_r / (&tau_min * &two)).min(&v_min / &v_max);
    let rhs = (&m_r - &tau_min) / &tau_max;
    let condition_holds = lhs >= rhs;
    if !condition_holds {
        return Err(Error::usage(format!(
            "compatibility condition failed: min{{v_min*m/(tau_min*n), v_min/v_max}} = {} \
             but (m - tau_min)/tau_max = {}",
            lhs.to_f64().unwrap(),
            rhs.to_f64().unwrap()
        )));
    }

    let s = (&m_r + &tau_max - &tau_min) / &tau_max;

    // cross-check against the pivot-partition route with a_i = v_i m/2
    let a_r: Vec<BigRational> = v_r.iter().map(|vi| vi * &m_r / &two).collect();
    let t_r: Vec<BigRational> = tau_r.iter().zip(&a_r).map(|(t, a)| t - a).collect();
    let pivots = pivot_partition_bound_rational(&a_r, &t_r)?;
    let cross_check = pivots.value_exact == rat_str(&s);

    let mut pivots = pivots.pivots;
    // the closed form is the authoritative value in this mode
    for row in &mut pivots {
        row.is_min = row.d_exact == rat_str(&s);
    }

    Ok(DimensionReport {
        mode: "weighted-2d".into(),
        value: s.to_f64().unwrap(),
        value_exact: rat_str(&s),
        minimizing_pivot: tau_max.to_f64().unwrap(),
        pivots,
        checks: vec![
            ConditionCheck {
                name: "tau_i >= v_i*m/2 for i = 1,2".into(),
                passed: true,
            },
            ConditionCheck {
                name: "compatibility condition (weighted lower bound)".into(),
                passed: condition_holds,
            },
            ConditionCheck {
                name: "closed form equals pivot-partition minimum".into(),
                passed: cross_check,
            },
        ],
    })
}

/// How the box-counting estimator selects target rectangles at each box size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxCountMode {
    /// One fixed set: the whole truncated union over `0 < |q|_alpha <= Q`.
    /// Saturates as soon as any rectangle is solid; useful for inspecting
    /// crossover regimes.
    TruncatedUnion,
    /// At box size `delta`, only rectangles whose largest radius lies in
    /// `[delta, 2 delta)` are marked: the natural cover of the tail read one
    /// scale at a time. This is the mode that tracks the limsup-set dimension.
    ScaleMatched,
}

/// Per-delta box count.
#[derive(Debug, Clone, Serialize)]
pub struct BoxRow {
    pub delta: f64,
    pub boxes_hit: u64,
    pub boxes_total: u64,
    pub used_in_fit: bool,
    pub exclusion: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxDimReport {
    pub mode: BoxCountMode,
    pub q_cap: f64,
    pub rows: Vec<BoxRow>,
    pub slope: Option<f64>,
    pub fit_residual: Option<f64>,
    /// Set when fewer than two usable scales remained and the fit fell back
    /// to all non-empty rows.
    pub fit_degraded: bool,
}

/// Window factor of the scale-matched mode: radii in `[delta, WINDOW * delta)`.
const SCALE_WINDOW: f64 = 2.0;

/// Count delta-boxes of the torus meeting the selected target rectangles and
/// fit the box-counting slope over the usable scales. Saturated scales (all
/// boxes hit) and trivial ones (at most 2 boxes) are excluded from the fit;
/// exclusions are reported per row.
pub fn box_dim_estimate(
    a: &MatrixSpec,
    alpha: &WeightVector,
    psi: &ApproxTuple,
    q_cap: f64,
    deltas: &[f64],
    mode: BoxCountMode,
    limits: &Limits,
) -> Result<BoxDimReport> {
    if psi.n() != a.rows() {
        return Err(Error::usage("tuple must have one function per matrix row"));
    }
    if deltas.is_empty()
        || deltas.windows(2).any(|w| w[1] >= w[0])
        || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0))
    {
        return Err(Error::usage(
            "box sizes must be strictly decreasing values in (0,1)",
        ));
    }
    let n = a.rows();

    // enumerate the rectangle family once
    let bounds = BallBounds::inclusive(alpha, q_cap)?;
    bounds.check_budget(limits, "box_dim_estimate")?;
    let mut rects: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // center, radii, max radius
    let mut err = None;
    scan_box(&bounds, false, &mut |q| {
        let norm = crate::geom::quasi_norm_int(q, alpha).expect("dims match");
        if norm > q_cap {
            return true;
        }
        let radii = match psi.eval(norm) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let center: Vec<f64> = (0..n).map(|i| frac(a.row_dot_f64(i, q))).collect();
        let maxr = radii.iter().cloned().fold(0.0f64, f64::max);
        rects.push((center, radii, maxr));
        true
    });
    if let Some(e) = err {
        return Err(e);
    }

    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let g = (1.0 / delta).round() as usize;
        let total = (g as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > limits.max_points as u128 {
            return Err(Error::resource(format!(
                "box grid {g}^{n} exceeds the {} point budget",
                limits.max_points
            )));
        }
        let total = total as usize;
        let mut bits = vec![0u64; total.div_ceil(64)];
        let mut hit = |flat: usize| bits[flat / 64] |= 1u64 << (flat % 64);

        for (center, radii, maxr) in &rects {
            if mode == BoxCountMode::ScaleMatched
                && !(*maxr >= delta && *maxr < SCALE_WINDOW * delta)
            {
                continue;
            }
            // per-axis box indices whose cell [k/g,(k+1)/g) meets the open
            // interval (c - r, c + r), computed on the line then wrapped
            let axis_sets: Vec<Vec<usize>> = center
                .iter()
                .zip(radii)
                .map(|(c, r)| {
                    if 2.0 * r >= 1.0 {
                        return (0..g).collect();
                    }
                    let gf = g as f64;
                    let lo = c - r;
                    let hi = c + r;
                    let k0 = (lo * gf).floor() as i64 - 1;
                    let k1 = (hi * gf).floor() as i64 + 1;
                    let mut out = Vec::new();
                    for k in k0..=k1 {
                        let cell_lo = k as f64 / gf;
                        let cell_hi = (k + 1) as f64 / gf;
                        if cell_lo < hi && cell_hi > lo {
                            out.push(k.rem_euclid(g as i64) as usize);
                        }
                    }
                    out.sort_unstable();
                    out.dedup();
                    out
                })
                .collect();
            if axis_sets.iter().any(|s| s.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; n];
            'mark: loop {
                let mut flat = 0usize;
                for d in 0..n {
                    flat = flat * g + axis_sets[d][idx[d]];
                }
                hit(flat);
                let mut d = n;
                loop {
                    if d == 0 {
                        break 'mark;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < axis_sets[d].len() {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        }

        let count = bits.iter().map(|w| w.count_ones() as u64).sum::<u64>();
        rows.push(BoxRow {
            delta,
            boxes_hit: count,
            boxes_total: total as u64,
            used_in_fit: false,
            exclusion: None,
        });
    }

    // select usable scales
    for row in &mut rows {
        if row.boxes_hit == 0 {
            row.exclusion = Some("empty".into());
        } else if row.boxes_hit >= row.boxes_total {
            row.exclusion = Some("saturated".into());
        } else if row.boxes_hit <= 2 {
            row.exclusion = Some("trivial".into());
        } else {
            row.used_in_fit = true;
        }
    }
    let mut fit_degraded = false;
    if rows.iter().filter(|r| r.used_in_fit).count() < 2 {
        fit_degraded = true;
        for row in &mut rows {
            row.used_in_fit = row.boxes_hit > 0;
        }
    }

    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.used_in_fit)
        .map(|r| (1.0 / r.delta).ln())
        .collect();
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| r.used_in_fit)
        .map(|r| (r.boxes_hit as f64).ln())
        .collect();
    let fit = fit_slope(&xs, &ys);

    Ok(BoxDimReport {
        mode,
        q_cap,
        rows,
        slope: fit.map(|(s, _)| s),
        fit_residual: fit.map(|(_, r)| r),
        fit_degraded,
    })
}


#[cfg(test)]
mod planar_tests {
    use super::*;
    use crate::scalar::{phi, sqrt2};

    #[test]
    fn box_dim_full_cover_is_two_dimensional_on_the_two_torus() {
        let lim = crate::lattice::Limits::default();
        let a = MatrixSpec::from_floats(2, 1, vec![phi(), sqrt2()]).unwrap();
        let w = WeightVector::ones(1);
        let psi = ApproxTuple::constant(2, 0.6).unwrap();
        let deltas: Vec<f64> = (2..=5).map(|e| (2.0f64).powi(-e)).collect();
        let rep = box_dim_estimate(
            &a,
            &w,
            &psi,
            4.0,
            &deltas,
            BoxCountMode::TruncatedUnion,
            &lim,
        )
        .unwrap();
        assert!((rep.slope.unwrap() - 2.0).abs() < 1e-9);
    }
}
