//! Inhomogeneous Dirichlet machinery: the explicit transference constants,
//! homogeneous emptiness checks, and exhaustive inhomogeneous solvers.
//!
//! The transference statement reads: if ` |Aq - p|_v < C, |q|_alpha < N ` has
//! no nonzero integer solution, then for every shift `b` the inhomogeneous
//! system is solvable with the constants computed here. The proof works in the
//! box `|A_i.q - b_i - p_i| <= K C^(v_i)`, `|q_j| <= K N^(alpha_j)` with
//! `K = (C^-n N^-m + 1)/2`; the stated bounds use `c1 >= K`.

use num::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{nearest_residual, quasi_norm_int, MatrixSpec, WeightVector};
use crate::lattice::{scan_box, ApproxWitness, BallBounds, Limits};
use crate::scalar::{cmp_pow_pow, tri_le, tri_lt, CmpCounter, Rat64, Scalar, Tri};

/// Scaling factor `K = (C^-n N^-m + 1)/2` of the proof box.
pub fn proof_box_factor(big_c: f64, big_n: f64, n: usize, m: usize) -> f64 {
    0.5 * (big_c.powi(-(n as i32)) * big_n.powi(-(m as i32)) + 1.0)
}

/// The homogeneous-to-inhomogeneous constant: `max` of `K^(1/v_i)` and
/// `K^(1/alpha_j)` over all rows and columns.
pub fn compute_c1(big_c: f64, big_n: f64, v: &WeightVector, alpha: &WeightVector) -> f64 {
    let k = proof_box_factor(big_c, big_n, v.dim(), alpha.dim());
    v.values()
        .iter()
        .chain(alpha.values())
        .map(|w| k.powf(1.0 / w))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The dyadic-scale instantiation constant:
/// `((eps^-n + 1)/2)^(1/min{v_i, alpha_j})`.
pub fn compute_c2(eps: f64, v: &WeightVector, alpha: &WeightVector) -> f64 {
    let n = v.dim();
    let base = 0.5 * (eps.powi(-(n as i32)) + 1.0);
    let min_w = v.min().min(alpha.min());
    base.powf(1.0 / min_w)
}

/// Constants with their inputs echoed, for reports.
#[derive(Debug, Clone, Serialize)]
pub struct DirichletConstants {
    pub c1: f64,
    pub c2: f64,
    pub big_c: f64,
    pub big_n: f64,
    pub eps: f64,
    pub n: usize,
    pub m: usize,
    pub v: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl DirichletConstants {
    pub fn new(big_c: f64, big_n: f64, eps: f64, v: &WeightVector, alpha: &WeightVector) -> Self {
        DirichletConstants {
            c1: compute_c1(big_c, big_n, v, alpha),
            c2: compute_c2(eps, v, alpha),
            big_c,
            big_n,
            eps,
            n: v.dim(),
            m: alpha.dim(),
            v: v.values().to_vec(),
            alpha: alpha.values().to_vec(),
        }
    }
}

/// Whether the homogeneous system `|Aq - p|_v < C, |q|_alpha < N` has no
/// solution `(q, p)` in `Z^(m+n) \ {0}`.
///
/// The pure-`p` branch (`q = 0`, `p != 0`) is decided in closed form: a
/// nonzero `p` with every `|p_i| < C^(v_i)` exists iff `C > 1`.
pub fn homogeneous_empty(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    big_c: f64,
    big_n: f64,
    limits: &Limits,
) -> Result<Tri> {
    Ok(homogeneous_empty_counted(a, v, alpha, big_c, big_n, limits)?.0)
}

pub fn homogeneous_empty_counted(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    big_c: f64,
    big_n: f64,
    limits: &Limits,
) -> Result<(Tri, CmpCounter)> {
    if v.dim() != a.rows() || alpha.dim() != a.cols() {
        return Err(Error::usage(
            "weight dimensions must match the matrix shape",
        ));
    }
    if !(big_c > 0.0 && big_n > 0.0) {
        return Err(Error::usage("homogeneous system needs C > 0 and N > 0"));
    }
    let mut counter = CmpCounter::default();
    let mut possible = false;

    // pure-p branch
    match tri_lt(1.0, big_c, &mut counter) {
        Tri::True => return Ok((Tri::False, counter)),
        Tri::Indeterminate => possible = true,
        Tri::False => {}
    }

    let bounds = BallBounds::strict(alpha, big_n)?;
    bounds.check_budget(limits, "homogeneous_empty")?;

    let exact = a.is_exact() && v.exact().is_some() && alpha.exact().is_some();
    let mut found = false;
    if exact {
        let c_rat = Scalar::lift_f64(big_c)?;
        let vws = v.exact().unwrap().to_vec();
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = crate::geom::nearest_residual_exact(a, q);
            let all = res.iter().zip(vws.iter()).all(|(r, &w)| {
                // |res| < C^w
                cmp_pow_pow(&r.abs(), Rat64::new(1, 1), &c_rat, w) == std::cmp::Ordering::Less
            });
            if all {
                found = true;
                return false;
            }
            true
        });
    } else {
        let c_pows: Vec<f64> = v.values().iter().map(|w| big_c.powf(*w)).collect();
        scan_box(&bounds, false, &mut |q| {
            let (_, res) = nearest_residual(a, q);
            let mut row_all = Tri::True;
            for (r, t) in res.iter().zip(c_pows.iter()) {
                row_all = row_all.and(tri_lt(r.abs(), *t, &mut counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    found = true;
                    return false;
                }
                Tri::Indeterminate => possible = true,
                Tri::False => {}
            }
            true
        });
    }

    let tri = if found {
        Tri::False
    } else if possible {
        Tri::Indeterminate
    } else {
        Tri::True
    };
    Ok((tri, counter))
}

/// Outcome of an exhaustive inhomogeneous search.
#[derive(Debug, Clone, Serialize)]
pub struct InhomSearch {
    pub witness: Option<ApproxWitness>,
    pub counter: CmpCounter,
    pub scanned: u64,
}

/// Exhaustively search `|q|_alpha < M` (including `q = 0`) for a pair
/// solving `|A_i.q - b_i - p_i| < r_i` on every row, with `p` the nearest
/// integer vector. Returns the first witness in enumeration order. The joint
/// zero `(q, p) = (0, 0)` is never reported as a witness.
pub fn inhomogeneous_solve(
    a: &MatrixSpec,
    alpha: &WeightVector,
    b: &[Scalar],
    radii: &[f64],
    m_bound: f64,
    limits: &Limits,
) -> Result<InhomSearch> {
    if b.len() != a.rows() || radii.len() != a.rows() {
        return Err(Error::usage("shift and radii must have one entry per row"));
    }
    if alpha.dim() != a.cols() {
        return Err(Error::usage("column weights must match the matrix shape"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::usage("search radii must be positive"));
    }
    let bounds = BallBounds::strict(alpha, m_bound)?;
    bounds.check_budget(limits, "inhomogeneous_solve")?;

    let mut counter = CmpCounter::default();
    let mut scanned = 0u64;
    let exact = a.is_exact() && b.iter().all(|s| s.is_exact() || s.to_f64().is_finite());
    let mut witness: Option<ApproxWitness> = None;

    if a.is_exact() && exact {
        let b_rat: Vec<_> = b.iter().map(|s| s.to_rational()).collect::<Result<_>>()?;
        let radii_rat: Vec<_> = radii
            .iter()
            .map(|r| Scalar::lift_f64(*r))
            .collect::<Result<Vec<_>>>()?;
        scan_box(&bounds, true, &mut |q| {
            scanned += 1;
            let mut p = Vec::with_capacity(a.rows());
            let mut res = Vec::with_capacity(a.rows());
            for i in 0..a.rows() {
                let x = a.row_dot_exact(i, q) - &b_rat[i];
                let pi = crate::scalar::round_half_away_rat(&x);
                let r = &x - num::BigRational::from_integer(pi.clone());
                p.push(num::ToPrimitive::to_i64(&pi).expect("p fits i64"));
                res.push(r);
            }
            if q.iter().all(|&x| x == 0) && p.iter().all(|&x| x == 0) {
                return true; // joint zero excluded
            }
            let all = res
                .iter()
                .zip(radii_rat.iter())
                .all(|(r, rad)| r.abs() < *rad);
            if all {
                witness = Some(ApproxWitness {
                    q: q.to_vec(),
                    p,
                    residuals: res
                        .iter()
                        .map(|r| num::ToPrimitive::to_f64(r).unwrap())
                        .collect(),
                    qnorm: quasi_norm_int(q, alpha).expect("dims match"),
                });
                return false;
            }
            true
        });
    } else {
        let b_f: Vec<f64> = b.iter().map(|s| s.to_f64()).collect();
        let mut possible_q: Option<Vec<i64>> = None;
        scan_box(&bounds, true, &mut |q| {
            scanned += 1;
            let mut p = Vec::with_capacity(a.rows());
            let mut res = Vec::with_capacity(a.rows());
            for i in 0..a.rows() {
                let x = a.row_dot_f64(i, q) - b_f[i];
                let pi = crate::scalar::round_half_away_f64(x);
                p.push(pi);
                res.push(x - pi as f64);
            }
            if q.iter().all(|&x| x == 0) && p.iter().all(|&x| x == 0) {
                return true;
            }
            let mut row_all = Tri::True;
            for (r, rad) in res.iter().zip(radii.iter()) {
                row_all = row_all.and(tri_lt(r.abs(), *rad, &mut counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    witness = Some(ApproxWitness {
                        q: q.to_vec(),
                        p,
                        residuals: res,
                        qnorm: quasi_norm_int(q, alpha).expect("dims match"),
                    });
                    false
                }
                Tri::Indeterminate => {
                    if possible_q.is_none() {
                        possible_q = Some(q.to_vec());
                    }
                    true
                }
                Tri::False => true,
            }
        });
    }

    Ok(InhomSearch {
        witness,
        counter,
        scanned,
    })
}

/// One verified shift of a transference round-trip.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftCheck {
    pub b: Vec<f64>,
    pub found: bool,
    pub witness: Option<ApproxWitness>,
    /// `|q|_alpha < c1 N` (the stated norm bound).
    pub within_stated_norm: Option<bool>,
    /// `|Aq - b - p|_v <= c1 C` (the stated row bound).
    pub within_stated_rows: Option<bool>,
}

/// Report of [`verify_transference`].
#[derive(Debug, Clone, Serialize)]
pub struct TransferenceReport {
    pub constants: DirichletConstants,
    pub box_factor: f64,
    pub passes: usize,
    pub failures: usize,
    pub indeterminate_rows: usize,
    pub shifts: Vec<ShiftCheck>,
    pub counter: CmpCounter,
}

/// Verify the transference conclusion on sampled shifts: given that the
/// homogeneous system `(C, N)` is empty, every shift must admit a solution in
/// the proof box (`|A_i.q - b_i - p_i| <= K C^(v_i)`, `|q_j| <= K N^(alpha_j)`).
/// Each witness is additionally checked against the stated `c1`-bounds.
pub fn verify_transference(
    a: &MatrixSpec,
    v: &WeightVector,
    alpha: &WeightVector,
    big_c: f64,
    big_n: f64,
    b_samples: &[Vec<f64>],
    limits: &Limits,
) -> Result<TransferenceReport> {
    let (empty, mut counter) = homogeneous_empty_counted(a, v, alpha, big_c, big_n, limits)?;
    match empty {
        Tri::True => {}
        Tri::False => {
            return Err(Error::usage(
                "transference verification requires an empty homogeneous system",
            ))
        }
        Tri::Indeterminate => {
            return Err(Error::usage(
                "homogeneous emptiness is indeterminate at the working tolerance",
            ))
        }
    }

    let n = a.rows();
    let m = a.cols();
    let k = proof_box_factor(big_c, big_n, n, m);
    let c1 = compute_c1(big_c, big_n, v, alpha);
    let row_radii: Vec<f64> = v.values().iter().map(|w| k * big_c.powf(*w)).collect();
    let coord_bounds: Vec<i64> = alpha
        .values()
        .iter()
        .map(|w| (k * big_n.powf(*w) + 1e-12).floor() as i64)
        .collect();
    let box_points: u128 = coord_bounds
        .iter()
        .fold(1u128, |acc, &bd| acc.saturating_mul(2 * bd as u128 + 1));
    if box_points > limits.max_points as u128 {
        return Err(Error::resource(format!(
            "transference proof box {coord_bounds:?} holds {box_points} points, budget is {}",
            limits.max_points
        )));
    }
    let bounds = BallBounds::from_coords(coord_bounds);

    let mut shifts = Vec::with_capacity(b_samples.len());
    let mut passes = 0;
    let mut failures = 0;
    let mut indeterminate_rows = 0;

    for b in b_samples {
        if b.len() != n {
            return Err(Error::usage("each sampled shift needs one entry per row"));
        }
        let mut witness: Option<ApproxWitness> = None;
        let mut possible = false;
        scan_box(&bounds, true, &mut |q| {
            let mut p = Vec::with_capacity(n);
            let mut res = Vec::with_capacity(n);
            for i in 0..n {
                let x = a.row_dot_f64(i, q) - b[i];
                let pi = crate::scalar::round_half_away_f64(x);
                p.push(pi);
                res.push(x - pi as f64);
            }
            let mut row_all = Tri::True;
            for (r, rad) in res.iter().zip(row_radii.iter()) {
                row_all = row_all.and(tri_le(r.abs(), *rad, &mut counter));
                if row_all.is_false() {
                    break;
                }
            }
            match row_all {
                Tri::True => {
                    witness = Some(ApproxWitness {
                        q: q.to_vec(),
                        p,
                        residuals: res,
                        qnorm: quasi_norm_int(q, alpha).expect("dims match"),
                    });
                    false
                }
                Tri::Indeterminate => {
                    possible = true;
                    true
                }
                Tri::False => true,
            }
        });

        let found = witness.is_some();
        if found {
            passes += 1;
        } else if possible {
            indeterminate_rows += 1;
        } else {
            failures += 1;
        }
        let (norm_ok, rows_ok) = match &witness {
            Some(w) => {
                let norm_ok = w.qnorm < c1 * big_n;
                let vnorm = w
                    .residuals
                    .iter()
                    .zip(v.values())
                    .map(|(r, wv)| r.abs().powf(1.0 / wv))
                    .fold(0.0f64, f64::max);
                (Some(norm_ok), Some(vnorm <= c1 * big_c))
            }
            None => (None, None),
        };
        shifts.push(ShiftCheck {
            b: b.clone(),
            found,
            witness,
            within_stated_norm: norm_ok,
            within_stated_rows: rows_ok,
        });
    }

    Ok(TransferenceReport {
        constants: DirichletConstants::new(big_c, big_n, 1.0, v, alpha),
        box_factor: k,
        passes,
        failures,
        indeterminate_rows,
        shifts,
        counter,
    })
}
