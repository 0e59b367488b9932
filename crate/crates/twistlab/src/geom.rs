//! Weighted geometry primitives: weight vectors, quasi-norms, matrices,
//! approximation-function tuples, and torus rectangles.
//!
//! All values here are immutable after construction and safe to share across
//! worker threads.

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{round_half_away_f64, round_half_away_rat, Rat64, Scalar, ETA};

/// A tuple of positive exponents summing to its own dimension. Parameterises
/// the quasi-norm `|x|_w = max_i |x_i|^(1/w_i)`.
///
/// When built from rationals the sum constraint is checked exactly and the
/// exact exponents are retained for exact-arithmetic comparisons; when built
/// from floats the sum is checked within the global tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct WeightVector {
    vals: Vec<f64>,
    #[serde(skip)]
    exact: Option<Vec<Rat64>>,
}

impl WeightVector {
    pub fn from_rationals(exponents: Vec<Rat64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::usage("weight vector must be non-empty"));
        }
        if exponents.iter().any(|w| *w.numer() <= 0) {
            return Err(Error::usage("weight exponents must be positive"));
        }
        let sum: Rat64 = exponents.iter().sum();
        let d = Rat64::from_integer(exponents.len() as i64);
        if sum != d {
            return Err(Error::usage(format!(
                "weight exponents must sum to the dimension {}: got {sum}",
                exponents.len()
            )));
        }
        let vals = exponents
            .iter()
            .map(|w| w.to_f64().expect("small rational fits f64"))
            .collect();
        Ok(WeightVector {
            vals,
            exact: Some(exponents),
        })
    }

    pub fn from_floats(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::usage("weight vector must be non-empty"));
        }
        if exponents.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::usage("weight exponents must be positive and finite"));
        }
        let sum: f64 = exponents.iter().sum();
        let d = exponents.len() as f64;
        if (sum - d).abs() > ETA {
            return Err(Error::usage(format!(
                "weight exponents must sum to the dimension {d}: got {sum}"
            )));
        }
        Ok(WeightVector {
            vals: exponents,
            exact: None,
        })
    }

    /// The unweighted case `(1, ..., 1)`.
    pub fn ones(d: usize) -> Self {
        WeightVector::from_rationals(vec![Rat64::one(); d]).expect("ones is valid")
    }

    pub fn dim(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.vals[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Exact exponents, present when built from rationals.
    pub fn exact(&self) -> Option<&[Rat64]> {
        self.exact.as_deref()
    }

    pub fn min(&self) -> f64 {
        self.vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Weighted quasi-norm `max_i |x_i|^(1/w_i)`. Zero exactly on the zero vector.
pub fn quasi_norm(x: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != w.dim() {
        return Err(Error::usage(format!(
            "quasi_norm dimension mismatch: vector has {} entries, weights {}",
            x.len(),
            w.dim()
        )));
    }
    let mut best = 0.0f64;
    for (xi, wi) in x.iter().zip(w.values()) {
        // weight 1 is the identity power; keep it exact
        let t = if *wi == 1.0 {
            xi.abs()
        } else {
            xi.abs().powf(1.0 / wi)
        };
        if t > best {
            best = t;
        }
    }
    Ok(best)
}

/// Quasi-norm of an integer vector; same formula.
pub fn quasi_norm_int(q: &[i64], w: &WeightVector) -> Result<f64> {
    let xs: Vec<f64> = q.iter().map(|&v| v as f64).collect();
    quasi_norm(&xs, w)
}

/// An `n x m` real matrix with entries tagged exact-rational or float. Mixed
/// tagging within one matrix is forbidden.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixSpec {
    rows: usize,
    cols: usize,
    entries: MatrixEntries,
}

#[derive(Debug, Clone)]
pub enum MatrixEntries {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Serialize for MatrixEntries {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        match self {
            MatrixEntries::Exact(v) => {
                let mut seq = ser.serialize_seq(Some(v.len()))?;
                for r in v {
                    seq.serialize_element(&format!("{}/{}", r.numer(), r.denom()))?;
                }
                seq.end()
            }
            MatrixEntries::Float(v) => {
                let mut seq = ser.serialize_seq(Some(v.len()))?;
                for x in v {
                    seq.serialize_element(x)?;
                }
                seq.end()
            }
        }
    }
}

impl MatrixSpec {
    pub fn from_floats(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        Self::check_shape(rows, cols, entries.len())?;
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::usage("matrix entries must be finite"));
        }
        Ok(MatrixSpec {
            rows,
            cols,
            entries: MatrixEntries::Float(entries),
        })
    }

    pub fn from_rationals(rows: usize, cols: usize, entries: Vec<BigRational>) -> Result<Self> {
        Self::check_shape(rows, cols, entries.len())?;
        Ok(MatrixSpec {
            rows,
            cols,
            entries: MatrixEntries::Exact(entries),
        })
    }

    /// Build from tagged scalars, rejecting mixed exact/float tagging.
    pub fn from_scalars(rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self> {
        Self::check_shape(rows, cols, entries.len())?;
        let n_exact = entries.iter().filter(|e| e.is_exact()).count();
        if n_exact == entries.len() {
            let es = entries
                .into_iter()
                .map(|e| e.as_exact().unwrap().clone())
                .collect();
            Self::from_rationals(rows, cols, es)
        } else if n_exact == 0 {
            let es = entries.into_iter().map(|e| e.to_f64()).collect();
            Self::from_floats(rows, cols, es)
        } else {
            Err(Error::usage(
                "mixed exact/float entries are forbidden within one matrix",
            ))
        }
    }

    fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
        if rows == 0 || cols == 0 {
            return Err(Error::usage("matrix must have at least one row and column"));
        }
        if len != rows * cols {
            return Err(Error::usage(format!(
                "matrix shape {rows}x{cols} needs {} entries, got {len}",
                rows * cols
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.entries, MatrixEntries::Exact(_))
    }

    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        match &self.entries {
            MatrixEntries::Exact(v) => v[i * self.cols + j].to_f64().unwrap_or(f64::NAN),
            MatrixEntries::Float(v) => v[i * self.cols + j],
        }
    }

    pub fn entry_exact(&self, i: usize, j: usize) -> Option<&BigRational> {
        match &self.entries {
            MatrixEntries::Exact(v) => Some(&v[i * self.cols + j]),
            MatrixEntries::Float(_) => None,
        }
    }

    /// Row-by-integer-vector dot product in f64.
    pub fn row_dot_f64(&self, i: usize, q: &[i64]) -> f64 {
        debug_assert_eq!(q.len(), self.cols);
        let mut acc = 0.0;
        for j in 0..self.cols {
            acc += self.entry_f64(i, j) * q[j] as f64;
        }
        acc
    }

    /// Row-by-integer-vector dot product exactly (exact matrices only).
    pub fn row_dot_exact(&self, i: usize, q: &[i64]) -> BigRational {
        let mut acc = BigRational::zero();
        for j in 0..self.cols {
            let e = self.entry_exact(i, j).expect("exact matrix");
            acc += e * BigRational::from_integer(q[j].into());
        }
        acc
    }

    /// Deterministic random exact-rational matrix: entries `k/den` with `k`
    /// drawn uniformly from `0..den` under the given seed.
    pub fn random_rational(seed: u64, rows: usize, cols: usize, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::usage("denominator must be positive"));
        }
        let mut rng = crate::rng::task_rng(seed, 0);
        let entries = (0..rows * cols)
            .map(|_| {
                let k = rand::Rng::gen_range(&mut rng, 0..den);
                BigRational::new(k.into(), den.into())
            })
            .collect();
        Self::from_rationals(rows, cols, entries)
    }

    /// Least common multiple of all entry denominators (exact matrices only).
    /// Any q that is a multiple of it has all residuals exactly zero.
    pub fn denominator_lcm(&self) -> Option<num::BigInt> {
        match &self.entries {
            MatrixEntries::Exact(v) => {
                let mut l = num::BigInt::one();
                for r in v {
                    l = num::integer::lcm(l, r.denom().clone());
                }
                Some(l)
            }
            MatrixEntries::Float(_) => None,
        }
    }
}

/// Nearest-integer residuals of `A q`: `p_i` is the nearest integer to
/// `A_i . q` (ties rounded half away from zero) and `residual_i = A_i.q - p_i`,
/// so `|residual_i| <= 1/2`.
pub fn nearest_residual(a: &MatrixSpec, q: &[i64]) -> (Vec<i64>, Vec<f64>) {
    let mut p = Vec::with_capacity(a.rows());
    let mut res = Vec::with_capacity(a.rows());
    if a.is_exact() {
        for i in 0..a.rows() {
            let x = a.row_dot_exact(i, q);
            let pi = round_half_away_rat(&x);
            let r = &x - BigRational::from_integer(pi.clone());
            p.push(pi.to_i64().expect("desk-scale p fits i64"));
            res.push(r.to_f64().unwrap());
        }
    } else {
        for i in 0..a.rows() {
            let x = a.row_dot_f64(i, q);
            let pi = round_half_away_f64(x);
            p.push(pi);
            res.push(x - pi as f64);
        }
    }
    (p, res)
}

/// Exact variant of [`nearest_residual`], for exact matrices.
pub fn nearest_residual_exact(a: &MatrixSpec, q: &[i64]) -> (Vec<i64>, Vec<BigRational>) {
    let mut p = Vec::with_capacity(a.rows());
    let mut res = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let x = a.row_dot_exact(i, q);
        let pi = round_half_away_rat(&x);
        let r = &x - BigRational::from_integer(pi.clone());
        p.push(pi.to_i64().expect("desk-scale p fits i64"));
        res.push(r);
    }
    (p, res)
}

/// One approximation function: a power law `c * r^(-tau)` or a tabulated
/// non-increasing step function with right-constant interpolation.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ApproxFn {
    #[serde(rename = "power-law")]
    PowerLaw {
        coeff: f64,
        exponent: f64,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

impl ApproxFn {
    pub fn power_law(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(Error::usage("power law coefficient must be positive"));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::usage("power law exponent must be positive"));
        }
        Ok(ApproxFn::PowerLaw { coeff, exponent })
    }

    /// Samples `(r_k, y_k)` with strictly increasing `r_k`, strictly positive
    /// and non-increasing `y_k`. The value on `[r_k, r_{k+1})` is `y_k`;
    /// outside the sampled range the nearest sample value is used.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::usage("tabulated function needs at least one sample"));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::usage("tabulated sample points must be increasing"));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::usage("tabulated samples must be non-increasing"));
            }
        }
        if samples.iter().any(|&(r, y)| r <= 0.0 || y <= 0.0) {
            return Err(Error::usage("tabulated samples must be strictly positive"));
        }
        Ok(ApproxFn::Tabulated { samples })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::usage(format!(
                "approximation functions are evaluated on r > 0, got {r}"
            )));
        }
        Ok(match self {
            ApproxFn::PowerLaw { coeff, exponent } => coeff * r.powf(-exponent),
            ApproxFn::Tabulated { samples } => {
                // right-constant: value of the last sample point <= r
                let mut y = samples[0].1;
                for &(rk, yk) in samples {
                    if rk <= r {
                        y = yk;
                    } else {
                        break;
                    }
                }
                y
            }
        })
    }
}

/// The n-tuple of approximation functions.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxTuple {
    funcs: Vec<ApproxFn>,
}

impl ApproxTuple {
    pub fn new(funcs: Vec<ApproxFn>) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::usage("approximation tuple must be non-empty"));
        }
        Ok(ApproxTuple { funcs })
    }

    /// All rows share one power law.
    pub fn uniform_power_law(n: usize, coeff: f64, exponent: f64) -> Result<Self> {
        let f = ApproxFn::power_law(coeff, exponent)?;
        Ok(ApproxTuple { funcs: vec![f; n] })
    }

    /// All rows share one constant value (single-sample tabulated function).
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        let f = ApproxFn::tabulated(vec![(1.0, value)])?;
        Ok(ApproxTuple { funcs: vec![f; n] })
    }

    pub fn n(&self) -> usize {
        self.funcs.len()
    }

    pub fn funcs(&self) -> &[ApproxFn] {
        &self.funcs
    }

    /// Componentwise evaluation at `r > 0`.
    pub fn eval(&self, r: f64) -> Result<Vec<f64>> {
        self.funcs.iter().map(|f| f.eval(r)).collect()
    }
}

/// Componentwise evaluation of a tuple; same contract as [`ApproxTuple::eval`].
pub fn eval_tuple(psi: &ApproxTuple, r: f64) -> Result<Vec<f64>> {
    psi.eval(r)
}

/// Torus distance between two points of [0,1) in one coordinate.
pub fn torus_dist(x: f64, c: f64) -> f64 {
    let d = (x - c).abs();
    d.min(1.0 - d)
}

/// Fractional part mapped into [0,1).
pub fn frac(x: f64) -> f64 {
    let f = x.fract();
    if f < 0.0 {
        f + 1.0
    } else {
        f
    }
}

/// An open axis-aligned rectangle on the n-torus, given by a center and one
/// radius per coordinate. Membership uses the per-coordinate torus distance
/// with strict inequality.
#[derive(Debug, Clone, Serialize)]
pub struct TorusRectangle {
    center: Vec<f64>,
    radii: Vec<f64>,
}

impl TorusRectangle {
    pub fn new(center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if center.len() != radii.len() || center.is_empty() {
            return Err(Error::usage("rectangle center/radii dimension mismatch"));
        }
        if center.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::usage("rectangle center must lie in [0,1)^n"));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::usage("rectangle radii must be positive"));
        }
        Ok(TorusRectangle { center, radii })
    }

    /// One-dimensional open interval `(lo, hi)` as a torus rectangle.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::usage("interval needs hi > lo"));
        }
        TorusRectangle::new(vec![(lo + hi) / 2.0], vec![(hi - lo) / 2.0])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        self.center
            .iter()
            .zip(self.radii.iter())
            .zip(x.iter())
            .all(|((c, r), xi)| torus_dist(*xi, *c) < *r)
    }

    /// Volume of the rectangle as a subset of the torus (sides clamped to 1).
    pub fn volume(&self) -> f64 {
        self.radii.iter().map(|r| (2.0 * r).min(1.0)).product()
    }
}

/// Membership test; same contract as [`TorusRectangle::contains`] with the
/// precondition `x` in [0,1)^n.
pub fn rect_contains(rect: &TorusRectangle, x: &[f64]) -> bool {
    rect.contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::from_floats(vec![1.0, 1.0]).is_ok());
        assert!(WeightVector::from_floats(vec![0.5, 1.5]).is_ok());
        assert!(WeightVector::from_floats(vec![0.5, 1.0]).is_err());
        assert!(WeightVector::from_floats(vec![-1.0, 3.0]).is_err());
        assert!(WeightVector::from_rationals(vec![Rat64::new(1, 2), Rat64::new(3, 2)]).is_ok());
        assert!(WeightVector::from_rationals(vec![Rat64::new(1, 2), Rat64::new(1, 2)]).is_err());
    }

    #[test]
    fn quasi_norm_examples() {
        let w1 = WeightVector::ones(1);
        assert_eq!(quasi_norm(&[0.25], &w1).unwrap(), 0.25);

        // max{0.25^2, 0.125^(2/3)} = max{0.0625, 0.25} = 0.25
        let w = WeightVector::from_floats(vec![0.5, 1.5]).unwrap();
        let v = quasi_norm(&[0.25, 0.125], &w).unwrap();
        assert!((v - 0.25).abs() < 1e-15);

        assert_eq!(quasi_norm(&[0.0, 0.0], &w).unwrap(), 0.0);
        assert!(quasi_norm(&[1.0], &w).is_err());
    }

    #[test]
    fn nearest_residual_examples() {
        let a = MatrixSpec::from_floats(1, 1, vec![0.7]).unwrap();
        let (p, r) = nearest_residual(&a, &[1]);
        assert_eq!(p, vec![1]);
        assert!((r[0] + 0.3).abs() < 1e-15);

        // tie-break: 0.5 rounds away from zero
        let a = MatrixSpec::from_floats(1, 1, vec![0.5]).unwrap();
        let (p, r) = nearest_residual(&a, &[1]);
        assert_eq!(p, vec![1]);
        assert!((r[0] + 0.5).abs() < 1e-15);

        let a = MatrixSpec::from_floats(1, 1, vec![1.6180339887]).unwrap();
        let (p, r) = nearest_residual(&a, &[5]);
        assert_eq!(p, vec![8]);
        assert!((r[0] - 0.0901699435).abs() < 1e-9);
    }

    #[test]
    fn nearest_residual_exact_reconstructs() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let a = MatrixSpec::from_rationals(1, 1, vec![third.clone()]).unwrap();
        let (p, r) = nearest_residual_exact(&a, &[5]);
        // 5/3 = 2 - 1/3
        assert_eq!(p, vec![2]);
        assert_eq!(r[0], -third);
    }

    #[test]
    fn mixed_entries_rejected() {
        let entries = vec![
            Scalar::parse_entry("1/2").unwrap(),
            Scalar::parse_entry("0.5").unwrap(),
        ];
        let err = MatrixSpec::from_scalars(1, 2, entries).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn eval_tuple_examples() {
        let t = ApproxTuple::uniform_power_law(1, 1.0, 2.0).unwrap();
        assert_eq!(eval_tuple(&t, 2.0).unwrap(), vec![0.25]);
        assert!(eval_tuple(&t, 0.0).is_err());
        assert!(eval_tuple(&t, -1.0).is_err());

        // 2^l with exponent m/n stays a dyadic power
        let t = ApproxTuple::uniform_power_law(1, 1.0, 0.5).unwrap();
        let v = eval_tuple(&t, 16.0).unwrap()[0];
        assert!((v - 0.25).abs() < 1e-15);

        let tab = ApproxTuple::new(vec![
            ApproxFn::tabulated(vec![(1.0, 0.5), (2.0, 0.25)]).unwrap()
        ])
        .unwrap();
        assert_eq!(eval_tuple(&tab, 1.5).unwrap(), vec![0.5]);
        assert_eq!(eval_tuple(&tab, 2.0).unwrap(), vec![0.25]);
        assert_eq!(eval_tuple(&tab, 0.5).unwrap(), vec![0.5]);
    }

    #[test]
    fn tabulated_validation() {
        assert!(ApproxFn::tabulated(vec![(1.0, 0.5), (2.0, 0.75)]).is_err());
        assert!(ApproxFn::tabulated(vec![(2.0, 0.5), (1.0, 0.25)]).is_err());
        assert!(ApproxFn::tabulated(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn rect_contains_examples() {
        let r = TorusRectangle::new(vec![0.95], vec![0.1]).unwrap();
        assert!(r.contains(&[0.02])); // wraps: distance 0.07

        let r = TorusRectangle::new(vec![0.5], vec![0.1]).unwrap();
        assert!(!r.contains(&[0.61])); // distance 0.11

        let r = TorusRectangle::new(vec![0.5, 0.5], vec![0.2, 0.01]).unwrap();
        assert!(!r.contains(&[0.55, 0.52])); // second coordinate fails
        assert!(r.contains(&[0.55, 0.505]));
    }

    #[test]
    fn rect_translation_invariance() {
        let r = TorusRectangle::new(vec![0.3], vec![0.05]).unwrap();
        for x in [0.26, 0.3, 0.349, 0.351, 0.01] {
            assert_eq!(r.contains(&[x]), r.contains(&[frac(x + 3.0)]));
            assert_eq!(r.contains(&[x]), r.contains(&[frac(x - 7.0)]));
        }
    }
}
