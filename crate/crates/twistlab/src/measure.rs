//! Desk-scale verification of the Lebesgue measure statements: the
//! divergence/convergence series, hit counting for the twisted system,
//! truncated limsup-measure estimation, equidistribution ratios, and the
//! local-ubiquity coverage fraction.
//!
//! Measure estimates are truncations: the asymptotic quantity is a limit and
//! is never asserted from a finite run. The estimators are deterministic for a
//! fixed seed and worker-count invariant (work is cut into fixed chunks whose
//! results merge by set union / integer sums).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{frac, torus_dist, ApproxTuple, MatrixSpec, TorusRectangle, WeightVector};
use crate::lattice::{scan_box, ApproxWitness, BallBounds, Limits};
use crate::par::map_chunks;
use crate::rng::task_rng;
use crate::transference::compute_c2;
use rand::Rng;

/// Partial sums over a level list: `S_K = sum over the first K levels of
/// 2^(m l) * prod_i psi_i(2^l)`.
pub fn dyadic_series(
    psi: &ApproxTuple,
    m: usize,
    levels: &[u32],
    count: usize,
) -> Result<Vec<f64>> {
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("level list must be strictly ascending"));
    }
    let k = count.min(levels.len());
    let mut out = Vec::with_capacity(k);
    let mut acc = 0.0f64;
    for &l in &levels[..k] {
        let r = (2.0f64).powi(l as i32);
        let prod: f64 = psi.eval(r)?.iter().product();
        acc += (2.0f64).powi((m as i32) * (l as i32)) * prod;
        out.push(acc);
    }
    Ok(out)
}

/// Partial sums of `r^(m-1) * prod_i psi_i(r)` for `r = 1..=r_max`.
pub fn radial_series(psi: &ApproxTuple, m: usize, r_max: u32) -> Result<Vec<f64>> {
    if r_max < 1 {
        return Err(Error::usage("radial series needs a cutoff >= 1"));
    }
    let mut out = Vec::with_capacity(r_max as usize);
    let mut acc = 0.0f64;
    for r in 1..=r_max {
        let rf = r as f64;
        let prod: f64 = psi.eval(rf)?.iter().product();
        acc += rf.powi(m as i32 - 1) * prod;
        out.push(acc);
    }
    Ok(out)
}

/// Least-squares slope of `y` against `x`, with the residual RMS.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - xm) * (xi - xm)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - xm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - (intercept + slope * xi);
            e * e
        })
        .sum();
    Some((slope, (rss / n).sqrt()))
}

/// An axis-aligned open rectangle on the torus, in raw (center, radii) form.
#[derive(Debug, Clone)]
pub struct TargetRect {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

impl TargetRect {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.center
            .iter()
            .zip(self.radii.iter())
            .zip(x.iter())
            .all(|((c, r), xi)| torus_dist(*xi, *c) < *r)
    }
}

/// Target rectangles `Delta({Aq}, Psi(|q|_alpha))` for the nonzero lattice
/// points in a norm shell. The lower end is exclusive unless `lo_inclusive`;
/// pass `norm_lo = 0` for the whole punctured ball.
pub(crate) fn target_rects(
    a: &MatrixSpec,
    alpha: &WeightVector,
    radii_of: &mut impl FnMut(f64) -> Result<Vec<f64>>,
    norm_lo: f64,
    lo_inclusive: bool,
    norm_hi: f64,
    limits: &Limits,
) -> Result<Vec<TargetRect>> {
    let bounds = BallBounds::inclusive(alpha, norm_hi)?;
    bounds.check_budget(limits, "target rectangle shell")?;
    let mut rects = Vec::new();
    let mut err = None;
    scan_box(&bounds, false, &mut |q| {
        let norm = crate::geom::quasi_norm_int(q, alpha).expect("dims match");
        let above = norm > norm_lo || (lo_inclusive && norm == norm_lo);
        if !(above && norm <= norm_hi) {
            return true;
        }
        let radii = match radii_of(norm) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let center: Vec<f64> = (0..a.rows()).map(|i| frac(a.row_dot_f64(i, q))).collect();
        rects.push(TargetRect { center, radii });
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(rects)
}

/// Number of nonzero `q` with `|q|_alpha <= Q` whose nearest-integer system
/// `|A_i.q - b_i - p_i| < psi_i(|q|_alpha)` holds on every row, plus witnesses
/// up to a cap.
pub fn hit_count(
    a: &MatrixSpec,
    alpha: &WeightVector,
    psi: &ApproxTuple,
    b: &[f64],
    q_cap: f64,
    witness_cap: usize,
    limits: &Limits,
) -> Result<(u64, Vec<ApproxWitness>)> {
    if b.len() != a.rows() || psi.n() != a.rows() {
        return Err(Error::usage("shift and tuple must have one entry per row"));
    }
    let bounds = BallBounds::inclusive(alpha, q_cap)?;
    bounds.check_budget(limits, "hit_count")?;
    let mut count = 0u64;
    let mut wits = Vec::new();
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
        let mut p = Vec::with_capacity(a.rows());
        let mut res = Vec::with_capacity(a.rows());
        let mut all = true;
        for i in 0..a.rows() {
            let x = a.row_dot_f64(i, q) - b[i];
            let pi = crate::scalar::round_half_away_f64(x);
            let r = x - pi as f64;
            if !(r.abs() < radii[i]) {
                all = false;
                break;
            }
            p.push(pi);
            res.push(r);
        }
        if all {
            count += 1;
            if wits.len() < witness_cap {
                wits.push(ApproxWitness {
                    q: q.to_vec(),
                    p,
                    residuals: res,
                    qnorm: norm,
                });
            }
        }
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok((count, wits))
}

/// How a Lebesgue measure is estimated.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EstMethod {
    Grid {
        step: f64,
    },
    #[serde(rename = "mc")]
    MonteCarlo {
        samples: u64,
    },
}

/// Estimator configuration: method, worker count, root seed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimatorCfg {
    pub method: EstMethod,
    pub workers: usize,
    pub seed: u64,
}

impl EstimatorCfg {
    pub fn grid(step: f64) -> Self {
        EstimatorCfg {
            method: EstMethod::Grid { step },
            workers: 1,
            seed: 0,
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        EstimatorCfg {
            method: EstMethod::MonteCarlo { samples },
            workers: 1,
            seed,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// One measure estimate.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureEstimate {
    /// Norm cutoff this estimate belongs to.
    pub q: f64,
    /// Estimated measure, in [0, 1].
    pub value: f64,
    /// "grid" or "mc".
    pub method: String,
    /// Grid step or sample count.
    pub resolution: f64,
    /// Wilson 95% half-width (Monte Carlo only).
    pub half_width: Option<f64>,
    pub seed: Option<u64>,
}

const WILSON_Z: f64 = 1.959963984540054;

fn wilson_half_width(hits: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
}

/// Fixed-size bit set used for grid marking.
#[derive(Debug, Clone)]
pub(crate) struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn or_with(&mut self, other: &BitSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Regular grid of cell centers `(k + 1/2) * step` per axis over the torus.
struct TorusGrid {
    cells_per_axis: usize,
    n: usize,
}

impl TorusGrid {
    fn new(n: usize, step: f64, limits: &Limits) -> Result<Self> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::usage(format!(
                "grid step must be in (0,1), got {step}"
            )));
        }
        let g = (1.0 / step).round() as usize;
        if g < 2 {
            return Err(Error::usage("grid step too coarse"));
        }
        let total = (g as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > limits.max_points as u128 {
            return Err(Error::resource(format!(
                "grid with {g}^{n} cells exceeds the {} point budget",
                limits.max_points
            )));
        }
        Ok(TorusGrid {
            cells_per_axis: g,
            n,
        })
    }

    fn total(&self) -> usize {
        self.cells_per_axis.pow(self.n as u32)
    }

    fn center_coord(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.cells_per_axis as f64
    }

    /// Cell indices per axis whose centers lie strictly inside the torus
    /// interval of the given center/radius.
    fn axis_hits(&self, c: f64, r: f64) -> Vec<usize> {
        let g = self.cells_per_axis;
        if 2.0 * r >= 1.0 {
            return (0..g).collect();
        }
        let gf = g as f64;
        let lo = ((c - r) * gf - 0.5).floor() as i64 - 1;
        let hi = ((c + r) * gf - 0.5).ceil() as i64 + 1;
        let mut out = Vec::new();
        for k in lo..=hi {
            let idx = k.rem_euclid(g as i64) as usize;
            if torus_dist(self.center_coord(idx), c) < r {
                out.push(idx);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Mark every cell whose center lies in the rectangle.
    fn mark_rect(&self, rect: &TargetRect, bits: &mut BitSet) {
        let axis_sets: Vec<Vec<usize>> = rect
            .center
            .iter()
            .zip(rect.radii.iter())
            .map(|(c, r)| self.axis_hits(*c, *r))
            .collect();
        if axis_sets.iter().any(|s| s.is_empty()) {
            return;
        }
        // odometer over the product of per-axis index sets
        let mut idx = vec![0usize; self.n];
        loop {
            let mut flat = 0usize;
            for d in 0..self.n {
                flat = flat * self.cells_per_axis + axis_sets[d][idx[d]];
            }
            bits.set(flat);
            let mut d = self.n;
            loop {
                if d == 0 {
                    return;
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
}

const RECT_CHUNK: usize = 64;
const SAMPLE_CHUNK: usize = 4096;

fn grid_mark_rects(grid: &TorusGrid, rects: &[TargetRect], workers: usize, bits: &mut BitSet) {
    let chunks = rects.len().div_ceil(RECT_CHUNK);
    let partials = map_chunks(chunks, workers, |ci| {
        let mut local = BitSet::new(grid.total());
        for rect in rects.iter().skip(ci * RECT_CHUNK).take(RECT_CHUNK) {
            grid.mark_rect(rect, &mut local);
        }
        local
    });
    for p in &partials {
        bits.or_with(p);
    }
}

/// Truncated limsup-measure estimates: for each cutoff `Q_k` of the ascending
/// list, the measure of the union of target rectangles over the norm range
/// `(Q_0 / 2, Q_k]`. The fixed lower cutoff keeps the early, solid rectangles
/// out so the estimates track the tail behaviour; estimates are monotone
/// non-decreasing in `k` by construction.
pub fn limsup_measure(
    a: &MatrixSpec,
    alpha: &WeightVector,
    psi: &ApproxTuple,
    q_list: &[f64],
    est: &EstimatorCfg,
    limits: &Limits,
) -> Result<Vec<MeasureEstimate>> {
    if psi.n() != a.rows() {
        return Err(Error::usage("tuple must have one function per matrix row"));
    }
    if q_list.is_empty() || q_list.windows(2).any(|w| w[0] >= w[1]) || q_list[0] <= 0.0 {
        return Err(Error::usage(
            "cutoff list must be positive and strictly ascending",
        ));
    }
    let n = a.rows();
    let cutoff = q_list[0] / 2.0;
    let mut radii_of = |norm: f64| psi.eval(norm);

    match est.method {
        EstMethod::Grid { step } => {
            let grid = TorusGrid::new(n, step, limits)?;
            let mut bits = BitSet::new(grid.total());
            let mut prev = cutoff;
            let mut out = Vec::with_capacity(q_list.len());
            for &q in q_list {
                let rects = target_rects(a, alpha, &mut radii_of, prev, false, q, limits)?;
                grid_mark_rects(&grid, &rects, est.workers, &mut bits);
                out.push(MeasureEstimate {
                    q,
                    value: bits.count() as f64 / grid.total() as f64,
                    method: "grid".into(),
                    resolution: step,
                    half_width: None,
                    seed: None,
                });
                prev = q;
            }
            Ok(out)
        }
        EstMethod::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::usage("monte-carlo estimator needs samples > 0"));
            }
            let chunks = (samples as usize).div_ceil(SAMPLE_CHUNK);
            let points: Vec<Vec<f64>> = {
                let per_chunk = map_chunks(chunks, est.workers, |ci| {
                    let mut rng = task_rng(est.seed, ci as u64);
                    let take = SAMPLE_CHUNK.min(samples as usize - ci * SAMPLE_CHUNK);
                    (0..take)
                        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>())
                        .collect::<Vec<_>>()
                });
                per_chunk.into_iter().flatten().collect()
            };
            let mut covered = vec![false; points.len()];
            let mut prev = cutoff;
            let mut out = Vec::with_capacity(q_list.len());
            for &q in q_list {
                let rects = target_rects(a, alpha, &mut radii_of, prev, false, q, limits)?;
                let updates = map_chunks(chunks, est.workers, |ci| {
                    let lo = ci * SAMPLE_CHUNK;
                    let hi = (lo + SAMPLE_CHUNK).min(points.len());
                    let mut newly = Vec::new();
                    for i in lo..hi {
                        if covered[i] {
                            continue;
                        }
                        if rects.iter().any(|r| r.contains(&points[i])) {
                            newly.push(i);
                        }
                    }
                    newly
                });
                for idx in updates.into_iter().flatten() {
                    covered[idx] = true;
                }
                let hits = covered.iter().filter(|&&c| c).count() as u64;
                out.push(MeasureEstimate {
                    q,
                    value: hits as f64 / samples as f64,
                    method: "mc".into(),
                    resolution: samples as f64,
                    half_width: Some(wilson_half_width(hits, samples)),
                    seed: Some(est.seed),
                });
                prev = q;
            }
            Ok(out)
        }
    }
}

/// Equidistribution count: fraction of lattice points with `|q|_alpha <= N`
/// (including `q = 0`) whose torus image `{Aq}` lies in the rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct EquidistStats {
    pub n_bound: f64,
    pub count_in: u64,
    pub count_total: u64,
    pub ratio: f64,
}

pub fn equidist_ratio(
    a: &MatrixSpec,
    alpha: &WeightVector,
    rect: &TorusRectangle,
    n_bound: f64,
    limits: &Limits,
) -> Result<EquidistStats> {
    if rect.dim() != a.rows() {
        return Err(Error::usage("rectangle dimension must match the row count"));
    }
    let bounds = BallBounds::inclusive(alpha, n_bound)?;
    bounds.check_budget(limits, "equidist_ratio")?;
    let mut count_in = 0u64;
    let mut count_total = 0u64;
    scan_box(&bounds, true, &mut |q| {
        let norm = crate::geom::quasi_norm_int(q, alpha).expect("dims match");
        if norm > n_bound {
            return true;
        }
        count_total += 1;
        let x: Vec<f64> = (0..a.rows()).map(|i| frac(a.row_dot_f64(i, q))).collect();
        if rect.contains(&x) {
            count_in += 1;
        }
        true
    });
    Ok(EquidistStats {
        n_bound,
        count_in,
        count_total,
        ratio: count_in as f64 / count_total as f64,
    })
}

/// Scales and blow-up radii of a local ubiquity experiment: levels are the
/// ordered members of a computed level-set prefix, `u_k = c2 2^(l_k)`,
/// `l_k = c3 u_k`, and the blow-up radii are
/// `rho_i(r) = eps * c2^(1 + v_i m/n) * r^(-v_i m/n)`.
#[derive(Debug, Clone, Serialize)]
pub struct UbiquityConfig {
    pub eps: f64,
    pub levels: Vec<u32>,
    pub c2: f64,
    pub c3: f64,
    pub c3_upper_bound: f64,
    row_exponents: Vec<f64>, // v_i * m / n
}

impl UbiquityConfig {
    /// `c3` defaults to half its admissible upper bound
    /// `(2^-(n+2) eps^-n c2^-(n+m))^(1/m)`.
    pub fn new(
        eps: f64,
        levels: Vec<u32>,
        v: &WeightVector,
        alpha: &WeightVector,
        c3: Option<f64>,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::usage("ubiquity config needs eps > 0"));
        }
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("ubiquity levels must be strictly ascending"));
        }
        let n = v.dim();
        let m = alpha.dim();
        let c2 = compute_c2(eps, v, alpha);
        let bound =
            ((2.0f64).powi(-(n as i32 + 2)) * eps.powi(-(n as i32)) * c2.powi(-((n + m) as i32)))
                .powf(1.0 / m as f64);
        let c3 = c3.unwrap_or(bound / 2.0);
        if !(c3 > 0.0 && c3 < 1.0 && c3 < bound) {
            return Err(Error::usage(format!(
                "c3 = {c3} must lie in (0, 1) and below the admissible bound {bound}"
            )));
        }
        let row_exponents = v
            .values()
            .iter()
            .map(|vi| vi * m as f64 / n as f64)
            .collect();
        Ok(UbiquityConfig {
            eps,
            levels,
            c2,
            c3,
            c3_upper_bound: bound,
            row_exponents,
        })
    }

    pub fn k_count(&self) -> usize {
        self.levels.len()
    }

    /// Outer scale of the k-th shell (0-based k).
    pub fn u(&self, k: usize) -> f64 {
        self.c2 * (2.0f64).powi(self.levels[k] as i32)
    }

    /// Inner scale of the k-th shell.
    pub fn l(&self, k: usize) -> f64 {
        self.c3 * self.u(k)
    }

    /// Blow-up radii at scale `r`.
    pub fn rho(&self, r: f64) -> Vec<f64> {
        self.row_exponents
            .iter()
            .map(|e| self.eps * self.c2.powf(1.0 + e) * r.powf(-e))
            .collect()
    }
}

/// Estimate the covered fraction of `B`: the relative measure of
/// `B  intersect  union over q in J_k of Delta({Aq}, rho(u_k))`, where
/// `J_k = { q : l_k <= |q|_alpha <= u_k }`.
pub fn ubiquity_coverage(
    a: &MatrixSpec,
    alpha: &WeightVector,
    cfg: &UbiquityConfig,
    k: usize,
    rect: &TorusRectangle,
    est: &EstimatorCfg,
    limits: &Limits,
) -> Result<f64> {
    if k >= cfg.k_count() {
        return Err(Error::usage(format!(
            "shell index {k} out of range: config has {} levels",
            cfg.k_count()
        )));
    }
    if rect.dim() != a.rows() {
        return Err(Error::usage("ball dimension must match the row count"));
    }
    let u_k = cfg.u(k);
    let l_k = cfg.l(k);
    let rho = cfg.rho(u_k);
    let mut radii_of = |_norm: f64| Ok(rho.clone());
    let rects = target_rects(a, alpha, &mut radii_of, l_k, true, u_k, limits)?;
    covered_fraction(&rects, rect, est, limits)
}

/// Fraction of the rectangle `B` covered by the union of target rectangles.
fn covered_fraction(
    rects: &[TargetRect],
    b: &TorusRectangle,
    est: &EstimatorCfg,
    limits: &Limits,
) -> Result<f64> {
    let n = b.dim();
    let lo: Vec<f64> = b
        .center()
        .iter()
        .zip(b.radii().iter())
        .map(|(c, r)| c - r)
        .collect();
    let width: Vec<f64> = b.radii().iter().map(|r| 2.0 * r).collect();

    match est.method {
        EstMethod::Grid { step } => {
            let cells: Vec<usize> = width
                .iter()
                .map(|w| ((w / step).round() as usize).max(1))
                .collect();
            let total: u128 = cells.iter().fold(1u128, |acc, &c| acc * c as u128);
            if total > limits.max_points as u128 {
                return Err(Error::resource(format!(
                    "coverage grid holds {total} cells, budget is {}",
                    limits.max_points
                )));
            }
            let total = total as usize;
            let chunks = total.div_ceil(SAMPLE_CHUNK);
            let counts = map_chunks(chunks, est.workers, |ci| {
                let lo_i = ci * SAMPLE_CHUNK;
                let hi_i = (lo_i + SAMPLE_CHUNK).min(total);
                let mut covered = 0usize;
                let mut x = vec![0.0f64; n];
                for flat in lo_i..hi_i {
                    let mut rem = flat;
                    for d in (0..n).rev() {
                        let kd = rem % cells[d];
                        rem /= cells[d];
                        x[d] = frac(lo[d] + (kd as f64 + 0.5) * step);
                    }
                    if rects.iter().any(|r| r.contains(&x)) {
                        covered += 1;
                    }
                }
                covered
            });
            Ok(counts.iter().sum::<usize>() as f64 / total as f64)
        }
        EstMethod::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::usage("monte-carlo estimator needs samples > 0"));
            }
            let chunks = (samples as usize).div_ceil(SAMPLE_CHUNK);
            let counts = map_chunks(chunks, est.workers, |ci| {
                let mut rng = task_rng(est.seed, ci as u64);
                let take = SAMPLE_CHUNK.min(samples as usize - ci * SAMPLE_CHUNK);
                let mut covered = 0usize;
                let mut x = vec![0.0f64; n];
                for _ in 0..take {
                    for d in 0..n {
                        x[d] = frac(lo[d] + width[d] * rng.gen::<f64>());
                    }
                    if rects.iter().any(|r| r.contains(&x)) {
                        covered += 1;
                    }
                }
                covered
            });
            Ok(counts.iter().sum::<usize>() as f64 / samples as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::phi;

    fn golden() -> MatrixSpec {
        MatrixSpec::from_floats(1, 1, vec![phi()]).unwrap()
    }

    fn ones() -> WeightVector {
        WeightVector::ones(1)
    }

    #[test]
    fn dyadic_series_examples() {
        // psi(r) = r^(-m/n) makes every term 1
        let psi = ApproxTuple::uniform_power_law(1, 1.0, 1.0).unwrap();
        let sums = dyadic_series(&psi, 1, &[1, 2, 3, 4, 5], 5).unwrap();
        for (k, s) in sums.iter().enumerate() {
            assert!((s - (k + 1) as f64).abs() < 1e-12);
        }

        // m = n = 1, psi(r) = r^-2: S_10 = 1 - 2^-10
        let psi = ApproxTuple::uniform_power_law(1, 1.0, 2.0).unwrap();
        let levels: Vec<u32> = (1..=10).collect();
        let sums = dyadic_series(&psi, 1, &levels, 10).unwrap();
        assert!((sums[9] - (1.0 - (2.0f64).powi(-10))).abs() < 1e-12);

        assert!(dyadic_series(&psi, 1, &[], 5).unwrap().is_empty());
    }

    #[test]
    fn radial_series_examples() {
        let psi = ApproxTuple::uniform_power_law(1, 1.0, 2.0).unwrap();
        let sums = radial_series(&psi, 1, 100).unwrap();
        assert!((sums[99] - 1.6349839001848923).abs() < 1e-10);

        let psi = ApproxTuple::constant(1, 1.0).unwrap();
        let sums = radial_series(&psi, 1, 5).unwrap();
        assert_eq!(sums[4], 5.0);
    }

    #[test]
    fn hit_count_examples() {
        let lim = Limits::default();
        // psi constant 0.6 > 1/2: every enumerated q hits
        let psi = ApproxTuple::constant(1, 0.6).unwrap();
        let (count, _) = hit_count(&golden(), &ones(), &psi, &[0.123], 8.0, 4, &lim).unwrap();
        assert_eq!(count, 16);

        // b = {A q0} hits at q0
        let b = frac(3.0 * phi());
        let psi = ApproxTuple::uniform_power_law(1, 0.05, 1.0).unwrap();
        let (count, wits) = hit_count(&golden(), &ones(), &psi, &[b], 8.0, 8, &lim).unwrap();
        assert!(count >= 1);
        assert!(wits.iter().any(|w| w.q == vec![3]));

        // pinned regression: phi, b = 0.5, psi = 0.4/r, Q = 2^10
        let psi = ApproxTuple::uniform_power_law(1, 0.4, 1.0).unwrap();
        let (count, _) = hit_count(&golden(), &ones(), &psi, &[0.5], 1024.0, 4, &lim).unwrap();
        assert_eq!(count, 10);
    }

    #[test]
    fn hit_count_monotone_in_psi() {
        let lim = Limits::default();
        let big = ApproxTuple::uniform_power_law(1, 0.4, 1.0).unwrap();
        let small = ApproxTuple::uniform_power_law(1, 0.2, 1.0).unwrap();
        let (cb, _) = hit_count(&golden(), &ones(), &big, &[0.37], 256.0, 0, &lim).unwrap();
        let (cs, _) = hit_count(&golden(), &ones(), &small, &[0.37], 256.0, 0, &lim).unwrap();
        assert!(cs <= cb);
    }

    #[test]
    fn limsup_measure_trivial_cases() {
        let lim = Limits::default();
        let est = EstimatorCfg::grid(1e-3);
        // constant 0.6 covers the torus from the first shell
        let psi = ApproxTuple::constant(1, 0.6).unwrap();
        let ests = limsup_measure(&golden(), &ones(), &psi, &[4.0, 8.0], &est, &lim).unwrap();
        assert!(ests.iter().all(|e| e.value == 1.0));

        // tiny radii: union bound
        let psi = ApproxTuple::constant(1, 1e-9).unwrap();
        let ests = limsup_measure(&golden(), &ones(), &psi, &[4.0], &est, &lim).unwrap();
        assert!(ests[0].value <= 2e-2);
    }

    #[test]
    fn limsup_measure_monotone() {
        let lim = Limits::default();
        let est = EstimatorCfg::grid(1e-3);
        let psi = ApproxTuple::uniform_power_law(1, 0.4, 1.0).unwrap();
        let ests =
            limsup_measure(&golden(), &ones(), &psi, &[16.0, 64.0, 256.0], &est, &lim).unwrap();
        for w in ests.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
    }

    #[test]
    fn grid_and_mc_agree() {
        let lim = Limits::default();
        let psi = ApproxTuple::uniform_power_law(1, 0.3, 1.0).unwrap();
        let g = limsup_measure(
            &golden(),
            &ones(),
            &psi,
            &[8.0, 32.0],
            &EstimatorCfg::grid(1e-3),
            &lim,
        )
        .unwrap();
        let mc = limsup_measure(
            &golden(),
            &ones(),
            &psi,
            &[8.0, 32.0],
            &EstimatorCfg::monte_carlo(40_000, 5),
            &lim,
        )
        .unwrap();
        for (ge, me) in g.iter().zip(&mc) {
            let hw = me.half_width.unwrap();
            assert!(
                (ge.value - me.value).abs() <= 3.0 * hw + 2e-3,
                "grid {} vs mc {} (hw {hw})",
                ge.value,
                me.value
            );
        }
    }

    #[test]
    fn mc_worker_count_invariance() {
        let lim = Limits::default();
        let psi = ApproxTuple::uniform_power_law(1, 0.3, 1.0).unwrap();
        let one = limsup_measure(
            &golden(),
            &ones(),
            &psi,
            &[8.0, 32.0],
            &EstimatorCfg::monte_carlo(20_000, 9).with_workers(1),
            &lim,
        )
        .unwrap();
        let eight = limsup_measure(
            &golden(),
            &ones(),
            &psi,
            &[8.0, 32.0],
            &EstimatorCfg::monte_carlo(20_000, 9).with_workers(8),
            &lim,
        )
        .unwrap();
        for (a, b) in one.iter().zip(&eight) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn equidist_examples() {
        let lim = Limits::default();
        // whole torus
        let b = TorusRectangle::new(vec![0.5], vec![0.51]).unwrap();
        let s = equidist_ratio(&golden(), &ones(), &b, 50.0, &lim).unwrap();
        assert_eq!(s.ratio, 1.0);

        // zero matrix, rectangle away from 0
        let zero = MatrixSpec::from_floats(1, 1, vec![0.0]).unwrap();
        let b = TorusRectangle::interval(0.3, 0.5).unwrap();
        let s = equidist_ratio(&zero, &ones(), &b, 50.0, &lim).unwrap();
        assert_eq!(s.ratio, 0.0);

        // additivity on disjoint rectangles, exact in counts
        let b1 = TorusRectangle::interval(0.1, 0.3).unwrap();
        let b2 = TorusRectangle::interval(0.3, 0.45).unwrap();
        let bu = TorusRectangle::interval(0.1, 0.45).unwrap();
        let s1 = equidist_ratio(&golden(), &ones(), &b1, 200.0, &lim).unwrap();
        let s2 = equidist_ratio(&golden(), &ones(), &b2, 200.0, &lim).unwrap();
        let su = equidist_ratio(&golden(), &ones(), &bu, 200.0, &lim).unwrap();
        // boundary points {Aq} = 0.3 would break the identity; none occur here
        assert_eq!(s1.count_in + s2.count_in, su.count_in);
    }

    #[test]
    fn ubiquity_config_invariants() {
        let v = ones();
        let cfg = UbiquityConfig::new(0.4, (1..=10).collect(), &v, &v, None).unwrap();
        assert!((cfg.c2 - 1.75).abs() < 1e-12);
        assert!(cfg.c3 < cfg.c3_upper_bound);
        for k in 0..cfg.k_count() {
            assert!(cfg.l(k) < cfg.u(k));
            if k > 0 {
                assert!(cfg.u(k) > cfg.u(k - 1));
            }
        }
        // rho at u_k reproduces eps * c2 * 2^(-l v m/n)
        let r = cfg.rho(cfg.u(2))[0];
        assert!((r - 0.4 * 1.75 * (2.0f64).powi(-3)).abs() < 1e-12);

        // c3 too large is rejected
        assert!(UbiquityConfig::new(0.4, vec![1, 2], &v, &v, Some(0.9)).is_err());
    }

    #[test]
    fn ubiquity_coverage_trivial_cases() {
        let lim = Limits::default();
        let v = ones();
        let est = EstimatorCfg::grid(1e-3);
        // eps = 2 gives c2 = 0.75 and rho(u_0) = eps*c2/2 = 0.75 >= 1/2:
        // a single shell already covers the whole torus
        let cfg = UbiquityConfig::new(2.0, vec![1], &v, &v, None).unwrap();
        assert!(cfg.rho(cfg.u(0))[0] >= 0.5);
        let b = TorusRectangle::new(vec![0.5], vec![0.5 - 1e-9]).unwrap();
        let f = ubiquity_coverage(&golden(), &v, &cfg, 0, &b, &est, &lim).unwrap();
        assert_eq!(f, 1.0);

        // an empty index shell covers nothing
        let f = covered_fraction(&[], &b, &est, &lim).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn ubiquity_coverage_golden_upper_levels() {
        let lim = Limits::default();
        let v = ones();
        let cfg = UbiquityConfig::new(0.4, (1..=10).collect(), &v, &v, None).unwrap();
        let b = TorusRectangle::interval(0.3, 0.5).unwrap();
        let est = EstimatorCfg::grid(1e-3);
        for k in 5..10 {
            let f = ubiquity_coverage(&golden(), &v, &cfg, k, &b, &est, &lim).unwrap();
            assert!(f >= 0.5, "coverage at shell {k} was {f}");
        }
    }
}
