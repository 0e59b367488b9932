//! One handler per subcommand: resolve inputs, call the library, shape the
//! report.

use serde_json::{json, Value};

use twistlab::dimension::{box_dim_estimate, BoxCountMode, DimensionProblem};
use twistlab::error::{Error, Result};
use twistlab::geom::MatrixSpec;
use twistlab::lattice::{classify, level_set_prefix, ClassifyOptions, Limits};
use twistlab::measure::fit_slope;
use twistlab::measure::{
    dyadic_series, equidist_ratio, limsup_measure, radial_series, ubiquity_coverage, EstMethod,
    EstimatorCfg, UbiquityConfig,
};
use twistlab::rng::uniform_points;
use twistlab::scalar::{CmpCounter, Tri};
use twistlab::transference::{homogeneous_empty_counted, verify_transference, DirichletConstants};

use crate::args::*;
use crate::input::*;
use crate::report::*;

pub struct Ctx {
    pub seed: u64,
    pub workers: usize,
    pub limits: Limits,
}

fn est_cfg(est: &EstArgs, ctx: &Ctx) -> Result<EstimatorCfg> {
    let method = match est.est.as_str() {
        "grid" => EstMethod::Grid { step: est.step },
        "mc" => EstMethod::MonteCarlo {
            samples: est.samples,
        },
        other => {
            return Err(Error::usage(format!(
                "--est must be grid or mc, got `{other}`"
            )))
        }
    };
    Ok(EstimatorCfg {
        method,
        workers: ctx.workers,
        seed: ctx.seed,
    })
}

fn matrix_config(src: &MatrixArgs, a: &MatrixSpec) -> Value {
    json!({
        "preset": src.preset,
        "matrix_file": src.matrix_file.as_ref().map(|p| p.display().to_string()),
        "matrix_inline": src.matrix,
        "exact": a.is_exact(),
        "spec": a,
    })
}

pub fn run_lset(ctx: &Ctx, args: &LsetArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let eps = parse_eps(&args.eps)?;
    let rep = level_set_prefix(&a, &v, &alpha, &eps, args.lmax, &ctx.limits)?;

    let rows: Vec<Vec<String>> = rep
        .levels
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                r.in_l.to_string(),
                cell_f64(r.best_value),
                r.witness
                    .as_ref()
                    .map(|w| cell_ints(&w.q))
                    .unwrap_or_default(),
                r.witness
                    .as_ref()
                    .map(|w| cell_ints(&w.p))
                    .unwrap_or_default(),
            ]
        })
        .collect();
    let in_l = rep.levels.iter().filter(|r| r.in_l.is_true()).count();
    let counter = rep.counter;
    let summary = format!(
        "lset: {in_l}/{} levels in L at eps={} ({} indeterminate comparisons)",
        rep.levels.len(),
        eps,
        counter.indeterminate
    );
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "v": v.values(),
            "alpha": alpha.values(),
            "eps": args.eps,
            "lmax": args.lmax,
        }),
        outputs: serde_json::to_value(&rep).unwrap(),
        claims: vec![Claim::describe("levels in the prefix", in_l as f64)],
        csv_header: vec!["level", "in_l", "best_value", "witness_q", "witness_p"],
        csv_rows: rows,
        summary,
        counter,
    })
}

pub fn run_classify(ctx: &Ctx, args: &ClassifyArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let eps_grid = args
        .eps_grid
        .split(',')
        .map(parse_eps)
        .collect::<Result<Vec<_>>>()?;
    let opts = ClassifyOptions {
        cofinite_fraction: args.cofinite_fraction,
        majority_fraction: args.majority_fraction,
    };
    let rep = classify(&a, &v, &alpha, &eps_grid, args.lmax, &opts, &ctx.limits)?;

    let mut rows = Vec::new();
    for per in &rep.per_eps {
        for r in &per.levels {
            rows.push(vec![
                per.epsilon.to_string(),
                r.level.to_string(),
                r.in_l.to_string(),
            ]);
        }
    }
    let counter = rep.counter;
    let summary = format!(
        "classify: verdict `{}` over {} epsilon values, lmax={} (finite-scale heuristic)",
        rep.verdict,
        eps_grid.len(),
        args.lmax
    );
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "v": v.values(),
            "alpha": alpha.values(),
            "eps_grid": args.eps_grid,
            "lmax": args.lmax,
            "cofinite_fraction": args.cofinite_fraction,
            "majority_fraction": args.majority_fraction,
        }),
        outputs: serde_json::to_value(&rep).unwrap(),
        claims: vec![],
        csv_header: vec!["epsilon", "level", "in_l"],
        csv_rows: rows,
        summary,
        counter,
    })
}

pub fn run_dirichlet(ctx: &Ctx, args: &DirichletArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let eps = parse_eps(&args.eps)?;
    let constants = DirichletConstants::new(args.cc, args.nn, eps.to_f64(), &v, &alpha);
    let (empty, mut counter) =
        homogeneous_empty_counted(&a, &v, &alpha, args.cc, args.nn, &ctx.limits)?;

    let mut claims = vec![Claim {
        name: format!("homogeneous system empty at C={}, N={}", args.cc, args.nn),
        kind: ClaimKind::Descriptive,
        passed: Some(empty.is_true()),
        value: None,
    }];
    let mut rows = Vec::new();
    let mut transference = Value::Null;
    let summary;
    if empty == Tri::True {
        let bs = uniform_points(a.rows(), args.samples, ctx.seed);
        let rep = verify_transference(&a, &v, &alpha, args.cc, args.nn, &bs, &ctx.limits)?;
        counter.merge(&rep.counter);
        for (i, s) in rep.shifts.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                s.b.iter()
                    .map(|x| cell_f64(*x))
                    .collect::<Vec<_>>()
                    .join("|"),
                s.found.to_string(),
                s.witness
                    .as_ref()
                    .map(|w| cell_ints(&w.q))
                    .unwrap_or_default(),
                s.witness
                    .as_ref()
                    .map(|w| cell_ints(&w.p))
                    .unwrap_or_default(),
                s.within_stated_norm
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                s.within_stated_rows
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
            ]);
        }
        claims.push(Claim::check(
            format!(
                "every sampled shift admits a solution within the stated bounds (samples={})",
                args.samples
            ),
            rep.failures == 0 && rep.indeterminate_rows == 0,
        ));
        summary = format!(
            "dirichlet: c1={:.6}, c2={:.6}; homogeneous empty; {}/{} shifts solved",
            constants.c1, constants.c2, rep.passes, args.samples
        );
        transference = serde_json::to_value(&rep).unwrap();
    } else {
        summary = format!(
            "dirichlet: c1={:.6}, c2={:.6}; homogeneous system not empty ({empty}); \
             transference verification skipped",
            constants.c1, constants.c2
        );
    }

    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "v": v.values(),
            "alpha": alpha.values(),
            "cc": args.cc,
            "nn": args.nn,
            "eps": args.eps,
            "samples": args.samples,
        }),
        outputs: json!({
            "constants": constants,
            "homogeneous_empty": empty,
            "transference": transference,
        }),
        claims,
        csv_header: vec![
            "sample",
            "b",
            "found",
            "witness_q",
            "witness_p",
            "within_stated_norm",
            "within_stated_rows",
        ],
        csv_rows: rows,
        summary,
        counter,
    })
}

pub fn run_measure(ctx: &Ctx, args: &MeasureArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let psi = parse_psi(&args.psi.psi, a.rows())?;
    let q_list = parse_f64_list(&args.q_list, "--q-list")?;
    let est = est_cfg(&args.est, ctx)?;
    let ests = limsup_measure(&a, &alpha, &psi, &q_list, &est, &ctx.limits)?;

    // hypothesis ratio psi_i(r) * r^(v_i m/n), maximised over the evaluated
    // range; reported as-is, no implied constant is chosen
    let psi_ratio_max = {
        let lo = q_list[0] / 2.0;
        let hi = *q_list.last().unwrap();
        let samples: Vec<f64> = (0..=64)
            .map(|k| lo * (hi / lo).powf(k as f64 / 64.0))
            .chain(q_list.iter().cloned())
            .collect();
        let m = a.cols() as f64;
        let n = a.rows() as f64;
        let mut maxes = vec![f64::NEG_INFINITY; a.rows()];
        for &r in &samples {
            let vals = psi.eval(r)?;
            for (i, (val, vi)) in vals.iter().zip(v.values()).enumerate() {
                maxes[i] = maxes[i].max(val * r.powf(vi * m / n));
            }
        }
        maxes
    };

    let rows: Vec<Vec<String>> = ests
        .iter()
        .map(|e| {
            vec![
                cell_f64(e.q),
                e.method.clone(),
                cell_f64(e.resolution),
                cell_f64(e.value),
                cell_opt_f64(e.half_width),
            ]
        })
        .collect();
    let last = ests.last().map(|e| e.value).unwrap_or(0.0);
    let summary = format!(
        "measure: {} cutoffs, final union estimate {last:.4} (lower cutoff {})",
        ests.len(),
        q_list[0] / 2.0
    );
    let mut claims = vec![Claim::describe("final truncated union estimate", last)];
    for (i, r) in psi_ratio_max.iter().enumerate() {
        claims.push(Claim::describe(
            format!(
                "max of psi_{}(r) * r^(v_i m/n) over the evaluated range",
                i + 1
            ),
            *r,
        ));
    }
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "v": v.values(),
            "alpha": alpha.values(),
            "psi": args.psi.psi,
            "q_list": q_list,
            "estimator": est,
        }),
        outputs: json!({
            "cutoff_low_exclusive": q_list[0] / 2.0,
            "estimates": ests,
            "psi_ratio_max": psi_ratio_max,
        }),
        claims,
        csv_header: vec!["Q", "method", "resolution", "estimate", "half_width"],
        csv_rows: rows,
        summary,
        counter: CmpCounter::default(),
    })
}

pub fn run_equidist(ctx: &Ctx, args: &EquidistArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (_v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let rect = parse_rect(&args.rect)?;
    let stats = equidist_ratio(&a, &alpha, &rect, args.nn, &ctx.limits)?;

    let volume = rect.volume();
    let rows = vec![vec![
        cell_f64(stats.n_bound),
        stats.count_in.to_string(),
        stats.count_total.to_string(),
        cell_f64(stats.ratio),
    ]];
    let summary = format!(
        "equidist: ratio {:.6} over {} points (rectangle volume {volume:.6})",
        stats.ratio, stats.count_total
    );
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "alpha": alpha.values(),
            "b_center": rect.center(),
            "b_radii": rect.radii(),
            "nn": args.nn,
        }),
        outputs: json!({
            "stats": stats,
            "rect_volume": volume,
        }),
        claims: vec![Claim::describe(
            "deviation from the rectangle volume",
            (stats.ratio - volume).abs(),
        )],
        csv_header: vec!["N", "count_in_B", "count_total", "ratio"],
        csv_rows: rows,
        summary,
        counter: CmpCounter::default(),
    })
}

pub fn run_coverage(ctx: &Ctx, args: &CoverageArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let eps = parse_eps(&args.eps)?;
    let rect = parse_rect(&args.rect)?;
    let est = est_cfg(&args.est, ctx)?;

    let prefix = level_set_prefix(&a, &v, &alpha, &eps, args.lmax, &ctx.limits)?;
    let members = prefix.member_levels();
    if members.is_empty() {
        return Err(Error::usage(
            "the level-set prefix is empty; there are no shells to cover with",
        ));
    }
    let cfg = UbiquityConfig::new(eps.to_f64(), members.clone(), &v, &alpha, args.c3)?;

    let ks: Vec<usize> = match &args.k_list {
        Some(spec) => parse_u32_list(spec, "--k-list")?
            .into_iter()
            .map(|k| k as usize)
            .collect(),
        None => (1..=cfg.k_count()).collect(),
    };
    for &k in &ks {
        if k < 1 || k > cfg.k_count() {
            return Err(Error::usage(format!(
                "--k-list: shell index {k} out of range 1..={}",
                cfg.k_count()
            )));
        }
    }

    let mut rows = Vec::new();
    let mut claims = Vec::new();
    let mut min_frac = f64::INFINITY;
    let mut fractions = Vec::new();
    for &k in &ks {
        let frac = ubiquity_coverage(&a, &alpha, &cfg, k - 1, &rect, &est, &ctx.limits)?;
        min_frac = min_frac.min(frac);
        let rho = cfg.rho(cfg.u(k - 1));
        let pass = frac >= 0.5;
        rows.push(vec![
            k.to_string(),
            cfg.levels[k - 1].to_string(),
            cell_f64(cfg.u(k - 1)),
            cell_f64(cfg.l(k - 1)),
            cell_f64(rho.iter().cloned().fold(0.0, f64::max)),
            cell_f64(frac),
            pass.to_string(),
        ]);
        claims.push(Claim::check_value(
            format!(
                "covered fraction >= 1/2 at shell k={k} (level {})",
                cfg.levels[k - 1]
            ),
            pass,
            frac,
        ));
        fractions.push(json!({
            "k": k,
            "level": cfg.levels[k - 1],
            "u": cfg.u(k - 1),
            "l": cfg.l(k - 1),
            "fraction": frac,
        }));
    }
    let counter = prefix.counter;
    let summary = format!(
        "coverage: {} shells, min covered fraction {min_frac:.4} (c2={:.4}, c3={:.6})",
        ks.len(),
        cfg.c2,
        cfg.c3
    );
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "v": v.values(),
            "alpha": alpha.values(),
            "eps": args.eps,
            "lmax": args.lmax,
            "c3": args.c3,
            "b_center": rect.center(),
            "b_radii": rect.radii(),
            "estimator": est,
            "k_list": ks,
        }),
        outputs: json!({
            "ubiquity": cfg,
            "coverage": fractions,
        }),
        claims,
        csv_header: vec![
            "k",
            "level",
            "u_k",
            "l_k",
            "rho_max",
            "covered_fraction",
            "claim_pass",
        ],
        csv_rows: rows,
        summary,
        counter,
    })
}

pub fn run_dim(_ctx: &Ctx, args: &DimArgs) -> Result<CommandOutput> {
    let problem = match args.mode.as_str() {
        "unweighted" => DimensionProblem::Unweighted {
            m: args
                .m
                .ok_or_else(|| Error::usage("unweighted mode needs --m"))?,
            n: args
                .n
                .ok_or_else(|| Error::usage("unweighted mode needs --n"))?,
            tau: parse_f64_list(
                args.tau
                    .as_deref()
                    .ok_or_else(|| Error::usage("unweighted mode needs --tau"))?,
                "--tau",
            )?,
        },
        "weighted2d" => DimensionProblem::Weighted2d {
            m: args
                .m
                .ok_or_else(|| Error::usage("weighted2d mode needs --m"))?,
            v: parse_weights(&args.v, 2, "--v")?,
            tau: parse_f64_list(
                args.tau
                    .as_deref()
                    .ok_or_else(|| Error::usage("weighted2d mode needs --tau"))?,
                "--tau",
            )?,
        },
        "pivots" => DimensionProblem::Pivots {
            a: parse_f64_list(
                args.a
                    .as_deref()
                    .ok_or_else(|| Error::usage("pivots mode needs --a"))?,
                "--a",
            )?,
            t: parse_f64_list(
                args.t
                    .as_deref()
                    .ok_or_else(|| Error::usage("pivots mode needs --t"))?,
                "--t",
            )?,
        },
        other => {
            return Err(Error::usage(format!(
                "--mode must be unweighted, weighted2d, or pivots; got `{other}`"
            )))
        }
    };
    let rep = problem.solve()?;

    let rows: Vec<Vec<String>> = rep
        .pivots
        .iter()
        .map(|p| {
            vec![
                cell_f64(p.pivot),
                cell_usizes(&p.k1),
                cell_usizes(&p.k2),
                cell_usizes(&p.k3),
                cell_f64(p.d),
                p.is_min.to_string(),
            ]
        })
        .collect();
    let mut claims: Vec<Claim> = rep
        .checks
        .iter()
        .map(|c| Claim::check(c.name.clone(), c.passed))
        .collect();
    claims.push(Claim::describe("dimension value", rep.value));
    let summary = format!(
        "dim: s = {} ({} mode, exact {})",
        rep.value, rep.mode, rep.value_exact
    );
    Ok(CommandOutput {
        config: json!({
            "mode": args.mode,
            "m": args.m,
            "n": args.n,
            "tau": args.tau,
            "v": args.v,
            "a": args.a,
            "t": args.t,
        }),
        outputs: serde_json::to_value(&rep).unwrap(),
        claims,
        csv_header: vec!["pivot", "k1", "k2", "k3", "d", "is_min"],
        csv_rows: rows,
        summary,
        counter: CmpCounter::default(),
    })
}

pub fn run_boxdim(ctx: &Ctx, args: &BoxdimArgs) -> Result<CommandOutput> {
    let a = load_matrix(&args.matrix)?;
    let (_v, alpha) = parse_weight_pair(&args.weights, &a)?;
    let psi = parse_psi(&args.psi.psi, a.rows())?;
    let deltas: Vec<f64> = match (&args.delta_exps, &args.deltas) {
        (Some(spec), None) => {
            let (lo, hi) = spec
                .split_once("..")
                .ok_or_else(|| Error::usage("--delta-exps takes a range like 4..10"))?;
            let lo: i32 = lo
                .trim()
                .parse()
                .map_err(|_| Error::usage("--delta-exps: bad start"))?;
            let hi: i32 = hi
                .trim()
                .parse()
                .map_err(|_| Error::usage("--delta-exps: bad end"))?;
            if hi < lo || lo < 1 {
                return Err(Error::usage("--delta-exps needs 1 <= start <= end"));
            }
            (lo..=hi).map(|e| (2.0f64).powi(-e)).collect()
        }
        (None, Some(spec)) => parse_f64_list(spec, "--deltas")?,
        _ => return Err(Error::usage("give exactly one of --delta-exps, --deltas")),
    };
    let mode = match args.mode.as_str() {
        "union" => BoxCountMode::TruncatedUnion,
        "scaled" => BoxCountMode::ScaleMatched,
        other => {
            return Err(Error::usage(format!(
                "--mode must be union or scaled, got `{other}`"
            )))
        }
    };
    let rep = box_dim_estimate(&a, &alpha, &psi, args.q, &deltas, mode, &ctx.limits)?;

    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                cell_f64(r.delta),
                r.boxes_hit.to_string(),
                r.boxes_total.to_string(),
                r.used_in_fit.to_string(),
                r.exclusion.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let summary = match rep.slope {
        Some(s) => format!(
            "boxdim: fitted slope {s:.4} over {} scales{} ({:?} mode)",
            rep.rows.iter().filter(|r| r.used_in_fit).count(),
            if rep.fit_degraded {
                " [degraded fit]"
            } else {
                ""
            },
            mode
        ),
        None => "boxdim: no usable scales to fit".into(),
    };
    let claims = match rep.slope {
        Some(s) => vec![Claim::describe("fitted box-counting slope", s)],
        None => vec![],
    };
    Ok(CommandOutput {
        config: json!({
            "matrix": matrix_config(&args.matrix, &a),
            "alpha": alpha.values(),
            "psi": args.psi.psi,
            "q": args.q,
            "deltas": deltas,
            "mode": mode,
        }),
        outputs: serde_json::to_value(&rep).unwrap(),
        claims,
        csv_header: vec![
            "delta",
            "boxes_hit",
            "boxes_total",
            "used_in_fit",
            "exclusion",
        ],
        csv_rows: rows,
        summary,
        counter: CmpCounter::default(),
    })
}

pub fn run_series(_ctx: &Ctx, args: &SeriesArgs) -> Result<CommandOutput> {
    let n_rows = args.psi.psi.split(';').count();
    let psi = parse_psi(&args.psi.psi, n_rows)?;

    let (rows, sums, xs, kind_cfg): (Vec<Vec<String>>, Vec<f64>, Vec<f64>, Value) =
        match args.kind.as_str() {
            "dyadic" => {
                let levels: Vec<u32> = match &args.levels {
                    Some(spec) => parse_u32_list(spec, "--levels")?,
                    None => (1..=args.lmax).collect(),
                };
                let sums = dyadic_series(&psi, args.m, &levels, levels.len())?;
                let mut rows = Vec::new();
                let mut prev = 0.0;
                for (k, (&l, &s)) in levels.iter().zip(&sums).enumerate() {
                    rows.push(vec![
                        (k + 1).to_string(),
                        l.to_string(),
                        cell_f64(s - prev),
                        cell_f64(s),
                    ]);
                    prev = s;
                }
                let xs = levels.iter().map(|&l| (l as f64) * (2.0f64).ln()).collect();
                (rows, sums, xs, json!({"levels": levels}))
            }
            "radial" => {
                let sums = radial_series(&psi, args.m, args.rmax)?;
                let mut rows = Vec::new();
                let mut prev = 0.0;
                for (r, &s) in sums.iter().enumerate() {
                    rows.push(vec![
                        (r + 1).to_string(),
                        (r + 1).to_string(),
                        cell_f64(s - prev),
                        cell_f64(s),
                    ]);
                    prev = s;
                }
                let xs = (1..=args.rmax).map(|r| (r as f64).ln()).collect();
                (rows, sums, xs, json!({"rmax": args.rmax}))
            }
            other => {
                return Err(Error::usage(format!(
                    "--kind must be dyadic or radial, got `{other}`"
                )))
            }
        };

    // growth exponent of the partial sums, descriptive only: no divergence
    // verdict is ever asserted from a truncation
    let ys: Vec<f64> = sums.iter().map(|s| s.max(1e-300).ln()).collect();
    let growth = fit_slope(&xs, &ys).map(|(s, _)| s);
    let last = sums.last().cloned().unwrap_or(0.0);
    let summary = format!(
        "series: {} terms, last partial sum {last:.6}{}",
        sums.len(),
        growth
            .map(|g| format!(", fitted growth exponent {g:.4} (descriptive)"))
            .unwrap_or_default()
    );
    let mut claims = vec![Claim::describe("last partial sum", last)];
    if let Some(g) = growth {
        claims.push(Claim::describe("fitted growth exponent (descriptive)", g));
    }
    Ok(CommandOutput {
        config: json!({
            "kind": args.kind,
            "m": args.m,
            "psi": args.psi.psi,
            "extra": kind_cfg,
        }),
        outputs: json!({
            "partial_sums": sums,
            "growth_exponent_descriptive": growth,
        }),
        claims,
        csv_header: vec!["k", "scale", "term", "partial_sum"],
        csv_rows: rows,
        summary,
        counter: CmpCounter::default(),
    })
}
