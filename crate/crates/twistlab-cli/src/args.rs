//! Command-line surface. Every subcommand also accepts `--config FILE` with a
//! JSON object of long-option names; explicit flags override the file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "twistlab",
    version,
    about = "Weighted twisted inhomogeneous Diophantine approximation laboratory",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory for the JSON report and CSV table
    /// (falls back to $TWISTLAB_OUT, then ./twistlab-out).
    #[arg(long, global = true, env = "TWISTLAB_OUT")]
    pub out_dir: Option<PathBuf>,

    /// Root seed; all randomness is derived from it deterministically.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for the estimators.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Enumeration budget in lattice points / grid cells per call.
    #[arg(long, global = true, default_value_t = 100_000_000)]
    pub budget: u64,

    /// Exit with code 4 when more than this fraction of threshold
    /// comparisons were indeterminate.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub indet_threshold: f64,

    /// JSON file with default values for the subcommand's long options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Finite-scale singular/badly-approximable classification over an
    /// epsilon grid.
    Classify(ClassifyArgs),
    /// Level-set prefix: per-level membership, minima, witnesses.
    Lset(LsetArgs),
    /// Transference constants, homogeneous emptiness, and the inhomogeneous
    /// round-trip on sampled shifts.
    Dirichlet(DirichletArgs),
    /// Truncated limsup-measure estimates over ascending norm cutoffs.
    Measure(MeasureArgs),
    /// Equidistribution ratio of the torus images of a lattice ball.
    Equidist(EquidistArgs),
    /// Local-ubiquity coverage fractions over the level-set shells.
    Coverage(CoverageArgs),
    /// Closed-form dimension calculators.
    Dim(DimArgs),
    /// Empirical box-counting dimension of the truncated target union.
    Boxdim(BoxdimArgs),
    /// Divergence/convergence partial sums (dyadic or radial).
    Series(SeriesArgs),
}

/// Matrix source: named preset, file, or inline text (rows separated by ';').
#[derive(Args, Debug, Clone)]
pub struct MatrixArgs {
    /// Preset name: golden | sqrt2 | sqrt2-sqrt3-row | liouville-like |
    /// rand-rational(seed,n,m,den).
    #[arg(long)]
    pub preset: Option<String>,

    /// Matrix file: first line `n m`, then n rows of m entries; each entry
    /// `a/b` (exact) or a decimal (float). Mixing tags is an error.
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,

    /// Inline matrix in the file format with `;` as the line separator.
    #[arg(long)]
    pub matrix: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct WeightArgs {
    /// Row weights, comma-separated rationals or decimals (default all 1).
    #[arg(long)]
    pub v: Option<String>,

    /// Column weights, comma-separated rationals or decimals (default all 1).
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PsiArgs {
    /// Approximation tuple: row specs joined by ';', each
    /// `pow:C,TAU` | `const:VALUE` | `tab:PATH`; one spec broadcasts to all
    /// rows. A tab file holds `r value` pairs, one per line.
    #[arg(long)]
    pub psi: String,
}

#[derive(Args, Debug, Clone)]
pub struct RectArgs {
    /// Rectangle center, comma-separated coordinates in [0,1).
    #[arg(long)]
    pub b_center: String,

    /// Rectangle radii, comma-separated positive reals.
    #[arg(long)]
    pub b_radii: String,
}

#[derive(Args, Debug, Clone)]
pub struct EstArgs {
    /// Estimator: grid | mc.
    #[arg(long, default_value = "grid")]
    pub est: String,

    /// Grid step per axis (grid estimator).
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,

    /// Sample count (monte-carlo estimator).
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,

    /// Epsilon grid, comma-separated.
    #[arg(long, default_value = "0.1,0.2,0.4")]
    pub eps_grid: String,

    /// Deepest level of the computed prefix.
    #[arg(long, default_value_t = 12)]
    pub lmax: u32,

    /// Fraction of the prefix a trailing true-run must cover (bad-like).
    #[arg(long, default_value_t = 0.5)]
    pub cofinite_fraction: f64,

    /// Fraction of the top half that must be true (non-singular-like).
    #[arg(long, default_value_t = 0.5)]
    pub majority_fraction: f64,
}

#[derive(Args, Debug)]
pub struct LsetArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,

    /// Threshold scale of the level systems.
    #[arg(long)]
    pub eps: String,

    /// Deepest level of the computed prefix.
    #[arg(long, default_value_t = 10)]
    pub lmax: u32,
}

#[derive(Args, Debug)]
pub struct DirichletArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,

    /// Row bound C of the homogeneous system.
    #[arg(long)]
    pub cc: f64,

    /// Norm bound N of the homogeneous system.
    #[arg(long)]
    pub nn: f64,

    /// Epsilon for the dyadic instantiation constant c2.
    #[arg(long, default_value = "0.4")]
    pub eps: String,

    /// Number of uniformly sampled shifts to verify.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub psi: PsiArgs,
    #[command(flatten)]
    pub est: EstArgs,

    /// Ascending norm cutoffs, comma-separated.
    #[arg(long)]
    pub q_list: String,
}

#[derive(Args, Debug)]
pub struct EquidistArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub rect: RectArgs,

    /// Norm bound of the counted ball.
    #[arg(long)]
    pub nn: f64,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub rect: RectArgs,
    #[command(flatten)]
    pub est: EstArgs,

    /// Threshold scale of the level set driving the shells.
    #[arg(long, default_value = "0.4")]
    pub eps: String,

    /// Deepest level of the computed prefix.
    #[arg(long, default_value_t = 10)]
    pub lmax: u32,

    /// Shell contraction constant; defaults to half its admissible bound.
    #[arg(long)]
    pub c3: Option<f64>,

    /// Shell indices to estimate (1-based, comma-separated); default all.
    #[arg(long)]
    pub k_list: Option<String>,
}

#[derive(Args, Debug)]
pub struct DimArgs {
    /// unweighted | weighted2d | pivots.
    #[arg(long)]
    pub mode: String,

    /// Number of columns m (unweighted and weighted2d).
    #[arg(long)]
    pub m: Option<usize>,

    /// Number of rows n (unweighted).
    #[arg(long)]
    pub n: Option<usize>,

    /// Power-law exponents, comma-separated (unweighted and weighted2d).
    #[arg(long)]
    pub tau: Option<String>,

    /// Row weights (weighted2d).
    #[arg(long)]
    pub v: Option<String>,

    /// Growth exponents a_i (pivots mode).
    #[arg(long)]
    pub a: Option<String>,

    /// Excess exponents t_i (pivots mode).
    #[arg(long)]
    pub t: Option<String>,
}

#[derive(Args, Debug)]
pub struct BoxdimArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub psi: PsiArgs,

    /// Norm cap of the enumerated rectangle family.
    #[arg(long)]
    pub q: f64,

    /// Box sizes as negated dyadic exponents, e.g. `4..10` for 2^-4..2^-10.
    #[arg(long)]
    pub delta_exps: Option<String>,

    /// Explicit box sizes, comma-separated and strictly decreasing.
    #[arg(long)]
    pub deltas: Option<String>,

    /// union | scaled (default scaled: per-scale window cover).
    #[arg(long, default_value = "scaled")]
    pub mode: String,
}

#[derive(Args, Debug)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub psi: PsiArgs,

    /// dyadic | radial.
    #[arg(long)]
    pub kind: String,

    /// Number of columns m.
    #[arg(long, default_value_t = 1)]
    pub m: usize,

    /// Explicit dyadic levels, comma-separated (dyadic kind).
    #[arg(long)]
    pub levels: Option<String>,

    /// Use levels 1..=lmax when no explicit list is given (dyadic kind).
    #[arg(long, default_value_t = 10)]
    pub lmax: u32,

    /// Radial cutoff R (radial kind).
    #[arg(long, default_value_t = 100)]
    pub rmax: u32,
}
