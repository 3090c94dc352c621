use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "wedgegreen", version, about = "Green functions of parabolic operators with time-discontinuous coefficients in wedges")]
pub struct Cli {
    /// Seed for random clouds and sweeps; recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Whole-space kernel and its derivatives at a point, or on a random cloud.
    Kernel(KernelArgs),
    /// Critical exponent of a sector.
    Lambda(LambdaArgs),
    /// Solve a boundary value problem on a sector mesh.
    Solve(SolveArgs),
    /// Numerical Green function for one pole.
    Green(GreenArgs),
    /// Oblique Green function by the ray formula, checked against a direct solve.
    Oblique(ObliqueArgs),
    /// Fit the constant of a kernel envelope.
    VerifyBound(VerifyArgs),
    /// Random sweeps of the integral-inequality oracles.
    Appendix(AppendixArgs),
    /// Coercive-ratio sweep over weight exponents and vertex refinements.
    Sweep(SweepArgs),
    /// Admissible weight-exponent interval.
    Intervals(IntervalArgs),
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<u32>>,
    /// Differentiate in s.
    #[arg(long)]
    pub ds: bool,
    /// Emit a seeded random cloud of this size as sample CSV.
    #[arg(long)]
    pub cloud: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LambdaArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long, default_value = "plus")]
    pub sign: String,
    /// `fit` (decay fit) or `closed` (A ≡ I only).
    #[arg(long, default_value = "fit")]
    pub method: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GreenArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pole: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    /// Bump width; defaults to four local cells.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Also write sample CSV of orders 0 to 2 on the comparison region.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ObliqueArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pole: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Also write Γᴺ and Γᴺ − Γ difference samples.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Include first y-derivatives in the difference samples.
    #[arg(long)]
    pub y_derivatives: bool,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Preset role name or alias (May0, May3, Ap1a, Feb23, ...).
    #[arg(long)]
    pub preset: String,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Build a quarter-plane cloud instead: dirichlet, oblique or oblique_difference.
    #[arg(long)]
    pub cloud: Option<String>,
    /// Domain of the samples; defaults to the quarter plane.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub lambda_plus: Option<f64>,
    #[arg(long)]
    pub lambda_minus: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps_x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps_y: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AppendixArgs {
    /// zhut or lozenka
    #[arg(long)]
    pub lemma: String,
    /// Number of random points.
    #[arg(long, default_value_t = 1000)]
    pub sweep: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Fixed a,b,c for the half-line oracle; drawn per point otherwise.
    #[arg(long, value_delimiter = ',')]
    pub exponents: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Boundary condition: oblique or dirichlet.
    #[arg(long, default_value = "oblique")]
    pub kind: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// pq (space first) or tilde (time first).
    #[arg(long, default_value = "pq")]
    pub variant: String,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_to: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 3)]
    pub refinements: usize,
    /// Sector; defaults to the quarter plane.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IntervalArgs {
    /// whole_space, dirichlet_2nd, dirichlet_1st or oblique
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_minus: f64,
}
