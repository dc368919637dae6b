use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "rseik", version, about = "Reeds-Shepp distance maps and geodesics on position-orientation space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute a distance map from one or more seeds.
    Solve(SolveArgs),
    /// Backtrack minimizing paths on a distance map.
    Trace(TraceArgs),
    /// Compare two distance maps on the same grid.
    Compare(CompareArgs),
    /// Generate a synthetic density phantom or a wall mask.
    Phantom(PhantomArgs),
    /// Time uniform-cost solves over a sweep of grid sizes.
    Bench(BenchArgs),
}

/// Grid description for runs without a cost file.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Spatial extents, e.g. `50,50` or `24,24,24`.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Grid scale.
    #[arg(long)]
    pub h: Option<f64>,
    /// Position of the first node; defaults to centering the grid on 0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub origin: Option<Vec<f64>>,
    /// Number of orientations (2D).
    #[arg(long)]
    pub orientations: Option<usize>,
    /// Icosphere refinement level (3D).
    #[arg(long)]
    pub icosphere: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    /// POGRID1 cost file.
    #[arg(long)]
    pub cost: Option<PathBuf>,
    /// PBM/PGM wall mask (black = wall); sets the spatial grid when no cost file is given.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Seed state `x,y[,z],θ[,φ]` or `x,y[,z],nx,ny[,nz]`; repeat for several seeds.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub seed: Vec<String>,
    /// Seed every orientation at each seed position.
    #[arg(long)]
    pub all_seed_orientations: bool,
    #[arg(long, default_value = "symmetric")]
    pub variant: String,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Spatial/angular balance for uniform or mask runs (cost files carry their own).
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    #[arg(long, default_value = "auto")]
    pub backend: String,
    /// Stop once these states are accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Vec<String>,
    #[arg(long, default_value_t = 64.0)]
    pub stencil_cap: f64,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TraceArgs {
    /// POGRID1 distance file.
    #[arg(long)]
    pub distance: PathBuf,
    /// Cost file used for the solve; uniform cost otherwise.
    #[arg(long)]
    pub cost: Option<PathBuf>,
    /// Wall mask used for the solve.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// End state (same syntax as seeds; with --all-orientations only the position is used).
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub end: Vec<String>,
    /// Pick the orientation minimizing U at each end position.
    #[arg(long)]
    pub all_orientations: bool,
    #[arg(long, default_value_t = 0.04)]
    pub step: f64,
    /// Gaussian smoothing of the spatial gradient, in grid units.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
    /// Output CSV; with several ends, `_k` is inserted before the extension.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Relative difference counted as a disagreement.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Also count nodes where `b < a − slack` (slack defaults to 2h).
    #[arg(long)]
    pub expect_b_geq_a: bool,
    #[arg(long)]
    pub slack: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PhantomArgs {
    /// `two_crossings`, `torsion_parallel` or `pompidou_mask`.
    #[arg(long)]
    pub preset: String,
    /// Nodes per axis (tube presets).
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, default_value_t = 2)]
    pub icosphere: usize,
    /// Also write the cost field built from the density.
    #[arg(long)]
    pub cost_out: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 0.1)]
    pub xi: f64,
    /// Mask size for `pompidou_mask`.
    #[arg(long, default_value_t = 200)]
    pub width: usize,
    #[arg(long, default_value_t = 150)]
    pub height: usize,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BenchArgs {
    /// Nodes per spatial axis for each run.
    #[arg(long, value_delimiter = ',', default_value = "41,58,82")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 32)]
    pub orientations: usize,
    #[arg(long, default_value_t = 1)]
    pub icosphere: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value = "symmetric")]
    pub variant: String,
    #[arg(long, default_value = "auto")]
    pub backend: String,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
